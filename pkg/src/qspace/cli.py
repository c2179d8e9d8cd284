"""Batch front door: analyze/synthesize grids, compute norm reports, run
micro-local solves, Riesz diagnostics, and the counterexample sweep.

Outputs are JSON + CSV with matplotlib figures rendered next to the CSVs
(disable with --no-plots).  Exit codes: 0 ok, 1 numeric failure, 2 input
error.  The seed falls back to the QSPACE_SEED environment variable.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, microlocal, predual, riesz
from .coeffs import CoefficientField
from .dyadic import (
    WaveletIndex,
    WindowSpec,
    dyadic_offsets,
    enumerate_window,
    epsilon_patterns,
)
from .grid import GridFunction
from .norms import h1_norm, q_norm, sobolev_norm
from .reports import check_overwrite, config_fingerprint, write_csv, write_json
from .wavelets import Basis, BasisSpec, build_basis


@dataclass
class RunConfig:
    family: str = "meyer"
    n: int = 1
    level: int = 12
    moments: int = 4
    support_log: int = 0
    period_log: int = 0
    alpha: float = 0.25
    seed: int = 0
    j_lo: int = 0
    j_hi: int = 4
    windows: str = ""          # "s:N;s:N" — anchors tile the torus at scale s-N
    sobolev_r: float = 0.0
    sobolev_p: float = 2.0
    tau_orth: float = 1e-8
    tau_recon: float = 1e-8
    jobs: int = 1

    def validate(self):
        if not (0.0 <= self.alpha <= self.n / 2.0):
            raise ValueError(
                f"alpha out of range: need 0 <= alpha <= n/2 = {self.n / 2.0}, "
                f"got {self.alpha}"
            )
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def basis_spec(self) -> BasisSpec:
        return BasisSpec(
            self.family,
            self.n,
            self.level,
            moments=self.moments if self.family == "daubechies" else 0,
            support_log=self.support_log if self.family == "daubechies" else 0,
            period_log=self.period_log,
        )

    def window_specs(self) -> list[WindowSpec]:
        out = []
        for part in filter(None, (p.strip() for p in self.windows.split(";"))):
            s_str, n_str = part.split(":")
            s, N = int(s_str), int(n_str)
            anchor_scale = s - N
            if anchor_scale + self.period_log < 0:
                raise ValueError(f"window {part}: anchor scale below the torus")
            anchors = tuple(dyadic_offsets(self.n, anchor_scale + self.period_log))
            out.append(WindowSpec(s, N, anchors))
        return out


def _parse_scalar(text: str):
    low = text.strip()
    if low.startswith('"') and low.endswith('"'):
        return low[1:-1]
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(low)
    except ValueError:
        pass
    try:
        return float(low)
    except ValueError:
        return low


def load_config_file(path: Path) -> dict:
    """Flat `key = value` config subset (strings, numbers, booleans, # comments)."""
    out = {}
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = _parse_scalar(val)
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if getattr(args, "config", None):
        base.update(load_config_file(Path(args.config)))
    for key in RunConfig.__dataclass_fields__:
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    if "seed" not in base or base["seed"] is None:
        base["seed"] = int(os.environ.get("QSPACE_SEED", "0"))
    known = {k: v for k, v in base.items() if k in RunConfig.__dataclass_fields__}
    cfg = RunConfig(**known)
    cfg.validate()
    return cfg


def _add_common(sp: argparse.ArgumentParser):
    sp.add_argument("--config", help="flat key=value config file")
    sp.add_argument("--family", choices=["meyer", "daubechies"])
    sp.add_argument("--n", type=int)
    sp.add_argument("--level", type=int)
    sp.add_argument("--moments", type=int)
    sp.add_argument("--support-log", dest="support_log", type=int)
    sp.add_argument("--period-log", dest="period_log", type=int)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--j-lo", dest="j_lo", type=int)
    sp.add_argument("--j-hi", dest="j_hi", type=int)
    sp.add_argument("--windows")
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--force", action="store_true")
    sp.add_argument("--no-plots", action="store_true")


def _maybe_plot(args, fn, *fargs):
    if not args.no_plots:
        from . import plots

        getattr(plots, fn)(*fargs)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    cfg = resolve_config(args)
    f = GridFunction.load(args.input)
    basis = build_basis(cfg.basis_spec())
    c = basis.analyze(f, cfg.j_lo, cfg.j_hi, include_scaling=args.include_scaling)
    out = Path(args.out)
    check_overwrite(out, args.force)
    c.to_jsonl(out, extra_meta={"config_fingerprint": config_fingerprint(asdict(cfg))})
    back = basis.synthesize(c)
    c2 = basis.analyze(back, cfg.j_lo, cfg.j_hi, include_scaling=args.include_scaling)
    roundtrip = max(
        (abs(c2.get(i) - v) for i, v in c.items()), default=0.0
    )
    residual = float(np.sqrt(max((f - back).norm_l2() ** 2, 0.0)))
    with out.open("a") as fh:
        fh.write(
            json.dumps(
                {"kind": "footer", "roundtrip_error": roundtrip,
                 "residual_l2": residual},
                sort_keys=True,
            )
            + "\n"
        )
    print(f"wrote {out} ({len(c)} coefficients, roundtrip error {roundtrip:.3e})")
    return 0


def cmd_synthesize(args) -> int:
    cfg = resolve_config(args)
    c = CoefficientField.from_jsonl(args.input)
    basis = build_basis(cfg.basis_spec())
    g = basis.synthesize(c)
    out = Path(args.out)
    check_overwrite(out, args.force)
    g.save(out)
    print(f"wrote {out} (sup norm {g.norm_sup():.6g})")
    return 0


def cmd_norms(args) -> int:
    cfg = resolve_config(args)
    c = CoefficientField.from_jsonl(args.input)
    basis = build_basis(cfg.basis_spec())
    windows = cfg.window_specs()
    if not windows:
        s = max(c.scales(), default=cfg.j_hi)
        N = min(s - min(c.scales(), default=cfg.j_lo), s + cfg.period_log)
        windows = [WindowSpec(s, N, tuple(dyadic_offsets(cfg.n, s - N + cfg.period_log)))]
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    cubes = [q for w in windows for q in enumerate_window(w)]
    qrep = q_norm(c, cfg.alpha, cubes)
    l1rep = predual.l1alpha_norm(c, cfg.alpha, windows, basis)
    linfrep = predual.linfalpha_norm(c, cfg.alpha, windows, basis)
    lower, upper = predual.p_alpha_bracket(c, cfg.alpha, cubes, seed=cfg.seed)
    values = [
        {"op": "q_norm", "value": qrep.value},
        {"op": "h1_norm", "value": h1_norm(c)},
        {"op": "sobolev_norm", "r": cfg.sobolev_r, "p": cfg.sobolev_p,
         "value": sobolev_norm(c, cfg.sobolev_r, cfg.sobolev_p)},
        {"op": "l1alpha_norm", "value": l1rep.value},
        {"op": "linfalpha_norm", "value": linfrep.value},
        {"op": "p_alpha_bracket", "lower": lower, "upper": upper},
    ]
    write_json(outdir / "norms.json", {"values": values}, asdict(cfg), args.force)
    write_csv(outdir / "q_profile.csv", qrep.rows(), args.force)
    write_csv(outdir / "l1alpha_scan.csv", l1rep.rows, args.force)
    write_csv(outdir / "linfalpha_scan.csv", linfrep.rows, args.force)
    _maybe_plot(args, "fig_scale_profile", qrep.per_scale, outdir / "q_profile.png", cfg.alpha)
    _maybe_plot(args, "fig_supmin", l1rep.rows, outdir / "l1alpha_scan.png")
    print(f"wrote norm reports to {outdir}")
    return 0


def _solve_one(task):
    prob, seed, want_oracle = task
    sol = microlocal.solve(prob, seed=seed)
    oracle = None
    if want_oracle and len(prob.g) <= microlocal.MAX_BRUTE_DIM:
        oracle = microlocal.brute_force_microlocal(prob)
    return sol, oracle


def cmd_microlocal(args) -> int:
    cfg = resolve_config(args)
    problems: list[microlocal.MicrolocalProblem] = []
    if args.block:
        spec = json.loads(Path(args.block).read_text())
        problems.append(
            microlocal.MicrolocalProblem(
                int(spec["base_j"]), tuple(spec["base_k"]), int(spec["depth"]),
                float(spec.get("alpha", cfg.alpha)), tuple(spec["g"]),
            )
        )
    else:
        rng = np.random.default_rng(cfg.seed)
        from .dyadic import block_cardinality

        for i in range(args.count):
            t = i % 3
            size = block_cardinality(cfg.n, t)
            g = tuple(rng.uniform(-1.0, 1.0, size))
            problems.append(
                microlocal.MicrolocalProblem(
                    int(rng.integers(-1, 3)), (0,) * cfg.n, t, cfg.alpha, g
                )
            )
    tasks = [(p, cfg.seed, not args.no_oracle) for p in problems]
    if cfg.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_solve_one, tasks))
    else:
        results = [_solve_one(t) for t in tasks]
    rows = []
    for prob, (sol, oracle) in zip(problems, results):
        rows.append(
            {
                "base_j": prob.base_j, "depth": prob.depth, "alpha": prob.alpha,
                "value": sol.value, "oracle": oracle,
                "gap": sol.diagnostics.duality_gap,
                "max_violation": sol.diagnostics.max_constraint_violation,
            }
        )
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_json(outdir / "microlocal.json", {"rows": rows}, asdict(cfg), args.force)
    write_csv(outdir / "microlocal.csv", rows, args.force)
    _maybe_plot(args, "fig_microlocal", rows, outdir / "microlocal.png")
    bad = [r for r in rows if r["oracle"] is not None and abs(r["value"] - r["oracle"]) > 1e-4]
    print(f"{len(rows)} solves, {len(bad)} oracle mismatches")
    return 1 if bad else 0


def spatial_window_indices(
    n: int, scales: list[int], fine_count: int, period_log: int
) -> list[WaveletIndex]:
    """All wavelet indices over `scales` whose cubes tile an interval holding
    `fine_count` finest-scale positions per axis."""
    j_fine = max(scales)
    out = []
    import itertools as it

    for j in scales:
        width = max(fine_count >> (j_fine - j), 1)
        width = min(width, 2 ** (j + period_log))
        for kvec in it.product(range(width), repeat=n):
            for eps in epsilon_patterns(n):
                out.append(WaveletIndex(eps, j, kvec))
    return out


def cmd_riesz(args) -> int:
    cfg = resolve_config(args)
    basis = build_basis(cfg.basis_spec())
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    scales = list(range(cfg.j_lo, cfg.j_hi + 1))
    indices = spatial_window_indices(cfg.n, scales, args.positions, cfg.period_log)
    mat = riesz.wavelet_matrix(basis, 1, indices)
    matrix_path = outdir / "matrix.jsonl"
    check_overwrite(matrix_path, args.force)
    mat.to_jsonl(matrix_path)
    payload: dict = {"indices": len(indices)}
    if cfg.family == "meyer":
        payload["band_gap_max"] = mat.max_for_scale_gap(2)
        rows = [{"gap": d, "max_entry": mat.max_for_scale_gap(d)} for d in range(0, 5)]
        write_csv(outdir / "band_orthogonality.csv", rows, args.force)
    else:
        rep = riesz.czo_decay_check(mat, args.decay_order)
        payload["decay_constant"] = rep.constant
        payload["scale_exponent"] = rep.scale_exponent
        payload["space_exponent"] = rep.space_exponent
        entry_rows = []
        n = cfg.n
        period = 2.0 ** cfg.period_log
        for (r, cidx), v in mat.entries.items():
            ri, ci = mat.rows[r], mat.cols[cidx]
            hr, hc = 2.0 ** (-ri.j), 2.0 ** (-ci.j)
            dist = riesz._torus_distance(
                np.array(ri.k, float) * hr, np.array(ci.k, float) * hc, period
            )
            env = 2.0 ** (-abs(ri.j - ci.j) * rep.scale_exponent) * (
                (hr + hc) / (hr + hc + dist)
            ) ** rep.space_exponent
            entry_rows.append({"value": v, "envelope": env})
        write_csv(outdir / "decay_entries.csv", entry_rows, args.force)
        _maybe_plot(args, "fig_decay", entry_rows, rep.constant, outdir / "decay.png")
    write_json(outdir / "riesz.json", payload, asdict(cfg), args.force)
    print(f"wrote riesz report to {outdir}")
    return 0


def cmd_counterexample(args) -> int:
    cfg = resolve_config(args)
    basis = build_basis(cfg.basis_spec())
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    cd_lo = riesz.c_d_constant(basis, args.refine)
    cd_hi = riesz.c_d_constant(basis, args.refine + 1)
    if cd_lo >= 0.0:
        print("error: shifted-bump constant is not negative", file=sys.stderr)
        return 1
    J_values = list(range(0, args.j_max + 1, args.scale_step))
    table = riesz.counterexample_blowup(basis, J_values, args.scale_step)
    rows = [
        {"J": r.J, "probe_min": r.probe_min, "probe_count": r.probe_count,
         "sup_norm": r.sup_norm}
        for r in table.rows
    ]
    write_json(
        outdir / "counterexample.json",
        {"c_d": cd_lo, "c_d_refined": cd_hi, "c_d_agreement": abs(cd_lo - cd_hi),
         "delta": table.delta, "rows": rows},
        asdict(cfg),
        args.force,
    )
    write_csv(outdir / "counterexample.csv", rows, args.force)
    _maybe_plot(args, "fig_blowup", rows, outdir / "counterexample.png")
    mono = all(b["probe_min"] < a["probe_min"] for a, b in zip(rows, rows[1:]))
    print(f"C_D = {cd_lo:.6g}; probe minimum strictly decreasing: {mono}")
    return 0 if mono else 1


def cmd_selftest(args) -> int:
    cfg = resolve_config(args)
    failures = 0

    def check(name, ok, detail=""):
        nonlocal failures
        print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}")
        failures += 0 if ok else 1

    basis = build_basis(BasisSpec("meyer", 1, 11))
    idxs = [WaveletIndex((1,), j, (k,)) for j in range(0, 4) for k in range(2 ** j)]
    dev = basis.gram_deviation(idxs)
    check("meyer orthonormality", dev < cfg.tau_orth, f"(deviation {dev:.2e})")

    rng = np.random.default_rng(cfg.seed)
    cf = basis.empty_field(0, 3)
    for i in idxs:
        cf.set(i, rng.normal())
    c2 = basis.analyze(basis.synthesize(cf), 0, 3)
    rt = max(abs(c2.get(i) - v) for i, v in cf.items())
    check("analyze/synthesize round trip", rt < cfg.tau_recon, f"(error {rt:.2e})")

    prob = microlocal.MicrolocalProblem(1, (0,), 0, 0.25, (2.0,))
    sol = microlocal.solve(prob, seed=cfg.seed)
    exact = 2.0 ** (-0.5) * 2.0
    check("micro-local closed form", abs(sol.value - exact) < 1e-8,
          f"(|{sol.value:.10f} - {exact:.10f}|)")

    cfp = CoefficientField(0, 2, period_log=1)
    for j in range(0, 3):
        for k in range(2 ** (j + 1)):
            cfp.set(WaveletIndex((1,), j, (k,)), rng.normal())
    r = predual.p_stn(cfp, 2, 2, 2, cfg.alpha, anchors=[(0,), (1,)], seed=cfg.seed)
    check("cutoff-layer identity", abs(r.q_value - r.l1_value) < 1e-8,
          f"(diff {abs(r.q_value - r.l1_value):.2e})")

    f = basis.synthesize(cf)
    h2 = riesz.riesz_apply(riesz.riesz_apply(f, 1), 1)
    err = float(np.abs(h2.values + f.values).max())
    check("riesz multiplier identity", err < 1e-10, f"(error {err:.2e})")
    return 1 if failures else 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="qspace",
        description="wavelet norm toolkit: analysis, micro-local solves, "
        "Riesz diagnostics, counterexample sweep",
    )
    ap.add_argument("--version", action="version", version=f"qspace {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("analyze", help="grid file -> coefficient JSONL")
    _add_common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--include-scaling", action="store_true")
    sp.set_defaults(fn=cmd_analyze)

    sp = sub.add_parser("synthesize", help="coefficient JSONL -> grid file")
    _add_common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_synthesize)

    sp = sub.add_parser("norms", help="norm report bundle for a coefficient file")
    _add_common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(fn=cmd_norms)

    sp = sub.add_parser("microlocal", help="block solves with oracle cross-check")
    _add_common(sp)
    sp.add_argument("--block", help="JSON problem file")
    sp.add_argument("--count", type=int, default=9)
    sp.add_argument("--no-oracle", action="store_true")
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(fn=cmd_microlocal)

    sp = sub.add_parser("riesz", help="band orthogonality / decay reports")
    _add_common(sp)
    sp.add_argument("--positions", type=int, default=16)
    sp.add_argument("--decay-order", type=float, default=2.0)
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(fn=cmd_riesz)

    sp = sub.add_parser("counterexample", help="shifted-bump blow-up sweep")
    _add_common(sp)
    sp.add_argument("--j-max", type=int, default=8)
    sp.add_argument("--scale-step", type=int, default=2)
    sp.add_argument("--refine", type=int, default=6)
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(fn=cmd_counterexample)

    sp = sub.add_parser("selftest", help="quick built-in battery")
    _add_common(sp)
    sp.set_defaults(fn=cmd_selftest)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (FileNotFoundError, FileExistsError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (microlocal.SolverError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
