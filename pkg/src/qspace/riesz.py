"""Riesz transforms, wavelet-domain operator matrices with decay envelopes,
and the bounded-function counterexample sweep.

Riesz transforms act spectrally on the torus (multiplier -i xi_i / |xi|,
xi = 0 mapped to 0; index 0 is the identity); the singular-integral kernel
appears only inside the shifted-bump constant quadrature, which reproduces
the displayed integral without the classical multiplier normalization
c_n = Gamma((n+1)/2) / pi^((n+1)/2).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coeffs import CoefficientField
from .dyadic import WaveletIndex
from .grid import GridFunction, frequency_grid
from .norms import q_norm
from .predual import AdaptedNormReport, l1alpha_norm, linfalpha_norm, p_alpha_upper
from .wavelets import Basis, phi_table


def riesz_normalization(n: int) -> float:
    """c_n = Gamma((n+1)/2) / pi^((n+1)/2), the kernel constant of R_i."""
    return math.gamma((n + 1) / 2.0) / math.pi ** ((n + 1) / 2.0)


def riesz_apply(f: GridFunction, axis: int) -> GridFunction:
    """R_axis as the Fourier multiplier -i xi_axis / |xi|; axis 0 = identity."""
    if axis == 0:
        return f.copy()
    if not (1 <= axis <= f.n):
        raise ValueError(f"axis must be 0..{f.n}")
    freqs = frequency_grid(f.level, f.n, f.period_log)
    xi2 = np.zeros(f.values.shape)
    for ax in freqs:
        xi2 = xi2 + ax ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        mult = np.where(xi2 > 0.0, -1j * freqs[axis - 1] / np.sqrt(xi2), 0.0)
    out = np.fft.ifftn(np.fft.fftn(f.values) * mult)
    return GridFunction(np.real(out), f.level, f.period_log)


# ---------------------------------------------------------------------------
# wavelet-domain operator matrices
# ---------------------------------------------------------------------------

@dataclass
class OperatorMatrix:
    rows: list[WaveletIndex]
    cols: list[WaveletIndex]
    entries: dict[tuple[int, int], float]
    op_id: str
    period_log: int = 0
    drop_tol: float = 1e-12
    meta: dict = field(default_factory=dict)

    def max_for_scale_gap(self, gap: int) -> float:
        best = 0.0
        for (r, c), v in self.entries.items():
            if abs(self.rows[r].j - self.cols[c].j) >= gap:
                best = max(best, abs(v))
        return best

    def to_jsonl(self, path: str | Path):
        path = Path(path)
        with path.open("w") as fh:
            header = {
                "kind": "qspace-operator-matrix",
                "op_id": self.op_id,
                "rows": len(self.rows),
                "cols": len(self.cols),
                "drop_tol": self.drop_tol,
                "period_log": self.period_log,
            }
            header.update(self.meta)
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for (r, c), v in sorted(self.entries.items()):
                fh.write(
                    json.dumps(
                        {"row": self.rows[r].to_json(), "col": self.cols[c].to_json(), "v": v},
                        sort_keys=True,
                    )
                    + "\n"
                )


def wavelet_matrix(
    basis: Basis,
    axis: int,
    rows: list[WaveletIndex],
    cols: list[WaveletIndex] | None = None,
    drop_tol: float = 1e-12,
) -> OperatorMatrix:
    """Entries <R_axis Phi_row, Phi_col> by grid inner products."""
    cols = rows if cols is None else cols
    cellvol = basis.step ** basis.n
    col_mat = np.stack([basis.generator(i.eps, i.j, i.k).values.ravel() for i in cols])
    entries: dict[tuple[int, int], float] = {}
    for r, idx in enumerate(rows):
        gen = basis.generator(idx.eps, idx.j, idx.k)
        rg = riesz_apply(gen, axis)
        vals = col_mat @ rg.values.ravel() * cellvol
        for c, v in enumerate(vals):
            if abs(v) > drop_tol:
                entries[(r, c)] = float(v)
    return OperatorMatrix(
        list(rows), list(cols), entries, f"riesz_{axis}", basis.period_log, drop_tol,
        meta={"family": basis.spec.family, "n": basis.n},
    )


@dataclass
class DecayReport:
    constant: float                      # minimal C fitting every entry
    scale_exponent: float                # n/2 + N0
    space_exponent: float                # n + N0
    worst: tuple[WaveletIndex, WaveletIndex, float] | None
    violations: list[dict]
    n_entries: int

    def rows(self) -> list[dict]:
        return [
            {
                "constant": self.constant,
                "scale_exponent": self.scale_exponent,
                "space_exponent": self.space_exponent,
                "entries": self.n_entries,
            }
        ]


def _torus_distance(a: np.ndarray, b: np.ndarray, period: float) -> float:
    d = np.abs(a - b)
    d = np.minimum(d, period - d)
    return float(np.sqrt((d ** 2).sum()))


def czo_decay_check(
    m: OperatorMatrix, N0: float, user_constant: float | None = None
) -> DecayReport:
    """Per-entry ratio against the scale/space decay envelope

        2^(-|j-j'| (n/2+N0)) * ((2^-j + 2^-j') / (2^-j + 2^-j' + dist))^(n+N0)

    with dist the torus distance of the cube anchors.  Returns the minimal
    fitted constant; `user_constant` also collects the violating entries.
    """
    if not m.entries:
        return DecayReport(0.0, 0.0, 0.0, None, [], 0)
    n = m.rows[0].n
    period = 2.0 ** m.period_log
    sc_exp = n / 2.0 + N0
    sp_exp = n + N0
    best = 0.0
    worst = None
    violations: list[dict] = []
    for (r, c), v in m.entries.items():
        ri, ci = m.rows[r], m.cols[c]
        hr, hc = 2.0 ** (-ri.j), 2.0 ** (-ci.j)
        dist = _torus_distance(
            np.array(ri.k, dtype=float) * hr, np.array(ci.k, dtype=float) * hc, period
        )
        env = 2.0 ** (-abs(ri.j - ci.j) * sc_exp) * ((hr + hc) / (hr + hc + dist)) ** sp_exp
        ratio = abs(v) / env
        if ratio > best:
            best = ratio
            worst = (ri, ci, ratio)
        if user_constant is not None and abs(v) > user_constant * env:
            violations.append(
                {"row": ri.to_json(), "col": ci.to_json(), "value": v, "ratio": ratio}
            )
    return DecayReport(best, sc_exp, sp_exp, worst, violations, len(m.entries))


# ---------------------------------------------------------------------------
# the bounded counterexample
# ---------------------------------------------------------------------------

def _shifted_bump_segment(basis: Basis, j: int) -> tuple[np.ndarray, int]:
    """values of phi0(2^j x - shift) on its grid support, and the start index.

    phi0 is the artifact scale function (standard table shifted by p) and the
    shift 2^(M+1) puts the bump at [2^M, 3 * 2^M] per axis, scaled by 2^-j.
    """
    p = basis.spec.moments
    M = basis.spec.effective_support_log
    r = basis.level - basis.period_log - j
    if r < 0:
        raise ValueError(f"grid cannot resolve scale {j}")
    table = phi_table(p, r)[:-1]
    start = (2 ** (M + 1) - p) * 2 ** r
    top = start + len(table)
    if top > basis.npts * 2 ** j:
        raise ValueError("shifted bump leaves the period; increase period_log")
    return table, start


def counterexample_f(basis: Basis, J: int, scale_step: int = 2) -> GridFunction:
    """f_J(x) = sum over j in {0, step, ..., <= J} of Phi(2^j x) with
    Phi = phi0(. - 2^(M+1) e); the dilated supports are pairwise disjoint."""
    if basis.spec.family != "daubechies":
        raise ValueError("the counterexample uses a compactly supported basis")
    if J < 0:
        raise ValueError("J must be >= 0")
    npts = basis.npts
    vals = np.zeros((npts,) * basis.n)
    prev_lo = None
    for j in range(0, J + 1, scale_step):
        seg, start = _shifted_bump_segment(basis, j)
        lo, hi = start, start + len(seg)
        if prev_lo is not None and hi > prev_lo:
            raise ValueError(f"supports of scales {j - scale_step} and {j} overlap")
        prev_lo = lo
        axis_vals = np.zeros(npts)
        axis_vals[lo:hi] = seg
        term = axis_vals
        for _ in range(basis.n - 1):
            term = np.multiply.outer(term, axis_vals)
        vals += term
    return GridFunction(vals, basis.level, basis.period_log)


def c_d_constant(basis: Basis, refine: int = 6) -> float:
    """Quadrature of int -y_1/|y|^(n+1) phi0(y - 2^(M+1) e) dy.

    The integrand is sampled exactly at dyadic points; a negative result is
    the expected arrangement (the bump sits at positive y_1)."""
    p = basis.spec.moments
    M = basis.spec.effective_support_log
    n = basis.n
    table = phi_table(p, refine)[:-1]
    h = 2.0 ** (-refine)
    coords = (2 ** (M + 1) - p) + np.arange(len(table)) * h
    axes = [coords] * n
    phis = [table] * n
    mesh = np.meshgrid(*axes, indexing="ij")
    bump = phis[0]
    for t in phis[1:]:
        bump = np.multiply.outer(bump, t)
    norm2 = np.zeros_like(mesh[0])
    for mm in mesh:
        norm2 = norm2 + mm ** 2
    kernel = -mesh[0] / norm2 ** ((n + 1) / 2.0)
    return float((kernel * bump).sum() * h ** n)


@dataclass
class BlowupRow:
    J: int
    probe_min: float
    probe_count: int
    sup_norm: float


@dataclass
class BlowupTable:
    rows: list[BlowupRow]
    delta: float
    scale_step: int


def _probe_mask(f: GridFunction, radius: float) -> np.ndarray:
    pts = f.axis_points()
    dist1 = np.minimum(pts, f.period - pts)
    mask = None
    for axis in range(f.n):
        shape = [1] * f.n
        shape[axis] = dist1.size
        d = dist1.reshape(shape) ** 2
        mask = d if mask is None else mask + d
    return np.sqrt(mask) <= radius


def probe_delta(basis: Basis, scale_step: int = 2) -> float:
    """Largest radius on which R_1 of the single-term function stays below
    half its value at the origin; fixed before the sweep."""
    f0 = counterexample_f(basis, 0, scale_step)
    v0 = riesz_apply(f0, 1)
    target = v0.values[(0,) * basis.n] / 2.0
    if target >= 0.0:
        raise ValueError("single-term Riesz value at the origin is not negative")
    pts = f0.axis_points()
    radius = 0.0
    for r in pts[1:]:
        mask = _probe_mask(f0, r)
        if float(v0.values[mask].max()) <= target:
            radius = float(r)
        else:
            break
    if radius == 0.0:
        raise ValueError("no probe radius found; grid too coarse")
    return radius


def counterexample_blowup(
    basis: Basis, J_values: list[int], scale_step: int = 2, delta: float | None = None
) -> BlowupTable:
    """R_1 f_J at probes |x| < delta 2^-J: the running minimum drops as more
    scales activate while ||f_J||_sup stays constant."""
    delta = probe_delta(basis, scale_step) if delta is None else delta
    rows = []
    for J in sorted(J_values):
        f = counterexample_f(basis, J, scale_step)
        rf = riesz_apply(f, 1)
        mask = _probe_mask(f, delta * 2.0 ** (-J))
        if not mask.any():
            raise ValueError(f"no grid probes inside radius for J={J}")
        rows.append(
            BlowupRow(
                J=J,
                probe_min=float(rf.values[mask].min()),
                probe_count=int(mask.sum()),
                sup_norm=f.norm_sup(),
            )
        )
    return BlowupTable(rows, delta, scale_step)


# ---------------------------------------------------------------------------
# naive Fefferman-Stein split and the forward L^{1,alpha} report
# ---------------------------------------------------------------------------

@dataclass
class FsSplitResult:
    components: list[GridFunction]      # f_0 .. f_n
    reconstruction_error: float
    sup_norms: list[float]


def naive_fs_split(f: GridFunction, tol_mean: float = 1e-10) -> FsSplitResult:
    """f_0 = 0, f_i = -R_i f; then sum R_i f_i = f on mean-free inputs."""
    scale = max(f.norm_sup(), 1.0)
    if abs(f.mean()) > tol_mean * scale:
        raise ValueError("naive split needs a mean-free input")
    comps = [GridFunction(np.zeros_like(f.values), f.level, f.period_log)]
    comps += [riesz_apply(f, i) * (-1.0) for i in range(1, f.n + 1)]
    recon = np.zeros_like(f.values)
    for i in range(1, f.n + 1):
        recon = recon + riesz_apply(comps[i], i).values
    err = float(np.abs(recon - f.values).max())
    return FsSplitResult(comps, err, [c.norm_sup() for c in comps])


def riesz_l1alpha_report(
    c: CoefficientField,
    alpha: float,
    basis: Basis,
    windows,
    j_pad: int = 1,
) -> list[dict]:
    """Surrogate ||R_i g||_{L^{1,alpha}} for i = 0..n, next to the P^alpha
    upper bound of g (the forward-direction diagnostic)."""
    g_ref = p_alpha_upper(c, alpha)
    j_lo = max(min(c.scales()) - j_pad, basis.spec.j_min)
    j_hi = min(max(c.scales()) + j_pad, basis.spec.j_max)
    rows = []
    synth = basis.synthesize(c)
    for i in range(0, basis.n + 1):
        ri = riesz_apply(synth, i)
        ci = basis.analyze(ri, j_lo, j_hi)
        rep = l1alpha_norm(ci, alpha, windows, basis)
        rows.append(
            {
                "i": i,
                "l1alpha": rep.value,
                "upper_bound_g": g_ref,
                "ratio": rep.value / g_ref if g_ref > 0 else math.inf,
            }
        )
    return rows
