"""Figure rendering for the report pipeline (Agg backend, PNG files)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, path: Path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def fig_scale_profile(per_scale: dict[int, float], path: str | Path, alpha: float):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    js = sorted(per_scale)
    ax.plot(js, [per_scale[j] for j in js], "o-")
    ax.set_xlabel("scale j")
    ax.set_ylabel("max cube value")
    ax.set_title(f"per-scale oscillation profile (alpha={alpha})")
    _finish(fig, Path(path))


def fig_supmin(rows: list[dict], path: str | Path, value_key: str = "total"):
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    groups: dict[tuple[int, int], list[tuple[int, float]]] = {}
    for r in rows:
        groups.setdefault((r["s"], r["N"]), []).append((r["t"], r[value_key]))
    for (s, N), pts in sorted(groups.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=f"s={s}, N={N}")
    ax.set_xlabel("t")
    ax.set_ylabel(value_key)
    ax.set_title("band-split scan")
    ax.legend(fontsize=7)
    _finish(fig, Path(path))


def fig_microlocal(rows: list[dict], path: str | Path):
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.2))
    vals = [r["value"] for r in rows]
    oracle = [r["oracle"] for r in rows if r.get("oracle") is not None]
    axes[0].plot(vals, "o", ms=3, label="solve")
    if oracle:
        axes[0].plot(oracle, "x", ms=3, label="oracle")
    axes[0].set_xlabel("instance")
    axes[0].set_ylabel("block value")
    axes[0].legend(fontsize=7)
    if oracle:
        res = [abs(r["value"] - r["oracle"]) for r in rows if r.get("oracle") is not None]
        axes[1].semilogy(res, "o", ms=3)
        axes[1].set_xlabel("instance")
        axes[1].set_ylabel("|solve - oracle|")
    _finish(fig, Path(path))


def fig_decay(entry_rows: list[dict], constant: float, path: str | Path):
    fig, ax = plt.subplots(figsize=(5, 3.4))
    env = [r["envelope"] for r in entry_rows]
    val = [abs(r["value"]) for r in entry_rows]
    ax.loglog(env, val, ".", ms=2, alpha=0.5)
    if env:
        lo, hi = min(env), max(env)
        ax.loglog([lo, hi], [constant * lo, constant * hi], "r-",
                  label=f"fitted C = {constant:.3g}")
        ax.legend(fontsize=8)
    ax.set_xlabel("decay envelope")
    ax.set_ylabel("|matrix entry|")
    ax.set_title("operator matrix vs envelope")
    _finish(fig, Path(path))


def fig_blowup(rows: list[dict], path: str | Path):
    fig, ax = plt.subplots(figsize=(5, 3.4))
    js = [r["J"] for r in rows]
    ax.plot(js, [r["probe_min"] for r in rows], "o-", label="min probe value of R1 f_J")
    ax.plot(js, [r["sup_norm"] for r in rows], "s--", label="||f_J||_sup")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("J")
    ax.legend(fontsize=8)
    ax.set_title("bounded function, unbounded Riesz image")
    _finish(fig, Path(path))
