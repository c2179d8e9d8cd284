"""Cube-wise oscillation norms, square-function norms, and the fractional
Laplacian multiplier.

Square functions sum terms 2^(2 j w) |c|^2 chi(2^j x - k), which are piecewise
constant on the finest stored dyadic scale, so their L^p norms are evaluated
exactly as cell sums rather than by sampled quadrature.  The sup in q_norm
runs over an explicit finite cube window; general (non-dyadic) cubes are
approximated by the dyadic family, which matches the wavelet characterization
up to constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coeffs import CoefficientField
from .dyadic import DyadicCube, WindowSpec, enumerate_window
from .grid import GridFunction, frequency_grid


@dataclass(frozen=True)
class AlphaParam:
    alpha: float
    n: int

    def __post_init__(self):
        if not (0.0 <= self.alpha <= self.n / 2.0):
            raise ValueError(
                f"alpha must satisfy 0 <= alpha <= n/2 = {self.n / 2.0}, got {self.alpha}"
            )


@dataclass
class NormReport:
    value: float
    profile: dict[DyadicCube, float]
    per_scale: dict[int, float]
    meta: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [
            {"j": c.j, "k": list(c.k), "value": v}
            for c, v in sorted(self.profile.items())
        ]


def c_alpha_q(c: CoefficientField, cube: DyadicCube, alpha: float) -> float:
    """|Q|^(alpha/n - 1/2) * (sum over Q_{j,k} in Q of 2^(2 j alpha) |c|^2)^(1/2)."""
    n = cube.n
    acc = 0.0
    for idx, v in c.items():
        if cube.contains(idx.cube):
            acc += 4.0 ** (idx.j * alpha) * v * v
    if acc == 0.0:
        return 0.0
    # |Q| = 2^(-j n) so |Q|^(alpha/n - 1/2) = 2^(j (n/2 - alpha))
    return 2.0 ** (cube.j * (n / 2.0 - alpha)) * math.sqrt(acc)


def _subtree_masses(c: CoefficientField, alpha: float, j_floor: int) -> dict[DyadicCube, float]:
    """sum over stored Q_{j,k} inside Q of 2^(2 j alpha) |c|^2, for every cube
    at scale >= j_floor holding mass — aggregated fine-to-coarse."""
    per_level: dict[int, dict[DyadicCube, float]] = {}
    for idx, v in c.items():
        if idx.is_scaling:
            continue
        cube = idx.cube
        lvl = per_level.setdefault(cube.j, {})
        lvl[cube] = lvl.get(cube, 0.0) + 4.0 ** (idx.j * alpha) * v * v
    if not per_level:
        return {}
    out: dict[DyadicCube, float] = {}
    carry: dict[DyadicCube, float] = {}
    for j in range(max(per_level), j_floor - 1, -1):
        cur = carry
        carry = {}
        for cube, m in per_level.get(j, {}).items():
            cur[cube] = cur.get(cube, 0.0) + m
        for cube, m in cur.items():
            out[cube] = m
            if j > j_floor:
                p = cube.parent()
                carry[p] = carry.get(p, 0.0) + m
    return out


def q_norm(c: CoefficientField, alpha: float, window) -> NormReport:
    """sup over the window cubes of C_{alpha,Q}, with the per-cube profile.

    `window` is a WindowSpec or an explicit cube list.  The per-scale maxima
    stand in for the |Q| -> 0 / infinity limits, which a finite window cannot
    witness; small values at the extreme scales are the decay diagnostic.
    """
    cubes = enumerate_window(window) if isinstance(window, WindowSpec) else list(window)
    if not cubes:
        raise ValueError("empty cube window")
    n = cubes[0].n
    masses = _subtree_masses(c, alpha, min(q.j for q in cubes))
    profile: dict[DyadicCube, float] = {}
    per_scale: dict[int, float] = {}
    for q in cubes:
        m = masses.get(q, 0.0)
        profile[q] = 2.0 ** (q.j * (n / 2.0 - alpha)) * math.sqrt(m) if m > 0.0 else 0.0
        per_scale[q.j] = max(per_scale.get(q.j, 0.0), profile[q])
    value = max(profile.values())
    return NormReport(value, profile, per_scale, {"alpha": alpha, "cubes": len(cubes)})


def fractional_laplacian(f: GridFunction, alpha: float) -> GridFunction:
    """(-Delta)^(alpha/2): Fourier multiplier |xi|^alpha, xi = 0 mapped to 0.

    Negative alpha gives (-Delta)^(-|alpha|/2) on the mean-free part.
    """
    fhat = np.fft.fftn(f.values)
    xi2 = np.zeros_like(f.values)
    for ax in frequency_grid(f.level, f.n, f.period_log):
        xi2 = xi2 + ax ** 2
    with np.errstate(divide="ignore"):
        mult = np.where(xi2 > 0.0, xi2 ** (alpha / 2.0), 0.0)
    out = np.real(np.fft.ifftn(fhat * mult))
    return GridFunction(out, f.level, f.period_log)


def b_alpha_q(f: GridFunction, cube: DyadicCube, alpha: float) -> float:
    """|Q|^(alpha/n) (|Q|^-1 int_Q |(-Delta)^(alpha/2) f - mean|^2)^(1/2)."""
    u = fractional_laplacian(f, alpha)
    block = u.restrict(cube)
    mean = block.mean()
    msq = float(((block - mean) ** 2).mean())
    vol = float(cube.volume)
    return vol ** (alpha / cube.n) * math.sqrt(msq)


def double_integral_seminorm(f: GridFunction, cube: DyadicCube, alpha: float) -> float:
    """|I|^(2 alpha/n - 1) int_I int_I |f(x)-f(y)|^2 / |x-y|^(n+2 alpha).

    Valid for 0 < alpha < 1 only; cell-midpoint distances, diagonal cells
    excluded (the integrand is singular but integrable there, and the
    midpoint rule converges as the grid refines).  Returns the un-rooted
    quadratic quantity.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("the double-integral form needs 0 < alpha < 1")
    vals = f.restrict(cube).ravel()
    n = cube.n
    shape = f.restrict(cube).shape
    axes = [np.arange(s) * f.step for s in shape]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    npts = pts.shape[0]
    acc = 0.0
    # row blocks keep the distance matrix small
    block = max(1, int(2e7) // max(npts, 1))
    for lo in range(0, npts, block):
        hi = min(lo + block, npts)
        diff = pts[lo:hi, None, :] - pts[None, :, :]
        dist2 = (diff ** 2).sum(axis=2)
        num = (vals[lo:hi, None] - vals[None, :]) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            contrib = np.where(dist2 > 0.0, num / dist2 ** ((n + 2.0 * alpha) / 2.0), 0.0)
        acc += float(contrib.sum())
    vol = float(cube.volume)
    return vol ** (2.0 * alpha / n - 1.0) * acc * f.cell_volume ** 2


# ---------------------------------------------------------------------------
# square functions (exact dyadic-cell evaluation)
# ---------------------------------------------------------------------------

def square_function_cells(
    c: CoefficientField, weight_r: float, fine_scale: int | None = None
) -> tuple[np.ndarray, float]:
    """Cell values of (sum 2^(2j(r + n/2)) |c|^2 chi(2^j x - k))^(1/2).

    Returns (cells, cell_volume); cells live on the torus partition at the
    finest stored scale (or `fine_scale`).  Scale-function rows are excluded.
    """
    entries = [(idx, v) for idx, v in c.items() if not idx.is_scaling]
    n = c.n if entries else 1
    jf = fine_scale if fine_scale is not None else max(
        (idx.j for idx, _ in entries), default=0
    )
    if jf + c.period_log < 0:
        raise ValueError("field scales coarser than the torus")
    cells_per_axis = 2 ** (jf + c.period_log)
    acc = np.zeros((cells_per_axis,) * n)
    for idx, v in entries:
        if idx.j > jf:
            raise ValueError(f"stored scale {idx.j} finer than cell scale {jf}")
        span = 2 ** (jf - idx.j)
        sel = tuple(
            slice((kk % (2 ** (idx.j + c.period_log))) * span,
                  (kk % (2 ** (idx.j + c.period_log)) + 1) * span)
            for kk in idx.k
        )
        acc[sel] += 4.0 ** (idx.j * (weight_r + n / 2.0)) * v * v
    cell_volume = (2.0 ** (-jf)) ** n
    return np.sqrt(acc), cell_volume


def sobolev_norm(c: CoefficientField, r: float, p: float) -> float:
    """L^p norm of the Sobolev square function (1 < p < infinity)."""
    if not (1.0 < p < math.inf):
        raise ValueError("sobolev_norm needs 1 < p < inf (H^1 is h1_norm)")
    cells, vol = square_function_cells(c, r)
    return float((cells ** p).sum() * vol) ** (1.0 / p)


def h1_norm(c: CoefficientField) -> float:
    """L^1 norm of the Hardy square function (sum 2^(nj) |c|^2 chi)^(1/2)."""
    cells, vol = square_function_cells(c, 0.0)
    return float(cells.sum() * vol)


def square_function_grid(
    c: CoefficientField, weight_r: float, level: int
) -> GridFunction:
    """The square function sampled as a GridFunction at 2^level points/axis."""
    cells, _ = square_function_cells(c, weight_r)
    reps = 2 ** level // cells.shape[0]
    if reps < 1:
        raise ValueError("grid level coarser than the cell partition")
    out = cells
    for axis in range(out.ndim):
        out = np.repeat(out, reps, axis=axis)
    return GridFunction(out, level, c.period_log)
