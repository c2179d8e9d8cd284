"""Atoms, dual pairing, block-redistributed square functions, band splits,
and the adapted L^{1,alpha} / L^{inf,alpha} norms.

Exact atomic norms are infima over all decompositions and are not computable;
everything here reports computable brackets instead: a greedy wavelet-atom
upper bound and a duality lower bound, plus the sup-min / sup-sup scans whose
(s, N, t) tables are the primary diagnostic output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import microlocal
from .coeffs import CoefficientField
from .dyadic import DyadicCube, WaveletIndex, WindowSpec, enumerate_window, epsilon_patterns
from .grid import GridFunction
from .norms import fractional_laplacian, h1_norm, q_norm, square_function_cells
from .wavelets import Basis


def pairing(f: CoefficientField, g: CoefficientField) -> float:
    """Bilinear coefficient pairing: sum over shared indices."""
    return f.pairing(g)


# ---------------------------------------------------------------------------
# atoms
# ---------------------------------------------------------------------------

@dataclass
class AtomCertificate:
    cube: DyadicCube
    kind: str                      # "standard" | "wavelet"
    slacks: dict[str, float]       # bound minus computed value, per inequality
    moment_residuals: dict[str, float] = field(default_factory=dict)
    leak: float = 0.0              # support mass outside the cube
    tol: float = 1e-10

    @property
    def valid(self) -> bool:
        return all(s >= -self.tol for s in self.slacks.values()) and all(
            abs(r) <= self.tol for r in self.moment_residuals.values()
        )


def wavelet_atom_size(c: CoefficientField, alpha: float) -> float:
    """(sum 2^(-2 j alpha) |c|^2)^(1/2) over the stored wavelet rows."""
    acc = 0.0
    for idx, v in c.items():
        if not idx.is_scaling:
            acc += 4.0 ** (-idx.j * alpha) * v * v
    return math.sqrt(acc)


def atom_bound(cube: DyadicCube, alpha: float) -> float:
    """|Q|^(alpha/n - 1/2) = 2^(j (n/2 - alpha))."""
    return 2.0 ** (cube.j * (cube.n / 2.0 - alpha))


def wavelet_atom_check(c: CoefficientField, cube: DyadicCube, alpha: float) -> AtomCertificate:
    inside = c.filter(lambda idx: cube.contains(idx.cube))
    leak = math.sqrt(c.energy() - inside.energy()) if len(inside) < len(c) else 0.0
    size = wavelet_atom_size(inside, alpha)
    bound = atom_bound(cube, alpha)
    cert = AtomCertificate(cube, "wavelet", {"size": bound - size}, leak=leak)
    if leak > cert.tol:
        cert.slacks["support"] = -leak
    return cert


def standard_atom_check(
    f: GridFunction, cube: DyadicCube, alpha: float, tol: float = 1e-8
) -> AtomCertificate:
    """Support, moments up to order floor(alpha), and the L^2 bound on
    (-Delta)^(-alpha/2) f (moments in coordinates centered on the cube)."""
    outside = f.values.copy()
    outside[f.cube_slices(cube)] = 0.0
    leak = float(np.sqrt((outside ** 2).sum() * f.cell_volume))

    moments: dict[str, float] = {}
    center = [float(lo) + float(cube.side) / 2.0 for lo in cube.lower()]
    axes = [f.axis_points() for _ in range(f.n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    order = int(math.floor(alpha))
    for beta in _multi_indices(f.n, order):
        mono = np.ones_like(f.values)
        for ax, b in enumerate(beta):
            if b:
                mono = mono * (mesh[ax] - center[ax]) ** b
        moments["m" + "".join(map(str, beta))] = float(
            (f.values * mono).sum() * f.cell_volume
        )

    u = fractional_laplacian(f, -alpha) if alpha > 0 else f
    l2 = u.norm_l2()
    bound = float(cube.volume) ** (-0.5 + alpha / cube.n)
    cert = AtomCertificate(
        cube, "standard", {"l2": bound - l2}, moment_residuals=moments, leak=leak, tol=tol
    )
    if leak > tol:
        cert.slacks["support"] = -leak
    return cert


def _multi_indices(n: int, order: int):
    import itertools

    out = []
    for total in range(order + 1):
        for beta in itertools.product(range(total + 1), repeat=n):
            if sum(beta) == total:
                out.append(beta)
    return out


# ---------------------------------------------------------------------------
# P^alpha brackets
# ---------------------------------------------------------------------------

def greedy_atom_partition(c: CoefficientField) -> list[DyadicCube]:
    """Maximal dyadic cubes of the support at the coarsest stored scale."""
    scales = c.scales()
    if not scales:
        return []
    j0 = scales[0]
    return sorted({idx.cube.ancestor(j0) for idx, _ in c.items()})


def p_alpha_upper(
    c: CoefficientField, alpha: float, partition: list[DyadicCube] | None = None
) -> float:
    """Greedy atomic upper bound: one boundary atom per partition cube,
    total weight sum |lambda_u|.  Any explicit partition gives a valid
    decomposition, so the result is always an upper bound."""
    if len(c) == 0:
        return 0.0
    cubes = partition if partition is not None else greedy_atom_partition(c)
    total = 0.0
    seen = 0
    for cube in cubes:
        piece = c.filter(lambda idx: cube.contains(idx.cube))
        seen += len(piece)
        size = wavelet_atom_size(piece, alpha)
        if size > 0.0:
            total += size / atom_bound(cube, alpha)
    if seen < len(c):
        raise ValueError("partition does not cover the field support")
    return total


def combined_block_maximizer(
    c: CoefficientField, alpha: float, base_scale: int | None = None,
    depth: int | None = None, seed: int = 0,
) -> tuple[CoefficientField, float]:
    """Blockwise maximizers glued over a partition of the support.

    Returns (test field, sum of block values).  The glued field is feasible
    per block but not globally, so callers must renormalize (see
    p_alpha_lower).
    """
    scales = c.scales()
    if not scales:
        return c.copy(), 0.0
    j0 = base_scale if base_scale is not None else scales[0]
    t = depth if depth is not None else max(s for s in scales) - j0
    n = c.n
    bases = sorted({idx.cube.ancestor(j0).k for idx, _ in c.items() if idx.j >= j0})
    out = CoefficientField(c.j_min, c.j_max, c.period_log, c.basis_fingerprint)
    total = 0.0
    for bk in bases:
        prob = microlocal.MicrolocalProblem.from_field(c, j0, bk, t, alpha)
        if not any(v != 0.0 for v in prob.g):
            continue
        sol = microlocal.solve(prob, seed=seed)
        total += sol.value
        for idx, fv in zip(prob.block.members(), sol.maximizer):
            if fv != 0.0:
                out.set(idx, out.get(idx) + fv)
    return out, total


def p_alpha_lower(
    c: CoefficientField, alpha: float, window, *, base_scale: int | None = None,
    depth: int | None = None, seed: int = 0,
) -> float:
    """Duality lower bound: pair the glued block maximizers with c and divide
    by max(1, q_norm) of the test field over the window."""
    test, _ = combined_block_maximizer(c, alpha, base_scale, depth, seed=seed)
    if len(test) == 0:
        return 0.0
    kappa = max(1.0, q_norm(test, alpha, window).value)
    return abs(pairing(test, c)) / kappa


def p_alpha_bracket(c: CoefficientField, alpha: float, window, **kwargs) -> tuple[float, float]:
    return p_alpha_lower(c, alpha, window, **kwargs), p_alpha_upper(c, alpha)


# ---------------------------------------------------------------------------
# windowed square functions P_{s,t,N} / Q_{s,t,N}
# ---------------------------------------------------------------------------

@dataclass
class PstnResult:
    square: GridFunction        # the square function, constant on cutoff cells
    q_value: float              # L^1 of the cutoff-scale-only square function
    l1_value: float             # L^1 of the full square function
    modified: CoefficientField  # redistributed coefficients
    cutoff: int


def p_stn(
    c: CoefficientField,
    s: int,
    t: int,
    N: int,
    alpha: float,
    anchors=None,
    *,
    seed: int = 0,
) -> PstnResult:
    """Square function of the field with scales above s-t collapsed onto the
    cutoff scale by block redistribution (depth-t solve per cutoff position).

    `anchors` optionally truncates to cubes inside the anchor cubes at scale
    s-N (a position list, or DyadicCubes).
    """
    if not (0 <= t <= N):
        raise ValueError("need 0 <= t <= N")
    work = c.restrict_scales(s - N, s)
    if anchors is not None:
        cubes = [
            a if isinstance(a, DyadicCube) else DyadicCube(s - N, tuple(a))
            for a in anchors
        ]
        work = work.restrict_to_cubes(cubes)
    cutoff = s - t

    modified = CoefficientField(min(s - N, cutoff), max(cutoff, s - N), c.period_log,
                                c.basis_fingerprint)
    for idx, v in work.items():
        if idx.j < cutoff:
            modified.set(idx, v)
    if t == 0:
        for idx, v in work.items():
            if idx.j == cutoff:
                modified.set(idx, v)
    else:
        bases = sorted(
            {idx.cube.ancestor(cutoff).k for idx, _ in work.items() if idx.j >= cutoff}
        )
        for bk in bases:
            prob = microlocal.MicrolocalProblem.from_field(work, cutoff, bk, t, alpha)
            if not any(v != 0.0 for v in prob.g):
                continue
            sol = microlocal.solve(prob, seed=seed)
            for eps, val in sol.redistributed.items():
                if val != 0.0:
                    modified.set(WaveletIndex(eps, cutoff, bk), val)

    cells, cellvol = square_function_cells(modified, 0.0, fine_scale=cutoff)
    level = cutoff + c.period_log
    square = GridFunction(cells, level, c.period_log)
    l1_value = float(cells.sum() * cellvol)
    top_layer = modified.restrict_scales(cutoff, cutoff)
    q_value = h1_norm(top_layer) if len(top_layer) else 0.0
    return PstnResult(square, q_value, l1_value, modified, cutoff)


@dataclass
class ChaReport:
    value: float
    rows: list[dict]            # s, N, t, l1
    minima: list[dict]          # s, N, t_star, min_l1

    def as_csv_rows(self):
        return self.rows


def p_alpha_cha(
    c: CoefficientField, alpha: float, windows: list[WindowSpec], *, seed: int = 0
) -> ChaReport:
    """sup over the window family of min over t of ||P_{s,t,N} c||_L1,
    recording the minimizing t per window."""
    if not windows:
        raise ValueError("empty window family")
    rows = []
    minima = []
    best = 0.0
    for w in windows:
        vals = []
        for t in range(w.N + 1):
            r = p_stn(c, w.s, t, w.N, alpha, anchors=w.anchors, seed=seed)
            rows.append({"s": w.s, "N": w.N, "t": t, "l1": r.l1_value})
            vals.append(r.l1_value)
        t_star = int(np.argmin(vals))
        minima.append({"s": w.s, "N": w.N, "t_star": t_star, "min_l1": vals[t_star]})
        best = max(best, vals[t_star])
    return ChaReport(best, rows, minima)


# ---------------------------------------------------------------------------
# band splits and adapted norms
# ---------------------------------------------------------------------------

@dataclass
class BandSplit:
    s: int
    t: int
    N: int
    kind: str
    high: CoefficientField      # scales s-t .. s
    low: CoefficientField       # scales s-N .. s-t-1


def band_split(c: CoefficientField, s: int, t: int, N: int, kind: str = "T") -> BandSplit:
    if not (0 <= t <= N):
        raise ValueError("need 0 <= t <= N")
    if kind not in ("T", "S"):
        raise ValueError("kind must be 'T' or 'S'")
    high = c.restrict_scales(s - t, s)
    low = c.restrict_scales(s - N, s - t - 1)
    return BandSplit(s, t, N, kind, high, low)


def projection_window(c: CoefficientField, s: int, N: int) -> CoefficientField:
    """P_{s,N}: the scales s-N..s slab of the field."""
    return c.restrict_scales(s - N, s)


def layer(c: CoefficientField, j: int) -> CoefficientField:
    """Q_j: the single-scale layer of the field."""
    return c.restrict_scales(j, j)


@dataclass
class AdaptedNormReport:
    value: float
    rows: list[dict]


class _LayerSynth:
    """Per-scale synthesized layers, cached so band sums accumulate cheaply."""

    def __init__(self, c: CoefficientField, basis: Basis):
        self.c = c
        self.basis = basis
        self.cache: dict[int, np.ndarray] = {}

    def band(self, j_lo: int, j_hi: int) -> np.ndarray | None:
        js = [j for j in self.c.scales() if j_lo <= j <= j_hi]
        if not js:
            return None
        acc = None
        for j in js:
            if j not in self.cache:
                self.cache[j] = self.basis.synthesize(layer(self.c, j)).values
            acc = self.cache[j] if acc is None else acc + self.cache[j]
        return acc


def l1alpha_norm(
    c: CoefficientField,
    alpha: float,
    windows: list[WindowSpec],
    basis: Basis,
) -> AdaptedNormReport:
    """sup over windows of min over t of (P^alpha upper bound of the high
    band + L^1 grid norm of the synthesized low band)."""
    rows = []
    value = 0.0
    synth = _LayerSynth(c, basis)
    cellvol = basis.step ** basis.n
    for w in windows:
        totals = []
        for t in range(w.N + 1):
            split = band_split(c, w.s, t, w.N, "T")
            t1 = p_alpha_upper(split.high, alpha)
            low = synth.band(w.s - w.N, w.s - t - 1)
            t2 = float(np.abs(low).sum() * cellvol) if low is not None else 0.0
            rows.append(
                {"s": w.s, "N": w.N, "t": t, "T1": t1, "T2": t2, "total": t1 + t2}
            )
            totals.append(t1 + t2)
        value = max(value, min(totals))
    return AdaptedNormReport(value, rows)


def linfalpha_norm(
    c: CoefficientField,
    alpha: float,
    windows: list[WindowSpec],
    basis: Basis,
) -> AdaptedNormReport:
    """sup over windows and t of (q_norm of the high band over the window
    cubes + sup norm of the synthesized low band)."""
    rows = []
    value = 0.0
    synth = _LayerSynth(c, basis)
    for w in windows:
        cubes = enumerate_window(w)
        for t in range(w.N + 1):
            split = band_split(c, w.s, t, w.N, "S")
            s1 = q_norm(split.high, alpha, cubes).value if len(split.high) else 0.0
            low = synth.band(w.s - w.N, w.s - t - 1)
            s2 = float(np.abs(low).max()) if low is not None else 0.0
            rows.append(
                {"s": w.s, "N": w.N, "t": t, "S1": s1, "S2": s2, "total": s1 + s2}
            )
            value = max(value, s1 + s2)
    return AdaptedNormReport(value, rows)
