"""Hierarchical constrained maximization over depth-t coefficient blocks.

A block rooted at (j, k) collects the coefficients g^eps_{j+s, 2^s k + u} for
0 <= s <= t.  The value of the block is the maximum of the linear pairing
sum f * |g| over nonnegative f satisfying one quadratic constraint per
sub-block anchor (a, u):

    2^(n(j+a)) * sum over the sub-block of 2^(2(s-a) alpha) f^2  <=  1.

Substituting z_i = f_i * 2^((n j + 2 s_i alpha)/2) turns every constraint
into a Euclidean ball of radius 2^(-a(n-2alpha)/2) on a coordinate subset,
where per-constraint scaling is the exact projection.  The solver runs
projected-gradient ascent in those coordinates with seeded restarts, then
polishes through the smooth convex dual (L-BFGS-B plus an active-set Newton
step) and reports the duality gap as a certificate.  Values are exactly
1-homogeneous and sign-invariant in g by construction: the block is
normalized by max |g_i| / sqrt(v_i) before solving and rescaled after.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .coeffs import CoefficientField
from .dyadic import BlockIndexSet, WaveletIndex, block_cardinality, epsilon_patterns

MAX_BRUTE_DIM = 7


class SolverError(RuntimeError):
    """Raised when no certified solution was reached; carries the best iterate."""

    def __init__(self, message: str, best_value: float, best_point: np.ndarray):
        super().__init__(message)
        self.best_value = best_value
        self.best_point = best_point


@dataclass(frozen=True)
class MicrolocalProblem:
    base_j: int
    base_k: tuple[int, ...]
    depth: int
    alpha: float
    g: tuple[float, ...]  # aligned with block_members(n, depth) ordering

    def __post_init__(self):
        object.__setattr__(self, "base_k", tuple(int(v) for v in self.base_k))
        object.__setattr__(self, "g", tuple(float(v) for v in self.g))
        n = len(self.base_k)
        if not (0.0 <= self.alpha < n / 2.0):
            raise ValueError(f"alpha must satisfy 0 <= alpha < n/2, got {self.alpha}")
        want = block_cardinality(n, self.depth)
        if len(self.g) != want:
            raise ValueError(f"block needs {want} coefficients, got {len(self.g)}")

    @property
    def n(self) -> int:
        return len(self.base_k)

    @property
    def block(self) -> BlockIndexSet:
        return BlockIndexSet(self.base_j, self.base_k, self.depth)

    def g_array(self) -> np.ndarray:
        return np.asarray(self.g, dtype=float)

    @staticmethod
    def from_field(
        c: CoefficientField, base_j: int, base_k, depth: int, alpha: float
    ) -> "MicrolocalProblem":
        base_k = tuple(int(v) for v in base_k)
        block = BlockIndexSet(base_j, base_k, depth)
        vals = [c.get(idx) for idx in block.members()]
        return MicrolocalProblem(base_j, base_k, depth, alpha, tuple(vals))


@dataclass
class SolveDiagnostics:
    pga_iterations: int
    polish_iterations: int
    max_constraint_violation: float
    duality_gap: float
    restarts: int


@dataclass
class MicrolocalSolution:
    value: float
    maximizer: np.ndarray                    # f-space, signs restored
    redistributed: dict[tuple[int, ...], float]
    diagnostics: SolveDiagnostics
    problem: MicrolocalProblem


class _Geometry:
    """Constraint structure of a block in the rescaled (ball) coordinates."""

    def __init__(self, problem: MicrolocalProblem):
        self.problem = problem
        n, t, j, alpha = problem.n, problem.depth, problem.base_j, problem.alpha
        self.members = problem.block.relative_members()
        self.dim = len(self.members)
        self.levels = np.array([s for (_, s, _) in self.members])
        # f -> z scaling: z_i = f_i * sqrt(v_i)
        self.sqrt_v = np.array(
            [2.0 ** ((n * j + 2.0 * s * alpha) / 2.0) for (_, s, _) in self.members]
        )
        # one ball constraint per anchor (a, u); radius shrinks with depth
        self.anchors: list[tuple[int, tuple[int, ...]]] = []
        rows = []
        for a in range(t + 1):
            for u in _offsets(n, a):
                mask = np.zeros(self.dim, dtype=bool)
                for i, (_, s, v) in enumerate(self.members):
                    if s >= a and all((vv >> (s - a)) == uu for vv, uu in zip(v, u)):
                        mask[i] = True
                self.anchors.append((a, u))
                rows.append(mask)
        self.masks = np.array(rows)  # (n_cons, dim) booleans
        self.radii = np.array(
            [2.0 ** (-a * (n - 2.0 * alpha) / 2.0) for a, _ in self.anchors]
        )
        # per-coordinate cap: the deepest anchor containing i is at level s_i
        self.caps = np.array([2.0 ** (-s * (n - 2.0 * alpha) / 2.0) for s in self.levels])

    def qvals(self, z: np.ndarray) -> np.ndarray:
        return self.masks @ (z * z)

    def push_to_boundary(self, z: np.ndarray) -> np.ndarray:
        """Scale radially onto the tightest constraint (exact feasibility)."""
        q = self.qvals(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            gam = np.where(q > 0.0, self.radii / np.sqrt(q), np.inf)
        g = gam.min()
        if not np.isfinite(g):
            return z
        return z * g

    def project_cyclic(self, z: np.ndarray, passes: int = 2) -> np.ndarray:
        z = z.copy()
        order = np.argsort(-np.array([a for a, _ in self.anchors]))  # deepest first
        for _ in range(passes):
            for ci in order:
                mask = self.masks[ci]
                q = float((z[mask] ** 2).sum())
                r = self.radii[ci]
                if q > r * r:
                    z[mask] *= r / math.sqrt(q)
        return z


def _offsets(n: int, depth: int):
    import itertools

    return itertools.product(range(2 ** depth), repeat=n)


def feasibility(
    f_values, base_j: int, base_k, depth: int, alpha: float
) -> list[dict]:
    """Left-hand side of every anchor constraint for an f-block.

    Feasible iff every entry's lhs is <= 1 (+ tolerance).
    """
    base_k = tuple(int(v) for v in base_k)
    n = len(base_k)
    probe = MicrolocalProblem(base_j, base_k, depth, alpha, tuple([0.0] * block_cardinality(n, depth)))
    geo = _Geometry(probe)
    f = np.asarray(f_values, dtype=float)
    if f.shape != (geo.dim,):
        raise ValueError(f"expected {geo.dim} block entries, got {f.shape}")
    z = f * geo.sqrt_v
    out = []
    for (a, u), mask, r in zip(geo.anchors, geo.masks, geo.radii):
        lhs = float((z[mask] ** 2).sum() / (r * r))
        out.append({"level": a, "anchor": list(u), "lhs": lhs})
    return out


def _dual_phi_grad(lam: np.ndarray, geo: _Geometry, c: np.ndarray):
    sigma = geo.masks.T.astype(float) @ lam
    active = c > 0.0
    sig = np.where(sigma > 1e-300, sigma, 1e-300)
    phi = float(lam @ (geo.radii ** 2)) + float((c[active] ** 2 / (4.0 * sig[active])).sum())
    z = np.zeros_like(c)
    z[active] = c[active] / (2.0 * sig[active])
    grad = geo.radii ** 2 - geo.masks @ (z * z)
    return phi, grad, z


def _newton_polish(lam: np.ndarray, geo: _Geometry, c: np.ndarray, max_iter: int = 40):
    """Refine dual multipliers on the detected active set to machine precision."""
    active_cons = lam > max(1e-9 * lam.max(), 1e-14)
    iters = 0
    for _ in range(max_iter):
        iters += 1
        idx = np.flatnonzero(active_cons)
        if idx.size == 0:
            break
        sub = geo.masks[idx].astype(float)
        sigma = sub.T @ lam[idx]
        supp = c > 0.0
        if np.any(supp & (sigma <= 0.0)):
            break
        sig = np.where(sigma > 0.0, sigma, 1.0)
        z = np.where(supp, c / (2.0 * sig), 0.0)
        F = sub @ (z * z) - geo.radii[idx] ** 2
        if np.abs(F).max() < 1e-14:
            break
        w = np.where(supp, c ** 2 / (2.0 * sig ** 3), 0.0)
        J = -(sub * w) @ sub.T
        try:
            delta = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        beta = 1.0
        base = np.abs(F).max()
        for _ in range(30):
            trial = lam.copy()
            trial[idx] = lam[idx] + beta * delta
            if (trial[idx] > 0.0).all():
                sigma_t = sub.T @ trial[idx]
                if not np.any(supp & (sigma_t <= 0.0)):
                    z_t = np.where(supp, c / (2.0 * np.where(sigma_t > 0, sigma_t, 1.0)), 0.0)
                    F_t = sub @ (z_t * z_t) - geo.radii[idx] ** 2
                    if np.abs(F_t).max() < base:
                        lam = trial
                        break
            beta *= 0.5
        else:
            break
    return lam, iters


def solve(
    problem: MicrolocalProblem,
    *,
    seed: int = 0,
    restarts: int = 16,
    pga_iterations: int = 200,
    tol_feas: float = 1e-8,
    tol_val: float = 1e-6,
) -> MicrolocalSolution:
    """Maximize the pairing over the anchor constraints (value, maximizer,
    redistributed root coefficients, diagnostics)."""
    g = problem.g_array()
    if not np.any(g != 0.0):
        raise ValueError("zero block: the micro-local value needs a nonzero block")
    geo = _Geometry(problem)
    c_raw = np.abs(g) / geo.sqrt_v
    scale = float(c_raw.max())
    c = c_raw / scale

    # phase 1: projected-gradient ascent in the ball coordinates
    rng = np.random.default_rng(seed)
    r0 = geo.radii[0]
    best_z = np.zeros(geo.dim)
    best_val = -np.inf
    total_iters = 0
    for restart in range(max(1, restarts)):
        if restart == 0:
            z = geo.push_to_boundary(np.where(c > 0, c, 0.0))
        else:
            z = rng.uniform(0.0, 1.0, geo.dim) * geo.caps
            z[c == 0.0] = 0.0
            z = geo.project_cyclic(z)
        for it in range(pga_iterations):
            step = 0.5 * r0 / math.sqrt(1.0 + it)
            z = z + step * c
            z = geo.project_cyclic(z)
            total_iters += 1
        z = geo.push_to_boundary(z)
        z[c == 0.0] = 0.0
        val = float(c @ z)
        if val > best_val:
            best_val, best_z = val, z

    # phase 2: dual polish (smooth convex; certificate via duality gap)
    n_cons = len(geo.anchors)
    lam0 = np.full(n_cons, max(float(np.linalg.norm(c)) / 2.0, 1e-6))
    res = minimize(
        lambda lam: _dual_phi_grad(lam, geo, c)[:2],
        lam0,
        jac=True,
        method="L-BFGS-B",
        bounds=[(1e-14, None)] * n_cons,
        options={"maxiter": 500, "ftol": 1e-16, "gtol": 1e-12},
    )
    lam = np.asarray(res.x)
    lam, polish_iters = _newton_polish(lam, geo, c)
    phi, _, z_dual = _dual_phi_grad(lam, geo, c)
    z_dual = geo.push_to_boundary(np.where(c > 0, z_dual, 0.0))
    val_dual = float(c @ z_dual)
    if val_dual > best_val:
        best_val, best_z = val_dual, z_dual

    gap = phi - best_val
    if gap > 1e-6 * max(1.0, phi):
        raise SolverError(
            f"relative duality gap {gap / max(phi, 1e-300):.3e} above certificate "
            "tolerance; best feasible iterate attached",
            best_val * scale,
            best_z,
        )

    value = best_val * scale
    f_tilde = best_z / geo.sqrt_v
    signs = np.sign(g)
    maximizer = f_tilde * np.where(signs == 0.0, 0.0, signs)

    margins = feasibility(maximizer, problem.base_j, problem.base_k, problem.depth, problem.alpha)
    max_violation = max((m["lhs"] - 1.0 for m in margins), default=0.0)

    redistributed = _redistribute(problem, value)
    diag = SolveDiagnostics(
        pga_iterations=total_iters,
        polish_iterations=polish_iters,
        max_constraint_violation=float(max_violation),
        duality_gap=float(gap * scale),
        restarts=max(1, restarts),
    )
    return MicrolocalSolution(value, maximizer, redistributed, diag, problem)


def _redistribute(problem: MicrolocalProblem, value: float) -> dict[tuple[int, ...], float]:
    """Root-scale coefficients with the same block value (nonzero-root case)."""
    n, j = problem.n, problem.base_j
    members = problem.block.relative_members()
    g = problem.g_array()
    roots = {eps: 0.0 for eps in epsilon_patterns(n)}
    for gi, (eps, s, _) in zip(g, members):
        if s == 0:
            roots[eps] = gi
    root_l2 = math.sqrt(sum(v * v for v in roots.values()))
    if root_l2 == 0.0:
        flat = 2.0 ** (n * (j - 1) / 2.0) * value
        return {eps: flat for eps in roots}
    factor = 2.0 ** (n * j / 2.0) * value / root_l2
    return {eps: factor * v for eps, v in roots.items()}


def depth0_value(coeffs_by_eps: dict[tuple[int, ...], float], j: int, n: int) -> float:
    """Micro-local value of a single-scale block: 2^(-nj/2) * l2 norm."""
    l2 = math.sqrt(sum(v * v for v in coeffs_by_eps.values()))
    return 2.0 ** (-n * j / 2.0) * l2


def brute_force_microlocal(problem: MicrolocalProblem, resolution: float = 1e-6) -> float:
    """Independent zooming grid/boundary search oracle (dimension <= 7).

    Each round lays a grid over a box around the incumbent, pushes every
    point radially onto the tightest constraint, and keeps the best; the box
    then shrinks geometrically until its half-width falls below `resolution`
    times the coordinate caps.  Local maxima of a linear objective over a
    convex set are global, so the zoom cannot get trapped.
    """
    g = problem.g_array()
    geo = _Geometry(problem)
    if geo.dim > MAX_BRUTE_DIM:
        raise ValueError(
            f"block dimension {geo.dim} exceeds the brute-force limit {MAX_BRUTE_DIM}"
        )
    c = np.abs(g) / geo.sqrt_v
    if not np.any(c > 0.0):
        return 0.0
    points_per_axis = 15 if geo.dim <= 3 else (7 if geo.dim <= 5 else 5)
    shrink = 0.7
    rounds = max(8, int(math.ceil(math.log(resolution) / math.log(shrink))) + 4)

    center = np.zeros(geo.dim)
    best_val = 0.0
    width = geo.caps.copy()
    masks = geo.masks.astype(float)
    for _ in range(rounds):
        axes = [
            np.linspace(
                max(0.0, center[i] - width[i]),
                min(geo.caps[i], center[i] + width[i]),
                points_per_axis,
            )
            for i in range(geo.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        Z = np.stack([m.ravel() for m in mesh], axis=1)
        q = (Z * Z) @ masks.T
        with np.errstate(divide="ignore", invalid="ignore"):
            gam = np.where(q > 0.0, geo.radii[None, :] / np.sqrt(q), np.inf).min(axis=1)
            vals = np.nan_to_num((Z @ c) * gam, nan=0.0, posinf=0.0)
        ibest = int(np.argmax(vals))
        if vals[ibest] > best_val:
            best_val = float(vals[ibest])
            gbest = gam[ibest] if np.isfinite(gam[ibest]) else 1.0
            center = Z[ibest] * gbest
        width = width * shrink
    return best_val
