"""Tensor-product wavelet bases on the periodic grid.

Two families:

* Meyer — built directly in the discrete frequency domain, so the frequency
  supports supp phi_hat in [-4pi/3, 4pi/3] and supp psi_hat in
  [-8pi/3, 8pi/3] \\ (-2pi/3, 2pi/3) hold bit-exactly on grid frequencies,
  and every discrete inner product between in-range generators equals the
  continuum one (all products stay below the Nyquist index).  Analysis and
  synthesis run as FFT cross-correlations.

* Daubechies — compactly supported, m vanishing moments, filter computed by
  spectral factorization.  Analysis/synthesis use the periodized orthogonal
  filter bank (exact round trip and discrete Parseval); generator sampling
  for quadrature uses exact values at dyadic points (integer-grid eigenvector
  plus two-scale refinement).

Index convention everywhere: Phi^eps_{j,k}(x) = 2^{j n/2} Phi^eps(2^j x - k),
with positions k taken modulo 2^(j + period_log) on the torus.
"""
from __future__ import annotations

import functools
import hashlib
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .coeffs import CoefficientField
from .dyadic import DyadicCube, WaveletIndex, epsilon_patterns
from .grid import GridFunction, angular_frequencies

TAU_ORTH = 1e-8
TAU_RECON = 1e-8


@dataclass(frozen=True)
class BasisSpec:
    family: str                 # "meyer" | "daubechies"
    n: int
    level: int                  # grid has 2^level points per axis
    moments: int = 0            # vanishing moments (daubechies only)
    support_log: int = 0        # daubechies support inside [-2^M, 2^M]^n
    period_log: int = 0         # torus period 2^period_log

    def __post_init__(self):
        if self.family not in ("meyer", "daubechies"):
            raise ValueError(f"unknown wavelet family {self.family!r}")
        if not (1 <= self.n <= 3):
            raise ValueError("dimension n must be 1, 2 or 3")
        if self.family == "daubechies":
            if self.moments < 4:
                raise ValueError("daubechies order below 4 is not accepted")
            min_M = math.ceil(math.log2(self.moments))
            if self.support_log and self.support_log < min_M:
                raise ValueError(
                    f"support radius 2^{self.support_log} too small for "
                    f"{self.moments} moments (need M >= {min_M})"
                )

    @property
    def effective_support_log(self) -> int:
        if self.family != "daubechies":
            return 0
        return self.support_log or math.ceil(math.log2(self.moments))

    @property
    def j_max(self) -> int:
        """Finest wavelet scale resolvable on the grid."""
        if self.family == "meyer":
            # keep all generator spectra (and their pairwise products)
            # strictly inside the Nyquist range
            return self.level - self.period_log - 2
        return self.level - self.period_log - 1

    @property
    def j_min(self) -> int:
        return -self.period_log

    def fingerprint(self) -> str:
        tag = (
            f"{self.family}:n={self.n}:L={self.level}:m={self.moments}"
            f":M={self.effective_support_log}:P={self.period_log}"
        )
        return hashlib.sha256(tag.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Meyer frequency profiles
# ---------------------------------------------------------------------------

def _ramp(x: np.ndarray) -> np.ndarray:
    """Smooth 0->1 transition on [0,1]: b(x)/(b(x)+b(1-x)), b(x)=exp(-1/x)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out[x >= 1.0] = 1.0
    mid = (x > 0.0) & (x < 1.0)
    xm = x[mid]
    with np.errstate(over="ignore"):
        b = np.exp(-1.0 / xm)
        b1 = np.exp(-1.0 / (1.0 - xm))
    out[mid] = b / (b + b1)
    return out


def meyer_scaling_hat(xi: np.ndarray) -> np.ndarray:
    """phi_hat: 1 on |xi|<=2pi/3, cosine ramp down to 0 at |xi|=4pi/3."""
    a = np.abs(np.asarray(xi, dtype=float))
    return np.where(
        a <= 4.0 * np.pi / 3.0,
        np.cos(0.5 * np.pi * _ramp(3.0 * a / (2.0 * np.pi) - 1.0)),
        0.0,
    )


def meyer_wavelet_hat(xi: np.ndarray) -> np.ndarray:
    """psi_hat(xi) = e^{i xi/2} sqrt(phi_hat(xi/2)^2 - phi_hat(xi)^2)."""
    xi = np.asarray(xi, dtype=float)
    mag2 = meyer_scaling_hat(xi / 2.0) ** 2 - meyer_scaling_hat(xi) ** 2
    mag = np.sqrt(np.clip(mag2, 0.0, None))
    return np.exp(0.5j * xi) * mag


# ---------------------------------------------------------------------------
# Daubechies filters and dyadic-point tables
# ---------------------------------------------------------------------------

def daubechies_filter(p: int) -> np.ndarray:
    """Orthonormal scaling filter with p vanishing moments (length 2p).

    Spectral factorization: the half-band polynomial
    P(y) = sum_{k<p} C(p-1+k, k) y^k is factored by picking, for each root
    y0, the z-root of z^2 - (2 - 4 y0) z + 1 inside the unit circle; the
    filter is ((1+z)/2)^p times that factor, normalized to sum sqrt(2).
    """
    if p < 1:
        raise ValueError("need at least one vanishing moment")
    if p == 1:
        return np.array([1.0, 1.0]) / np.sqrt(2.0)
    coeffs = [math.comb(p - 1 + k, k) for k in range(p)]
    yroots = np.roots(list(reversed(coeffs)))
    zroots = []
    for y0 in yroots:
        b = 2.0 - 4.0 * y0
        disc = np.sqrt(b * b - 4.0 + 0j)
        z1, z2 = (b + disc) / 2.0, (b - disc) / 2.0
        zroots.append(z1 if abs(z1) < 1.0 else z2)
    poly = np.array([1.0 + 0j])
    for z0 in zroots:
        poly = np.convolve(poly, np.array([1.0, -z0]))
    for _ in range(p):
        poly = np.convolve(poly, np.array([0.5, 0.5]))
    h = np.real(poly)
    return h * (np.sqrt(2.0) / h.sum())


def wavelet_filter(h: np.ndarray) -> np.ndarray:
    """Quadrature mirror filter g[k] = (-1)^k h[len-1-k]."""
    signs = np.array([(-1) ** k for k in range(len(h))], dtype=float)
    return signs * h[::-1]


@functools.lru_cache(maxsize=32)
def _phi_integer_values(p: int) -> np.ndarray:
    """phi at the integers 0..2p-1 (endpoints zero), normalized to sum 1."""
    h = daubechies_filter(p)
    size = 2 * p - 2
    T = np.zeros((size, size))
    for a in range(1, size + 1):
        for b in range(1, size + 1):
            m = 2 * a - b
            if 0 <= m < 2 * p:
                T[a - 1, b - 1] = np.sqrt(2.0) * h[m]
    w, v = np.linalg.eig(T)
    idx = int(np.argmin(np.abs(w - 1.0)))
    vec = np.real(v[:, idx])
    vec = vec / vec.sum()
    out = np.zeros(2 * p)
    out[1 : 2 * p - 1] = vec
    return out


@functools.lru_cache(maxsize=64)
def phi_table(p: int, refine: int) -> np.ndarray:
    """phi at the dyadic points i/2^refine, i = 0..(2p-1)*2^refine, exact."""
    h = daubechies_filter(p)
    vals = _phi_integer_values(p)[: 2 * p]  # phi(0..2p-1)
    table = vals
    width = 2 * p - 1
    for r in range(1, refine + 1):
        prev = table  # level r-1 values at i/2^(r-1)
        cur = np.zeros(width * 2 ** r + 1)
        cur[::2] = prev
        # odd points: phi(i/2^r) = sqrt(2) sum_k h[k] phi(i/2^(r-1) - k)
        for i in range(1, width * 2 ** r, 2):
            acc = 0.0
            for k in range(2 * p):
                # argument (i - k*2^r) / 2^r at level r-1 grid: index i - k*2^r
                # is odd, so use level r-1 lookup of (i/2^(r-1) - k)
                arg_num = i - k * 2 ** (r - 1)
                if 0 <= arg_num <= width * 2 ** (r - 1):
                    acc += h[k] * prev[arg_num]
            cur[i] = np.sqrt(2.0) * acc
        table = cur
    return table


@functools.lru_cache(maxsize=64)
def psi_table(p: int, refine: int) -> np.ndarray:
    """psi at the dyadic points i/2^refine on [0, 2p-1], exact."""
    h = daubechies_filter(p)
    g = wavelet_filter(h)
    width = 2 * p - 1
    phi = phi_table(p, refine)
    out = np.zeros(width * 2 ** refine + 1)
    for i in range(len(out)):
        # psi(x) = sqrt(2) sum_k g[k] phi(2x - k); at x = i/2^refine the
        # argument 2x - k sits on the level-refine grid at index 2i - k 2^refine
        acc = 0.0
        for k in range(2 * p):
            arg_num = 2 * i - k * 2 ** refine
            if 0 <= arg_num <= width * 2 ** refine:
                acc += g[k] * phi[arg_num]
        out[i] = np.sqrt(2.0) * acc
    return out


# ---------------------------------------------------------------------------
# Realized basis
# ---------------------------------------------------------------------------

class Basis:
    """Realized basis: sampled generators plus fast transform plans.

    Immutable after construction; all caches are filled on first use and the
    cached arrays are never mutated, so instances may be shared across
    workers.
    """

    def __init__(self, spec: BasisSpec):
        self.spec = spec
        self._gen_cache: dict[tuple, np.ndarray] = {}
        self._spectrum_cache: dict[tuple, np.ndarray] = {}
        if spec.family == "daubechies":
            self.h = daubechies_filter(spec.moments)
            self.g = wavelet_filter(self.h)
            # artifact generators are the standard ones shifted left by p,
            # so supports sit in [-p, p-1] inside [-2^M, 2^M]
            self.offset = spec.moments
        else:
            self.h = None
            self.g = None
            self.offset = 0

    # -- geometry helpers ---------------------------------------------------

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def level(self) -> int:
        return self.spec.level

    @property
    def period_log(self) -> int:
        return self.spec.period_log

    @property
    def npts(self) -> int:
        return 2 ** self.level

    @property
    def step(self) -> float:
        return 2.0 ** (self.period_log - self.level)

    def positions(self, j: int) -> int:
        """Distinct torus positions per axis at scale j."""
        return 2 ** (j + self.period_log)

    def stride(self, j: int) -> int:
        return 2 ** (self.level - self.period_log - j)

    def check_scale(self, j: int):
        if j < self.spec.j_min or j > self.spec.j_max:
            raise ValueError(
                f"scale {j} outside the resolvable range "
                f"[{self.spec.j_min}, {self.spec.j_max}] for this grid"
            )

    def fingerprint(self) -> str:
        return self.spec.fingerprint()

    def empty_field(self, j_lo: int, j_hi: int) -> CoefficientField:
        return CoefficientField(j_lo, j_hi, self.period_log, self.fingerprint())

    # -- generators ---------------------------------------------------------

    def _axis_profile(self, wavelet: bool, j: int) -> np.ndarray:
        """1-d Fourier coefficients of the periodized generator at k=0."""
        key = ("prof", wavelet, j)
        if key not in self._spectrum_cache:
            xi = angular_frequencies(self.level, self.period_log)
            arg = xi / 2.0 ** j
            hat = meyer_wavelet_hat(arg) if wavelet else meyer_scaling_hat(arg).astype(complex)
            period = 2.0 ** self.period_log
            self._spectrum_cache[key] = (2.0 ** (-j / 2.0) / period) * hat
        return self._spectrum_cache[key]

    def _meyer_generator0(self, eps: tuple[int, ...], j: int) -> np.ndarray:
        """Sampled periodized generator at position k = 0."""
        key = ("gen0", eps, j)
        if key not in self._gen_cache:
            coeff = np.ones((1,) * self.n, dtype=complex)
            for axis in range(self.n):
                prof = self._axis_profile(bool(eps[axis]), j)
                shape = [1] * self.n
                shape[axis] = prof.size
                coeff = coeff * prof.reshape(shape)
            g = np.fft.ifftn(coeff) * (2 ** (self.level * self.n))
            self._gen_cache[key] = np.ascontiguousarray(np.real(g))
        return self._gen_cache[key]

    def _daub_axis_samples(self, wavelet: bool, j: int) -> np.ndarray:
        """1-d periodized samples of the (shifted) generator at k=0."""
        key = ("daxis", wavelet, j)
        if key not in self._gen_cache:
            p = self.spec.moments
            r = self.level - self.period_log - j
            if r < 0:
                raise ValueError(f"scale {j} finer than the grid")
            table = psi_table(p, r) if wavelet else phi_table(p, r)
            seg = table[:-1]  # endpoint value is 0
            width = (2 * p - 1) * 2 ** r
            if width > self.npts:
                raise ValueError(
                    f"scale {j} support (2^{-j} * {2 * p - 1}) exceeds the period"
                )
            out = np.zeros(self.npts)
            # artifact shift: Phi(x) = standard(x + p) => standard arg starts
            # at grid index -p * 2^r (mod period)
            start = (-self.offset * self.stride(j)) % self.npts
            idx = (start + np.arange(width)) % self.npts
            out[idx] += seg
            self._gen_cache[key] = out
        return self._gen_cache[key]

    def _daub_generator0(self, eps: tuple[int, ...], j: int) -> np.ndarray:
        key = ("gen0", eps, j)
        if key not in self._gen_cache:
            arrs = [self._daub_axis_samples(bool(e), j) for e in eps]
            g = arrs[0]
            for a in arrs[1:]:
                g = np.multiply.outer(g, a)
            self._gen_cache[key] = g * 2.0 ** (j * self.n / 2.0)
        return self._gen_cache[key]

    def generator0(self, eps: tuple[int, ...], j: int) -> np.ndarray:
        self.check_scale(j)
        if self.spec.family == "meyer":
            return self._meyer_generator0(eps, j)
        return self._daub_generator0(eps, j)

    def generator(self, eps, j: int, k) -> GridFunction:
        """Sampled Phi^eps_{j,k} on the grid (periodized)."""
        eps = tuple(int(v) for v in eps)
        k = tuple(int(v) for v in k)
        g0 = self.generator0(eps, j)
        shift = [kk * self.stride(j) for kk in k]
        vals = g0
        for axis, sh in enumerate(shift):
            vals = np.roll(vals, sh, axis=axis)
        return GridFunction(vals.copy(), self.level, self.period_log)

    def generator0_hat(self, eps: tuple[int, ...], j: int) -> np.ndarray:
        key = ("hat", eps, j)
        if key not in self._spectrum_cache:
            self._spectrum_cache[key] = np.fft.fftn(self.generator0(eps, j))
        return self._spectrum_cache[key]

    # -- analysis / synthesis -------------------------------------------------

    def _eps_list(self, include_scaling: bool, j: int, j_lo: int):
        pats = epsilon_patterns(self.n)
        if include_scaling and j == j_lo:
            pats = [tuple([0] * self.n)] + pats
        return pats

    def analyze(
        self,
        f: GridFunction,
        j_lo: int,
        j_hi: int,
        spatial: list[DyadicCube] | None = None,
        include_scaling: bool = False,
    ) -> CoefficientField:
        """Coefficients <f, Phi^eps_{j,k}> for j_lo <= j <= j_hi.

        `spatial` keeps only indices whose cube lies inside one of the given
        cubes; None keeps every torus position.
        """
        if (f.level, f.n) != (self.level, self.n) or f.period_log != self.period_log:
            raise ValueError("grid incompatible with basis")
        if j_lo > j_hi:
            raise ValueError("empty scale window")
        self.check_scale(j_lo)
        self.check_scale(j_hi)
        if self.spec.family == "meyer":
            field = self._analyze_corr(f, j_lo, j_hi, include_scaling)
        else:
            field = self._analyze_fwt(f, j_lo, j_hi, include_scaling)
        if spatial is not None:
            field = field.restrict_to_cubes(spatial)
        return field

    def _analyze_corr(self, f, j_lo, j_hi, include_scaling) -> CoefficientField:
        out = self.empty_field(j_lo, j_hi)
        fhat = np.fft.fftn(f.values)
        cellvol = self.step ** self.n
        for j in range(j_lo, j_hi + 1):
            stride = self.stride(j)
            sub = (slice(None, None, stride),) * self.n
            for eps in self._eps_list(include_scaling, j, j_lo):
                ghat = self.generator0_hat(eps, j)
                corr = np.real(np.fft.ifftn(fhat * np.conj(ghat))) * cellvol
                coeffs = corr[sub]
                for pos in np.argwhere(np.abs(coeffs) > 0):
                    k = tuple(int(v) for v in pos)
                    out.set(WaveletIndex(eps, j, k), float(coeffs[k]))
        return out

    # periodized separable filter-bank steps (daubechies)

    def _fwt_split_axis(self, arr: np.ndarray, axis: int):
        npos = arr.shape[axis]
        half = npos // 2
        idx0 = 2 * np.arange(half)
        low = np.zeros_like(np.take(arr, idx0, axis=axis))
        high = np.zeros_like(low)
        for m, (hm, gm) in enumerate(zip(self.h, self.g)):
            sl = np.take(arr, (idx0 + m) % npos, axis=axis)
            low = low + hm * sl
            high = high + gm * sl
        return low, high

    def _fwt_merge_axis(self, low: np.ndarray, high: np.ndarray, axis: int):
        half = low.shape[axis]
        npos = 2 * half
        shape = list(low.shape)
        shape[axis] = npos
        out = np.zeros(shape)
        idx0 = 2 * np.arange(half)
        for m, (hm, gm) in enumerate(zip(self.h, self.g)):
            contrib = hm * low + gm * high
            np.add.at(out, self._axis_index((idx0 + m) % npos, axis, len(shape)), contrib)
        return out

    @staticmethod
    def _axis_index(idx: np.ndarray, axis: int, ndim: int):
        sel: list = [slice(None)] * ndim
        sel[axis] = idx
        return tuple(sel)

    def _analyze_fwt(self, f, j_lo, j_hi, include_scaling) -> CoefficientField:
        out = self.empty_field(j_lo, j_hi)
        j_top = self.level - self.period_log
        c = f.values * self.step ** (self.n / 2.0)
        p = self.offset
        for j in range(j_top - 1, j_lo - 1, -1):
            pieces = {(): c}
            for axis in range(self.n):
                nxt = {}
                for eps_prefix, arr in pieces.items():
                    low, high = self._fwt_split_axis(arr, axis)
                    nxt[eps_prefix + (0,)] = low
                    nxt[eps_prefix + (1,)] = high
                pieces = nxt
            c = pieces.pop((0,) * self.n)
            if j <= j_hi:
                npos = self.positions(j)
                for eps, arr in pieces.items():
                    # artifact position k corresponds to standard slot k - p
                    rolled = np.roll(arr, p, axis=tuple(range(self.n)))
                    for pos in np.argwhere(np.abs(rolled) > 0):
                        k = tuple(int(v) % npos for v in pos)
                        out.set(WaveletIndex(eps, j, k), float(rolled[tuple(pos)]))
        if include_scaling:
            npos = self.positions(j_lo)
            rolled = np.roll(c, p, axis=tuple(range(self.n)))
            eps0 = (0,) * self.n
            for pos in np.argwhere(np.abs(rolled) > 0):
                k = tuple(int(v) % npos for v in pos)
                out.set(WaveletIndex(eps0, j_lo, k), float(rolled[tuple(pos)]))
        return out

    def synthesize(self, c: CoefficientField) -> GridFunction:
        """Sum of coeff * generator; exact left inverse of analyze on fields."""
        if self.spec.family == "meyer":
            return self._synthesize_conv(c)
        return self._synthesize_fwt(c)

    def _placed(self, c: CoefficientField, eps, j) -> np.ndarray:
        arr = np.zeros((self.npts,) * self.n)
        stride = self.stride(j)
        npos = self.positions(j)
        for idx, v in c.items():
            if idx.eps == eps and idx.j == j:
                spot = tuple((kk % npos) * stride for kk in idx.k)
                arr[spot] += v
        return arr

    def _synthesize_conv(self, c: CoefficientField) -> GridFunction:
        acc = np.zeros((self.npts,) * self.n, dtype=complex)
        groups = sorted({(idx.eps, idx.j) for idx in c})
        for eps, j in groups:
            self.check_scale(j)
            placed = self._placed(c, eps, j)
            acc += np.fft.fftn(placed) * self.generator0_hat(eps, j)
        return GridFunction(np.real(np.fft.ifftn(acc)), self.level, self.period_log)

    def _synthesize_fwt(self, c: CoefficientField) -> GridFunction:
        j_top = self.level - self.period_log
        scales = c.scales()
        j_lo = min(scales) if scales else j_top - 1
        self.check_scale(j_lo)
        p = self.offset
        eps0 = (0,) * self.n

        def level_array(eps, j):
            npos = self.positions(j)
            arr = np.zeros((npos,) * self.n)
            for idx, v in c.items():
                if idx.eps == eps and idx.j == j:
                    std = tuple((kk - p) % npos for kk in idx.k)
                    arr[std] += v
            return arr

        carr = level_array(eps0, j_lo)
        for j in range(j_lo, j_top):
            pieces: dict[tuple, np.ndarray] = {eps0: carr}
            for eps in epsilon_patterns(self.n):
                pieces[eps] = level_array(eps, j)
            # invert the axis-by-axis split: merge the last split axis first;
            # after merging axis `ax`, keys shrink to their length-ax prefix
            for axis in range(self.n - 1, -1, -1):
                merged: dict[tuple, np.ndarray] = {}
                for key in pieces:
                    pre = key[:axis]
                    if pre not in merged:
                        merged[pre] = self._fwt_merge_axis(
                            pieces[pre + (0,)], pieces[pre + (1,)], axis
                        )
                pieces = merged
            carr = pieces[()]
        values = carr / self.step ** (self.n / 2.0)
        return GridFunction(values, self.level, self.period_log)

    # -- diagnostics ----------------------------------------------------------

    def gram_matrix(self, indices: list[WaveletIndex]) -> np.ndarray:
        gens = np.stack([self.generator(i.eps, i.j, i.k).values.ravel() for i in indices])
        return gens @ gens.T * self.step ** self.n

    def gram_deviation(self, indices: list[WaveletIndex]) -> float:
        G = self.gram_matrix(indices)
        return float(np.abs(G - np.eye(len(indices))).max())

    def wraparound_energy(self, eps, j: int) -> float:
        """Generator energy at torus distance > period/4 from its anchor."""
        g0 = self.generator0(tuple(eps), j)
        pts = np.arange(self.npts) * self.step
        period = 2.0 ** self.period_log
        dist = np.minimum(pts, period - pts)
        mask1d = dist > period / 4.0
        mask = np.zeros_like(g0, dtype=bool)
        for axis in range(self.n):
            shape = [1] * self.n
            shape[axis] = self.npts
            mask |= mask1d.reshape(shape)
        return float((g0[mask] ** 2).sum() * self.step ** self.n)


@functools.lru_cache(maxsize=16)
def build_basis(spec: BasisSpec) -> Basis:
    """Realize (and cache) the basis for a spec."""
    return Basis(spec)
