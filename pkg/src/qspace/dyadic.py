"""Dyadic cube and wavelet index algebra.

A cube Q_{j,k} = prod_s [2^-j k_s, 2^-j (k_s+1)] is stored as the integer
scale j and the integer position vector k, so refinement, containment and
partition checks are exact.  Geometric endpoints are materialized on demand
as Fractions; nothing here ever touches floats.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence


def epsilon_patterns(n: int, include_zero: bool = False) -> list[tuple[int, ...]]:
    """All wavelet type patterns in {0,1}^n (minus the zero pattern by default)."""
    pats = [p for p in itertools.product((0, 1), repeat=n)]
    if not include_zero:
        pats = [p for p in pats if any(p)]
    return pats


def dyadic_offsets(n: int, depth: int) -> list[tuple[int, ...]]:
    """The offset lattice {0, ..., 2^depth - 1}^n."""
    return list(itertools.product(range(2 ** depth), repeat=n))


@dataclass(frozen=True, order=True)
class DyadicCube:
    """The cube Q_{j,k}; side length 2^-j, volume 2^-(j n)."""

    j: int
    k: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def side(self) -> Fraction:
        return Fraction(1, 2 ** self.j) if self.j >= 0 else Fraction(2 ** (-self.j))

    @property
    def volume(self) -> Fraction:
        return self.side ** self.n

    def volume_log2(self) -> int:
        """log2 |Q| = -j*n, exact."""
        return -self.j * self.n

    def lower(self) -> tuple[Fraction, ...]:
        return tuple(v * self.side for v in self.k)

    def upper(self) -> tuple[Fraction, ...]:
        return tuple((v + 1) * self.side for v in self.k)

    def children(self) -> list["DyadicCube"]:
        """The 2^n cubes at scale j+1 partitioning this cube."""
        return [
            DyadicCube(self.j + 1, tuple(2 * a + v for a, v in zip(self.k, off)))
            for off in itertools.product((0, 1), repeat=self.n)
        ]

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.j - 1, tuple(v >> 1 for v in self.k))

    def ancestor(self, j: int) -> "DyadicCube":
        """The unique ancestor at scale j <= self.j."""
        if j > self.j:
            raise ValueError(f"ancestor scale {j} finer than cube scale {self.j}")
        d = self.j - j
        return DyadicCube(j, tuple(v >> d for v in self.k))

    def contains(self, other: "DyadicCube") -> bool:
        """Containment by bit shift: other subset of self."""
        if other.n != self.n or other.j < self.j:
            return False
        d = other.j - self.j
        return all((v >> d) == w for v, w in zip(other.k, self.k))

    def to_json(self) -> dict:
        return {"j": self.j, "k": list(self.k)}

    @staticmethod
    def from_json(obj: dict) -> "DyadicCube":
        return DyadicCube(int(obj["j"]), tuple(int(v) for v in obj["k"]))


def children(cube: DyadicCube) -> list[DyadicCube]:
    return cube.children()


@dataclass(frozen=True, order=True)
class WaveletIndex:
    """A wavelet label (eps, j, k); eps = 0...0 marks a scale-function slot."""

    eps: tuple[int, ...]
    j: int
    k: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(int(v) for v in self.eps))
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        if len(self.eps) != len(self.k):
            raise ValueError("eps and k dimension mismatch")
        if any(v not in (0, 1) for v in self.eps):
            raise ValueError(f"eps must be a 0/1 pattern, got {self.eps}")

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def is_scaling(self) -> bool:
        return not any(self.eps)

    @property
    def cube(self) -> DyadicCube:
        return DyadicCube(self.j, self.k)

    def to_json(self) -> dict:
        return {"eps": list(self.eps), "j": self.j, "k": list(self.k)}

    @staticmethod
    def from_json(obj: dict) -> "WaveletIndex":
        return WaveletIndex(tuple(obj["eps"]), int(obj["j"]), tuple(obj["k"]))


def block_cardinality(n: int, t: int) -> int:
    """(2^n - 1) * sum_{0<=s<=t} 2^(n s)."""
    return (2 ** n - 1) * sum(2 ** (n * s) for s in range(t + 1))


@dataclass(frozen=True)
class BlockIndexSet:
    """Depth-t index block rooted at (j, k): all (eps, j+s, 2^s k + v)."""

    base_j: int
    base_k: tuple[int, ...]
    depth: int

    @property
    def n(self) -> int:
        return len(self.base_k)

    def members(self) -> list[WaveletIndex]:
        out = []
        for s in range(self.depth + 1):
            shifted = tuple(v * 2 ** s for v in self.base_k)
            for off in dyadic_offsets(self.n, s):
                pos = tuple(a + b for a, b in zip(shifted, off))
                for eps in epsilon_patterns(self.n):
                    out.append(WaveletIndex(eps, self.base_j + s, pos))
        return out

    def relative_members(self) -> list[tuple[tuple[int, ...], int, tuple[int, ...]]]:
        """Members as (eps, s, v) with s the level above the base and v the offset."""
        out = []
        for s in range(self.depth + 1):
            for off in dyadic_offsets(self.n, s):
                for eps in epsilon_patterns(self.n):
                    out.append((eps, s, off))
        return out

    def __len__(self) -> int:
        return block_cardinality(self.n, self.depth)


def enumerate_block(base: tuple[int, Sequence[int]], t: int) -> BlockIndexSet:
    """The block G_{t,n} translated to sit under the cube Q_{base}."""
    if t < 0:
        raise ValueError("block depth must be >= 0")
    j, k = base
    return BlockIndexSet(int(j), tuple(int(v) for v in k), int(t))


@dataclass(frozen=True)
class WindowSpec:
    """A finite scale/space window: scales s-N..s inside listed anchor cubes.

    Anchors live at scale s-N.  The infinite union over anchor positions is
    always truncated to the explicit list given here.
    """

    s: int
    N: int
    anchors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("window depth N must be >= 0")
        object.__setattr__(
            self, "anchors", tuple(tuple(int(v) for v in a) for a in self.anchors)
        )

    @property
    def n(self) -> int:
        return len(self.anchors[0]) if self.anchors else 0

    @property
    def anchor_scale(self) -> int:
        return self.s - self.N

    def anchor_cubes(self) -> list[DyadicCube]:
        return [DyadicCube(self.anchor_scale, a) for a in self.anchors]


def enumerate_window(spec: WindowSpec) -> list[DyadicCube]:
    """All cubes with scale in [s-N, s] inside the anchors, without duplicates."""
    seen: dict[DyadicCube, None] = {}
    for anchor in spec.anchors:
        for j in range(spec.anchor_scale, spec.s + 1):
            d = j - spec.anchor_scale
            base = tuple(v * 2 ** d for v in anchor)
            for off in dyadic_offsets(spec.n, d):
                cube = DyadicCube(j, tuple(a + b for a, b in zip(base, off)))
                seen[cube] = None
    return list(seen)


def window_indices(spec: WindowSpec) -> list[WaveletIndex]:
    """Wavelet indices (eps in E_n) for every cube of the window."""
    out = []
    for cube in enumerate_window(spec):
        for eps in epsilon_patterns(len(cube.k)):
            out.append(WaveletIndex(eps, cube.j, cube.k))
    return out
