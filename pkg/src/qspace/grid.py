"""Sampled functions on a periodic dyadic grid.

The torus is [0, 2^period_log)^n sampled with 2^level points per axis, so the
mesh step 2^(period_log - level) is itself dyadic and every cube Q_{j,k} with
-period_log <= j <= level - period_log lands exactly on grid cells.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dyadic import DyadicCube


@dataclass
class GridFunction:
    values: np.ndarray
    level: int
    period_log: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        npts = 2 ** self.level
        if self.values.shape != (npts,) * self.values.ndim:
            raise ValueError(
                f"expected shape {(npts,) * self.values.ndim}, got {self.values.shape}"
            )

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def period(self) -> float:
        return float(2 ** self.period_log)

    @property
    def step(self) -> float:
        return float(2.0 ** (self.period_log - self.level))

    @property
    def cell_volume(self) -> float:
        return self.step ** self.n

    def axis_points(self) -> np.ndarray:
        return np.arange(2 ** self.level) * self.step

    def mean(self) -> float:
        return float(self.values.mean())

    def norm_l1(self) -> float:
        return float(np.abs(self.values).sum() * self.cell_volume)

    def norm_l2(self) -> float:
        return float(np.sqrt((self.values ** 2).sum() * self.cell_volume))

    def norm_sup(self) -> float:
        return float(np.abs(self.values).max())

    def inner(self, other: "GridFunction") -> float:
        self._check_compatible(other)
        return float((self.values * other.values).sum() * self.cell_volume)

    def _check_compatible(self, other: "GridFunction"):
        if (self.level, self.period_log, self.n) != (
            other.level,
            other.period_log,
            other.n,
        ):
            raise ValueError("grid mismatch")

    def copy(self) -> "GridFunction":
        return GridFunction(self.values.copy(), self.level, self.period_log)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check_compatible(other)
        return GridFunction(self.values + other.values, self.level, self.period_log)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check_compatible(other)
        return GridFunction(self.values - other.values, self.level, self.period_log)

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.values * float(scalar), self.level, self.period_log)

    __rmul__ = __mul__

    def cube_slices(self, cube: DyadicCube) -> tuple[slice, ...]:
        """Grid index slices covering Q_{j,k}; the cube must sit on the torus."""
        if cube.n != self.n:
            raise ValueError("dimension mismatch")
        span = self.level - self.period_log - cube.j
        if span < 0:
            raise ValueError(
                f"cube at scale {cube.j} is below grid resolution "
                f"(finest resolvable scale {self.level - self.period_log})"
            )
        width = 2 ** span
        npts = 2 ** self.level
        out = []
        for kk in cube.k:
            start = kk * width
            if start < 0 or start + width > npts:
                raise ValueError(f"cube {cube} falls outside the torus [0, {self.period})^n")
            out.append(slice(start, start + width))
        return tuple(out)

    def restrict(self, cube: DyadicCube) -> np.ndarray:
        return self.values[self.cube_slices(cube)]

    def save(self, path: str | Path):
        """Flat float64 binary (row-major) plus a JSON sidecar."""
        path = Path(path)
        self.values.astype("<f8").tofile(path)
        sidecar = {
            "n": self.n,
            "level": self.level,
            "period_log": self.period_log,
            "ordering": "row-major",
            "dtype": "<f8",
        }
        path.with_suffix(path.suffix + ".json").write_text(
            json.dumps(sidecar, sort_keys=True, indent=1)
        )

    @staticmethod
    def load(path: str | Path) -> "GridFunction":
        path = Path(path)
        sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        npts = 2 ** int(sidecar["level"])
        values = np.fromfile(path, dtype="<f8").reshape((npts,) * int(sidecar["n"]))
        return GridFunction(values, int(sidecar["level"]), int(sidecar["period_log"]))


def angular_frequencies(level: int, period_log: int = 0) -> np.ndarray:
    """Discrete angular frequencies xi_m = 2 pi m / period along one axis."""
    npts = 2 ** level
    m = np.fft.fftfreq(npts) * npts
    return 2.0 * np.pi * m / (2.0 ** period_log)


def frequency_grid(level: int, n: int, period_log: int = 0) -> list[np.ndarray]:
    """Broadcastable per-axis angular frequency arrays for an n-d grid."""
    xi = angular_frequencies(level, period_log)
    out = []
    for axis in range(n):
        shape = [1] * n
        shape[axis] = xi.size
        out.append(xi.reshape(shape))
    return out
