"""Sparse wavelet coefficient fields.

A CoefficientField is a finite map (eps, j, k) -> value over a declared scale
window; absent means zero.  Fields carry the torus period of the grid they
were analyzed on so square functions know the spatial extent.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .dyadic import DyadicCube, WaveletIndex

HEADER_KIND = "qspace-coefficients"


@dataclass
class CoefficientField:
    j_min: int
    j_max: int
    period_log: int = 0
    basis_fingerprint: str = ""
    _data: dict[WaveletIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.j_min > self.j_max:
            raise ValueError("empty scale window")
        for idx in self._data:
            self._check_window(idx)

    def _check_window(self, idx: WaveletIndex):
        if not (self.j_min <= idx.j <= self.j_max):
            raise ValueError(
                f"index scale {idx.j} outside declared window [{self.j_min}, {self.j_max}]"
            )

    def __len__(self) -> int:
        return len(self._data)

    def __iter__(self) -> Iterator[WaveletIndex]:
        return iter(self._data)

    def __contains__(self, idx: WaveletIndex) -> bool:
        return idx in self._data

    def get(self, idx: WaveletIndex) -> float:
        return self._data.get(idx, 0.0)

    def set(self, idx: WaveletIndex, value: float):
        self._check_window(idx)
        if value == 0.0:
            self._data.pop(idx, None)
        else:
            self._data[idx] = float(value)

    def items(self) -> Iterable[tuple[WaveletIndex, float]]:
        return self._data.items()

    def sorted_items(self) -> list[tuple[WaveletIndex, float]]:
        return sorted(self._data.items(), key=lambda kv: kv[0])

    @property
    def n(self) -> int:
        for idx in self._data:
            return idx.n
        return 0

    def scales(self) -> list[int]:
        return sorted({idx.j for idx in self._data})

    def energy(self) -> float:
        return sum(v * v for v in self._data.values())

    def max_abs(self) -> float:
        return max((abs(v) for v in self._data.values()), default=0.0)

    def copy(self) -> "CoefficientField":
        return CoefficientField(
            self.j_min, self.j_max, self.period_log, self.basis_fingerprint,
            dict(self._data),
        )

    def scaled(self, factor: float) -> "CoefficientField":
        out = self.copy()
        out._data = {k: v * float(factor) for k, v in self._data.items()}
        return out

    def __add__(self, other: "CoefficientField") -> "CoefficientField":
        out = CoefficientField(
            min(self.j_min, other.j_min),
            max(self.j_max, other.j_max),
            self.period_log,
            self.basis_fingerprint,
            dict(self._data),
        )
        for idx, v in other.items():
            out.set(idx, out.get(idx) + v)
        return out

    def __sub__(self, other: "CoefficientField") -> "CoefficientField":
        return self + other.scaled(-1.0)

    def restrict_scales(self, j_lo: int, j_hi: int) -> "CoefficientField":
        """Keep indices with j_lo <= j <= j_hi; an empty range yields a zero field."""
        lo, hi = (j_lo, j_hi) if j_lo <= j_hi else (self.j_min, self.j_min - 0)
        out = CoefficientField(
            min(self.j_min, lo), max(self.j_max, hi) if j_lo <= j_hi else self.j_max,
            self.period_log, self.basis_fingerprint,
        )
        if j_lo > j_hi:
            return out
        for idx, v in self._data.items():
            if j_lo <= idx.j <= j_hi:
                out._data[idx] = v
        return out

    def restrict_to_cubes(self, cubes: Iterable[DyadicCube]) -> "CoefficientField":
        cubes = list(cubes)
        out = CoefficientField(
            self.j_min, self.j_max, self.period_log, self.basis_fingerprint
        )
        for idx, v in self._data.items():
            c = idx.cube
            if any(q.contains(c) for q in cubes):
                out._data[idx] = v
        return out

    def filter(self, keep: Callable[[WaveletIndex], bool]) -> "CoefficientField":
        out = CoefficientField(
            self.j_min, self.j_max, self.period_log, self.basis_fingerprint
        )
        out._data = {idx: v for idx, v in self._data.items() if keep(idx)}
        return out

    def support_extent(self) -> tuple[DyadicCube, ...]:
        """Minimal antichain of stored cubes covering the support (coarsest first)."""
        cubes = sorted({idx.cube for idx in self._data})
        keep: list[DyadicCube] = []
        for c in cubes:
            if not any(p.contains(c) for p in keep):
                keep.append(c)
        return tuple(keep)

    def pairing(self, other: "CoefficientField") -> float:
        """Coefficient pairing sum f^eps_{j,k} g^eps_{j,k} over shared indices."""
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        return sum(v * big.get(idx) for idx, v in small.items())

    def to_jsonl(self, path: str | Path, extra_meta: dict | None = None):
        path = Path(path)
        header = {
            "kind": HEADER_KIND,
            "j_min": self.j_min,
            "j_max": self.j_max,
            "period_log": self.period_log,
            "basis_fingerprint": self.basis_fingerprint,
            "count": len(self._data),
        }
        if extra_meta:
            header.update(extra_meta)
        with path.open("w") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for idx, v in self.sorted_items():
                rec = {"eps": list(idx.eps), "j": idx.j, "k": list(idx.k), "v": v}
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    @staticmethod
    def from_jsonl(path: str | Path) -> "CoefficientField":
        path = Path(path)
        with path.open() as fh:
            header = json.loads(fh.readline())
            if header.get("kind") != HEADER_KIND:
                raise ValueError(f"{path}: not a coefficient file")
            out = CoefficientField(
                int(header["j_min"]),
                int(header["j_max"]),
                int(header.get("period_log", 0)),
                str(header.get("basis_fingerprint", "")),
            )
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                if rec.get("kind") == "footer":
                    break
                idx = WaveletIndex(tuple(rec["eps"]), int(rec["j"]), tuple(rec["k"]))
                out.set(idx, float(rec["v"]))
        return out


def unit_field(idx: WaveletIndex, value: float = 1.0, period_log: int = 0) -> CoefficientField:
    out = CoefficientField(idx.j, idx.j, period_log)
    out.set(idx, value)
    return out
