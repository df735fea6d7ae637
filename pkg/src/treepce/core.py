"""Foundational data types: marginals, sample sets, threshold meshes, rectangles.

All types are immutable after construction and safe to share across workers.
Rectangles are described by indices into a fixed threshold mesh, so their
geometric bounds are recovered exactly with no floating drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate


@dataclass(frozen=True)
class MarginalDistribution:
    """Marginal distribution of one input component.

    ``kind`` is either ``"uniform"`` (bounded support, constant density) or
    ``"density"`` (user-supplied density evaluator on a bounded support).
    """

    kind: str
    lower: float
    upper: float
    density: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if self.lower >= self.upper:
            raise ValueError(f"lower ({self.lower}) must be < upper ({self.upper})")
        if self.kind == "uniform":
            pass
        elif self.kind == "density":
            if self.density is None:
                raise ValueError("density marginal requires a density evaluator")
        else:
            raise ValueError(f"unknown marginal kind {self.kind!r}")

    @staticmethod
    def uniform(lower: float, upper: float) -> "MarginalDistribution":
        return MarginalDistribution("uniform", float(lower), float(upper))

    def interval_probability(self, a: float, b: float) -> float:
        """P(X in [a, b]), clipped to the support."""
        a = max(a, self.lower)
        b = min(b, self.upper)
        if b <= a:
            return 0.0
        if self.kind == "uniform":
            return (b - a) / (self.upper - self.lower)
        val, _ = integrate.quad(self.density, a, b, epsabs=1e-12, limit=200)
        return val

    def segment_moment(self, a: float, b: float, rho: int) -> float:
        """Integral of x^rho f(x) dx over [a, b] (not conditioned)."""
        if b <= a:
            return 0.0
        if self.kind == "uniform":
            # closed form: (b^(rho+1) - a^(rho+1)) / ((rho+1)(upper-lower))
            return (b ** (rho + 1) - a ** (rho + 1)) / (
                (rho + 1) * (self.upper - self.lower)
            )
        val, _ = integrate.quad(
            lambda x: x**rho * self.density(x), a, b, epsabs=1e-12, limit=200
        )
        return val


@dataclass(frozen=True)
class InputSpace:
    """Product of d independent marginals."""

    marginals: tuple[MarginalDistribution, ...]

    def __init__(self, marginals: Sequence[MarginalDistribution]):
        if len(marginals) < 1:
            raise ValueError("input space needs at least one dimension")
        object.__setattr__(self, "marginals", tuple(marginals))

    @property
    def dimension(self) -> int:
        return len(self.marginals)

    @property
    def lower(self) -> np.ndarray:
        return np.array([m.lower for m in self.marginals])

    @property
    def upper(self) -> np.ndarray:
        return np.array([m.upper for m in self.marginals])

    @staticmethod
    def uniform_unit(d: int) -> "InputSpace":
        return InputSpace([MarginalDistribution.uniform(0.0, 1.0) for _ in range(d)])

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass(frozen=True)
class SampleSet:
    """N input points in d dimensions with paired scalar outputs."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        outputs = np.asarray(self.outputs, dtype=float).ravel()
        if inputs.shape[0] != outputs.shape[0]:
            raise ValueError(
                f"row mismatch: {inputs.shape[0]} inputs vs {outputs.shape[0]} outputs"
            )
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    @property
    def size(self) -> int:
        return self.inputs.shape[0]

    @property
    def dimension(self) -> int:
        return self.inputs.shape[1]

    def subset(self, mask: np.ndarray) -> "SampleSet":
        return SampleSet(self.inputs[mask], self.outputs[mask])

    def to_csv(self, path) -> None:
        d = self.dimension
        header = ",".join([f"x{i + 1}" for i in range(d)] + ["y"])
        data = np.column_stack([self.inputs, self.outputs])
        np.savetxt(path, data, delimiter=",", header=header, comments="",
                   fmt="%.17g")

    @staticmethod
    def from_csv(path) -> "SampleSet":
        """Read the ``x1,...,xd,y`` CSV format. Raises ValueError with a line
        number on malformed rows."""
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise ValueError("empty CSV file (line 1)")
        header = [c.strip() for c in lines[0].split(",")]
        if header[-1] != "y" or len(header) < 2:
            raise ValueError("line 1: header must be x1,...,xd,y")
        d = len(header) - 1
        rows = []
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != d + 1:
                raise ValueError(f"line {lineno}: expected {d + 1} fields, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric value") from None
        if not rows:
            raise ValueError("line 2: no data rows")
        arr = np.array(rows)
        return SampleSet(arr[:, :d], arr[:, d])


class ThresholdMesh:
    """Per-dimension strictly increasing candidate split values.

    Entry 0 and entry -1 of each sequence are the domain endpoints (sentinels),
    so every rectangle is describable purely by mesh indices.
    """

    def __init__(self, space: InputSpace, interior: Sequence[np.ndarray]):
        if len(interior) != space.dimension:
            raise ValueError("need one threshold sequence per dimension")
        points = []
        for i, t in enumerate(interior):
            t = np.asarray(t, dtype=float).ravel()
            lo, hi = space.marginals[i].lower, space.marginals[i].upper
            if t.size and (t.min() <= lo or t.max() >= hi):
                raise ValueError(f"dimension {i}: interior points must lie strictly inside the support")
            full = np.concatenate([[lo], np.sort(t), [hi]])
            if np.any(np.diff(full) <= 0):
                raise ValueError(f"dimension {i}: thresholds must be strictly increasing")
            points.append(full)
        self.space = space
        self.points = points

    @property
    def dimension(self) -> int:
        return len(self.points)

    @staticmethod
    def regular(space: InputSpace, n_interior: int) -> "ThresholdMesh":
        """Equispaced interior points, e.g. n_interior=8 on [0,1] gives {1/9,...,8/9}."""
        interior = []
        for m in space.marginals:
            pts = m.lower + (m.upper - m.lower) * np.arange(1, n_interior + 1) / (n_interior + 1)
            interior.append(pts)
        return ThresholdMesh(space, interior)

    @staticmethod
    def from_points(space: InputSpace, per_dim: Sequence[Sequence[float]]) -> "ThresholdMesh":
        return ThresholdMesh(space, [np.asarray(p, dtype=float) for p in per_dim])

    def full_rectangle(self) -> "Rectangle":
        lo = tuple(0 for _ in self.points)
        hi = tuple(len(p) - 1 for p in self.points)
        return Rectangle(self, lo, hi)


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned box given by mesh-index bounds, prod_i [t_{i,lo_i}, t_{i,hi_i}]."""

    mesh: ThresholdMesh
    lo_idx: tuple[int, ...]
    hi_idx: tuple[int, ...]

    def __post_init__(self):
        for i, (lo, hi) in enumerate(zip(self.lo_idx, self.hi_idx)):
            n = len(self.mesh.points[i])
            if not (0 <= lo < hi <= n - 1):
                raise ValueError(f"dimension {i}: invalid index bounds ({lo}, {hi})")

    @property
    def dimension(self) -> int:
        return len(self.lo_idx)

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.mesh.points[i][j] for i, j in enumerate(self.lo_idx)])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.mesh.points[i][j] for i, j in enumerate(self.hi_idx)])

    def interval(self, i: int) -> tuple[float, float]:
        return (self.mesh.points[i][self.lo_idx[i]], self.mesh.points[i][self.hi_idx[i]])

    def splittable_dimensions(self) -> list[int]:
        return [i for i in range(self.dimension) if self.hi_idx[i] > self.lo_idx[i] + 1]

    def split(self, dim: int, j: int) -> tuple["Rectangle", "Rectangle"]:
        """Split at interior mesh index j of dimension dim; children share the face."""
        if not (self.lo_idx[dim] < j < self.hi_idx[dim]):
            raise ValueError(f"index {j} not interior to dimension {dim}")
        hi1 = list(self.hi_idx)
        hi1[dim] = j
        lo2 = list(self.lo_idx)
        lo2[dim] = j
        return (Rectangle(self.mesh, self.lo_idx, tuple(hi1)),
                Rectangle(self.mesh, tuple(lo2), self.hi_idx))


def conditional_mass(space: InputSpace, rect: Rectangle) -> float:
    """Probability mass P(X in rect), a product over dimensions."""
    mass = 1.0
    for i, m in enumerate(space.marginals):
        a, b = rect.interval(i)
        mass *= m.interval_probability(a, b)
    return mass


def filter_samples(data: SampleSet, rect: Rectangle) -> SampleSet:
    """Rows of ``data`` inside ``rect``; closed intervals on both sides, so a
    sample sitting exactly on a split value belongs to both children."""
    lo, hi = rect.lower, rect.upper
    mask = np.all((data.inputs >= lo) & (data.inputs <= hi), axis=1)
    return data.subset(mask)
