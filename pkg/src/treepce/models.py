"""Analytical benchmark functions with known structure and, where available,
exact Sobol' indices; plus seeded sampling into SampleSets.

Sampling uses numpy's default_rng (PCG64), so benchmark tables are
bit-reproducible for a given seed on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import InputSpace, SampleSet


@dataclass(frozen=True)
class BenchmarkModel:
    name: str
    dimension: int
    space: InputSpace
    evaluator: Callable[[np.ndarray], np.ndarray]
    first_order_sobol: Optional[np.ndarray] = None
    discontinuities: tuple = ()

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.evaluator(X)


def step_1d() -> BenchmarkModel:
    """x -> 1{x > 1/2} on uniform [0, 1]."""
    return BenchmarkModel(
        name="step",
        dimension=1,
        space=InputSpace.uniform_unit(1),
        evaluator=lambda X: (X[:, 0] > 0.5).astype(float),
        first_order_sobol=np.array([1.0]),
        discontinuities=((0, 0.5),),
    )


def diagonal_2d() -> BenchmarkModel:
    """Three-region function on [0,1]^2 with a diagonal discontinuity:
    0 for x1 < 0.5; 1 above the line x2 = 2 x1 - 1; 2 below it."""

    def ev(X):
        x1, x2 = X[:, 0], X[:, 1]
        out = np.zeros(X.shape[0])
        right = x1 >= 0.5
        out[right & (x2 > 2 * x1 - 1)] = 1.0
        out[right & (x2 <= 2 * x1 - 1)] = 2.0
        return out

    return BenchmarkModel(
        name="diagonal2d",
        dimension=2,
        space=InputSpace.uniform_unit(2),
        evaluator=ev,
        discontinuities=((0, 0.5),),
    )


def oscillatory_multid(d: int, k: float, c: float, a=None) -> BenchmarkModel:
    """Additive model sum_i a_i [c + sin(k pi (x_i - 1/3))] 1{x_i > 1/3} on
    uniform [0,1]^d. First-order indices are a_j^2 / sum a_i^2 when the
    per-coordinate terms have equal variances up to the a_i^2 factor."""
    if a is None:
        a = np.arange(1, d + 1, dtype=float)
    a = np.asarray(a, dtype=float)
    if len(a) != d:
        raise ValueError("len(a) must equal d")

    def ev(X):
        terms = a * (c + np.sin(k * np.pi * (X - 1.0 / 3.0))) * (X > 1.0 / 3.0)
        return terms.sum(axis=1)

    s = a**2 / np.sum(a**2)
    return BenchmarkModel(
        name="multid",
        dimension=d,
        space=InputSpace.uniform_unit(d),
        evaluator=ev,
        first_order_sobol=s,
        discontinuities=tuple((i, 1.0 / 3.0) for i in range(d)),
    )


def sample(model: BenchmarkModel, N: int, seed: int) -> SampleSet:
    """N i.i.d. points from the model's input space with evaluated outputs."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    lo = model.space.lower
    hi = model.space.upper
    X = lo + (hi - lo) * rng.random((N, model.dimension))
    return SampleSet(X, model(X))


BENCHMARKS = {
    "step": lambda **kw: step_1d(),
    "diagonal2d": lambda **kw: diagonal_2d(),
    "multid": lambda d=4, k=1.0, c=1.0, a=None, **kw: oscillatory_multid(int(d), float(k), float(c), a),
}
