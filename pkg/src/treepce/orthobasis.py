"""Univariate orthonormal polynomial families on an interval, and their
tensorization into multivariate bases with a total-degree truncation.

Two representations are kept side by side: monomial coefficients (needed for
cross-interval inner products in the sensitivity module) and a stable
recurrence-based evaluator used everywhere a model is evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly

from .core import MarginalDistribution

# Beyond this degree the monomial-coefficient arithmetic of the J-integrals
# loses too many digits in double precision.
MAX_DEGREE = 12


@dataclass(frozen=True)
class UnivariateBasis:
    """Polynomials phi_0..phi_p orthonormal under the marginal conditioned on
    ``interval``. ``monomial`` has shape (p+1, p+1); row alpha holds the
    coefficients beta_{alpha,rho} of phi_alpha(x) = sum_rho beta x^rho."""

    marginal: MarginalDistribution
    interval: tuple[float, float]
    p_max: int
    monomial: np.ndarray

    def evaluate(self, alpha: int, x) -> np.ndarray:
        """phi_alpha at points x (scalar or array)."""
        return self.evaluate_all(x)[..., alpha]

    def evaluate_all(self, x) -> np.ndarray:
        """All degrees at once; shape (..., p_max+1). Overridden per kind via
        the attached evaluator."""
        raise NotImplementedError


@dataclass(frozen=True)
class LegendreBasis(UnivariateBasis):
    """Shifted-scaled Legendre family: exact for uniform marginals, since the
    conditional of a uniform on a subinterval is again uniform."""

    def evaluate_all(self, x) -> np.ndarray:
        a, b = self.interval
        u = (2.0 * np.asarray(x, dtype=float) - (a + b)) / (b - a)
        vander = npleg.legvander(u, self.p_max)
        scale = np.sqrt(2.0 * np.arange(self.p_max + 1) + 1.0)
        return vander * scale


@dataclass(frozen=True)
class RecurrenceBasis(UnivariateBasis):
    """Moment-orthogonalized family for density-defined marginals; evaluated
    through the three-term recurrence computed at construction."""

    recurrence_a: np.ndarray = None  # x*q_k = a_k q_k + b_k q_{k-1} + c_k q_{k+1}
    recurrence_b: np.ndarray = None
    norms: np.ndarray = None

    def evaluate_all(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape + (self.p_max + 1,))
        q_prev = np.zeros_like(x)
        q = np.ones_like(x)
        out[..., 0] = q / self.norms[0]
        for k in range(self.p_max):
            q_next = (x - self.recurrence_a[k]) * q - self.recurrence_b[k] * q_prev
            q_prev, q = q, q_next
            out[..., k + 1] = q / self.norms[k + 1]
        return out


def build_univariate_basis(
    marginal: MarginalDistribution, interval: tuple[float, float], p_max: int
) -> UnivariateBasis:
    """Orthonormal family on ``interval`` under the conditional marginal.

    Uniform marginals get the affine-mapped Legendre construction in closed
    form; density-defined marginals are orthogonalized from conditional
    moments via the Stieltjes three-term recurrence.
    """
    a, b = float(interval[0]), float(interval[1])
    if not (marginal.lower <= a < b <= marginal.upper):
        if a == b:
            raise ValueError("degenerate interval of zero length")
        raise ValueError(f"interval [{a}, {b}] not inside support")
    if p_max < 0:
        raise ValueError("p_max must be >= 0")
    if p_max > MAX_DEGREE:
        raise ValueError(f"degree {p_max} exceeds supported maximum {MAX_DEGREE}")

    if marginal.kind == "uniform":
        monomial = _legendre_monomial_table(a, b, p_max)
        return LegendreBasis(marginal, (a, b), p_max, monomial)
    return _build_from_moments(marginal, (a, b), p_max)


def _legendre_monomial_table(a: float, b: float, p: int) -> np.ndarray:
    """Monomial coefficients of sqrt(2k+1) * P_k((2x - a - b)/(b - a))."""
    affine = nppoly.Polynomial([-(a + b) / (b - a), 2.0 / (b - a)])
    table = np.zeros((p + 1, p + 1))
    for k in range(p + 1):
        pk = nppoly.Polynomial(npleg.leg2poly(np.eye(p + 1)[k]))
        composed = pk(affine)
        coef = composed.coef * np.sqrt(2.0 * k + 1.0)
        table[k, : len(coef)] = coef
    return table


def _build_from_moments(
    marginal: MarginalDistribution, interval: tuple[float, float], p: int
) -> RecurrenceBasis:
    a, b = interval
    mass = marginal.interval_probability(a, b)
    if mass <= 0:
        raise ValueError("interval carries zero probability mass")
    # conditional raw moments m_rho = E[X^rho | X in [a,b]]
    moments = np.array(
        [marginal.segment_moment(a, b, rho) / mass for rho in range(2 * p + 2)]
    )

    # Stieltjes procedure on the monic family q_k, using exact moment inner
    # products expressed through monomial coefficients.
    monic = np.zeros((p + 1, p + 1))
    monic[0, 0] = 1.0
    rec_a = np.zeros(p)
    rec_b = np.zeros(p)
    norms2 = np.zeros(p + 1)

    def inner(c1, c2, shift=0):
        # <x^shift q1, q2> via moments
        acc = 0.0
        for i, ci in enumerate(c1):
            if ci == 0.0:
                continue
            for j, cj in enumerate(c2):
                if cj == 0.0:
                    continue
                acc += ci * cj * moments[i + j + shift]
        return acc

    norms2[0] = 1.0
    for k in range(p):
        qk = monic[k, : k + 1]
        nk = inner(qk, qk)
        if nk <= 0 or not np.isfinite(nk):
            raise ValueError(
                f"moment matrix numerically singular; max achievable degree is {k}"
            )
        rec_a[k] = inner(qk, qk, shift=1) / nk
        if k == 0:
            rec_b[k] = 0.0
        else:
            qkm = monic[k - 1, :k]
            nkm = inner(qkm, qkm)
            rec_b[k] = nk / nkm
        nxt = np.zeros(k + 2)
        nxt[1 : k + 2] += qk  # x * q_k
        nxt[: k + 1] -= rec_a[k] * qk
        if k >= 1:
            nxt[:k] -= rec_b[k] * monic[k - 1, :k]
        monic[k + 1, : k + 2] = nxt
        n_next = inner(nxt, nxt)
        if n_next <= 0 or not np.isfinite(n_next):
            raise ValueError(
                f"moment matrix numerically singular; max achievable degree is {k}"
            )
        norms2[k + 1] = n_next
    norms2[0] = inner(monic[0, :1], monic[0, :1])

    norms = np.sqrt(norms2)
    monomial = monic / norms[:, None]
    return RecurrenceBasis(
        marginal, interval, p, monomial,
        recurrence_a=rec_a, recurrence_b=rec_b, norms=norms,
    )


@dataclass(frozen=True)
class MultiIndexSet:
    """Finite set of d-tuples of polynomial degrees, kept in a deterministic
    graded-lexicographic order."""

    indices: tuple[tuple[int, ...], ...]
    scheme: str = "custom"
    degree: int = -1

    @property
    def dimension(self) -> int:
        return len(self.indices[0])

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def max_degree_per_dim(self) -> np.ndarray:
        return np.max(np.array(self.indices), axis=0)


def enumerate_linear(d: int, p: int) -> MultiIndexSet:
    """All alpha with |alpha| <= p, graded-lexicographic, C(d+p, p) of them."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if p < 0:
        raise ValueError("p must be >= 0")
    indices = []
    for total in range(p + 1):
        block = []
        for slots in combinations_with_replacement(range(d), total):
            alpha = [0] * d
            for s in slots:
                alpha[s] += 1
            block.append(tuple(alpha))
        block.sort(reverse=True)
        indices.extend(block)
    assert len(indices) == comb(d + p, p)
    return MultiIndexSet(tuple(indices), scheme="linear", degree=p)


def evaluate_multivariate(bases, alpha, x) -> float:
    """Tensor-product evaluation: prod_i phi_{alpha_i}^{(i)}(x_i)."""
    x = np.asarray(x, dtype=float)
    val = 1.0
    for i, basis in enumerate(bases):
        val = val * basis.evaluate(alpha[i], x[..., i])
    return val


def design_matrix(bases, indices: MultiIndexSet, X: np.ndarray) -> np.ndarray:
    """Design matrix of shape (N, |indices|) for sample inputs X (N x d).

    Univariate values are computed once per dimension via the stable
    evaluator, then combined per multi-index.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    per_dim = [basis.evaluate_all(X[:, i]) for i, basis in enumerate(bases)]
    cols = np.empty((X.shape[0], len(indices)))
    for j, alpha in enumerate(indices):
        col = per_dim[0][:, alpha[0]]
        for i in range(1, len(alpha)):
            if alpha[i] > 0:
                col = col * per_dim[i][:, alpha[i]]
        cols[:, j] = col
    return cols
