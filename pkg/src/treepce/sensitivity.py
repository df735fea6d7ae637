"""Global sensitivity analysis.

Three routes are provided: coefficient-based Sobol' indices for a single
expansion, analytic Sobol' indices for the piecewise tree surrogate (cross-
rectangle inner products evaluated through exact segment moments), and a
pick-freeze Monte Carlo estimator for when the analytic double sum over leaf
pairs becomes too expensive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import InputSpace, SampleSet
from .errors import BudgetExceededError, DegenerateOutputError
from .pce import PceModel
from .tree import TreePceModel

DEFAULT_TERM_BUDGET = 10**8


@dataclass
class SobolResult:
    subsets: list[tuple[int, ...]]
    first_order: dict
    total: dict
    variance: float
    mean: float
    method: str
    metadata: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "method": self.method,
                "variance": self.variance,
                "mean": self.mean,
                "first_order": {_subset_name(s): v for s, v in self.first_order.items()},
                "total": {_subset_name(s): v for s, v in self.total.items()},
                "metadata": self.metadata,
                "violations": self.violations,
            },
            indent=2,
        )

    def to_csv(self) -> str:
        lines = ["index,value"]
        for s in self.subsets:
            lines.append(f"S_{_subset_name(s)},{self.first_order[s]!r}")
        for s in self.subsets:
            lines.append(f"ST_{_subset_name(s)},{self.total[s]!r}")
        return "\n".join(lines) + "\n"


def _subset_name(s: tuple[int, ...]) -> str:
    return "+".join(f"x{i + 1}" for i in s)


@dataclass
class TreeSensitivityResult:
    indices: np.ndarray          # per input, fraction of TSE_0 removed
    residual: float              # unexplained share

    def to_json(self) -> str:
        return json.dumps(
            {
                "tree_indices": {f"x{i + 1}": float(v) for i, v in enumerate(self.indices)},
                "residual": self.residual,
            },
            indent=2,
        )

    def to_csv(self) -> str:
        lines = ["index,value"]
        for i, v in enumerate(self.indices):
            lines.append(f"TreePCE_x{i + 1},{float(v)!r}")
        lines.append(f"residual,{self.residual!r}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# single-expansion Sobol'


def _normalize_subsets(subsets, d: int) -> list[tuple[int, ...]]:
    if subsets is None:
        return [(i,) for i in range(d)]
    return [tuple(sorted(s)) for s in subsets]


def sobol_from_pce(model: PceModel, subsets=None) -> SobolResult:
    """Sobol' indices straight from squared expansion coefficients."""
    d = model.dimension
    subsets = _normalize_subsets(subsets, d)
    alphas = list(model.indices)
    y = model.coefficients
    nonzero = [j for j, a in enumerate(alphas) if any(a)]
    variance = float(sum(y[j] ** 2 for j in nonzero))
    if variance == 0.0:
        raise DegenerateOutputError("all non-constant coefficients are zero")
    mean = model.coefficient(tuple([0] * d))

    first, total = {}, {}
    for A in subsets:
        sA = set(A)
        vf = sum(y[j] ** 2 for j in nonzero if {i for i, a in enumerate(alphas[j]) if a} <= sA)
        vt = sum(y[j] ** 2 for j in nonzero if {i for i, a in enumerate(alphas[j]) if a} & sA)
        first[A] = float(vf) / variance
        total[A] = float(vt) / variance
    return SobolResult(subsets, first, total, variance, mean, "pce-analytic")


# ---------------------------------------------------------------------------
# segment moments and J-integrals (tree route)


@dataclass
class SegmentMoments:
    """Per dimension: global breakpoints (union of all leaf-interval
    endpoints) and the moment table e[rho, l] = int_{a_l}^{a_{l+1}} x^rho f dx."""

    breakpoints: list[np.ndarray]
    tables: list[np.ndarray]

    def segment_index(self, dim: int, value: float) -> int:
        bp = self.breakpoints[dim]
        j = int(np.searchsorted(bp, value))
        if j >= len(bp) or bp[j] != value:
            raise ValueError(f"value {value} is not a breakpoint of dimension {dim}")
        return j


def segment_moments(space: InputSpace, model: TreePceModel, rho_max: Optional[int] = None) -> SegmentMoments:
    leaves = model.leaves()
    if rho_max is None:
        rho_max = 2 * max(
            int(np.max(leaf.model.indices.max_degree_per_dim())) for leaf in leaves
        )
    breakpoints, tables = [], []
    for i in range(space.dimension):
        ends = set()
        for leaf in leaves:
            ends.add(float(leaf.model.lower[i]))
            ends.add(float(leaf.model.upper[i]))
        bp = np.array(sorted(ends))
        table = np.empty((rho_max + 1, len(bp) - 1))
        for rho in range(rho_max + 1):
            for l in range(len(bp) - 1):
                table[rho, l] = space.marginals[i].segment_moment(bp[l], bp[l + 1], rho)
        breakpoints.append(bp)
        tables.append(table)
    return SegmentMoments(breakpoints, tables)


def j_integral(
    moments: SegmentMoments,
    basis_pair,
    intervals,
    alphas,
    dim: int = 0,
) -> float:
    """Cross-interval inner product of two basis polynomials over the
    intersection of their intervals, weighted by the marginal density of
    ``dim`` and normalized so that each polynomial has unit norm under the
    marginal restricted to its own interval.

    With that normalization, identical intervals give the Kronecker delta
    exactly; callers working with conditionally orthonormal coefficients must
    scale by the square roots of the interval masses.
    """
    (a1, b1), (a2, b2) = intervals
    if a1 == a2 and b1 == b2:
        return 1.0 if alphas[0] == alphas[1] else 0.0
    # canonical argument order makes the symmetry J_{aa'} = J'_{a'a} bitwise
    if (a2, b2, alphas[1]) < (a1, b1, alphas[0]):
        return j_integral(moments, basis_pair[::-1], ((a2, b2), (a1, b1)),
                          alphas[::-1], dim)
    lo, hi = max(a1, a2), min(b1, b2)
    if hi <= lo:
        return 0.0
    c1 = basis_pair[0].monomial[alphas[0]]
    c2 = basis_pair[1].monomial[alphas[1]]
    B = np.convolve(np.trim_zeros(c1, "b"), np.trim_zeros(c2, "b"))
    l_lo = moments.segment_index(dim, lo)
    l_hi = moments.segment_index(dim, hi)
    table = moments.tables[dim]
    e = table[: len(B), l_lo:l_hi].sum(axis=1)
    raw = float(B @ e)
    m1 = basis_pair[0].marginal.interval_probability(a1, b1)
    m2 = basis_pair[1].marginal.interval_probability(a2, b2)
    return raw / np.sqrt(m1 * m2)


def _j_matrix(moments: SegmentMoments, leaf_r, leaf_rp, dim: int) -> np.ndarray:
    """All-degree J matrix between two leaves along one dimension."""
    b1 = leaf_r.model.bases[dim]
    b2 = leaf_rp.model.bases[dim]
    p1 = b1.p_max
    p2 = b2.p_max
    out = np.empty((p1 + 1, p2 + 1))
    iv1 = (float(leaf_r.model.lower[dim]), float(leaf_r.model.upper[dim]))
    iv2 = (float(leaf_rp.model.lower[dim]), float(leaf_rp.model.upper[dim]))
    for a in range(p1 + 1):
        for b in range(p2 + 1):
            out[a, b] = j_integral(moments, (b1, b2), (iv1, iv2), (a, b), dim)
    return out


# ---------------------------------------------------------------------------
# tree Sobol' (analytic)


def sobol_from_tree(
    model: TreePceModel,
    space: InputSpace,
    subsets=None,
    budget: int = DEFAULT_TERM_BUDGET,
) -> SobolResult:
    """Sobol' indices of the piecewise surrogate from leaf coefficients,
    rectangle masses and cross-leaf basis inner products.

    Raises BudgetExceededError (with the estimated multiply-add count) when
    the leaf-pair double sum would be too expensive; the pick-freeze route
    should be used instead.
    """
    d = space.dimension
    subsets = _normalize_subsets(subsets, d)
    leaves = model.leaves()
    R = len(leaves)

    # per-leaf interval probabilities and masses
    probs = np.empty((R, d))
    for r, leaf in enumerate(leaves):
        for i in range(d):
            probs[r, i] = space.marginals[i].interval_probability(
                float(leaf.model.lower[i]), float(leaf.model.upper[i])
            )
    masses = probs.prod(axis=1)

    zero = tuple([0] * d)
    y0 = np.array([leaf.model.coefficient(zero) for leaf in leaves])
    mean = float(y0 @ masses)
    sq = np.array([float(leaf.model.coefficients @ leaf.model.coefficients) for leaf in leaves])
    variance = float(sq @ masses) - mean**2
    if variance <= 0.0:
        raise DegenerateOutputError("surrogate variance is not positive")

    moments = segment_moments(space, model)

    # cache of J matrices keyed by (dim, r, r')
    jcache: dict = {}

    def jmat(i, r, rp):
        key = (i, r, rp)
        if key not in jcache:
            jcache[key] = _j_matrix(moments, leaves[r], leaves[rp], i)
        return jcache[key]

    def var_conditional(A: tuple[int, ...]) -> float:
        Aset = set(A)
        Abar = [i for i in range(d) if i not in Aset]
        # indices supported inside A, per leaf
        sel = []
        for leaf in leaves:
            rows = [
                (np.array([a[i] for i in A], dtype=int), float(c))
                for a, c in zip(leaf.model.indices, leaf.model.coefficients)
                if all(a[i] == 0 for i in Abar)
            ]
            sel.append(rows)
        counts = np.array([len(rows) for rows in sel])
        term_count = len(A) * int(np.sum(np.outer(counts, counts)))
        if term_count > budget:
            raise BudgetExceededError(term_count, budget)
        massbar = np.array([np.prod(probs[r, Abar]) if Abar else 1.0 for r in range(R)])
        # the normalized J matrices drop the interval masses along A; restore
        # them as sqrt factors per leaf
        mass_a = np.array([np.prod(probs[r, list(A)]) for r in range(R)])

        partials = []
        for r in range(R):
            if not sel[r]:
                continue
            al_r = np.array([row[0] for row in sel[r]])
            y_r = np.array([row[1] for row in sel[r]])
            for rp in range(R):
                if not sel[rp]:
                    continue
                al_rp = np.array([row[0] for row in sel[rp]])
                y_rp = np.array([row[1] for row in sel[rp]])
                M = np.ones((len(y_r), len(y_rp)))
                for pos, i in enumerate(A):
                    J = jmat(i, r, rp)
                    M *= J[np.ix_(al_r[:, pos], al_rp[:, pos])]
                partials.append((y_r @ M @ y_rp)
                                * np.sqrt(mass_a[r] * mass_a[rp])
                                * massbar[r] * massbar[rp])
        # pairwise summation keeps the reduction deterministic and accurate
        return float(np.sum(np.array(partials))) - mean**2

    first, total = {}, {}
    for A in subsets:
        first[A] = var_conditional(A) / variance
        Abar = tuple(i for i in range(d) if i not in set(A))
        if Abar:
            total[A] = 1.0 - var_conditional(Abar) / variance
        else:
            total[A] = 1.0
    return SobolResult(subsets, first, total, variance, mean, "tree-analytic",
                       metadata={"n_leaves": R})


# ---------------------------------------------------------------------------
# tree-structure indices


def tree_indices(model: TreePceModel) -> TreeSensitivityResult:
    """Per-input fraction of the root model's TSE removed by splits along
    that input, plus the unexplained residual share."""
    d = model.space.dimension
    out = np.zeros(d)
    if model.tse_0 == 0.0:
        return TreeSensitivityResult(out, 0.0)
    for rec in model.history:
        out[rec.dim] += rec.delta_tse
    out /= model.tse_0
    return TreeSensitivityResult(out, float(1.0 - out.sum()))


# ---------------------------------------------------------------------------
# pick-freeze Monte Carlo


def pick_freeze(
    surrogate: Callable[[np.ndarray], np.ndarray],
    space: InputSpace,
    inputs=None,
    N_mc: int = 10**4,
    seed: int = 0,
) -> SobolResult:
    """First-order (pick-freeze covariance) and total (Jansen) estimators.

    ``surrogate`` maps an (N, d) array to N outputs. Deterministic per seed.
    """
    if N_mc < 100:
        raise ValueError("N_mc must be >= 100")
    d = space.dimension
    if inputs is None:
        inputs = [(i,) for i in range(d)]
    inputs = [tuple(s) for s in inputs]
    rng = np.random.default_rng(seed)
    lo, hi = space.lower, space.upper
    A = lo + (hi - lo) * rng.random((N_mc, d))
    B = lo + (hi - lo) * rng.random((N_mc, d))
    yA = np.asarray(surrogate(A), dtype=float)
    yB = np.asarray(surrogate(B), dtype=float)

    first, total = {}, {}
    violations = []
    se_first, se_total = {}, {}
    for s in inputs:
        H = B.copy()
        H[:, list(s)] = A[:, list(s)]
        yH = np.asarray(surrogate(H), dtype=float)
        m = 0.5 * (yA.mean() + yH.mean())
        v = 0.5 * (np.mean(yA**2) + np.mean(yH**2)) - m**2
        if v <= 0.0:
            raise DegenerateOutputError("zero empirical variance")
        prod = yA * yH
        S = (prod.mean() - m**2) / v
        jan = (yB - yH) ** 2
        ST = jan.mean() / (2.0 * v)
        first[s] = float(S)
        total[s] = float(ST)
        se_first[s] = float(prod.std(ddof=1) / np.sqrt(N_mc) / v)
        se_total[s] = float(jan.std(ddof=1) / np.sqrt(N_mc) / (2.0 * v))
        if not (-1e-9 <= S <= ST + 3 * (se_first[s] + se_total[s])):
            violations.append(s)

    m_all = 0.5 * (yA.mean() + yB.mean())
    v_all = 0.5 * (np.mean(yA**2) + np.mean(yB**2)) - m_all**2
    return SobolResult(
        inputs, first, total, float(v_all), float(m_all), "pick-freeze",
        metadata={"N_mc": N_mc, "seed": seed,
                  "se_first": {_subset_name(s): se_first[s] for s in inputs},
                  "se_total": {_subset_name(s): se_total[s] for s in inputs}},
        violations=violations,
    )
