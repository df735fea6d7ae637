"""Local polynomial chaos models: least-squares and greedy sparse fits on a
rectangle, plus TSE / R-squared diagnostics and JSON serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .core import InputSpace, MarginalDistribution, Rectangle, SampleSet
from .errors import InsufficientSamplesError
from .orthobasis import (
    MultiIndexSet,
    UnivariateBasis,
    build_univariate_basis,
    design_matrix,
)

CV_FOLDS = 5


@dataclass(frozen=True)
class PceModel:
    """Truncated expansion sum_alpha y_alpha Psi_alpha(x) on a box.

    ``rect`` carries the mesh-indexed rectangle when the model was fitted
    inside a tree; deserialized or free-standing models keep only the
    geometric bounds.
    """

    space: InputSpace
    lower: np.ndarray
    upper: np.ndarray
    indices: MultiIndexSet
    coefficients: np.ndarray
    bases: tuple[UnivariateBasis, ...]
    tse_train: float
    n_train: int
    rank_deficient: bool = False
    rect: Optional[Rectangle] = None

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.all((X >= self.lower) & (X <= self.upper), axis=1)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return design_matrix(self.bases, self.indices, X) @ self.coefficients

    def coefficient(self, alpha: tuple[int, ...]) -> float:
        """y_alpha, 0.0 if alpha is not retained."""
        try:
            j = self.indices.indices.index(tuple(alpha))
        except ValueError:
            return 0.0
        return float(self.coefficients[j])


def _bases_for_box(space: InputSpace, lower, upper, p_max: int):
    return tuple(
        build_univariate_basis(space.marginals[i], (lower[i], upper[i]), p_max)
        for i in range(space.dimension)
    )


def _filter_box(data: SampleSet, lower, upper) -> SampleSet:
    mask = np.all((data.inputs >= lower) & (data.inputs <= upper), axis=1)
    return data.subset(mask)


def fit_on_box(
    data: SampleSet,
    space: InputSpace,
    lower: np.ndarray,
    upper: np.ndarray,
    indices: MultiIndexSet,
    rect: Optional[Rectangle] = None,
    outputs_override: Optional[np.ndarray] = None,
) -> PceModel:
    """Least-squares fit restricted to the box [lower, upper].

    ``outputs_override`` substitutes the regression targets for the filtered
    rows (used by the residual expansions of the SSE baseline).
    """
    local = _filter_box(data, lower, upper)
    y = local.outputs if outputs_override is None else np.asarray(outputs_override)
    if local.size < len(indices):
        raise InsufficientSamplesError(
            f"insufficient samples: {local.size} rows for {len(indices)} coefficients"
        )
    p_max = int(np.max(indices.max_degree_per_dim()))
    bases = _bases_for_box(space, lower, upper, p_max)
    A = design_matrix(bases, indices, local.inputs)
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    tse_train = float(resid @ resid)
    return PceModel(
        space=space,
        lower=np.asarray(lower, dtype=float),
        upper=np.asarray(upper, dtype=float),
        indices=indices,
        coefficients=coef,
        bases=bases,
        tse_train=tse_train,
        n_train=local.size,
        rank_deficient=bool(rank < len(indices)),
        rect=rect,
    )


def fit_least_squares(
    data: SampleSet, space: InputSpace, rect: Rectangle, indices: MultiIndexSet
) -> PceModel:
    """Full least-squares fit on a mesh rectangle."""
    return fit_on_box(data, space, rect.lower, rect.upper, indices, rect=rect)


def _cv_error(A: np.ndarray, y: np.ndarray, cols: Sequence[int]) -> float:
    """5-fold cross-validated squared error of the submodel using ``cols``.

    Folds are assigned by index stride so the estimate is deterministic.
    """
    n = len(y)
    folds = np.arange(n) % CV_FOLDS
    sub = A[:, cols]
    total = 0.0
    for f in range(CV_FOLDS):
        train = folds != f
        test = ~train
        if train.sum() < len(cols) or test.sum() == 0:
            return math.inf
        coef, _, _, _ = np.linalg.lstsq(sub[train], y[train], rcond=None)
        r = y[test] - sub[test] @ coef
        total += float(r @ r)
    return total


def fit_sparse(
    data: SampleSet,
    space: InputSpace,
    rect: Optional[Rectangle],
    candidate_indices: MultiIndexSet,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
    max_terms: Optional[int] = None,
    outputs_override: Optional[np.ndarray] = None,
) -> PceModel:
    """Greedy forward selection from ``candidate_indices``.

    Starts from the constant term, repeatedly adds the candidate with highest
    absolute correlation to the current residual, refits by least squares, and
    stops when the 5-fold cross-validated error stops decreasing, when
    ``max_terms`` is reached, or when candidates run out.
    """
    if rect is not None:
        lower, upper = rect.lower, rect.upper
    local = _filter_box(data, lower, upper)
    y = local.outputs if outputs_override is None else np.asarray(outputs_override)
    if local.size < 2:
        raise InsufficientSamplesError(
            f"insufficient samples: {local.size} rows for a sparse fit"
        )
    p_max = int(np.max(candidate_indices.max_degree_per_dim()))
    bases = _bases_for_box(space, lower, upper, p_max)
    A = design_matrix(bases, candidate_indices, local.inputs)

    d = candidate_indices.dimension
    const = tuple([0] * d)
    all_indices = list(candidate_indices.indices)
    try:
        selected = [all_indices.index(const)]
    except ValueError:
        selected = [int(np.argmin([sum(a) for a in all_indices]))]
    remaining = [j for j in range(len(all_indices)) if j not in selected]

    col_norms = np.linalg.norm(A, axis=0)
    col_norms[col_norms == 0.0] = 1.0

    def refit(cols):
        coef, _, _, _ = np.linalg.lstsq(A[:, cols], y, rcond=None)
        return coef, y - A[:, cols] @ coef

    coef, resid = refit(selected)
    best_cv = _cv_error(A, y, selected)
    cap = max_terms if max_terms is not None else len(all_indices)
    cap = min(cap, local.size)

    while remaining and len(selected) < cap:
        corr = np.abs(resid @ A[:, remaining]) / col_norms[remaining]
        pick = remaining[int(np.argmax(corr))]
        trial = selected + [pick]
        cv = _cv_error(A, y, trial)
        if max_terms is None and cv >= best_cv:
            break
        selected = trial
        remaining.remove(pick)
        best_cv = min(best_cv, cv)
        coef, resid = refit(selected)

    order = sorted(range(len(selected)), key=lambda k: (sum(all_indices[selected[k]]), tuple(-v for v in all_indices[selected[k]])))
    sel_sorted = [selected[k] for k in order]
    sub_indices = MultiIndexSet(
        tuple(all_indices[j] for j in sel_sorted),
        scheme="sparse",
        degree=candidate_indices.degree,
    )
    coef, resid = refit(sel_sorted)
    tse_train = float(resid @ resid)
    return PceModel(
        space=space,
        lower=np.asarray(lower, dtype=float),
        upper=np.asarray(upper, dtype=float),
        indices=sub_indices,
        coefficients=coef,
        bases=bases,
        tse_train=tse_train,
        n_train=local.size,
        rect=rect,
    )


def tse(model: PceModel, data: SampleSet) -> float:
    """Sum of squared residuals over the samples inside the model's box."""
    local = _filter_box(data, model.lower, model.upper)
    if local.size == 0:
        return 0.0
    r = local.outputs - model.predict(local.inputs)
    return float(r @ r)


def r_squared(model: PceModel, data: SampleSet) -> float:
    """1 - TSE / total sum of squares over the restricted samples.

    Returns NaN (the "degenerate" flag) when the restricted outputs have zero
    variance.
    """
    local = _filter_box(data, model.lower, model.upper)
    if local.size < 2:
        raise ValueError("need at least 2 restricted samples for R^2")
    tss = float(np.sum((local.outputs - local.outputs.mean()) ** 2))
    if tss == 0.0:
        return math.nan
    r = local.outputs - model.predict(local.inputs)
    return 1.0 - float(r @ r) / tss


def coefficient_count(model: PceModel) -> int:
    return len(model.indices)


# ---------------------------------------------------------------------------
# serialization


def _marginal_to_dict(m: MarginalDistribution) -> dict:
    if m.kind != "uniform":
        raise ValueError("only uniform marginals are serializable")
    return {"kind": m.kind, "lower": m.lower, "upper": m.upper}


def _marginal_from_dict(d: dict) -> MarginalDistribution:
    return MarginalDistribution(d["kind"], d["lower"], d["upper"])


def model_to_dict(model: PceModel) -> dict:
    return {
        "marginals": [_marginal_to_dict(m) for m in model.space.marginals],
        "lower": list(model.lower),
        "upper": list(model.upper),
        "indices": [list(a) for a in model.indices],
        "coefficients": list(map(float, model.coefficients)),
        "tse": model.tse_train,
        "n_train": model.n_train,
        "rank_deficient": model.rank_deficient,
    }


def model_from_dict(d: dict) -> PceModel:
    space = InputSpace([_marginal_from_dict(m) for m in d["marginals"]])
    indices = MultiIndexSet(tuple(tuple(a) for a in d["indices"]))
    lower = np.array(d["lower"], dtype=float)
    upper = np.array(d["upper"], dtype=float)
    p_max = int(np.max(indices.max_degree_per_dim()))
    bases = _bases_for_box(space, lower, upper, p_max)
    return PceModel(
        space=space,
        lower=lower,
        upper=upper,
        indices=indices,
        coefficients=np.array(d["coefficients"], dtype=float),
        bases=bases,
        tse_train=float(d.get("tse", 0.0)),
        n_train=int(d.get("n_train", 0)),
        rank_deficient=bool(d.get("rank_deficient", False)),
    )


def model_to_json(model: PceModel) -> str:
    return json.dumps({"type": "pce", **model_to_dict(model)}, indent=2)


def model_from_json(text: str) -> PceModel:
    d = json.loads(text)
    if d.get("type") != "pce":
        raise ValueError(f"not a PCE model document (type={d.get('type')!r})")
    return model_from_dict(d)
