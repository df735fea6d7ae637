"""Simplified stochastic-spectral-embedding baseline: a multilevel sum of
residual expansions on a hierarchy of median-split rectangles.

Kept deliberately minimal; it exists as a complexity/accuracy yardstick for
the adaptive tree, not as a full-fidelity reimplementation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np

from .core import InputSpace, SampleSet
from .errors import DomainError, InsufficientSamplesError
from .orthobasis import MultiIndexSet, enumerate_linear
from .pce import PceModel, fit_on_box, fit_sparse, model_from_dict


@dataclass
class SseNode:
    lower: np.ndarray
    upper: np.ndarray
    level: int
    model: PceModel          # residual expansion on this rectangle
    samples: SampleSet       # inputs with *current* residuals as outputs
    split_dim: Optional[int] = None
    split_value: Optional[float] = None
    left: Optional["SseNode"] = None
    right: Optional["SseNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


class SseModel:
    """Prediction at x sums the residual expansions of every node on the
    root-to-leaf path containing x."""

    def __init__(self, root: SseNode, space: InputSpace, p_loc: int):
        self.root = root
        self.space = space
        self.p_loc = p_loc

    def nodes(self) -> list[SseNode]:
        out, stack = [], [self.root]
        while stack:
            n = stack.pop()
            out.append(n)
            if not n.is_leaf:
                stack.extend([n.right, n.left])
        return out

    def leaves(self) -> list[SseNode]:
        return [n for n in self.nodes() if n.is_leaf]

    @property
    def n_leaves(self) -> int:
        return len(self.leaves())

    @property
    def levels(self) -> int:
        return max(n.level for n in self.nodes())

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lo, hi = self.space.lower, self.space.upper
        bad = np.where(np.any((X < lo) | (X > hi), axis=1))[0]
        if bad.size:
            raise DomainError(f"rows outside the root domain: {bad.tolist()}")
        out = np.zeros(X.shape[0])
        self._accumulate(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _accumulate(self, node: SseNode, X, rows, out):
        if rows.size == 0:
            return
        out[rows] += node.model.predict(X[rows])
        if node.is_leaf:
            return
        go_left = X[rows, node.split_dim] < node.split_value
        self._accumulate(node.left, X, rows[go_left], out)
        self._accumulate(node.right, X, rows[~go_left], out)


def _median_split_value(values: np.ndarray) -> float:
    """Sample median; midpoint of the two middle order statistics for even
    counts, for determinism."""
    return float(np.median(values))


def _fit_residual(space, lower, upper, samples: SampleSet, indices: MultiIndexSet,
                  sparse: bool) -> PceModel:
    if sparse:
        return fit_sparse(samples, space, None, indices, lower=lower, upper=upper)
    return fit_on_box(samples, space, lower, upper, indices)


def fit_sse(
    data: SampleSet,
    space: InputSpace,
    p_loc: int,
    max_classes: int,
    sparse: bool = False,
    n_min: Optional[int] = None,
) -> SseModel:
    """Root expansion, then greedy refinement: each step splits the node with
    the largest residual-TSE reduction among per-dimension median splits."""
    d = space.dimension
    indices = enumerate_linear(d, p_loc)
    if n_min is None:
        n_min = 3 * comb(p_loc + d, p_loc)
    try:
        root_model = _fit_residual(space, space.lower, space.upper, data, indices, sparse)
    except InsufficientSamplesError as exc:
        raise InsufficientSamplesError(f"root fit infeasible: {exc}") from exc
    residuals = data.outputs - root_model.predict(data.inputs)
    root = SseNode(
        lower=space.lower, upper=space.upper, level=0, model=root_model,
        samples=SampleSet(data.inputs, residuals),
    )
    model = SseModel(root, space, p_loc)

    def best_candidate(node: SseNode):
        """Best median split of ``node``'s residuals, or None."""
        s = node.samples
        if s.size < n_min:
            return None
        best = None
        for i in range(d):
            med = _median_split_value(s.inputs[:, i])
            go_left = s.inputs[:, i] < med
            left_s = s.subset(go_left)
            right_s = s.subset(~go_left)
            if left_s.size < len(indices) or right_s.size < len(indices):
                continue
            lo1, hi1 = node.lower.copy(), node.upper.copy()
            hi1[i] = med
            lo2, hi2 = node.lower.copy(), node.upper.copy()
            lo2[i] = med
            try:
                m1 = _fit_residual(space, lo1, hi1, left_s, indices, sparse)
                m2 = _fit_residual(space, lo2, hi2, right_s, indices, sparse)
            except InsufficientSamplesError:
                continue
            parent_tse = float(s.outputs @ s.outputs)
            gain = parent_tse - (m1.tse_train + m2.tse_train)
            if best is None or gain > best[0]:
                best = (gain, i, med, (lo1, hi1, m1, left_s), (lo2, hi2, m2, right_s))
        return best

    candidates = {id(root): (root, best_candidate(root))}
    while model.n_leaves < max_classes:
        eligible = [(c[0], n) for n, c in candidates.values() if c is not None]
        if not eligible:
            break
        eligible.sort(key=lambda t: -t[0])
        gain, node = eligible[0]
        if gain <= 0.0:
            break
        _, i, med, left_info, right_info = candidates[id(node)][1]
        del candidates[id(node)]
        node.split_dim = i
        node.split_value = med
        children = []
        for lo, hi, m, s in (left_info, right_info):
            child_res = s.outputs - m.predict(s.inputs)
            child = SseNode(lower=lo, upper=hi, level=node.level + 1, model=m,
                            samples=SampleSet(s.inputs, child_res))
            children.append(child)
        node.left, node.right = children
        for child in children:
            candidates[id(child)] = (child, best_candidate(child))
    return model


def coefficient_count_sse(model: SseModel) -> int:
    return sum(len(n.model.indices) for n in model.nodes())


def tse_sse(model: SseModel, data: SampleSet) -> float:
    r = data.outputs - model.predict(data.inputs)
    return float(r @ r)


# ---------------------------------------------------------------------------
# serialization (mirrors the tree schema, plus a "level" field)


def _node_to_dict(node: SseNode) -> dict:
    d = {
        "level": node.level,
        "leaf": {
            "rect_lo": list(node.lower),
            "rect_hi": list(node.upper),
            "indices": [list(a) for a in node.model.indices],
            "coefficients": list(map(float, node.model.coefficients)),
            "tse": node.model.tse_train,
        },
    }
    if not node.is_leaf:
        d["split_dim"] = node.split_dim
        d["split_value"] = node.split_value
        d["children"] = [_node_to_dict(node.left), _node_to_dict(node.right)]
    return d


def sse_to_json(model: SseModel) -> str:
    doc = {
        "type": "sse",
        "p_loc": model.p_loc,
        "marginals": [
            {"kind": m.kind, "lower": m.lower, "upper": m.upper}
            for m in model.space.marginals
        ],
        "root": _node_to_dict(model.root),
    }
    return json.dumps(doc, indent=2)


def sse_from_json(text: str) -> SseModel:
    doc = json.loads(text)
    if doc.get("type") != "sse":
        raise ValueError(f"not an sse document (type={doc.get('type')!r})")
    from .core import MarginalDistribution

    space = InputSpace(
        [MarginalDistribution(m["kind"], m["lower"], m["upper"]) for m in doc["marginals"]]
    )
    empty = SampleSet(np.zeros((1, space.dimension)), np.zeros(1))

    def walk(d: dict) -> SseNode:
        leaf = d["leaf"]
        pce = model_from_dict(
            {
                "marginals": doc["marginals"],
                "lower": leaf["rect_lo"],
                "upper": leaf["rect_hi"],
                "indices": leaf["indices"],
                "coefficients": leaf["coefficients"],
                "tse": leaf["tse"],
            }
        )
        node = SseNode(
            lower=np.array(leaf["rect_lo"]), upper=np.array(leaf["rect_hi"]),
            level=d["level"], model=pce, samples=empty,
        )
        if "children" in d:
            node.split_dim = d["split_dim"]
            node.split_value = d["split_value"]
            node.left = walk(d["children"][0])
            node.right = walk(d["children"][1])
        return node

    return SseModel(walk(doc["root"]), space, doc.get("p_loc", 0))
