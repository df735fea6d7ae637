"""Adaptive rectangle splitting: TSE-optimal binary splits, priority-ordered
refinement with the relative-gain stopping rule, and the resulting
binary-tree surrogate with O(height) evaluation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb
from typing import Optional, Union

import numpy as np

from .core import InputSpace, Rectangle, SampleSet, ThresholdMesh, filter_samples
from .errors import DomainError, InsufficientSamplesError, TreePceError
from .orthobasis import MultiIndexSet, enumerate_linear
from .pce import PceModel, fit_least_squares, fit_on_box, fit_sparse, model_from_dict, model_to_dict

# Relative floor below which a leaf's TSE is treated as numerically exact;
# splitting such a leaf would only chase round-off noise.
EXACT_TSE_RTOL = 1e-14

_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class TreePceConfig:
    mesh: ThresholdMesh
    p_loc: int = 2
    n_min: Optional[int] = None
    epsilon: float = 0.0
    max_classes: Optional[int] = None
    max_height: Optional[int] = None
    sparse: bool = False

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.p_loc < 0:
            raise ValueError("p_loc must be >= 0")
        if self.n_min is not None and self.n_min < 1:
            raise ValueError("n_min must be >= 1")

    def effective_n_min(self) -> int:
        # default from the oversampling rule n_min = 3 * C(p_loc + d, p_loc)
        if self.n_min is not None:
            return self.n_min
        d = self.mesh.dimension
        return 3 * comb(self.p_loc + d, self.p_loc)

    def index_set(self) -> MultiIndexSet:
        return enumerate_linear(self.mesh.dimension, self.p_loc)


@dataclass(frozen=True)
class Ineligible:
    reason: str


@dataclass(frozen=True)
class SplitCandidate:
    parent_rect: Rectangle
    dim: int
    mesh_index: int
    split_value: float
    children_rects: tuple[Rectangle, Rectangle]
    children_models: tuple[PceModel, PceModel]
    parent_tse: float
    children_tse: tuple[float, float]

    @property
    def delta_tse(self) -> float:
        return self.parent_tse - (self.children_tse[0] + self.children_tse[1])


def _fit_local(data, space, rect, config: TreePceConfig) -> PceModel:
    indices = config.index_set()
    if config.sparse:
        return fit_sparse(data, space, rect, indices)
    return fit_least_squares(data, space, rect, indices)


def try_split(
    data: SampleSet,
    space: InputSpace,
    rect: Rectangle,
    parent_model: PceModel,
    config: TreePceConfig,
) -> Union[SplitCandidate, Ineligible]:
    """Best TSE-reducing split of ``rect``, or the reason none exists.

    Every interior mesh index of every splittable dimension is evaluated by
    fitting local models on both children; thresholds where either child has
    fewer than n_min samples (or an underdetermined full fit) are skipped.
    Ties are broken toward the lower dimension, then the lower mesh index.
    """
    n_min = config.effective_n_min()
    local = filter_samples(data, rect)
    if local.size < n_min:
        return Ineligible("insufficient samples")
    dims = rect.splittable_dimensions()
    if not dims:
        return Ineligible("no splittable direction")
    if parent_model.tse_train <= _exact_floor(local.outputs):
        return Ineligible("already exact")

    parent_tse = parent_model.tse_train
    best = None  # (child_tse_sum, dim, j, r1, r2, m1, m2)
    for i in dims:
        for j in range(rect.lo_idx[i] + 1, rect.hi_idx[i]):
            r1, r2 = rect.split(i, j)
            n1 = filter_samples(data, r1).size
            n2 = filter_samples(data, r2).size
            if n1 < n_min or n2 < n_min:
                continue
            try:
                m1 = _fit_local(data, space, r1, config)
                m2 = _fit_local(data, space, r2, config)
            except InsufficientSamplesError:
                continue
            total = m1.tse_train + m2.tse_train
            if best is None or total < best[0] * (1.0 - _TIE_RTOL):
                best = (total, i, j, r1, r2, m1, m2)
    if best is None:
        return Ineligible("no feasible threshold")
    total, i, j, r1, r2, m1, m2 = best
    return SplitCandidate(
        parent_rect=rect,
        dim=i,
        mesh_index=j,
        split_value=rect.mesh.points[i][j],
        children_rects=(r1, r2),
        children_models=(m1, m2),
        parent_tse=parent_tse,
        children_tse=(m1.tse_train, m2.tse_train),
    )


def _exact_floor(outputs: np.ndarray) -> float:
    return EXACT_TSE_RTOL * (float(np.sum(outputs**2)) + 1.0)


# ---------------------------------------------------------------------------
# tree structure


@dataclass
class TreeNode:
    rect: Rectangle
    model: PceModel
    tse: float
    depth: int
    split_dim: Optional[int] = None
    split_value: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass(frozen=True)
class SplitRecord:
    step: int
    dim: int
    split_value: float
    delta_tse: float


class TreePceModel:
    """Binary tree whose leaves carry local PCE models; internal nodes are
    labeled (split dimension, split value)."""

    def __init__(self, root: TreeNode, space: InputSpace, config: TreePceConfig,
                 history: list[SplitRecord], tse_0: float,
                 step_nodes: Optional[list[TreeNode]] = None):
        self.root = root
        self.space = space
        self.config = config
        self.history = history
        self.tse_0 = tse_0
        # internal node committed at each step, in order; lets callers replay
        # the refinement trajectory without refitting
        self.step_nodes = step_nodes or []

    # -- structure ---------------------------------------------------------
    def leaves(self) -> list[TreeNode]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend([node.right, node.left])
        return out[::-1]

    @property
    def n_leaves(self) -> int:
        return len(self.leaves())

    @property
    def height(self) -> int:
        return max(leaf.depth for leaf in self.leaves())

    @property
    def tse_glob(self) -> float:
        return self.tse_0 - sum(rec.delta_tse for rec in self.history)

    # -- evaluation ----------------------------------------------------------
    def find_leaf(self, x: np.ndarray) -> TreeNode:
        node = self.root
        while not node.is_leaf:
            node = node.left if x[node.split_dim] < node.split_value else node.right
        return node

    def predict_one(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if not self.space.contains(x):
            raise DomainError(f"point {x.tolist()} outside the root domain")
        leaf = self.find_leaf(x)
        return float(leaf.model.predict(x[None, :])[0])

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lo, hi = self.space.lower, self.space.upper
        bad = np.where(np.any((X < lo) | (X > hi), axis=1))[0]
        if bad.size:
            raise DomainError(f"rows outside the root domain: {bad.tolist()}")
        out = np.empty(X.shape[0])
        self._predict_into(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _predict_into(self, node: TreeNode, X, rows, out):
        if node.is_leaf:
            if rows.size:
                out[rows] = node.model.predict(X[rows])
            return
        go_left = X[rows, node.split_dim] < node.split_value
        self._predict_into(node.left, X, rows[go_left], out)
        self._predict_into(node.right, X, rows[~go_left], out)


def predict(model: TreePceModel, x) -> float:
    return model.predict_one(x)


def coefficient_count_tree(model: TreePceModel) -> int:
    return sum(len(leaf.model.indices) for leaf in model.leaves())


# ---------------------------------------------------------------------------
# fitting


@dataclass
class _Entry:
    node: TreeNode
    candidate: Union[SplitCandidate, Ineligible]

    @property
    def delta_tse(self) -> float:
        if isinstance(self.candidate, Ineligible):
            return 0.0
        return self.candidate.delta_tse

    def sort_key(self):
        # descending delta TSE, ties toward lower dimension then mesh index
        if isinstance(self.candidate, Ineligible):
            return (-0.0, np.inf, np.inf)
        return (-self.candidate.delta_tse, self.candidate.dim, self.candidate.mesh_index)


def fit_tree(data: SampleSet, space: InputSpace, config: TreePceConfig) -> TreePceModel:
    """Grow the surrogate: root fit, then repeatedly commit the pending split
    with the largest TSE gain until the gain is non-positive, the relative
    stopping rule (1+eps)(TSE_glob - gain) < TSE_glob fails, or a size cap is
    reached."""
    if data.size == 0:
        raise InsufficientSamplesError("empty dataset")
    root_rect = config.mesh.full_rectangle()
    try:
        root_model = _fit_local(data, space, root_rect, config)
    except InsufficientSamplesError as exc:
        raise InsufficientSamplesError(f"global fit infeasible: {exc}") from exc

    root = TreeNode(rect=root_rect, model=root_model, tse=root_model.tse_train, depth=0)
    tse_0 = root_model.tse_train
    tse_glob = tse_0
    history: list[SplitRecord] = []
    step_nodes: list[TreeNode] = []
    n_leaves = 1

    entries = [_Entry(root, try_split(data, space, root_rect, root_model, config))]
    entries.sort(key=_Entry.sort_key)

    while entries:
        head = entries[0]
        gain = head.delta_tse
        if gain <= 0.0:
            break
        # relative stopping rule: split only if the global TSE drops by more
        # than eps/(1+eps) of its current value
        if not (1.0 + config.epsilon) * (tse_glob - gain) < tse_glob:
            break
        if config.max_classes is not None and n_leaves >= config.max_classes:
            break
        if config.max_height is not None and head.node.depth >= config.max_height:
            break
        entries.pop(0)
        cand = head.candidate
        node = head.node
        node.split_dim = cand.dim
        node.split_value = cand.split_value
        children = []
        for rect, model, child_tse in zip(
            cand.children_rects, cand.children_models, cand.children_tse
        ):
            children.append(TreeNode(rect=rect, model=model, tse=child_tse,
                                     depth=node.depth + 1))
        node.left, node.right = children
        n_leaves += 1
        tse_glob -= gain
        history.append(SplitRecord(step=len(history) + 1, dim=cand.dim,
                                   split_value=cand.split_value, delta_tse=gain))
        step_nodes.append(node)
        for child in children:
            entry = _Entry(child, try_split(data, space, child.rect, child.model, config))
            _insert_sorted(entries, entry)

    return TreePceModel(root, space, config, history, tse_0, step_nodes)


def _insert_sorted(entries: list[_Entry], entry: _Entry) -> None:
    key = entry.sort_key()
    lo, hi = 0, len(entries)
    while lo < hi:
        mid = (lo + hi) // 2
        if entries[mid].sort_key() <= key:
            lo = mid + 1
        else:
            hi = mid
    entries.insert(lo, entry)


# ---------------------------------------------------------------------------
# export / import


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {
            "leaf": {
                "rect_lo": list(node.rect.lower) if node.rect is not None else list(node.model.lower),
                "rect_hi": list(node.rect.upper) if node.rect is not None else list(node.model.upper),
                "indices": [list(a) for a in node.model.indices],
                "coefficients": list(map(float, node.model.coefficients)),
                "tse": node.tse,
            }
        }
    return {
        "split_dim": node.split_dim,
        "split_value": node.split_value,
        "children": [_node_to_dict(node.left), _node_to_dict(node.right)],
    }


def export_tree(model: TreePceModel, format: str = "json") -> str:
    """Serialize as machine-readable JSON or a DOT graph for rendering."""
    if format == "json":
        doc = {
            "type": "tree-pce",
            "marginals": [
                {"kind": m.kind, "lower": m.lower, "upper": m.upper}
                for m in model.space.marginals
            ],
            "tse_0": model.tse_0,
            "history": [
                {"step": r.step, "dim": r.dim, "split_value": r.split_value,
                 "delta_tse": r.delta_tse}
                for r in model.history
            ],
            "root": _node_to_dict(model.root),
        }
        return json.dumps(doc, indent=2)
    if format == "dot":
        lines = ["digraph treepce {", "  node [shape=box];"]
        counter = [0]

        def walk(node: TreeNode) -> str:
            name = f"n{counter[0]}"
            counter[0] += 1
            if node.is_leaf:
                lo = ", ".join(f"{v:g}" for v in node.model.lower)
                hi = ", ".join(f"{v:g}" for v in node.model.upper)
                lines.append(
                    f'  {name} [label="[{lo}] .. [{hi}]\\nTSE={node.tse:.3g}", style=filled, fillcolor=lightgray];'
                )
            else:
                lines.append(
                    f'  {name} [label="X_{node.split_dim + 1} >= {node.split_value:g}"];'
                )
                left = walk(node.left)
                right = walk(node.right)
                lines.append(f'  {name} -> {left} [label="No"];')
                lines.append(f'  {name} -> {right} [label="Yes"];')
            return name

        walk(model.root)
        lines.append("}")
        return "\n".join(lines)
    raise ValueError(f"unknown export format {format!r}")


def tree_from_json(text: str) -> TreePceModel:
    """Rebuild a predictable tree from an export. Rectangles come back as
    geometric bounds only (no mesh), which is all prediction and sensitivity
    need."""
    doc = json.loads(text)
    if doc.get("type") != "tree-pce":
        raise ValueError(f"not a tree-pce document (type={doc.get('type')!r})")
    from .core import MarginalDistribution

    space = InputSpace(
        [MarginalDistribution(m["kind"], m["lower"], m["upper"]) for m in doc["marginals"]]
    )

    def walk(d: dict, depth: int) -> TreeNode:
        if "leaf" in d:
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
            return TreeNode(rect=None, model=pce, tse=leaf["tse"], depth=depth)
        node = TreeNode(rect=None, model=None, tse=0.0, depth=depth,
                        split_dim=d["split_dim"], split_value=d["split_value"])
        node.left = walk(d["children"][0], depth + 1)
        node.right = walk(d["children"][1], depth + 1)
        return node

    root = walk(doc["root"], 0)
    history = [
        SplitRecord(step=r["step"], dim=r["dim"], split_value=r["split_value"],
                    delta_tse=r["delta_tse"])
        for r in doc.get("history", [])
    ]
    mesh = ThresholdMesh(space, [np.array([])] * space.dimension)
    config = TreePceConfig(mesh=mesh)
    return TreePceModel(root, space, config, history, doc.get("tse_0", 0.0))
