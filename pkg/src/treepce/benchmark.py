"""Experiment helpers behind the benchmark CLI command: refinement
trajectories, epsilon sweeps, and method comparisons at matched coefficient
budgets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import InputSpace, SampleSet, ThresholdMesh
from .errors import InsufficientSamplesError
from .orthobasis import enumerate_linear
from .pce import fit_least_squares, fit_sparse, tse
from .sse import coefficient_count_sse, fit_sse, tse_sse
from .tree import TreePceConfig, TreePceModel, coefficient_count_tree, fit_tree


@dataclass(frozen=True)
class TrajectoryRow:
    classes: int
    coefficients: int
    train_tse: float
    test_tse: float


def tree_trajectory(model: TreePceModel, test: Optional[SampleSet]) -> list[TrajectoryRow]:
    """Replay the committed splits: train/test TSE and coefficient count after
    each step, starting from the single-class root model."""
    train_tse = model.tse_0
    test_tse = tse(model.root.model, test) if test is not None else float("nan")
    coeffs = len(model.root.model.indices)
    rows = [TrajectoryRow(1, coeffs, train_tse, test_tse)]
    for rec, node in zip(model.history, model.step_nodes):
        train_tse -= rec.delta_tse
        coeffs += (len(node.left.model.indices) + len(node.right.model.indices)
                   - len(node.model.indices))
        if test is not None:
            test_tse += (tse(node.left.model, test) + tse(node.right.model, test)
                         - tse(node.model, test))
        rows.append(TrajectoryRow(len(rows) + 1, coeffs, train_tse, test_tse))
    return rows


def state_at_budget(rows: list[TrajectoryRow], budget: int) -> Optional[TrajectoryRow]:
    """Largest trajectory state whose coefficient count fits the budget."""
    fitting = [r for r in rows if r.coefficients <= budget]
    return fitting[-1] if fitting else None


def epsilon_sweep(
    data: SampleSet,
    space: InputSpace,
    mesh: ThresholdMesh,
    p_loc: int,
    epsilons,
    **config_kwargs,
) -> list[tuple[float, int]]:
    """(epsilon, leaf count) pairs for a sweep over the stopping tolerance."""
    out = []
    for eps in epsilons:
        cfg = TreePceConfig(mesh=mesh, p_loc=p_loc, epsilon=float(eps), **config_kwargs)
        model = fit_tree(data, space, cfg)
        out.append((float(eps), model.n_leaves))
    return out


@dataclass(frozen=True)
class SweepRow:
    method: str
    hyperparameters: str
    coefficients: int
    train_tse: float
    test_tse: float
    seed: int


def method_sweep(
    train: SampleSet,
    test: SampleSet,
    space: InputSpace,
    mesh: ThresholdMesh,
    seed: int,
    degrees=(1, 2, 3, 4, 5, 6, 7, 8),
    sparse_degree: int = 8,
    p_loc: int = 2,
    max_classes: int = 32,
    sse_classes=(2, 4, 8, 16),
) -> list[SweepRow]:
    """One row per method/hyperparameter point, long format."""
    rows: list[SweepRow] = []
    d = space.dimension

    for p in degrees:
        indices = enumerate_linear(d, p)
        if train.size < len(indices):
            continue
        m = fit_least_squares(train, space, mesh.full_rectangle(), indices)
        rows.append(SweepRow("pce", f"p={p}", len(indices), m.tse_train,
                             tse(m, test), seed))

    try:
        m = fit_sparse(train, space, mesh.full_rectangle(), enumerate_linear(d, sparse_degree))
        rows.append(SweepRow("sparse-pce", f"p={sparse_degree}", len(m.indices),
                             m.tse_train, tse(m, test), seed))
    except InsufficientSamplesError:
        pass

    for nc in sse_classes:
        try:
            m = fit_sse(train, space, p_loc, max_classes=nc, sparse=True)
        except InsufficientSamplesError:
            continue
        rows.append(SweepRow("sse", f"p_loc={p_loc},classes={m.n_leaves}",
                             coefficient_count_sse(m), tse_sse(m, train),
                             tse_sse(m, test), seed))

    for sparse in (False, True):
        cfg = TreePceConfig(mesh=mesh, p_loc=p_loc, epsilon=0.0,
                            max_classes=max_classes, sparse=sparse)
        model = fit_tree(train, space, cfg)
        name = "tree-pce-sparse" if sparse else "tree-pce"
        for r in tree_trajectory(model, test):
            rows.append(SweepRow(name, f"p_loc={p_loc},classes={r.classes}",
                                 r.coefficients, r.train_tse, r.test_tse, seed))
    return rows
