"""Acceptance suite: thirteen end-to-end behavioral criteria.

Each test prints a single PASS/FAIL line (visible with pytest -s or in the
captured output of a failure) and asserts the same condition.
"""

import time

import numpy as np
import pytest
from scipy import integrate

from treepce import (
    InputSpace,
    MarginalDistribution,
    SampleSet,
    ThresholdMesh,
    TreePceConfig,
    build_univariate_basis,
    enumerate_linear,
    fit_least_squares,
    fit_sparse,
    fit_tree,
    j_integral,
    oscillatory_multid,
    pick_freeze,
    sample,
    segment_moments,
    sobol_from_pce,
    sobol_from_tree,
    step_1d,
    diagonal_2d,
    tree_indices,
    try_split,
)
from treepce.benchmark import epsilon_sweep, state_at_budget, tree_trajectory
from treepce.core import filter_samples
from treepce.orthobasis import MultiIndexSet, design_matrix
from treepce.pce import fit_on_box, r_squared, tse
from treepce.sensitivity import SegmentMoments, _j_matrix
from treepce.tree import SplitCandidate, TreePceModel, TreeNode


def report(num: int, label: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"{status}: criterion {num:02d} ({label}) {detail}")
    assert ok, f"criterion {num:02d} ({label}) {detail}"


def test_01_step_exact_recovery_vs_global_polynomial():
    t0 = time.perf_counter()
    model = step_1d()
    data = sample(model, 500, seed=0)
    space = model.space
    mesh = ThresholdMesh.regular(space, 9)  # interior {0.1, ..., 0.9} holds 0.5
    tree = fit_tree(data, space, TreePceConfig(mesh=mesh, p_loc=0))
    tree_ok = tree.n_leaves == 2 and tree.tse_glob <= 1e-18

    # 20-coefficient global polynomial via an independent Legendre LS oracle
    u = 2.0 * data.inputs[:, 0] - 1.0
    V = np.polynomial.legendre.legvander(u, 19)
    coef, _, _, _ = np.linalg.lstsq(V, data.outputs, rcond=None)
    resid = data.outputs - V @ coef
    pce_tse = float(resid @ resid)
    threshold = 0.01 * data.size * data.outputs.var()
    elapsed = time.perf_counter() - t0
    ok = tree_ok and pce_tse > threshold and elapsed < 5.0
    report(1, "step exact recovery", ok,
           f"leaves={tree.n_leaves} tree_tse={tree.tse_glob:.2e} "
           f"poly_tse={pce_tse:.3f} > {threshold:.3f}, {elapsed:.2f}s")


def _fit_multid_k1(seed=0, sparse=False, p_loc=2, max_classes=32):
    model = oscillatory_multid(4, 1.0, 1.0)
    data = sample(model, 2000, seed=seed)
    mesh = ThresholdMesh.regular(model.space, 8)  # thresholds {1/9, ..., 8/9}
    cfg = TreePceConfig(mesh=mesh, p_loc=p_loc, epsilon=0.0,
                        max_classes=max_classes, sparse=sparse)
    return fit_tree(data, model.space, cfg), model, data


def test_02_split_ordering_follows_importance_weights():
    t0 = time.perf_counter()
    tree, _, _ = _fit_multid_k1(seed=0)
    # first time each dimension is split, in order of appearance
    first_seen = []
    first_values = []
    for rec in tree.history:
        if rec.dim not in first_seen:
            first_seen.append(rec.dim)
            first_values.append(rec.split_value)
    elapsed = time.perf_counter() - t0
    ok = (first_seen == [3, 2, 1, 0]
          and all(abs(v - 3.0 / 9.0) < 1e-12 for v in first_values)
          and elapsed < 120.0)
    report(2, "split ordering", ok,
           f"dims(1-based)={[d + 1 for d in first_seen]} "
           f"thresholds={[round(v, 4) for v in first_values]}, {elapsed:.1f}s")


def test_03_gain_slope_drops_after_discontinuities_resolved():
    tree, _, _ = _fit_multid_k1(seed=0)
    gains = [rec.delta_tse for rec in tree.history]
    early = np.mean(gains[0:15])    # classes 2..16
    late = np.mean(gains[15:31])    # classes 17..32
    factor = early / late
    ok = len(gains) >= 31 and factor >= 5.0
    report(3, "slope change", ok, f"factor={factor:.1f} (>= 5)")


def test_04_epsilon_sweep_monotone_leaf_counts():
    model = diagonal_2d()
    data = sample(model, 2000, seed=1)
    mesh = ThresholdMesh.regular(model.space, 8)
    eps_values = [10.0 ** (-e) for e in range(6, 0, -1)]  # ascending epsilon
    sweep = epsilon_sweep(data, model.space, mesh, 2, eps_values, max_classes=64)
    counts = [n for _, n in sweep]
    nonincreasing = all(a >= b for a, b in zip(counts, counts[1:]))
    ok = nonincreasing and len(set(counts)) >= 3
    report(4, "epsilon monotonicity", ok, f"counts={counts}")


def test_05_sobol_accuracy_on_oscillatory_model():
    t0 = time.perf_counter()
    model = oscillatory_multid(4, 4.0, 1.0)
    data = sample(model, 2000, seed=7)
    mesh = ThresholdMesh.regular(model.space, 8)
    exact = np.array([1.0, 4.0, 9.0, 16.0]) / 30.0

    sp = fit_sparse(data, model.space, mesh.full_rectangle(), enumerate_linear(4, 8))
    s_pce = sobol_from_pce(sp)
    err_pce = max(abs(s_pce.first_order[(i,)] - exact[i]) for i in range(4))

    cfg = TreePceConfig(mesh=mesh, p_loc=2, epsilon=0.0, max_classes=10)
    tree = fit_tree(data, model.space, cfg)
    s_tree = sobol_from_tree(tree, model.space)
    err_tree = max(abs(s_tree.first_order[(i,)] - exact[i]) for i in range(4))

    elapsed = time.perf_counter() - t0
    ok = err_pce <= 0.05 and err_tree <= 0.05 and tree.n_leaves <= 10 and elapsed < 300
    report(5, "Sobol accuracy", ok,
           f"max|err| sparse={err_pce:.4f} tree={err_tree:.4f} (<= 0.05), "
           f"{elapsed:.1f}s")


def test_06_analytic_tree_sobol_agrees_with_monte_carlo():
    model = diagonal_2d()
    data = sample(model, 3000, seed=2)
    mesh = ThresholdMesh.regular(model.space, 8)
    tree = fit_tree(data, model.space,
                    TreePceConfig(mesh=mesh, p_loc=2, max_classes=12))
    res = sobol_from_tree(tree, model.space)

    N = 10**6
    rng = np.random.default_rng(11)
    A = rng.random((N, 2))
    B = rng.random((N, 2))
    yA = tree.predict(A)

    # total variance against its MC estimate
    centered_sq = (yA - yA.mean()) ** 2
    se_var = centered_sq.std(ddof=1) / np.sqrt(N)
    var_ok = abs(res.variance - yA.var()) < 3 * se_var

    details = [f"var dev={abs(res.variance - yA.var()) / se_var:.2f} SE"]
    cond_ok = True
    for i in range(2):
        H = B.copy()
        H[:, i] = A[:, i]
        yH = tree.predict(H)
        prod = yA * yH
        m = 0.5 * (yA.mean() + yH.mean())
        mc_cond_var = prod.mean() - m**2
        se = prod.std(ddof=1) / np.sqrt(N)
        analytic = res.first_order[(i,)] * res.variance
        dev = abs(analytic - mc_cond_var) / se
        details.append(f"VarE|x{i + 1} dev={dev:.2f} SE")
        cond_ok = cond_ok and dev < 3.0
    ok = var_ok and cond_ok
    report(6, "analytic vs MC", ok, "; ".join(details))


def _random_single_leaf(rng):
    d = int(rng.integers(1, 4))
    p = int(rng.integers(1, 4))
    space = InputSpace.uniform_unit(d)
    indices = enumerate_linear(d, p)
    X = rng.random((4 * len(indices) + 20, d))
    base = fit_on_box(SampleSet(X, np.zeros(len(X))), space, space.lower,
                      space.upper, indices)
    from dataclasses import replace

    coeffs = rng.standard_normal(len(indices))
    pce = replace(base, coefficients=coeffs)
    mesh = ThresholdMesh(space, [np.array([])] * d)
    root = TreeNode(rect=mesh.full_rectangle(), model=pce, tse=0.0, depth=0)
    tree = TreePceModel(root, space, TreePceConfig(mesh=mesh, p_loc=p), [], 0.0)
    return pce, tree, space


def test_07_single_leaf_tree_collapses_to_expansion_indices():
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(20):
        pce, tree, space = _random_single_leaf(rng)
        a = sobol_from_pce(pce)
        b = sobol_from_tree(tree, space)
        for s in a.subsets:
            worst = max(worst, abs(a.first_order[s] - b.first_order[s]),
                        abs(a.total[s] - b.total[s]))
    ok = worst < 1e-12
    report(7, "collapse identity", ok, f"max deviation={worst:.2e} (< 1e-12)")


def test_08_tree_index_exactness_and_inequalities():
    space = InputSpace.uniform_unit(2)
    rng = np.random.default_rng(0)
    X = rng.random((600, 2))
    y = (X[:, 0] > 0.5) * (X[:, 0] ** 2 + X[:, 1] ** 2)
    data = SampleSet(X, y)
    mesh = ThresholdMesh.regular(space, 3)  # interior {0.25, 0.5, 0.75}

    t2 = tree_indices(fit_tree(data, space, TreePceConfig(mesh=mesh, p_loc=2)))
    exact_ok = t2.indices[0] == 1.0 and t2.indices[1] == 0.0

    t1 = tree_indices(fit_tree(data, space,
                               TreePceConfig(mesh=mesh, p_loc=1, max_classes=16)))
    ineq_ok = (t1.indices[0] < 1.0 and t1.indices[1] > 0.0
               and t1.indices.sum() < 1.0)
    ok = exact_ok and ineq_ok
    report(8, "tree-index exactness", ok,
           f"quadratic leaves -> ({t2.indices[0]}, {t2.indices[1]}), "
           f"linear leaves -> ({t1.indices[0]:.4f}, {t1.indices[1]:.4f}), "
           f"sum={t1.indices.sum():.4f}")


def test_09_constant_r_squared_cannot_locate_split():
    model = step_1d()
    data = sample(model, 500, seed=0)
    space = model.space
    mesh = ThresholdMesh.regular(space, 9)
    const = enumerate_linear(1, 0)
    worst = 0.0
    for y in mesh.points[0][1:-1]:
        if y <= 0.5:
            continue
        m = fit_on_box(data, space, np.array([0.0]), np.array([y]), const)
        worst = max(worst, abs(r_squared(m, data)))
    rect = mesh.full_rectangle()
    cfg = TreePceConfig(mesh=mesh, p_loc=0, n_min=3)
    parent = fit_least_squares(data, space, rect, const)
    cand = try_split(data, space, rect, parent, cfg)
    picks_jump = isinstance(cand, SplitCandidate) and cand.split_value == 0.5
    ok = worst < 1e-12 and picks_jump
    report(9, "constant R-squared blindness", ok,
           f"max|R2|={worst:.2e} (< 1e-12), split at "
           f"{getattr(cand, 'split_value', None)}")


def _brute_force_split(data, space, rect, cfg):
    n_min = cfg.effective_n_min()
    idx = cfg.index_set()
    best = None
    for i in rect.splittable_dimensions():
        for j in range(rect.lo_idx[i] + 1, rect.hi_idx[i]):
            r1, r2 = rect.split(i, j)
            if (filter_samples(data, r1).size < n_min
                    or filter_samples(data, r2).size < n_min):
                continue
            try:
                m1 = fit_least_squares(data, space, r1, idx)
                m2 = fit_least_squares(data, space, r2, idx)
            except Exception:
                continue
            total = m1.tse_train + m2.tse_train
            if best is None or total < best[0] * (1 - 1e-12):
                best = (total, i, j)
    return best


def test_10_split_choice_matches_exhaustive_enumeration():
    rng = np.random.default_rng(99)
    mismatches = 0
    checked = 0
    for trial in range(50):
        d = int(rng.integers(1, 4))
        space = InputSpace.uniform_unit(d)
        n_interior = int(rng.integers(2, 7))
        mesh = ThresholdMesh.regular(space, n_interior)
        n = int(rng.integers(60, 200))
        X = rng.random((n, d))
        kind = trial % 3
        if kind == 0:
            y = (X[:, 0] > rng.random()) * rng.standard_normal() + X[:, -1]
        elif kind == 1:
            y = np.sin(3 * X[:, 0]) + rng.standard_normal(n) * 0.1
        else:
            y = np.floor(X[:, rng.integers(0, d)] * 4) + 0.05 * X[:, 0]
        data = SampleSet(X, y)
        p_loc = int(rng.integers(0, 2))
        cfg = TreePceConfig(mesh=mesh, p_loc=p_loc, n_min=max(4, 2 * (p_loc + d)))
        rect = mesh.full_rectangle()
        parent = fit_least_squares(data, space, rect, cfg.index_set())
        cand = try_split(data, space, rect, parent, cfg)
        oracle = _brute_force_split(data, space, rect, cfg)
        if oracle is None:
            continue
        checked += 1
        if not isinstance(cand, SplitCandidate):
            mismatches += 1
        elif (cand.dim, cand.mesh_index) != (oracle[1], oracle[2]):
            mismatches += 1
    ok = mismatches == 0 and checked >= 30
    report(10, "brute-force split oracle", ok,
           f"{checked} datasets compared, {mismatches} mismatches")


def _leaf_scan(tree, x):
    """Oracle: pick the unique leaf via the half-open boundary convention."""
    upper_root = tree.space.upper
    for leaf in tree.leaves():
        lo, hi = leaf.model.lower, leaf.model.upper
        inside = True
        for i in range(len(x)):
            top_face = hi[i] == upper_root[i]
            if not (lo[i] <= x[i] and (x[i] < hi[i] or (top_face and x[i] <= hi[i]))):
                inside = False
                break
        if inside:
            return leaf
    raise AssertionError("no leaf contains the point")


def test_11_tree_descent_equals_leaf_scan():
    model = diagonal_2d()
    data = sample(model, 2000, seed=3)
    mesh = ThresholdMesh.regular(model.space, 8)
    tree = fit_tree(data, model.space,
                    TreePceConfig(mesh=mesh, p_loc=2, max_classes=14))
    rng = np.random.default_rng(17)
    X = rng.random((10**5, 2))
    vec = tree.predict(X)
    same_leaf = True
    max_dev = 0.0
    for k in range(X.shape[0]):
        leaf = tree.find_leaf(X[k])
        oracle = _leaf_scan(tree, X[k])
        if leaf is not oracle:
            same_leaf = False
            break
        max_dev = max(max_dev, abs(vec[k] - float(leaf.model.predict(X[k][None])[0])))
    ok = same_leaf and max_dev < 1e-12
    report(11, "descent vs leaf scan", ok,
           f"10^5 points, same leaf={same_leaf}, max|dev|={max_dev:.2e}")


def test_12_orthonormality_and_j_matrix_identities():
    # tensorized Gram matrices by Gauss-Legendre quadrature
    nodes, weights = np.polynomial.legendre.leggauss(24)
    gram_ok = True
    worst_gram = 0.0
    m = MarginalDistribution.uniform(0.0, 1.0)
    for d in (1, 2, 3):
        space = InputSpace.uniform_unit(d)
        idx = enumerate_linear(d, 5)
        lo = np.full(d, 0.1)
        hi = np.full(d, 0.8)
        bases = tuple(build_univariate_basis(m, (lo[i], hi[i]), 5) for i in range(d))
        x1 = 0.5 * (hi[0] - lo[0]) * nodes + 0.5 * (hi[0] + lo[0])
        grids = np.meshgrid(*([x1] * d), indexing="ij")
        pts = np.column_stack([g.ravel() for g in grids])
        w1 = weights * 0.5
        wgrids = np.meshgrid(*([w1] * d), indexing="ij")
        w = np.prod([g.ravel() for g in wgrids], axis=0)
        Psi = design_matrix(bases, idx, pts)
        G = (Psi * w[:, None]).T @ Psi
        worst_gram = max(worst_gram, float(np.max(np.abs(G - np.eye(len(idx))))))
    gram_ok = worst_gram < 1e-8

    # J-matrix: same-interval diagonal delta and exact symmetry
    model = diagonal_2d()
    data = sample(model, 2000, seed=5)
    mesh = ThresholdMesh.regular(model.space, 8)
    tree = fit_tree(data, model.space,
                    TreePceConfig(mesh=mesh, p_loc=2, max_classes=10))
    mom = segment_moments(model.space, tree)
    leaves = tree.leaves()
    diag_ok = True
    sym_ok = True
    worst_diag = 0.0
    for r in range(len(leaves)):
        for i in range(2):
            J = _j_matrix(mom, leaves[r], leaves[r], i)
            worst_diag = max(worst_diag, float(np.max(np.abs(J - np.eye(J.shape[0])))))
        for rp in range(len(leaves)):
            for i in range(2):
                A = _j_matrix(mom, leaves[r], leaves[rp], i)
                B = _j_matrix(mom, leaves[rp], leaves[r], i)
                if not np.array_equal(A, B.T):
                    sym_ok = False
    diag_ok = worst_diag < 1e-10
    ok = gram_ok and diag_ok and sym_ok
    report(12, "orthonormality and J-matrix", ok,
           f"gram dev={worst_gram:.2e} (< 1e-8), diag dev={worst_diag:.2e} "
           f"(< 1e-10), symmetry exact={sym_ok}")


def test_13_sparse_tree_beats_sparse_expansion_at_matched_budgets():
    model = oscillatory_multid(4, 1.0, 1.0)
    train = sample(model, 2000, seed=0)
    test = sample(model, 2000, seed=100)
    mesh = ThresholdMesh.regular(model.space, 8)
    cfg = TreePceConfig(mesh=mesh, p_loc=1, epsilon=0.0, max_classes=40,
                        sparse=True)
    tree = fit_tree(train, model.space, cfg)
    rows = tree_trajectory(tree, test)
    candidates = enumerate_linear(4, 8)
    details = []
    ok = True
    for budget in (30, 60, 120):
        st = state_at_budget(rows, budget)
        sp = fit_sparse(train, model.space, mesh.full_rectangle(), candidates,
                        max_terms=budget)
        pce_tse = tse(sp, test)
        details.append(f"budget {budget}: tree {st.test_tse:.1f} <= pce {pce_tse:.1f}")
        ok = ok and st.coefficients <= budget and st.test_tse <= pce_tse
    report(13, "complexity frontier", ok, "; ".join(details))
