"""Command-line front end: fit, predict, sensitivity, benchmark, export-tree.

Exit codes: 0 ok, 2 input error, 3 fit infeasible, 4 analytic budget
exceeded, 5 out-of-domain point.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import benchmark as bench
from .core import InputSpace, MarginalDistribution, SampleSet, ThresholdMesh
from .errors import BudgetExceededError, DomainError, InsufficientSamplesError
from .models import BENCHMARKS, sample
from .orthobasis import enumerate_linear
from .pce import (
    fit_least_squares,
    fit_sparse,
    model_from_json,
    model_to_json,
    tse,
)
from .sensitivity import pick_freeze, sobol_from_pce, sobol_from_tree, tree_indices
from .sse import fit_sse, sse_from_json, sse_to_json, tse_sse, coefficient_count_sse
from .tree import (
    TreePceConfig,
    coefficient_count_tree,
    export_tree,
    fit_tree,
    tree_from_json,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_BUDGET = 4
EXIT_DOMAIN = 5


def _read_config_file(path: str) -> dict:
    """Flat key=value text; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value")
        key, val = line.split("=", 1)
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """File values fill in only where the CLI left the default."""
    if not getattr(args, "config", None):
        return
    sub = parser._subparsers._group_actions[0].choices[args.command]
    types = {action.dest: action.type for action in sub._actions}
    file_values = _read_config_file(args.config)
    for key, val in file_values.items():
        if not hasattr(args, key):
            continue
        default = sub.get_default(key)
        if getattr(args, key) == default:
            if isinstance(default, bool):
                val = val.lower() in ("1", "true", "yes")
            elif types.get(key) is not None:
                val = types[key](val)
            setattr(args, key, val)


def _parse_bounds(text: str, d: int) -> InputSpace:
    if not text:
        return InputSpace.uniform_unit(d)
    parts = text.split(",")
    if len(parts) != d:
        raise ValueError(f"bounds specify {len(parts)} dimensions, data has {d}")
    marginals = []
    for part in parts:
        lo, hi = part.split(":")
        marginals.append(MarginalDistribution.uniform(float(lo), float(hi)))
    return InputSpace(marginals)


def _load_model(path: str):
    text = Path(path).read_text()
    kind = json.loads(text).get("type")
    if kind == "pce":
        return model_from_json(text)
    if kind == "tree-pce":
        return tree_from_json(text)
    if kind == "sse":
        return sse_from_json(text)
    raise ValueError(f"unknown model type {kind!r} in {path}")


def _read_inputs_csv(path: str) -> np.ndarray:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError("empty CSV file (line 1)")
    header = [c.strip() for c in lines[0].split(",")]
    d = len(header) - 1 if header[-1] == "y" else len(header)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) < d:
            raise ValueError(f"line {lineno}: expected {d} fields")
        try:
            rows.append([float(p) for p in parts[:d]])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric value") from None
    return np.array(rows)


# ---------------------------------------------------------------------------
# commands


def cmd_fit(args) -> int:
    data = SampleSet.from_csv(args.data)
    space = _parse_bounds(args.bounds, data.dimension)
    mesh = ThresholdMesh.regular(space, args.mesh_points)
    t0 = time.perf_counter()
    diagnostics = {"method": args.method, "seed": args.seed}

    if args.method == "pce":
        model = fit_least_squares(data, space, mesh.full_rectangle(),
                                  enumerate_linear(data.dimension, args.degree))
        text = model_to_json(model)
        diagnostics.update(train_tse=model.tse_train,
                           coefficient_count=len(model.indices))
    elif args.method == "sparse-pce":
        model = fit_sparse(data, space, mesh.full_rectangle(),
                           enumerate_linear(data.dimension, args.degree))
        text = model_to_json(model)
        diagnostics.update(train_tse=model.tse_train,
                           coefficient_count=len(model.indices))
    elif args.method == "tree-pce":
        cfg = TreePceConfig(
            mesh=mesh, p_loc=args.p_loc,
            n_min=args.n_min, epsilon=args.epsilon,
            max_classes=args.max_classes, sparse=args.sparse,
        )
        model = fit_tree(data, space, cfg)
        text = export_tree(model, "json")
        diagnostics.update(
            train_tse=model.tse_glob,
            coefficient_count=coefficient_count_tree(model),
            leaf_count=model.n_leaves,
            split_history=[
                {"step": r.step, "dim": r.dim, "split_value": r.split_value,
                 "delta_tse": r.delta_tse}
                for r in model.history
            ],
        )
    elif args.method == "sse":
        model = fit_sse(data, space, args.p_loc,
                        max_classes=args.max_classes or 16, sparse=args.sparse,
                        n_min=args.n_min)
        text = sse_to_json(model)
        diagnostics.update(train_tse=tse_sse(model, data),
                           coefficient_count=coefficient_count_sse(model),
                           leaf_count=model.n_leaves)
    else:
        raise ValueError(f"unknown method {args.method!r}")

    diagnostics["wall_time_s"] = time.perf_counter() - t0
    Path(args.out).write_text(text)
    Path(args.out).with_suffix(".diag.json").write_text(json.dumps(diagnostics, indent=2))
    return EXIT_OK


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    X = _read_inputs_csv(args.data)
    d = model.space.dimension if hasattr(model, "space") else model.dimension
    if X.shape[1] != d:
        raise ValueError(f"dimension mismatch: model has d={d}, data has d={X.shape[1]}")
    y = model.predict(X)
    header = ",".join([f"x{i + 1}" for i in range(d)] + ["prediction"])
    out = np.column_stack([X, y])
    np.savetxt(args.out, out, delimiter=",", header=header, comments="", fmt="%.17g")
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    model = _load_model(args.model)
    is_tree = hasattr(model, "leaves") and hasattr(model, "history")
    if args.method == "analytic":
        if is_tree:
            result = sobol_from_tree(model, model.space, budget=args.budget)
        elif hasattr(model, "coefficients"):
            result = sobol_from_pce(model)
        else:
            raise ValueError("analytic sensitivity supports pce and tree-pce models")
    elif args.method == "pick-freeze":
        space = model.space
        result = pick_freeze(model.predict, space, N_mc=args.n_mc, seed=args.seed)
    else:
        raise ValueError(f"unknown method {args.method!r}")

    text = result.to_json() if args.format == "json" else result.to_csv()
    Path(args.out).write_text(text)
    if is_tree:
        tri = tree_indices(model)
        tri_text = tri.to_json() if args.format == "json" else tri.to_csv()
        suffix = ".tree.json" if args.format == "json" else ".tree.csv"
        Path(args.out).with_suffix(suffix).write_text(tri_text)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    if args.name not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {args.name!r}")
    model = BENCHMARKS[args.name](d=args.d, k=args.k, c=args.c)
    space = model.space
    data = sample(model, args.n_train * 2, args.seed)
    n_train = int(round(args.train_frac * data.size))
    train = SampleSet(data.inputs[:n_train], data.outputs[:n_train])
    test = SampleSet(data.inputs[n_train:], data.outputs[n_train:])
    mesh = ThresholdMesh.regular(space, args.mesh_points)

    rows = bench.method_sweep(train, test, space, mesh, args.seed,
                              p_loc=args.p_loc, max_classes=args.max_classes or 32)
    out = Path(args.out)
    lines = ["method,hyperparameters,coefficients,train_tse,test_tse,seed"]
    for r in rows:
        lines.append(f"{r.method},{r.hyperparameters},{r.coefficients},"
                     f"{r.train_tse!r},{r.test_tse!r},{r.seed}")
    out.write_text("\n".join(lines) + "\n")

    cfg = TreePceConfig(mesh=mesh, p_loc=args.p_loc, epsilon=0.0,
                        max_classes=args.max_classes or 32, sparse=args.sparse)
    fitted = fit_tree(train, space, cfg)
    traj = bench.tree_trajectory(fitted, test)
    tlines = ["classes,coefficients,train_tse,test_tse"]
    for r in traj:
        tlines.append(f"{r.classes},{r.coefficients},{r.train_tse!r},{r.test_tse!r}")
    out.with_suffix(".trajectory.csv").write_text("\n".join(tlines) + "\n")

    sweep = bench.epsilon_sweep(train, space, mesh, args.p_loc,
                                [10.0**-e for e in range(1, 7)])
    elines = ["epsilon,classes"]
    for eps, nc in sweep:
        elines.append(f"{eps!r},{nc}")
    out.with_suffix(".epsilon.csv").write_text("\n".join(elines) + "\n")
    return EXIT_OK


def cmd_export_tree(args) -> int:
    model = _load_model(args.model)
    if not hasattr(model, "history"):
        raise ValueError("export-tree requires a tree-pce model file")
    Path(args.out).write_text(export_tree(model, args.format))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treepce",
                                     description="Piecewise polynomial chaos surrogates")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file; flags override")
        p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="fit a surrogate from a CSV dataset")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--method", default="tree-pce",
                   choices=["pce", "sparse-pce", "tree-pce", "sse"])
    p.add_argument("--degree", type=int, default=3, help="degree for pce/sparse-pce")
    p.add_argument("--p-loc", type=int, default=2, dest="p_loc")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--max-classes", type=int, default=None, dest="max_classes")
    p.add_argument("--mesh-points", type=int, default=8, dest="mesh_points",
                   help="interior thresholds per dimension")
    p.add_argument("--n-min", type=int, default=None, dest="n_min")
    p.add_argument("--sparse", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bounds", default="",
                   help="per-dimension lo:hi pairs, comma separated; default unit cube")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="evaluate a fitted model on input rows")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sensitivity", help="Sobol' and tree sensitivity reports")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--method", default="analytic", choices=["analytic", "pick-freeze"])
    p.add_argument("--n-mc", type=int, default=10**4, dest="n_mc")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=10**8)
    p.add_argument("--format", default="csv", choices=["csv", "json"])
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("benchmark", help="method sweep on an analytic benchmark")
    common(p)
    p.add_argument("--name", required=True, choices=["step", "diagonal2d", "multid"])
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--n-train", type=int, default=2000, dest="n_train")
    p.add_argument("--train-frac", type=float, default=0.5, dest="train_frac")
    p.add_argument("--p-loc", type=int, default=2, dest="p_loc")
    p.add_argument("--max-classes", type=int, default=None, dest="max_classes")
    p.add_argument("--mesh-points", type=int, default=8, dest="mesh_points")
    p.add_argument("--sparse", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("export-tree", help="re-export a tree model as json or dot")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--format", default="dot", choices=["json", "dot"])
    p.set_defaults(func=cmd_export_tree)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, parser)
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InsufficientSamplesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
