"""``fmrbench`` command line: impute | cluster | synth | recommend.

Exit codes: 0 on success (an infeasible LP is a result, not a failure),
2 on usage or data errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import svg
from ._io import atomic_write_text, fmt, write_csv, write_json
from .data import (DataError, destandardize, grouped_holdout, impute_dataset, load_csv,
                   parse_numeric, read_table, sidecar_path, soft_impute, standardize_matrix,
                   standardization_json)
from .mmcl import MmclConfig, MmclResult, mmcl_fit
from .moo import cluster_problem, pareto_sweep
from .regress import FitConfig, LinearModel, fit, predict, r2_score
from .synth import SynthSpec, run_monte_carlo

log = logging.getLogger("fmrbench")

RESULT_FILE = "result.json"


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _names(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    if ":" not in text:
        return _floats(text)
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"empty or descending grid {text!r}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


# --------------------------------------------------------------------------
# impute


def cmd_impute(args) -> int:
    table = read_table(args.inp)
    passthrough = set(args.passthrough_cols or [])
    if args.group_col:
        if args.group_col not in table.header:
            raise DataError(f"group column {args.group_col!r} not found in header")
        passthrough.add(args.group_col)
        numeric = [h for h in table.header if h not in passthrough]
    else:
        numeric = []
        for h in table.header:
            if h in passthrough:
                continue
            try:
                parse_numeric(table, [h])
                numeric.append(h)
            except DataError:
                passthrough.add(h)
    if not numeric:
        raise DataError("no numeric columns to impute")
    vals, mask = parse_numeric(table, numeric)
    n_missing = int((~mask).sum())
    full = soft_impute(vals, mask, args.lambda_svd, args.tol, args.max_iter, args.max_rank)
    record = None
    if args.standardize:
        full, record = standardize_matrix(full, numeric)

    col = {h: j for j, h in enumerate(numeric)}
    rows = []
    for i, raw in enumerate(table.rows):
        out = []
        for h, cell in zip(table.header, raw):
            if h not in col:
                out.append(cell)
            elif record is None and mask[i, col[h]]:
                out.append(cell)
            else:
                out.append(fmt(full[i, col[h]]))
        rows.append(out)
    write_csv(args.out, table.header, rows)
    if record is not None:
        atomic_write_text(sidecar_path(args.out), standardization_json(record))
    print(f"imputed {n_missing} missing cells in {len(numeric)} columns -> {args.out}")
    return 0


# --------------------------------------------------------------------------
# cluster


def heldout_r2(res: MmclResult, X, y, split) -> float:
    """R^2 on the test rows, each predicted by its group's cluster model."""
    rows = split.all_test()
    if not len(rows):
        rows = np.arange(len(y))
    group_of_row = np.empty(len(y), dtype=np.intp)
    for i, r in enumerate(split.train_rows):
        group_of_row[r] = i
    for i, r in enumerate(split.test_rows):
        group_of_row[r] = i
    labels = res.assignment[group_of_row[rows]]
    yhat = np.empty(len(rows))
    for j, m in enumerate(res.models):
        sel = labels == j
        yhat[sel] = predict(m, X[rows[sel]])
    return r2_score(y[rows], yhat)


def cmd_cluster(args) -> int:
    ds, gi = load_csv(args.inp, args.group_col, args.response_cols, args.feature_cols,
                      args.ignore_cols or ())
    if ds.has_missing:
        raise DataError("input has missing values; run `fmrbench impute` first")
    response = args.cluster_on or ds.response_names[0]
    y = ds.response(response)
    ks = args.k_sweep or [args.k]
    lams = args.lambda_sweep or [args.lam]
    for k in ks:
        if k > gi.M:
            raise UsageError(f"K={k} exceeds the number of groups M={gi.M}")
        if k < 1:
            raise UsageError("K must be at least 1")

    def run(k, lam):
        cfg = MmclConfig(K=k, epsilon=args.epsilon, max_iter=args.max_iter, init=args.init,
                         holdout_fraction=args.holdout, fit_cfg=FitConfig.for_lambda(lam),
                         seed=args.seed)
        res = mmcl_fit(ds, gi, cfg, response=response, split=split)
        return res, heldout_r2(res, ds.X, y, split)

    split = grouped_holdout(gi, args.holdout, args.seed)
    sweep, best = [], None
    for k in ks:
        for lam in lams:
            res, r2 = run(k, lam)
            sweep.append((k, lam, r2, res.iterations, res.converged))
            if best is None or r2 > best[2] + 1e-12:
                best = (k, lam, r2, res)
    baseline = max(run(1, lam)[1] for lam in lams)
    k, lam, r2, res = best

    out = Path(args.out_dir)
    fit_cfg = FitConfig.for_lambda(lam)
    meta = res.to_dict()
    meta.update({
        "response": response, "K": k, "lambda": lam, "init": args.init,
        "holdout": args.holdout, "seed": args.seed, "heldout_r2": r2,
        "single_model_heldout_r2": baseline,
        "group_col": args.group_col, "feature_names": list(ds.feature_names),
        "response_names": list(ds.response_names),
    })
    write_json(out / RESULT_FILE, meta)
    if len(sweep) > 1:
        write_csv(out / "sweep.csv", ["K", "lambda", "heldout_r2", "iterations", "converged"], sweep)
    for j in range(k):
        groups = [g for g, c in zip(res.group_ids, res.assignment) if c == j]
        rows = np.concatenate([split.train_rows[i] for i in np.flatnonzero(res.assignment == j)])
        models = {}
        for name in ds.response_names:
            if name == response:
                m = res.models[j]
            else:
                m = fit(ds.X[rows], ds.response(name)[rows], fit_cfg) if len(rows) >= 2 else None
            if m is not None:
                models[name] = LinearModel(m.intercept, m.coefficients, m.effective_params,
                                           m.residual_std_error, m.lam, ds.feature_names).to_dict()
        write_json(out / f"cluster_{j}.json", {"cluster": j, "groups": groups, "models": models})
    print(f"K={k} lambda={lam:g} held-out R2={r2:.4f} (single model {baseline:.4f}); "
          f"{res.iterations} iterations, converged={res.converged} -> {out}")
    return 0


# --------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    if len(args.n) != 2 or len(args.s) != 2:
        raise UsageError("--n and --s take exactly two values (one per cluster)")
    try:
        spec = SynthSpec(n=tuple(args.n), s=tuple(args.s), noise_levels=tuple(args.noise),
                         d2_levels=tuple(args.d2), runs=args.runs, seed=args.seed,
                         init_mode=args.init, holdout_fraction=args.holdout,
                         epsilon=args.epsilon, max_iter=args.max_iter)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = run_monte_carlo(spec, workers=args.workers)
    out = Path(args.out_dir)
    write_csv(out / "runs.csv", ["noise", "d2", "run", "nmi", "iterations", "converged"],
              [(r.noise, r.d2, r.run, r.nmi, r.iterations, r.converged) for r in res.records])
    agg = res.aggregate()
    cols = ["noise", "d2", "mean_nmi", "q25", "q50", "q75", "mean_iters"]
    write_csv(out / "aggregate.csv", cols, [[row[c] for c in cols] for row in agg])
    if args.svg:
        nmi_series = {f"d2={d2:g}": [(r["noise"], r["mean_nmi"]) for r in agg if r["d2"] == d2]
                      for d2 in spec.d2_levels}
        it_series = {f"d2={d2:g}": [(r["noise"], r["mean_iters"]) for r in agg if r["d2"] == d2]
                     for d2 in spec.d2_levels}
        atomic_write_text(out / "nmi.svg", svg.line_chart(
            nmi_series, f"Mean NMI ({spec.init_mode} init)", "noise level", "mean NMI"))
        atomic_write_text(out / "iterations.svg", svg.line_chart(
            it_series, f"Mean iterations ({spec.init_mode} init)", "noise level", "iterations"))
    for row in agg:
        print(f"noise={row['noise']:g} d2={row['d2']:g} mean_nmi={row['mean_nmi']:.3f} "
              f"mean_iters={row['mean_iters']:.2f}")
    return 0


# --------------------------------------------------------------------------
# recommend


def _load_models(models_dir: Path):
    path = models_dir / RESULT_FILE
    if not path.exists():
        raise DataError(f"{path}: model file not found (run `fmrbench cluster` first)")
    with open(path, encoding="utf-8") as fh:
        meta = json.load(fh)
    clusters = {}
    for j in range(int(meta["K"])):
        cpath = models_dir / f"cluster_{j}.json"
        if not cpath.exists():
            raise DataError(f"{cpath}: model file not found")
        with open(cpath, encoding="utf-8") as fh:
            clusters[j] = json.load(fh)
    return meta, clusters


def cmd_recommend(args) -> int:
    models_dir = Path(args.models)
    meta, clusters = _load_models(models_dir)
    responses = meta["response_names"]
    objective = args.objective or responses[0]
    constraint = args.constraint or (responses[1] if len(responses) > 1 else None)
    if constraint is None:
        raise UsageError("a constraint response is required (--constraint)")
    ds, gi = load_csv(args.inp, meta["group_col"], responses, meta["feature_names"])
    if ds.has_missing:
        raise DataError("input has missing values; run `fmrbench impute` first")
    names = ds.feature_names
    frozen = set(args.frozen_cols or [])
    unknown = frozen - set(names)
    if unknown:
        raise UsageError(f"unknown frozen columns: {sorted(unknown)}")
    actionable = np.array([n not in frozen for n in names]) if frozen else None
    reference = None
    if args.store is not None:
        if args.store not in gi.group_ids:
            raise UsageError(f"store {args.store!r} not found in group column")
        reference = ds.X[gi.rows[gi.group_ids.index(args.store)]].mean(axis=0)

    to_raw = None
    if ds.standardization is not None:
        record = ds.standardization
        to_raw = lambda x: destandardize(x, record, names)  # noqa: E731

    grid = args.se_grid if args.se_grid is not None else [args.se_floor]
    targets = [args.cluster] if args.cluster is not None else sorted(clusters)
    out = Path(args.out_dir)
    for j in targets:
        if j not in clusters:
            raise UsageError(f"cluster {j} not found in {models_dir}")
        models = clusters[j]["models"]
        for r in (objective, constraint):
            if r not in models:
                raise DataError(f"cluster {j} has no model for response {r!r}")
        member = set(clusters[j]["groups"])
        rows = np.concatenate([gi.rows[i] for i, g in enumerate(gi.group_ids) if g in member])
        prob = cluster_problem(
            ds.X[rows], LinearModel.from_dict(models[objective]),
            LinearModel.from_dict(models[constraint]), k_slack=args.k_slack,
            collinearity=not args.no_collinearity, actionable=actionable,
            reference=reference, feature_names=names)
        frontier = pareto_sweep(prob, grid, to_raw)
        p = len(names)
        table = []
        for fp in frontier:
            rec = fp.recommendation
            xs = list(rec.x_star) if rec.x_star is not None else [None] * p
            table.append([fp.se_floor, rec.status, rec.predicted_SE, rec.predicted_P, *xs])
        header = ["se_floor", "status", "achieved_se", "p_star"] + [f"x_{i + 1}" for i in range(p)]
        write_csv(out / f"frontier_cluster{j}.csv", header, table)
        write_json(out / f"recommendations_cluster{j}.json", {
            "cluster": j, "objective": objective, "constraint": constraint,
            "feature_names": list(names),
            "recommendations": [fp.recommendation.to_dict() for fp in frontier],
        })
        if args.svg:
            pts = [(fp.recommendation.predicted_SE, fp.recommendation.predicted_P)
                   for fp in frontier if fp.status == "optimal"]
            if pts:
                atomic_write_text(out / f"frontier_cluster{j}.svg", svg.scatter_chart(
                    pts, f"Pareto frontier, cluster {j}", constraint, objective))
        n_opt = sum(fp.status == "optimal" for fp in frontier)
        print(f"cluster {j}: {n_opt}/{len(frontier)} SE floors feasible -> {out}")
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fmrbench", description=__doc__.splitlines()[0])
    ap.add_argument("--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("impute", help="soft-impute missing cells, optionally standardize")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda-svd", type=float, default=0.0)
    p.add_argument("--max-rank", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--group-col", default=None)
    p.add_argument("--passthrough-cols", type=_names, default=None)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("cluster", help="MMCL clustering of groups into regression components")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--group-col", required=True)
    p.add_argument("--response-cols", type=_names, required=True)
    p.add_argument("--feature-cols", type=_names, default=None)
    p.add_argument("--ignore-cols", type=_names, default=None)
    p.add_argument("--cluster-on", default=None, help="response used for clustering (default: first)")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--k-sweep", type=_ints, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--lambda-sweep", type=_floats, default=None)
    p.add_argument("--init", choices=("random", "mmclpp"), default="random")
    p.add_argument("--holdout", type=float, default=0.25)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("synth", help="Monte-Carlo validation on synthetic two-cluster data")
    p.add_argument("--n", type=_ints, default=[300, 300])
    p.add_argument("--s", type=_ints, default=[5, 15])
    p.add_argument("--noise", type=_floats, default=[0.5, 1, 2, 4, 6])
    p.add_argument("--d2", type=_floats, default=[0.2, 0.6, 1.8])
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--init", choices=("random", "mmclpp"), default="random")
    p.add_argument("--holdout", type=float, default=0.25)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("recommend", help="Pareto-optimal KPI recommendations per cluster")
    p.add_argument("--models", required=True, help="output directory of `fmrbench cluster`")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--cluster", type=int, default=None)
    p.add_argument("--objective", default=None)
    p.add_argument("--constraint", default=None)
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--se-grid", type=parse_grid, default=None)
    grid.add_argument("--se-floor", type=float, default=0.0)
    p.add_argument("--k-slack", type=float, default=1.0)
    p.add_argument("--no-collinearity", action="store_true")
    p.add_argument("--frozen-cols", type=_names, default=None)
    p.add_argument("--store", default=None, help="group whose mean KPIs fix the frozen columns")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_recommend)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, UsageError, ValueError) as exc:
        print(f"fmrbench {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
