"""Command-line experiment harness.

Subcommands: select, evaluate, sweep, stability, tradeoff, oracle.  Every
flag can also be supplied through an environment variable named after it
with the IVFS_ prefix (--d-tilde becomes IVFS_D_TILDE); explicit flags win.
All outputs are deterministic given --seed: JSON is written with sorted
keys, CSV with LF newlines, and wall-clock fields stay 0.0 unless
--record-timing is passed.

Exit codes: 0 success, 2 bad arguments or inputs, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .baselines import GraphKind, build_similarity, mcfs_rank, spec_rank
from .data import DataMatrix, RngHandle, bootstrap, derive_seed, load_csv, standardize
from .evaluation import METRIC_GROUPS, EvalConfig, evaluate_selection
from .metricspace import NormKind, normalize_max, pairwise_distances
from .persistence import build_rips, compute_persistence, filter_noise
from .selection import FeatureSubset, IvfsConfig, exact_inclusion_value, run_ivfs

ENV_PREFIX = "IVFS_"
METHODS = ("ivfs-linf", "ivfs-l1", "ivfs-l2", "spec", "mcfs")
_NORM_BY_METHOD = {
    "ivfs-linf": NormKind.L_INF,
    "ivfs-l1": NormKind.L1,
    "ivfs-l2": NormKind.L2,
}
_NORM_NAMES = {"linf": NormKind.L_INF, "l1": NormKind.L1, "l2": NormKind.L2}


class UsageError(Exception):
    """Bad arguments or unusable inputs; maps to exit code 2."""


def _env_name(option: str) -> str:
    return ENV_PREFIX + option.lstrip("-").replace("-", "_").upper()


def _add(parser, option: str, **kwargs):
    """add_argument with an environment-variable default.

    argparse applies `type` to string defaults, so the raw env text slots
    straight in; boolean flags accept 1/true/yes/on.
    """
    env = os.environ.get(_env_name(option))
    if env is not None:
        if kwargs.get("action") == "store_true":
            kwargs["default"] = env.strip().lower() in ("1", "true", "yes", "on")
        else:
            kwargs["default"] = env
        kwargs.pop("required", None)
    parser.add_argument(option, **kwargs)


def _resolve_count(text: str, total: int, minimum: int, what: str) -> int:
    """Fraction in (0,1] scaled to `total` with round-half-up, or `abs:K`."""
    text = str(text).strip()
    if text.startswith("abs:"):
        try:
            count = int(text[4:])
        except ValueError:
            raise UsageError(f"{what}: bad absolute count {text!r}") from None
    else:
        try:
            frac = float(text)
        except ValueError:
            raise UsageError(f"{what}: expected a fraction or abs:K, got {text!r}") from None
        if not (0.0 < frac <= 1.0):
            raise UsageError(f"{what}: fraction {frac} outside (0, 1]")
        count = int(math.floor(frac * total + 0.5))
    if not (minimum <= count <= total):
        raise UsageError(f"{what}: resolved count {count} outside [{minimum}, {total}]")
    return count


def _parse_list(text: str, cast, what: str) -> list:
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            out.append(cast(part))
        except ValueError:
            raise UsageError(f"{what}: bad entry {part!r}") from None
    if not out:
        raise UsageError(f"{what}: empty list")
    return out


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _load_data(args) -> DataMatrix:
    if not args.data:
        raise UsageError("--data is required")
    if not os.path.isfile(args.data):
        raise UsageError(f"dataset not found: {args.data}")
    X = load_csv(args.data, args.label_column)
    if not args.no_standardize:
        X = standardize(X)
    return X


def _ranking_order(X: DataMatrix, method: str, args, d0: int) -> np.ndarray:
    """Full feature order, best first, under the named method."""
    if method in _NORM_BY_METHOD:
        cfg = IvfsConfig(
            k=args.k,
            d_tilde=_resolve_count(args.d_tilde, X.d, 1, "--d-tilde"),
            n_tilde=_resolve_count(args.n_tilde, X.n, 2, "--n-tilde"),
            d0=d0,
            norm=_NORM_BY_METHOD[method],
            master_seed=args.seed,
        )
        result = run_ivfs(X, cfg, threads=args.threads)
        return np.lexsort((np.arange(X.d), -result.final_scores))
    if method == "spec":
        graph = build_similarity(X, GraphKind.RBF_FULL)
        return spec_rank(X, graph).order
    if method == "mcfs":
        graph = build_similarity(X, GraphKind.KNN_BINARY, args.knn_graph_k)
        return mcfs_rank(X, graph, args.mcfs_clusters, n_select=d0).order
    raise UsageError(f"unknown method {method!r}")


def _base_meta(args, command: str) -> dict:
    """Resolved configuration shared by every command's run_meta.json.

    Execution-only knobs (threads, timing capture) are excluded so the
    metadata is identical across equivalent runs.
    """
    return {
        "command": command,
        "version": __version__,
        "seed": args.seed,
        "data": args.data,
        "label_column": args.label_column,
        "standardize": not args.no_standardize,
    }


def _method_meta(args, method: str, X: DataMatrix, d0: int | None) -> dict:
    meta = {"method": method, "n": X.n, "d": X.d}
    if d0 is not None:
        meta["d0"] = d0
    if method in _NORM_BY_METHOD:
        meta.update(
            k=args.k,
            d_tilde=_resolve_count(args.d_tilde, X.d, 1, "--d-tilde"),
            n_tilde=_resolve_count(args.n_tilde, X.n, 2, "--n-tilde"),
            norm=_NORM_BY_METHOD[method].value,
        )
    elif method == "spec":
        meta.update(graph="rbf")
    elif method == "mcfs":
        meta.update(graph="knn", knn_graph_k=args.knn_graph_k, mcfs_clusters=args.mcfs_clusters)
    return meta


def _eval_config(args, seed: int) -> EvalConfig:
    groups = tuple(_parse_list(args.metrics, str, "--metrics"))
    unknown = set(groups) - set(METRIC_GROUPS)
    if unknown:
        raise UsageError(f"--metrics: unknown groups {sorted(unknown)}")
    return EvalConfig(
        master_seed=seed,
        alpha=args.alpha,
        epsilon=args.epsilon,
        max_points=args.max_points,
        knn_grid=tuple(_parse_list(args.knn_grid, int, "--knn-grid")),
        knn_repeats=args.knn_repeats,
        test_fraction=args.test_fraction,
        kmeans_n_init=args.kmeans_n_init,
        metrics=groups,
    )


def _report_rows(report) -> list:
    """(metric, value) pairs for populated metric fields, fixed order."""
    pairs = [
        ("knn_accuracy", report.knn_accuracy),
        ("kmeans_accuracy", report.kmeans_accuracy),
        ("nmi", report.nmi),
        ("w1", report.w1),
        ("w_inf", report.w_inf),
        ("l_inf", report.l_inf),
        ("l1_over_n2", report.l1_over_n2),
        ("l2", report.l2),
    ]
    return [(name, value) for name, value in pairs if value is not None]


def _require_d0(args, X: DataMatrix) -> int:
    if args.d0 is None:
        raise UsageError("--d0 is required")
    if not (1 <= args.d0 <= X.d):
        raise UsageError(f"--d0 {args.d0} outside [1, {X.d}]")
    return args.d0


def _out(args, name: str) -> str:
    os.makedirs(args.output_dir, exist_ok=True)
    return os.path.join(args.output_dir, name)


def cmd_select(args) -> int:
    X = _load_data(args)
    d0 = _require_d0(args, X)
    method = args.method
    order = _ranking_order(X, method, args, d0)
    top = order[:d0]
    with open(_out(args, "selected_features.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write("".join(f"{int(i)}\n" for i in top))
    meta = _base_meta(args, "select")
    meta.update(_method_meta(args, method, X, d0))
    _write_json(_out(args, "run_meta.json"), meta)
    return 0


def cmd_evaluate(args) -> int:
    X = _load_data(args)
    if not args.features or not os.path.isfile(args.features):
        raise UsageError(f"feature list not found: {args.features}")
    with open(args.features, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    try:
        indices = [int(line) for line in lines]
    except ValueError:
        raise UsageError(f"feature list {args.features} holds non-integer lines") from None
    if not indices:
        raise UsageError(f"feature list {args.features} is empty")
    if min(indices) < 0 or max(indices) >= X.d:
        raise UsageError(f"feature index out of range [0, {X.d})")
    F = FeatureSubset(tuple(indices))

    cfg = _eval_config(args, derive_seed(args.seed, "evaluate"))
    report = evaluate_selection(X, F, cfg)
    if not args.record_timing:
        report.elapsed_seconds = 0.0
    _write_json(_out(args, "evaluation_report.json"), report.to_json_dict())

    if args.export_diagrams:
        row_rng = RngHandle(cfg.master_seed).derive("diagram-rows")
        for tag, subset in (("full", None), ("selected", F)):
            D = normalize_max(pairwise_distances(X, subset))
            h0, h1 = compute_persistence(build_rips(D, args.alpha, args.max_points, row_rng))
            rows = [
                (diag.dimension, f"{birth:.17g}", f"{death:.17g}")
                for diag in (filter_noise(h0, args.epsilon), filter_noise(h1, args.epsilon))
                for birth, death in diag.barcodes
            ]
            _write_csv(_out(args, f"diagrams_{tag}.csv"), ("dimension", "birth", "death"), rows)

    meta = _base_meta(args, "evaluate")
    meta.update(features=args.features, n=X.n, d=X.d, n_selected=len(F))
    _write_json(_out(args, "run_meta.json"), meta)
    return 0


def cmd_sweep(args) -> int:
    X = _load_data(args)
    methods = _parse_list(args.methods, str, "--methods")
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"--methods: unknown method {m!r}")
    if args.step < 1:
        raise UsageError("--step must be >= 1")
    if not (1 <= args.start <= args.stop <= X.d):
        raise UsageError(f"sweep range [{args.start}, {args.stop}] outside [1, {X.d}]")

    cfg = _eval_config(args, derive_seed(args.seed, "sweep-eval"))
    rows = []
    for method in methods:
        order = _ranking_order(X, method, args, d0=args.stop)
        for n_features in range(args.start, args.stop + 1, args.step):
            F = FeatureSubset(tuple(int(i) for i in order[:n_features]))
            report = evaluate_selection(X, F, cfg)
            for metric, value in _report_rows(report):
                rows.append((method, n_features, metric, f"{value:.17g}"))
    _write_csv(_out(args, "sweep.csv"), ("method", "n_features", "metric", "value"), rows)

    meta = _base_meta(args, "sweep")
    meta.update(
        methods=methods, start=args.start, stop=args.stop, step=args.step, n=X.n, d=X.d
    )
    _write_json(_out(args, "run_meta.json"), meta)
    return 0


def _selected_set(X, method, args, d0) -> set:
    return set(int(i) for i in _ranking_order(X, method, args, d0)[:d0])


def cmd_stability(args) -> int:
    X = _load_data(args)
    d0 = _require_d0(args, X)
    methods = _parse_list(args.methods, str, "--methods")
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"--methods: unknown method {m!r}")
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    if args.k_grid is not None:
        k_values = _parse_list(args.k_grid, int, "--k-grid")
        bad = [m for m in methods if m not in _NORM_BY_METHOD]
        if bad:
            raise UsageError(f"--k-grid applies to ivfs-* methods only, got {bad}")
    else:
        k_values = [args.k]

    root = RngHandle(args.seed)
    resamples = []
    for r in range(args.reps):
        handle = root.derive("stability-bootstrap", r)
        if args.no_replace:
            # degenerate testing mode: distinct rows in original order, so
            # ratio 1.0 reproduces the input dataset exactly
            m = math.ceil(args.ratio * X.n)
            if m < 2:
                raise UsageError(f"--ratio {args.ratio} would draw {m} rows; need at least 2")
            idx = np.sort(handle.generator().choice(X.n, size=m, replace=False))
            resamples.append(X.take_rows(idx))
        else:
            resamples.append(bootstrap(X, args.ratio, handle))

    rows = []
    for method in methods:
        for k in k_values:
            # spec/mcfs ignore k; IVFS runs get it injected
            run_args = argparse.Namespace(**vars(args))
            run_args.k = k
            original = _selected_set(X, method, run_args, d0)
            diffs = []
            for r, Xb in enumerate(resamples):
                resampled = _selected_set(Xb, method, run_args, d0)
                diff = d0 - len(original & resampled)
                diffs.append(diff)
                rows.append((method, k, r, diff))
            rows.append((method, k, "mean", f"{float(np.mean(diffs)):.17g}"))
    _write_csv(_out(args, "stability.csv"), ("method", "k", "rep", "difference"), rows)

    meta = _base_meta(args, "stability")
    meta.update(
        methods=methods,
        d0=d0,
        reps=args.reps,
        ratio=args.ratio,
        k_grid=k_values,
        n=X.n,
        d=X.d,
    )
    _write_json(_out(args, "run_meta.json"), meta)
    return 0


def cmd_tradeoff(args) -> int:
    X = _load_data(args)
    d0 = _require_d0(args, X)
    method = args.method
    if method not in _NORM_BY_METHOD:
        raise UsageError("tradeoff grids run ivfs-* methods only")
    k_values = _parse_list(args.k_grid, int, "--k-grid")
    n_tilde_specs = _parse_list(args.n_tilde_grid, str, "--n-tilde-grid")
    groups = set(_parse_list(args.metrics, str, "--metrics"))
    if not {"norms", "diagrams"} <= groups:
        raise UsageError("tradeoff needs the norms and diagrams metric groups")
    base_cell = (args.base_k, args.base_n_tilde.strip())
    cells = [(k, spec.strip()) for k in k_values for spec in n_tilde_specs]
    if base_cell not in cells:
        raise UsageError(f"base cell {base_cell} is not in the grid")

    cfg = _eval_config(args, derive_seed(args.seed, "tradeoff-eval"))
    values = {}
    for index, (k, n_tilde_spec) in enumerate(cells):
        run_args = argparse.Namespace(**vars(args))
        run_args.k = k
        run_args.n_tilde = n_tilde_spec
        run_args.seed = derive_seed(args.seed, "tradeoff-cell", index)
        order = _ranking_order(X, method, run_args, d0)
        F = FeatureSubset(tuple(int(i) for i in order[:d0]))
        report = evaluate_selection(X, F, cfg)
        values[(k, n_tilde_spec)] = {"l2": report.l2, "w_inf": report.w_inf}

    base = values[base_cell]
    rows = []
    for k, n_tilde_spec in cells:
        for metric in ("l2", "w_inf"):
            value = values[(k, n_tilde_spec)][metric]
            base_value = base[metric]
            if base_value == 0.0:
                relative = 1.0 if value == 0.0 else math.inf
            else:
                relative = value / base_value
            rows.append((k, n_tilde_spec, metric, f"{value:.17g}", f"{relative:.17g}"))
    _write_csv(
        _out(args, "tradeoff.csv"), ("k", "n_tilde", "metric", "value", "relative"), rows
    )

    meta = _base_meta(args, "tradeoff")
    meta.update(
        method=method,
        d0=d0,
        k_grid=k_values,
        n_tilde_grid=n_tilde_specs,
        base_k=args.base_k,
        base_n_tilde=args.base_n_tilde,
        n=X.n,
        d=X.d,
    )
    _write_json(_out(args, "run_meta.json"), meta)
    return 0


def cmd_oracle(args) -> int:
    X = _load_data(args)
    d0 = _require_d0(args, X)
    norm = _NORM_NAMES[args.norm]
    d_tilde = _resolve_count(args.d_tilde, X.d, 1, "--d-tilde")
    try:
        exact = exact_inclusion_value(X, d_tilde, norm)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cfg = IvfsConfig(
        k=args.k, d_tilde=d_tilde, n_tilde=X.n, d0=d0, norm=norm, master_seed=args.seed
    )
    result = run_ivfs(X, cfg, threads=args.threads)

    exact_top = np.lexsort((np.arange(X.d), -exact))[:d0]
    overlap = len(set(int(i) for i in exact_top) & set(result.selected.indices))
    sampled = result.table.counters > 0
    err = np.abs(result.final_scores[sampled] - exact[sampled])
    payload = {
        "d0": d0,
        "d_tilde": d_tilde,
        "k": args.k,
        "norm": args.norm,
        "overlap": overlap,
        "exact_top": [int(i) for i in exact_top],
        "estimated_top": [int(i) for i in result.selected.indices],
        "sampled_features": int(sampled.sum()),
        "mean_abs_error": float(err.mean()) if err.size else None,
        "max_abs_error": float(err.max()) if err.size else None,
        "exact_iv": [float(v) for v in exact],
        "estimated_iv": [None if not s else float(v) for s, v in zip(sampled, result.final_scores)],
    }
    _write_json(_out(args, "oracle.json"), payload)

    meta = _base_meta(args, "oracle")
    meta.update(d0=d0, d_tilde=d_tilde, k=args.k, norm=args.norm, n=X.n, d=X.d)
    _write_json(_out(args, "run_meta.json"), meta)
    return 0


# Parent parsers are built fresh per subcommand: argparse shares Action
# objects between parsers that reuse one parents= instance, so a default
# tweaked for one subcommand would leak into the others.


def _common_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    _add(p, "--seed", type=int, default=0, help="master random seed")
    _add(p, "--threads", type=int, default=1, help="worker threads for the selection loop")
    _add(p, "--output-dir", default=".", help="directory for result files")
    _add(p, "--record-timing", action="store_true", default=False,
         help="write real wall-clock seconds instead of 0.0")
    return p


def _data_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    _add(p, "--data", required=True, help="dataset CSV (header row, '.' decimals)")
    _add(p, "--label-column", default=None, help="header name of the label column")
    _add(p, "--no-standardize", action="store_true", default=False,
         help="skip per-feature standardization")
    return p


def _selector_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    _add(p, "--k", type=int, default=1000, help="number of sampled subsets")
    _add(p, "--d-tilde", default="0.3", help="features per subset: fraction of d or abs:K")
    _add(p, "--n-tilde", default="0.1", help="rows per subset: fraction of n or abs:K")
    _add(p, "--d0", type=int, default=None, help="number of features to select")
    _add(p, "--knn-graph-k", type=int, default=5, help="neighbors for the mcfs graph")
    _add(p, "--mcfs-clusters", type=int, default=5, help="embedding eigenvectors for mcfs")
    return p


def _evaluation_parent(default_metrics: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    _add(p, "--alpha", type=float, default=0.8, help="filtration threshold")
    _add(p, "--epsilon", type=float, default=0.1, help="barcode noise cutoff")
    _add(p, "--max-points", type=int, default=128, help="row cap for diagram computation")
    _add(p, "--knn-grid", default="1,3,5,10", help="comma list of K values")
    _add(p, "--knn-repeats", type=int, default=10, help="holdout repetitions")
    _add(p, "--test-fraction", type=float, default=0.2, help="holdout test fraction")
    _add(p, "--kmeans-n-init", type=int, default=10, help="k-means restarts")
    _add(p, "--metrics", default=default_metrics,
         help="comma list of metric groups: knn,cluster,diagrams,norms")
    return p


def build_parser() -> argparse.ArgumentParser:
    all_groups = ",".join(METRIC_GROUPS)
    parser = argparse.ArgumentParser(
        prog="ivfs",
        description="Topology-preserving feature selection and its evaluation harness.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", parents=[_common_parent(), _data_parent(), _selector_parent()],
                       help="rank features and write the top d0")
    _add(p, "--method", choices=METHODS, default="ivfs-linf")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate",
                       parents=[_common_parent(), _data_parent(), _evaluation_parent(all_groups)],
                       help="score a feature list against the full data")
    _add(p, "--features", required=True, help="file with one feature index per line")
    _add(p, "--export-diagrams", action="store_true", default=False,
         help="also write persistence diagrams as CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep",
                       parents=[_common_parent(), _data_parent(), _selector_parent(),
                                _evaluation_parent("norms,diagrams")],
                       help="evaluate nested ranking prefixes over a size range")
    _add(p, "--methods", default="ivfs-linf", help="comma list of methods")
    _add(p, "--start", type=int, default=10)
    _add(p, "--stop", type=int, default=60)
    _add(p, "--step", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stability",
                       parents=[_common_parent(), _data_parent(), _selector_parent()],
                       help="selected-set difference between original and bootstrap data")
    _add(p, "--methods", default="ivfs-linf", help="comma list of methods")
    _add(p, "--reps", type=int, default=5, help="bootstrap repetitions")
    _add(p, "--ratio", type=float, default=0.8, help="bootstrap sampling ratio")
    _add(p, "--no-replace", action="store_true",
         help="resample without replacement (ratio 1.0 then reproduces the input)")
    _add(p, "--k-grid", default=None, help="comma list of k values (ivfs methods only)")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("tradeoff",
                       parents=[_common_parent(), _data_parent(), _selector_parent(),
                                _evaluation_parent("norms,diagrams")],
                       help="metric vs the base cell over a (k, n_tilde) grid")
    _add(p, "--method", choices=METHODS, default="ivfs-linf")
    _add(p, "--k-grid", default="1000,3000,5000")
    _add(p, "--n-tilde-grid", default="0.1,0.3,0.5")
    _add(p, "--base-k", type=int, default=1000)
    _add(p, "--base-n-tilde", default="0.1")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("oracle",
                       parents=[_common_parent(), _data_parent(), _selector_parent()],
                       help="compare the sampled estimate against exhaustive enumeration")
    _add(p, "--norm", choices=sorted(_NORM_NAMES), default="linf")
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (UsageError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure, not a usage problem
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
