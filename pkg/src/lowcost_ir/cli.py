"""Batch command line: lowcost-ir <eval|bestsub|pseudo|fuse|sig|cluster|scales>.

Every option may also come from a JSON or YAML file passed with --config;
flags given on the command line win.  Keys are the long option names with
dashes or underscores; a section named after the subcommand overrides the
top-level keys.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import platform
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .association import correlation, matrix_delta, rbo_scores
from .autojudge import METHOD_NAMES, normalize, run_method
from .collection import Qrels, binarize, build_ap_matrix, parse_levels, read_qrels, read_runs
from .effectiveness import aggregate_cols, aggregate_rows
from .errors import ConfigError, DataError, DegenerateError, LowCostIRError
from .fusion import STRATEGIES, borda_raw, design_matrix, fuse, fuse_ranks, ridge_fit
from .matrix import ApMatrix, EffVector, PredictedMatrix, ScoreMatrix, read_matrix_csv, write_matrix_csv
from .scales import (CutSpec, FAMILIES, JudgementTable, TransformMethod, count_cuts, cut_array, pooled_agreement,
                     read_judgements, select_best_cut, transform_judgements, evaluate_transformation)
from .subset_search import (SearchParams, average_series, exhaustive_extremes, nsga2_search,
                            random_subsets, write_series_csv)
from .topics import (OUTCOMES, hcluster, hits_hubness, one_for_cluster, outcome_counts,
                     outcome_histogram_csv, pca)

log = logging.getLogger("lowcost_ir")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_DEGENERATE = 0, 2, 3, 4

# option defaults, applied after the config file has been merged
DEFAULTS = {
    "metric": "AP@1000", "depth": 1000, "seed": 0, "workers": None, "out": "out",
    "population": 2000, "evaluations": 10_000_000, "mutation_prob": 0.3, "crossover_prob": 0.7,
    "kind": "kendall", "reps": 1000, "archive_k": 10, "methods": "all", "strategy": "average",
    "ridge_lambda": None, "alpha": 0.05, "test": "t", "pairs": 1000,
    "subsets": 10, "cardinalities": None, "clusters": None, "pca_threshold": None,
    "select": None, "family": "D_a+t2", "target_levels": 2, "unjudged": "assume",
    "agg_source": None, "agg_target": None, "max_cuts": None, "expert_metric": "NDCG@10",
}
# defaults of options whose meaning differs between subcommands
COMMAND_DEFAULTS = {"fuse": {"target": "MAP"}}


# ---------------------------------------------------------------- config


def load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"--config: file not found: {path}")
    text = p.read_text(encoding="utf-8")
    try:
        if p.suffix.lower() in (".yaml", ".yml"):
            import yaml

            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
    except Exception as exc:  # noqa: BLE001 - any parser failure is a config error
        raise ConfigError(f"--config: cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("--config: top level must be a mapping")
    return data


def merge_config(args: argparse.Namespace, cfg: dict) -> argparse.Namespace:
    flat = {k.replace("-", "_"): v for k, v in cfg.items() if not isinstance(v, dict)}
    section = cfg.get(args.command)
    if isinstance(section, dict):
        flat.update({k.replace("-", "_"): v for k, v in section.items()})
    defaults = dict(DEFAULTS, **COMMAND_DEFAULTS.get(args.command, {}))
    for key, value in vars(args).items():
        if value is None or value is False:
            if key in flat:
                setattr(args, key, flat[key])
            elif value is None and key in defaults:
                setattr(args, key, defaults[key])
    if getattr(args, "workers", None) is None:
        args.workers = os.cpu_count() or 1
    return args


def _existing(path, flag: str) -> str:
    if path is None:
        raise ConfigError(f"{flag} is required")
    if not Path(path).is_file():
        raise ConfigError(f"{flag}: file not found: {path}")
    return str(path)


def _paths(value, flag: str) -> list[str]:
    if value is None:
        raise ConfigError(f"{flag} is required")
    items = [value] if isinstance(value, str) else list(value)
    return [_existing(p, flag) for p in items]


def _ints(value) -> list[int] | None:
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    try:
        return [int(v) for v in str(value).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {value!r}") from None


# ---------------------------------------------------------------- outputs


class Output:
    """Writes files under the output directory, each with a JSON metadata sidecar."""

    def __init__(self, args: argparse.Namespace):
        self.dir = Path(args.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.meta = {
            "command": args.command,
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "seed": args.seed,
            "params": {k: v for k, v in sorted(vars(args).items())
                       if k not in ("command", "func", "config", "verbose", "workers")},
        }

    def write(self, name: str, text: str, extra: dict | None = None) -> Path:
        path = self.dir / name
        path.write_text(text, encoding="utf-8")
        meta = dict(self.meta, file=name, **(extra or {}))
        (self.dir / f"{name}.meta.json").write_text(
            json.dumps(meta, indent=1, sort_keys=True, default=str) + "\n", encoding="utf-8")
        log.info("wrote %s", path)
        return path


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v: float) -> str:
    return "nan" if v is None or not np.isfinite(v) else "%.12g" % v


# ---------------------------------------------------------------- loading


def _load_qrels(args) -> Qrels:
    q = read_qrels(_existing(args.qrels, "--qrels"))
    levels = getattr(args, "relevant_levels", None)
    if levels:
        q = binarize(q, parse_levels(str(levels)))
    return q


def _load_matrix(args) -> ApMatrix:
    if getattr(args, "matrix", None):
        with open(_existing(args.matrix, "--matrix"), encoding="utf-8") as fh:
            return read_matrix_csv(fh, ApMatrix, source=args.matrix)
    runs = read_runs(_paths(args.runs, "--runs"), int(args.depth))
    return build_ap_matrix(runs, _load_qrels(args), args.metric)


def _read_scores(path: str):
    """A matrix CSV (header starts with 'system') or a label,value vector CSV."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        fh.seek(0)
        if first.startswith("system,"):
            return read_matrix_csv(fh, ScoreMatrix, source=path)
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DataError(f"{path}: empty score file")
    try:
        return EffVector([r[0] for r in rows[1:]], [float(r[1]) for r in rows[1:]], rows[0][1])
    except (IndexError, ValueError):
        raise DataError(f"{path}: expected label,value rows") from None


# ---------------------------------------------------------------- commands


def cmd_eval(args) -> int:
    a = _load_matrix(args)
    out = Output(args)
    out.write("matrix.csv", write_matrix_csv(a))
    sys_rows = [aggregate_rows(a, k) for k in ("MAP", "GMAP", "LOGITMAP")]
    top_rows = [aggregate_cols(a, k) for k in ("AAP", "GAAP", "LOGITAAP")]
    out.write("systems.csv", _csv_text(["system", "MAP", "GMAP", "LOGITMAP"],
                                       [[s, *(_fmt(v.values[i]) for v in sys_rows)]
                                        for i, s in enumerate(a.systems)]))
    out.write("topics.csv", _csv_text(["topic", "AAP", "GAAP", "LOGITAAP"],
                                      [[t, *(_fmt(v.values[j]) for v in top_rows)]
                                       for j, t in enumerate(a.topics)]))
    print(f"{len(a.systems)} systems x {len(a.topics)} topics")
    return EXIT_OK


def cmd_bestsub(args) -> int:
    a = _load_matrix(args)
    n = a.values.shape[1]
    out = Output(args)
    archives = {}
    for direction in ("best", "worst"):
        params = SearchParams(population_size=int(args.population),
                              max_evaluations=int(args.evaluations),
                              mutation_prob=float(args.mutation_prob),
                              crossover_prob=float(args.crossover_prob),
                              correlation_kind=args.kind, direction=direction,
                              seed=int(args.seed), archive_k=int(args.archive_k),
                              workers=int(args.workers))
        archives[direction] = nsga2_search(a, params)
        out.write(f"{direction}.json", archives[direction].to_json(a.topics) + "\n")
    avg = average_series(a, int(args.reps), args.kind, rng=int(args.seed)) if int(args.reps) > 0 else None
    out.write("series.csv", write_series_csv(archives["best"], archives["worst"], avg, n,
                                             fraction=bool(args.fraction)))
    if args.exhaustive:
        best, worst = exhaustive_extremes(a, args.kind)
        found_b = archives["best"].top_values()
        found_w = archives["worst"].top_values()
        ok_b = np.abs(found_b - best) <= 0.01
        ok_w = np.abs(found_w - worst) <= 0.01
        print(f"exhaustive agreement: best {int(ok_b.sum())}/{n}, worst {int(ok_w.sum())}/{n} "
              "cardinalities within 0.01")
    print(f"archives written for {n} topics")
    return EXIT_OK


def _accuracy(pred: PredictedMatrix, truth: ApMatrix) -> list[float]:
    topics = [t for t in pred.topics if t in set(truth.topics)]
    if not topics:
        raise DataError(f"{pred.method}: no topic shared with the ground truth")
    p = pred.select(truth.systems, topics)
    t = truth.select(truth.systems, topics)
    x, y = p.values.mean(axis=1), t.values.mean(axis=1)
    row = [correlation(k, x, y) for k in ("pearson", "kendall", "spearman")]
    row.append(correlation("tau_ap", x, y))
    row.append(rbo_scores(x, y))
    norm = normalize(p) if pred.normalization == "raw" else p
    row.append(matrix_delta(norm.as_ap_matrix(), t))
    return row


def cmd_pseudo(args) -> int:
    runs = read_runs(_paths(args.runs, "--runs"), int(args.depth))
    names = list(METHOD_NAMES) if args.methods in ("all", None) else \
        [m.strip() for m in (args.methods if isinstance(args.methods, list) else str(args.methods).split(","))]
    truth = None
    if args.truth:
        with open(_existing(args.truth, "--truth"), encoding="utf-8") as fh:
            truth = read_matrix_csv(fh, ApMatrix, source=args.truth)
    elif args.qrels:
        truth = build_ap_matrix(runs, _load_qrels(args), args.metric)
    out = Output(args)
    rows = []
    for name in names:
        pred = run_method(name, runs, seed=int(args.seed))
        out.write(f"pred_{name}.csv", write_matrix_csv(pred), {"method": name,
                                                            "normalization": pred.normalization})
        if truth is not None:
            rows.append([name, *(_fmt(v) for v in _accuracy(pred, truth))])
            print(f"{name}: tau={rows[-1][2]}")
    if truth is not None:
        out.write("accuracy.csv", _csv_text(["method", "pearson", "kendall", "spearman",
                                             "tau_ap", "rbo", "delta"], rows))
    return EXIT_OK


def cmd_fuse(args) -> int:
    paths = _paths(args.inputs, "--inputs")
    inputs = {Path(p).stem: _read_scores(p) for p in paths}
    out = Output(args)
    if args.ridge_lambda is not None:
        if not args.truth:
            raise ConfigError("--ridge-lambda needs --truth")
        with open(_existing(args.truth, "--truth"), encoding="utf-8") as fh:
            truth = read_matrix_csv(fh, ApMatrix, source=args.truth)
        preds = {}
        for name, m in inputs.items():
            if not isinstance(m, ScoreMatrix):
                raise DataError("ridge learning needs matrix inputs")
            preds[name] = PredictedMatrix(m.systems, m.topics, m.values, name)
        dm = design_matrix(preds, truth, methods=list(preds))
        model = ridge_fit(dm.x, dm.y, float(args.ridge_lambda), columns=dm.columns,
                          training=["cli"])
        out.write("model.json", model.to_json() + "\n")
        ref = next(iter(preds.values()))
        fitted = model.predict(dm.x).reshape(ref.values.shape)
        out.write("fused.csv", write_matrix_csv(PredictedMatrix(ref.systems, ref.topics, fitted,
                                                                "ridge")))
        return EXIT_OK
    if args.ranks:
        return _fuse_ranks(inputs, args, out)
    res = fuse(inputs, args.strategy, args.target)
    if res.values.ndim == 1:
        out.write("fused.csv", _csv_text(["label", res.strategy],
                                         [[lab, _fmt(v)] for lab, v in zip(res.labels, res.values)]))
        for lab, v in zip(res.labels, res.values):
            print(f"{lab}\t{v:.6g}")
    else:
        ref = next(iter(inputs.values()))
        out.write("fused.csv", write_matrix_csv(ScoreMatrix(ref.systems, ref.topics, res.as_scores())))
    return EXIT_OK


def _fuse_ranks(inputs, args, out) -> int:
    """Inputs hold rank positions (1 = best) rather than scores."""
    vecs = list(inputs.values())
    if not all(isinstance(v, EffVector) for v in vecs):
        raise DataError("--ranks expects label,rank CSVs")
    labels = vecs[0].labels
    if any(v.labels != labels for v in vecs):
        raise DataError("rank files list different labels")
    ranks = np.vstack([v.values for v in vecs])
    n_items = int(args.items) if args.items else len(labels)
    if np.any(ranks < 1) or np.any(ranks > n_items):
        raise DataError(f"ranks must lie in 1..{n_items}")
    if args.strategy == "average":
        raise ConfigError("--ranks needs a rank-based strategy")
    if args.strategy == "borda" and args.raw:
        values = borda_raw(ranks, n_items)
    else:
        values = fuse_ranks(ranks, args.strategy, n_items)
    out.write("fused.csv", _csv_text(["label", args.strategy],
                                     [[lab, _fmt(v)] for lab, v in zip(labels, values)]))
    for lab, v in zip(labels, values):
        print(f"{lab}\t{v:.6g}")
    return EXIT_OK


def cmd_sig(args) -> int:
    a = _load_matrix(args)
    m, n = a.values.shape
    if m < 2:
        raise DataError("need at least two runs")
    rng = np.random.default_rng(int(args.seed))
    i = rng.integers(m, size=int(args.pairs))
    j = (i + rng.integers(1, m, size=int(args.pairs))) % m
    pairs = list(zip(i.tolist(), j.tolist()))
    cards = _ints(args.cardinalities) or list(range(1, n + 1))
    rows = {}
    for c in cards:
        if not 1 <= c <= n:
            raise ConfigError(f"cardinality {c} outside 1..{n}")
        reps = 1 if c == n else int(args.subsets)
        counts = dict.fromkeys(OUTCOMES, 0)
        for mask in random_subsets(n, c, reps, rng):
            for k, v in outcome_counts(a, mask, pairs, float(args.alpha), args.test).items():
                counts[k] += v
        rows[c] = counts
        total = sum(counts.values())
        print(f"|S|={c}: " + " ".join(f"{k}={counts[k] / total:.3f}" for k in OUTCOMES))
    Output(args).write("outcomes.csv", outcome_histogram_csv(rows))
    return EXIT_OK


def cmd_cluster(args) -> int:
    a = _load_matrix(args)
    n = a.values.shape[1]
    points = a.values.T
    space = "raw"
    if args.pca_threshold is not None:
        points = pca(points, float(args.pca_threshold)).projected
        space = f"pca({args.pca_threshold})"
    out = Output(args)
    hub, _ = hits_hubness(a)
    out.write("hubness.csv", _csv_text(["topic", "hubness"],
                                       [[t, _fmt(h)] for t, h in zip(a.topics, hub)]))
    if args.clusters is not None:
        model = hcluster(points, int(args.clusters), feature_space=space)
        out.write("clusters.csv", _csv_text(["topic", "cluster"],
                                            [[t, int(c)] for t, c in zip(a.topics, model.assignment)]),
                  {"feature_space": space})
        print("cluster sizes: " + " ".join(map(str, model.sizes().tolist())))
        if args.select is not None:
            mask = one_for_cluster(model, int(args.select), int(args.seed))
            out.write("selection.csv", _csv_text(["topic"], [[a.topics[k]] for k in mask.indices]))
    elif args.select is not None:
        raise ConfigError("--select needs --clusters")
    print(f"hubness computed for {n} topics")
    return EXIT_OK


_NAMED_BINARY = ("left", "middle", "right")


def cmd_scales(args) -> int:
    if args.judgements:
        table = read_judgements(_existing(args.judgements, "--judgements"))
    elif args.source_qrels:
        table = JudgementTable.from_qrels(read_qrels(_existing(args.source_qrels, "--source-qrels")))
    else:
        raise ConfigError("--judgements or --source-qrels is required")
    target = read_qrels(_existing(args.target, "--target")) if args.target else None
    t = int(args.target_levels)
    method = TransformMethod(args.family, per_topic=not args.single_cut,
                             source_agg=args.agg_source, target_agg=args.agg_target,
                             unjudged=args.unjudged)
    out = Output(args)
    lo, hi = table.scale
    if target is not None and count_cuts(hi - lo + 1, t) <= 10:
        cuts = [CutSpec(table.scale, t, tuple(c)) for c in cut_array(hi - lo + 1, t, lo).tolist()]
        alphas = pooled_agreement(table, target, cuts, args.unjudged, source_agg=args.agg_source)
        names = _NAMED_BINARY if (hi - lo + 1, t) == (4, 2) else [c.label for c in cuts]
        print("alpha " + " ".join(f"{nm}={_fmt(v)}" for nm, v in zip(names, alphas)))
        out.write("pooled_alpha.csv", _csv_text(["cut", "alpha"],
                                                [[c.label, _fmt(v)] for c, v in zip(cuts, alphas)]))
    search = select_best_cut(method, table, t, target,
                             max_cuts=None if args.max_cuts is None else int(args.max_cuts),
                             workers=int(args.workers))
    rows = []
    for topic, r in search.results.items():
        low, high = r.interval
        rows.append([topic, r.cut.label, _fmt(r.alpha), "-".join(map(str, low)),
                     "-".join(map(str, high)), len(r.tied)])
    out.write("cuts.csv", _csv_text(["topic", "cut", "alpha", "tied_low", "tied_high", "tied"], rows),
              search.metadata)
    out.write("trace.csv", search.trace_csv(), search.metadata)
    order = "t+a" if args.family in ("H_t+a1", "D_t+a2") else "a+t"
    cut = {tp: r.cut for tp, r in search.results.items()} if method.per_topic \
        else search.results["*"].cut
    transformed = transform_judgements(table, cut, order)
    out.write("transformed.qrels", transformed.to_trec())
    if args.runs and args.expert:
        runs = read_runs(_paths(args.runs, "--runs"), int(args.depth))
        expert = read_qrels(_existing(args.expert, "--expert"))
        tau = evaluate_transformation(transformed, expert, runs, args.expert_metric)
        print(f"tau vs expert: {tau:.4f}")
    for topic, r in search.results.items():
        print(f"{topic}\t{r.cut.label}\t{_fmt(r.alpha)}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lowcost-ir", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        sp.add_argument("--config", help="JSON or YAML file with option values")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int, help="parallelism bound (default: all cores)")
        sp.add_argument("--out", help="output directory (default: out)")
        sp.add_argument("-v", "--verbose", action="store_true")
        if data:
            sp.add_argument("--runs", nargs="+", help="TREC run files")
            sp.add_argument("--qrels", help="TREC qrels file")
            sp.add_argument("--relevant-levels", help="grades counted as relevant, e.g. 1,2")
            sp.add_argument("--metric", help="AP@k or NDCG@k (default AP@1000)")
            sp.add_argument("--depth", type=int, help="run truncation depth (default 1000)")

    sp = sub.add_parser("eval", help="effectiveness matrix and aggregates")
    common(sp)
    sp.add_argument("--matrix", help="precomputed matrix CSV instead of runs+qrels")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("bestsub", help="best/worst/average topic subsets")
    common(sp)
    sp.add_argument("--matrix")
    sp.add_argument("--population", type=int)
    sp.add_argument("--evaluations", type=int)
    sp.add_argument("--mutation-prob", type=float)
    sp.add_argument("--crossover-prob", type=float)
    sp.add_argument("--kind", choices=("pearson", "kendall", "spearman", "tau_ap"))
    sp.add_argument("--reps", type=int, help="random subsets per cardinality (0 skips)")
    sp.add_argument("--archive-k", type=int)
    sp.add_argument("--fraction", action="store_true", help="x axis as cardinality / n")
    sp.add_argument("--exhaustive", action="store_true", help="compare with full enumeration")
    sp.set_defaults(func=cmd_bestsub)

    sp = sub.add_parser("pseudo", help="judgement-free effectiveness prediction")
    common(sp)
    sp.add_argument("--methods", help="comma-separated method names or 'all'")
    sp.add_argument("--truth", help="ground-truth matrix CSV")
    sp.set_defaults(func=cmd_pseudo)

    sp = sub.add_parser("fuse", help="fuse predictions or learn a ridge combination")
    common(sp, data=False)
    sp.add_argument("--inputs", nargs="+", help="matrix or label,value CSVs")
    sp.add_argument("--strategy", choices=STRATEGIES)
    sp.add_argument("--target", choices=("MAP", "AAP", "AP"))
    sp.add_argument("--truth")
    sp.add_argument("--ridge-lambda", type=float)
    sp.add_argument("--ranks", action="store_true", help="inputs are label,rank CSVs")
    sp.add_argument("--items", type=int, help="list length N for rank inputs (default: labels)")
    sp.add_argument("--raw", action="store_true", help="unnormalized Borda sums")
    sp.set_defaults(func=cmd_fuse)

    sp = sub.add_parser("sig", help="significance outcome taxonomy over topic subsets")
    common(sp)
    sp.add_argument("--matrix")
    sp.add_argument("--cardinalities", help="comma-separated subset sizes (default all)")
    sp.add_argument("--pairs", type=int)
    sp.add_argument("--subsets", type=int, help="random subsets per cardinality")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--test", choices=("t", "wilcoxon"))
    sp.set_defaults(func=cmd_sig)

    sp = sub.add_parser("cluster", help="topic clustering, hubness, one-for-cluster")
    common(sp)
    sp.add_argument("--matrix")
    sp.add_argument("--clusters", type=int)
    sp.add_argument("--pca-threshold", type=float)
    sp.add_argument("--select", type=int, help="pick this many topics one-for-cluster")
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("scales", help="relevance-scale cut search and transformation")
    common(sp, data=False)
    sp.add_argument("--judgements", help="judgement CSV")
    sp.add_argument("--source-qrels", help="graded qrels used as a single-judge source")
    sp.add_argument("--target", help="target-scale qrels")
    sp.add_argument("--target-levels", type=int)
    sp.add_argument("--family", choices=FAMILIES)
    sp.add_argument("--single-cut", action="store_true")
    sp.add_argument("--unjudged", choices=("assume", "drop", "error"))
    sp.add_argument("--agg-source", choices=("mean", "median", "majority"))
    sp.add_argument("--agg-target", choices=("median", "majority"))
    sp.add_argument("--max-cuts", type=int)
    sp.add_argument("--runs", nargs="+")
    sp.add_argument("--expert", help="expert qrels for ranking correlation")
    sp.add_argument("--expert-metric")
    sp.add_argument("--depth", type=int)
    sp.set_defaults(func=cmd_scales)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config) if args.config else {}
        merge_config(args, cfg)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except LowCostIRError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
