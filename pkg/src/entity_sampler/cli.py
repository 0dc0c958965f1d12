"""Command line front end.

Subcommands mirror the pipeline: ``ingest`` validates a CSV, ``inject``
adds duplicate copies, ``estimate`` writes a probability-map artifact with
one of the three estimators, ``sample`` rejection-samples against such an
artifact, ``bench`` runs an experiment grid from a JSON config, and
``report`` re-renders a saved run.  All artifacts are CSV or JSON.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import bench as bench_mod
from .balanced import estimate_probs_balanced, plan_sample_size
from .blocking import LshConfig, lsh_partition
from .dataset import CsvSchema, Dataset, DatasetError, ingest_csv
from .gmm import MixtureModel, em_fit, estimate_probs_gmm
from .lsh_pipeline import estimate_probs_lsh
from .rejection import ProbabilityMap, sample_clean
from .ssc import SameClusterOracle

__all__ = ["main"]


def _load_dataset(args) -> Dataset:
    schema = CsvSchema.from_json(args.schema)
    return ingest_csv(args.data, schema)


def _dataset_stats(data: Dataset) -> dict:
    stats = {
        "records": data.n,
        "distinct_contents": int(data.dedup_freqs.shape[0]),
        "has_features": data.features is not None,
        "has_tokens": data.tokens is not None,
        "has_values": data.values is not None,
    }
    if data.entity_labels is not None:
        table = data.entity_table()
        stats["entities"] = table.n_entities
        stats["eta"] = table.eta
    return stats


def _write_dataset_csv(data: Dataset, path: str) -> None:
    """Write a feature dataset back out with a generated header.

    Token datasets cannot round-trip (ingestion keeps n-gram sets, not the
    original text), so they are rejected.
    """
    if data.features is None:
        raise DatasetError("only feature datasets can be written back to CSV")
    header = ["id"] + [f"f{j}" for j in range(data.features.shape[1])]
    if data.entity_labels is not None:
        header.append("entity")
    if data.values is not None:
        header.append("value")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n):
            row = [data.ids[i]] + [f"{v:.17g}" for v in data.features[i]]
            if data.entity_labels is not None:
                row.append(data.entity_labels[i])
            if data.values is not None:
                row.append(f"{data.values[i]:.17g}")
            writer.writerow(row)
    schema = {
        "feature_cols": [f"f{j}" for j in range(data.features.shape[1])],
        "id_col": "id",
    }
    if data.entity_labels is not None:
        schema["entity_col"] = "entity"
    if data.values is not None:
        schema["value_col"] = "value"
    with open(path + ".schema.json", "w", encoding="utf-8") as fh:
        json.dump(schema, fh, indent=2)
        fh.write("\n")


def _cmd_ingest(args) -> int:
    data = _load_dataset(args)
    data.check_label_consistency()
    if args.out:
        _write_dataset_csv(data, args.out)
    json.dump(_dataset_stats(data), sys.stdout, indent=2)
    print()
    return 0


def _cmd_inject(args) -> int:
    data = _load_dataset(args)
    dirty = bench_mod.inject_duplicates(data, args.rate, args.profile, args.seed)
    _write_dataset_csv(dirty, args.out)
    json.dump(
        {"records_in": data.n, "records_out": dirty.n,
         "added": dirty.n - data.n},
        sys.stdout, indent=2,
    )
    print()
    return 0


class _InteractiveOracle:
    """Asks the terminal whether two records are duplicates."""

    def __init__(self, data: Dataset) -> None:
        self._data = data
        self.queries = 0

    def __call__(self, i: int, j: int) -> bool:
        self.queries += 1
        a, b = self._data.record(i), self._data.record(j)
        while True:
            answer = input(
                f"same entity? [{a.id}] vs [{b.id}] (y/n): "
            ).strip().lower()
            if answer in ("y", "yes"):
                return True
            if answer in ("n", "no"):
                return False


def _cmd_estimate(args) -> int:
    data = _load_dataset(args)
    if args.method == "balanced":
        if args.m is not None:
            m = args.m
        else:
            if args.eta is None:
                raise DatasetError("balanced planning needs --eta (or give --m)")
            plan = plan_sample_size(
                args.epsilon, args.delta, args.eta, args.entities, args.slack
            )
            m = plan.m
        pmap = estimate_probs_balanced(data, m, args.seed)
    elif args.method == "gmm":
        if args.model_in:
            model = MixtureModel.from_json(args.model_in)
        else:
            fit = em_fit(data, args.k, seed=args.seed, max_iter=args.iters,
                         tol=args.tol)
            model = fit.model
        if args.model_out:
            model.to_json(args.model_out)
        pmap = estimate_probs_gmm(data, model)
    else:
        cfg = LshConfig.plan(
            args.lam, args.delta,
            family="minhash" if data.tokens is not None else "hyperplane",
        )
        blocking = lsh_partition(data, cfg, args.seed)
        if args.oracle == "labels":
            if data.entity_labels is None:
                raise DatasetError("--oracle labels needs an entity column")
            oracle = SameClusterOracle(labels=tuple(data.entity_codes))
        else:
            oracle = _InteractiveOracle(data)
        est = estimate_probs_lsh(
            data, blocking, (args.k_min, args.k_max), args.pair_budget,
            oracle, args.seed, mu_radius=args.mu_radius,
        )
        pmap = est.pmap
        if args.blocking_report:
            sizes = [len(b) for b in blocking.blocks]
            hist: dict[int, int] = {}
            for s in sizes:
                hist[s] = hist.get(s, 0) + 1
            with open(args.blocking_report, "w", encoding="utf-8") as fh:
                json.dump(
                    {"q": blocking.q, "n_blocks": len(sizes),
                     "rows": cfg.rows, "bands": cfg.bands,
                     "block_size_histogram": {
                         str(k): hist[k] for k in sorted(hist)},
                     "oracle_queries": oracle.queries},
                    fh, indent=2,
                )
                fh.write("\n")
    pmap.to_csv(args.out, data)
    json.dump({"records": data.n, "floor": pmap.floor, "artifact": args.out},
              sys.stdout, indent=2)
    print()
    return 0


def _cmd_sample(args) -> int:
    data = _load_dataset(args)
    pmap = ProbabilityMap.from_csv(args.map)
    if pmap.ids is not None and pmap.ids != tuple(str(i) for i in data.ids):
        raise DatasetError("probability map was built for a different dataset")
    result = sample_clean(data, pmap, args.p, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = ["record_id"]
        if data.entity_labels is not None:
            header.append("entity")
        if data.values is not None:
            header.append("value")
        writer.writerow(header)
        for i in result.record_indices:
            row = [data.ids[i]]
            if data.entity_labels is not None:
                row.append(data.entity_labels[i])
            if data.values is not None:
                row.append(f"{data.values[i]:.17g}")
            writer.writerow(row)
    json.dump(
        {"requested": args.p, "accepted": result.size, "trials": result.trials,
         "acceptance_rate": result.size / result.trials,
         "trials_per_accept": result.trials_per_accept,
         "distinct_entities": len(result.per_entity_counts)},
        sys.stdout, indent=2,
    )
    print()
    return 0


def _cmd_bench(args) -> int:
    spec = bench_mod.ExperimentSpec.from_json(args.config)
    report = bench_mod.run_experiment(spec)
    import os

    os.makedirs(args.out, exist_ok=True)
    bench_mod.save_report(report, os.path.join(args.out, "report.json"))
    summary = bench_mod.emit_report(report, args.out, bounds=args.bounds,
                                    baseline_csv=args.baseline)
    json.dump(summary, sys.stdout, indent=2)
    print()
    if report.failed_cells:
        for cell in report.failed_cells:
            print(
                f"cell dup={cell.dup_rate} fraction={cell.fraction} failed: "
                f"{cell.message}",
                file=sys.stderr,
            )
        return 1
    return 0


def _cmd_report(args) -> int:
    report = bench_mod.load_report(args.report)
    summary = bench_mod.emit_report(report, args.out, bounds=args.bounds,
                                    baseline_csv=args.baseline)
    json.dump(summary, sys.stdout, indent=2)
    print()
    return 1 if report.failed_cells else 0


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset CSV path")
    p.add_argument("--schema", required=True, help="schema JSON path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entity-sampler",
        description="Estimate duplicate-record frequencies and sample "
        "entities nearly uniformly.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a CSV dataset")
    _add_data_args(p)
    p.add_argument("--out", help="write a normalized copy")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("inject", help="append duplicate copies")
    _add_data_args(p)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--profile", choices=("tpch", "uniform", "arbitrary"),
                   default="tpch")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_inject)

    p = sub.add_parser("estimate", help="write a probability-map artifact")
    _add_data_args(p)
    p.add_argument("--method", choices=("balanced", "lsh", "gmm"),
                   required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--m", type=int, help="balanced: sample size")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--eta", type=float, help="balanced: balance level")
    p.add_argument("--entities", type=int, help="balanced: known entity count")
    p.add_argument("--slack", type=float, default=1.0,
                   help="balanced: planner slack constant")
    p.add_argument("--lambda", dest="lam", type=float, default=0.2,
                   help="lsh: distance threshold")
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=4)
    p.add_argument("--pair-budget", type=int, default=1000)
    p.add_argument("--oracle", choices=("labels", "interactive"),
                   default="labels")
    p.add_argument("--mu-radius", type=float, default=1.0,
                   help="lsh: garbage prefilter radius")
    p.add_argument("--blocking-report", help="lsh: blocking stats JSON path")
    p.add_argument("--k", type=int, default=2, help="gmm: component count")
    p.add_argument("--iters", type=int, default=200, help="gmm: max iterations")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--model-in", help="gmm: reuse a fitted model JSON")
    p.add_argument("--model-out", help="gmm: persist the fitted model")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("sample", help="rejection-sample records")
    _add_data_args(p)
    p.add_argument("--map", required=True, help="probability-map artifact")
    p.add_argument("--p", type=int, required=True, help="sample size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("bench", help="run an experiment grid")
    p.add_argument("--config", required=True, help="experiment JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--bounds", action="store_true",
                   help="add planner bound column")
    p.add_argument("--baseline", help="merge an external baseline CSV")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("report", help="re-render a saved run")
    p.add_argument("--report", required=True, help="report.json path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--bounds", action="store_true")
    p.add_argument("--baseline", help="merge an external baseline CSV")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
