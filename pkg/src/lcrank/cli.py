"""Command-line front end.

Subcommands:

* ``fit``  - load a dataset and query file, run the solver, write the
  ranking and convergence-trace CSVs.
* ``rank`` - re-emit an existing ranking CSV with or without query rows.
* ``gen``  - write a synthetic Gaussian-mixture dataset and query file.

Hyperparameters resolve with precedence: command-line flag, then config
file (flat ``key = value`` lines), then built-in default. The
``LCRANK_THREADS`` environment variable caps internal parallelism
(0 = sequential).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields

import numpy as np

from .io import DataSet, QueryIndicator, RankedResult, load_dataset, load_ranking, write_ranking, write_trace
from .solver import Hyperparams, fit, rank

# Fields settable from the config file and their parsers; mirrors
# Hyperparams exactly.
_HP_TYPES = {
    "alpha": float,
    "beta": float,
    "gamma": float,
    "delta": float,
    "y": float,
    "C": float,
    "m": int,
    "k": int,
    "xi": float,
    "T": int,
    "seed": int,
    "code_tol": float,
    "dict_tol": float,
}
# Hyperparameters exposed as command-line flags.
_HP_FLAGS = ["alpha", "beta", "gamma", "delta", "y", "C", "m", "k", "xi", "T", "seed"]


@dataclass
class RunConfig:
    dataset_path: str
    query_path: str
    output_path: str
    trace_path: str
    hyperparams: Hyperparams
    exclude_queries: bool = False


def _read_config_file(path: str) -> dict:
    """Parse flat ``key = value`` lines; unknown keys are rejected."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}, line {lineno}: expected 'key = value', got {text!r}")
            key, raw = (part.strip() for part in text.split("=", 1))
            if key not in _HP_TYPES:
                raise ValueError(f"{path}, line {lineno}: unknown key {key!r}")
            try:
                values[key] = _HP_TYPES[key](raw)
            except ValueError:
                raise ValueError(
                    f"{path}, line {lineno}: cannot parse {key} value {raw!r}"
                ) from None
    return values


def parse_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags, optional config file and defaults into a RunConfig."""
    values = _read_config_file(args.config) if args.config else {}
    for name in _HP_FLAGS:
        flag_value = getattr(args, name)
        if flag_value is not None:
            values[name] = flag_value
    hp = Hyperparams(**values)
    hp.validate()
    for path_arg in ("data", "queries", "out", "trace"):
        if not getattr(args, path_arg, None):
            raise ValueError(f"--{path_arg} is required")
    return RunConfig(
        dataset_path=args.data,
        query_path=args.queries,
        output_path=args.out,
        trace_path=args.trace,
        hyperparams=hp,
        exclude_queries=args.exclude_queries,
    )


def cmd_fit(config: RunConfig) -> int:
    """Fit the model and write the ranking and trace files."""
    data, queries = load_dataset(config.dataset_path, config.query_path)
    state, trace = fit(data, queries, config.hyperparams)
    result = rank(state, data, queries, exclude_queries=config.exclude_queries)
    write_ranking(result, config.output_path)
    write_trace(trace.csv_rows(), config.trace_path)
    last = trace.rows[-1]
    print(f"iterations {last.iteration}")
    print(
        f"objective {last.objective:.6f} = coding {last.coding:.6f} "
        f"+ ranking {last.ranking:.6f} + query {last.query:.6f}"
    )
    print(f"ranking written to {config.output_path}")
    print(f"trace written to {config.trace_path}")
    return 0


def cmd_rank(in_path: str, out_path: str, exclude_queries: bool) -> int:
    """Re-emit an existing ranking file, optionally dropping query rows."""
    result = load_ranking(in_path)
    entries = [e for e in result.entries if not (exclude_queries and e.is_query)]
    write_ranking(RankedResult(entries, queries_excluded=exclude_queries), out_path)
    print(f"ranking written to {out_path}")
    return 0


def generate_dataset(
    n: int, d: int, clusters: int, seed: int
) -> tuple[DataSet, QueryIndicator]:
    """Synthetic Gaussian mixture for demos and tests.

    Point i belongs to cluster (i mod clusters); cluster means sit 8
    standard deviations apart along the first axis, noise is unit-variance.
    Ids encode the cluster (``c<cluster>-p<row>``). Exactly one random
    member of cluster 0 is marked as the query.
    """
    if clusters < 1 or n < clusters:
        raise ValueError(f"need n >= clusters >= 1, got n={n}, clusters={clusters}")
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % clusters
    points = rng.standard_normal((n, d))
    points[:, 0] += 8.0 * labels
    ids = [f"c{labels[i]}-p{i:04d}" for i in range(n)]
    members = np.flatnonzero(labels == 0)
    lam = np.zeros(n, dtype=np.int64)
    lam[rng.choice(members)] = 1
    return DataSet(points=points, ids=ids), QueryIndicator(values=lam)


def cmd_gen(
    n: int, d: int, clusters: int, seed: int, data_path: str, query_path: str
) -> int:
    """Write the synthetic dataset CSV and its query file."""
    data, queries = generate_dataset(n, d, clusters, seed)
    with open(data_path, "w", newline="", encoding="utf-8") as fh:
        fh.write("id," + ",".join(f"f{j + 1}" for j in range(d)) + "\n")
        for i in range(n):
            row = ",".join(repr(v) for v in data.points[i])
            fh.write(f"{data.ids[i]},{row}\n")
    with open(query_path, "w", encoding="utf-8") as fh:
        for i in queries.query_indices():
            fh.write(data.ids[i] + "\n")
    print(f"dataset written to {data_path}")
    print(f"queries written to {query_path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lcrank",
        description="Joint sparse coding and ranking for content retrieval.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit the model and write ranking + trace CSVs")
    p_fit.add_argument("--data", help="feature CSV (id,f1,...,fd)")
    p_fit.add_argument("--queries", help="query id file, one id per line")
    p_fit.add_argument("--out", help="output ranking CSV")
    p_fit.add_argument("--trace", help="output convergence trace CSV")
    p_fit.add_argument("--config", help="flat key = value config file")
    p_fit.add_argument("--exclude-queries", action="store_true")
    for name in _HP_FLAGS:
        p_fit.add_argument(f"--{name}", type=_HP_TYPES[name], default=None)

    p_rank = sub.add_parser("rank", help="re-emit a ranking CSV with/without queries")
    p_rank.add_argument("--in", dest="in_path", required=True, help="existing ranking CSV")
    p_rank.add_argument("--out", required=True, help="output ranking CSV")
    p_rank.add_argument("--exclude-queries", action="store_true")

    p_gen = sub.add_parser("gen", help="generate a synthetic Gaussian-mixture dataset")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--d", type=int, required=True)
    p_gen.add_argument("--clusters", type=int, default=2)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--data", required=True, help="output feature CSV")
    p_gen.add_argument("--queries", required=True, help="output query id file")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "fit":
            return cmd_fit(parse_config(args))
        if args.command == "rank":
            return cmd_rank(args.in_path, args.out, args.exclude_queries)
        if args.command == "gen":
            return cmd_gen(args.n, args.d, args.clusters, args.seed, args.data, args.queries)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
