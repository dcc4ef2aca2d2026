"""Command-line interface.

``summ run`` evaluates systems and aggregators over a corpus and writes a
report; ``summ summarize`` prints one cluster's aggregate summary.  Flags
can also come from a JSON config file (``--config``); explicit flags win.

Exit codes: 0 success, 1 usage error, 2 data error, 3 no successful
clusters.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .consensus import WcsConfig
from .corpus import CorpusError
from .harness import (
    EMIT_FORMATS,
    NoSuccessfulClustersError,
    RunConfig,
    emit_report,
    run_evaluation,
    summarize_cluster,
)
from .summarizers import LengthBudget, SummarizerConfig


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1, not argparse's default 2
        raise UsageError(message)


def _add_common(parser: _Parser) -> None:
    parser.add_argument("--corpus", help="corpus path (file or directory)")
    parser.add_argument("--format", choices=["duc-dir", "jsonl"], dest="format")
    parser.add_argument("--budget", help="summary budget, e.g. words:100 or bytes:665")
    parser.add_argument("--systems", help="comma-separated candidate systems")
    parser.add_argument("--lambda", dest="lambda_", type=float,
                        help="uniformity penalty of the consensus objective")
    parser.add_argument("--redundancy-cap", dest="redundancy_cap", type=float,
                        help="skip sentences this cosine-similar to selected ones")
    parser.add_argument("--config", help="JSON file mirroring these flags")


def _build_parser() -> _Parser:
    parser = _Parser(prog="summ", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="evaluate a corpus and write a report")
    _add_common(run)
    run.add_argument("--aggregators", help="comma-separated aggregators")
    run.add_argument("--rouge", help="comma-separated recall orders, e.g. 1,2,4")
    run.add_argument("--out", help="report output path")
    run.add_argument("--emit", choices=list(EMIT_FORMATS))
    run.add_argument("--jobs", type=int, help="clusters evaluated in parallel")

    summarize = commands.add_parser("summarize", help="print one cluster's summary")
    _add_common(summarize)
    summarize.add_argument("--cluster", help="cluster id to summarize")
    summarize.add_argument("--aggregator", help="aggregation method (default cwcs)")
    return parser


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CorpusError(f"config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path}: expected a JSON object")
    return data


def _effective(args: argparse.Namespace, file_config: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    # the file uses flag spelling: "lambda", not the python-safe dest
    file_key = {"lambda_": "lambda", "format": "format"}.get(key, key)
    return file_config.get(file_key, default)


def _split_list(value) -> tuple[str, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(str(v) for v in value)
    return tuple(part.strip() for part in str(value).split(",") if part.strip())


def _run_config(args: argparse.Namespace, file_config: dict) -> RunConfig:
    corpus = _effective(args, file_config, "corpus")
    if corpus is None:
        raise UsageError("--corpus is required")
    budget = LengthBudget.parse(
        str(_effective(args, file_config, "budget", "words:100"))
    )
    systems = _split_list(
        _effective(args, file_config, "systems",
                   "lexrank,textrank,centroid,freqsum,topicsum,greedykl")
    )
    aggregators = _split_list(
        _effective(args, file_config, "aggregators", "borda,wcs,cwcs,oracle")
    )
    rouge_raw = _split_list(_effective(args, file_config, "rouge", "1,2,4"))
    try:
        rouge_orders = tuple(int(n) for n in rouge_raw)
    except ValueError:
        raise UsageError(f"--rouge must be integers, got {rouge_raw}") from None
    redundancy_cap = _effective(args, file_config, "redundancy_cap")
    return RunConfig(
        corpus=corpus,
        corpus_format=_effective(args, file_config, "format", "jsonl"),
        summarizer=SummarizerConfig(budget=budget),
        wcs=WcsConfig(lambda_=float(_effective(args, file_config, "lambda_", 0.5))),
        systems=systems,
        aggregators=aggregators,
        rouge_orders=rouge_orders,
        redundancy_cap=None if redundancy_cap is None else float(redundancy_cap),
        jobs=int(_effective(args, file_config, "jobs", 1)),
        out=_effective(args, file_config, "out"),
        emit=str(_effective(args, file_config, "emit", "csv")),
    )


def _command_run(args: argparse.Namespace) -> int:
    file_config = _load_config_file(args.config)
    config = _run_config(args, file_config)
    if config.out is None:
        raise UsageError("--out is required")
    report = run_evaluation(config)
    emit_report(report, config.emit, config.out)
    print(f"wrote {config.out}", file=sys.stderr)
    return 0


def _command_summarize(args: argparse.Namespace) -> int:
    file_config = _load_config_file(args.config)
    config = _run_config(args, file_config)
    cluster_id = _effective(args, file_config, "cluster")
    if cluster_id is None:
        raise UsageError("--cluster is required")
    aggregator = _effective(args, file_config, "aggregator", "cwcs")
    for sentence in summarize_cluster(config, str(cluster_id), str(aggregator)):
        print(sentence)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _command_run(args)
        return _command_summarize(args)
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (CorpusError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NoSuccessfulClustersError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
