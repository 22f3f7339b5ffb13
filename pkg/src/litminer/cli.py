"""Command line interface: build indexes, run count queries, run the miner."""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date, datetime, timezone
from pathlib import Path

from . import __version__
from .epmc import (
    ClientConfig,
    EpmcCountClient,
    EpmcCountProvider,
    ProtocolError,
    TransportError,
)
from .index import DateRange, IngestionError, build_index
from .mining import (
    DEFAULT_P_THRESHOLD,
    ConfigError,
    IndexCountProvider,
    MinerConfig,
    MiningError,
    RankingMode,
    run_mining,
)
from .output import (
    render_report,
    render_results_json,
    render_results_tsv,
    write_text,
)
from .stats import (
    InconsistentCountsError,
    UndefinedRatioError,
    co_occurrence_ratio,
    derive_table,
    fisher_one_sided,
)
from .storage import CorpusFormatError, IndexFormatError, load_index, read_corpus, save_index
from .tokenizer import InvalidPhraseError

DEFAULT_RANGE_START = date(1900, 1, 1)


class UsageError(Exception):
    """Bad invocation or unusable inputs; maps to exit code 2."""


def _parse_date(text: str) -> date:
    try:
        if len(text) != 10:
            raise ValueError
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a YYYY-MM-DD date") from None


def _date_range(args: argparse.Namespace) -> DateRange:
    start = args.date_from if args.date_from is not None else DEFAULT_RANGE_START
    end = args.date_to if args.date_to is not None else date.today()
    try:
        return DateRange(start, end)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _add_provider_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--provider",
        choices=("local", "remote"),
        help="count backend; inferred from --index/--endpoint when omitted",
    )
    parser.add_argument("--index", metavar="PATH", help="local index file to query")
    parser.add_argument("--endpoint", metavar="URL", help="remote search API base URL")
    parser.add_argument(
        "--client-config",
        metavar="PATH",
        help="JSON file with remote client settings (see README)",
    )
    parser.add_argument("--cache", metavar="PATH", help="remote count cache file")
    parser.add_argument(
        "--no-cache",
        action="store_true",
        help="ask the service even for cached queries (fresh answers still refresh the cache)",
    )


def _add_range_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--from",
        dest="date_from",
        type=_parse_date,
        metavar="DATE",
        help=f"start of publication date range, inclusive (default {DEFAULT_RANGE_START})",
    )
    parser.add_argument(
        "--to",
        dest="date_to",
        type=_parse_date,
        metavar="DATE",
        help="end of publication date range, inclusive (default today)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="litminer",
        description="Rank candidate terms by co-occurrence with a key phrase.",
    )
    parser.add_argument("--version", action="version", version=f"litminer {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="build a local index from a corpus file")
    p_index.add_argument("--corpus", required=True, metavar="PATH", help="JSON Lines corpus")
    p_index.add_argument("--output", required=True, metavar="PATH", help="index file to write")
    p_index.add_argument("--name", metavar="LABEL", help="corpus label (default: corpus file stem)")
    p_index.set_defaults(func=cmd_index)

    p_count = sub.add_parser("count", help="count documents matching one phrase or a pair")
    _add_provider_flags(p_count)
    _add_range_flags(p_count)
    p_count.add_argument(
        "phrases",
        nargs="+",
        metavar="PHRASE",
        help="one phrase to count, or TERM KEY_PHRASE to analyze the pair",
    )
    p_count.set_defaults(func=cmd_count)

    p_mine = sub.add_parser("mine", help="rank a term list against a key phrase")
    _add_provider_flags(p_mine)
    _add_range_flags(p_mine)
    p_mine.add_argument("--key-phrase", required=True, metavar="STR")
    p_mine.add_argument(
        "--terms", required=True, metavar="FILE", help="term list, one per line, # comments"
    )
    p_mine.add_argument(
        "--p-threshold",
        type=float,
        default=DEFAULT_P_THRESHOLD,
        metavar="FLOAT",
        help=f"keep terms with p strictly below this (default {DEFAULT_P_THRESHOLD:g})",
    )
    p_mine.add_argument(
        "--ranking-mode",
        choices=tuple(mode.value for mode in RankingMode),
        default=RankingMode.TERM_DENOMINATOR.value,
        help="denominator for the ranking ratio (default term-denominator)",
    )
    p_mine.add_argument("--output", required=True, metavar="FILE", help="results file to write")
    p_mine.add_argument(
        "--format",
        choices=("tsv", "structured"),
        default="tsv",
        help="results format: tsv (default) or structured JSON",
    )
    p_mine.add_argument(
        "--parallelism", type=int, default=1, metavar="N", help="concurrent term queries"
    )
    p_mine.set_defaults(func=cmd_mine)

    return parser


def _client_config(args: argparse.Namespace) -> ClientConfig:
    config = ClientConfig()
    if args.client_config:
        config = ClientConfig.from_file(args.client_config, base=config)
    config = config.with_env_overrides()
    updates: dict[str, object] = {}
    if args.endpoint:
        updates["endpoint"] = args.endpoint
    if args.cache:
        updates["cache_path"] = args.cache
    if args.no_cache:
        updates["bypass_cache"] = True
    if updates:
        from dataclasses import replace

        config = replace(config, **updates)
    return config


def _resolve_provider(args: argparse.Namespace):
    """Returns (provider, identity dict for the manifest)."""
    kind = args.provider
    if kind is None:
        if args.index and args.endpoint:
            raise UsageError("both --index and --endpoint given; pick one or set --provider")
        kind = "local" if args.index else "remote" if args.endpoint else None
        if kind is None:
            raise UsageError("no count backend: give --index PATH or --endpoint URL")
    if kind == "local":
        if not args.index:
            raise UsageError("--provider local requires --index PATH")
        index = load_index(args.index)
        identity = {
            "kind": "local",
            "index": str(args.index),
            "corpus_name": index.corpus_name,
            "doc_count": index.doc_count,
            "built_at": index.built_at.isoformat(),
        }
        return IndexCountProvider(index), identity
    if args.index:
        raise UsageError("--index conflicts with --provider remote")
    config = _client_config(args)
    client = EpmcCountClient(config)
    identity = {
        "kind": "remote",
        "endpoint": config.endpoint,
        "cache": config.cache_path,
        "bypass_cache": config.bypass_cache,
    }
    return EpmcCountProvider(client), identity


def cmd_index(args: argparse.Namespace) -> int:
    documents = list(read_corpus(args.corpus))
    name = args.name if args.name is not None else Path(args.corpus).stem
    index = build_index(documents, corpus_name=name)
    save_index(index, args.output)
    if index.doc_count == 0:
        print("warning: corpus is empty; wrote an empty index", file=sys.stderr)
    print(f"{index.doc_count} documents indexed")
    print(f"distinct tokens: {index.token_count}")
    span = index.date_span()
    if span is not None:
        print(f"date span: {span[0].isoformat()} .. {span[1].isoformat()}")
    print(f"index written to {args.output}")
    return 0


def cmd_count(args: argparse.Namespace) -> int:
    if len(args.phrases) > 2:
        raise UsageError("count takes one phrase, or a TERM KEY_PHRASE pair")
    date_range = _date_range(args)
    provider, _identity = _resolve_provider(args)
    article_total = provider.article_total(date_range)
    print(f"date_range: {date_range}")
    print(f"article_total: {article_total}")
    counts = [provider.count_with(p, date_range) for p in args.phrases]
    for phrase, count in zip(args.phrases, counts):
        print(f'count["{phrase}"]: {count}')
    if len(args.phrases) == 2:
        term, key_phrase = args.phrases
        both = provider.count_with_both(term, key_phrase, date_range)
        print(f"count_both: {both}")
        table = derive_table(article_total, counts[1], counts[0], both)
        print(
            f"contingency: targ_kp={table.targ_kp} targ_no_kp={table.targ_no_kp}"
            f" no_targ_kp={table.no_targ_kp} no_targ_no_kp={table.no_targ_no_kp}"
        )
        print(f"fisher_one_sided_p: {fisher_one_sided(table)!r}")
        print(f"co_occurrence_ratio: {co_occurrence_ratio(table)!r}")
    return 0


def _read_terms(path: str) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read terms file: {exc}") from exc
    terms = []
    for line in lines:
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            terms.append(stripped)
    if not terms:
        raise UsageError(f"terms file {path} contains no terms")
    return terms


def cmd_mine(args: argparse.Namespace) -> int:
    date_range = _date_range(args)
    terms = _read_terms(args.terms)
    provider, identity = _resolve_provider(args)
    config = MinerConfig(
        key_phrase=args.key_phrase,
        target_terms=tuple(terms),
        date_range=date_range,
        p_threshold=args.p_threshold,
        ranking_mode=RankingMode(args.ranking_mode),
    )
    started_at = datetime.now(timezone.utc)
    run = run_mining(provider, config, parallelism=args.parallelism)
    finished_at = datetime.now(timezone.utc)

    out_path = Path(args.output)
    if args.format == "tsv":
        write_text(out_path, render_results_tsv(run.significant))
    else:
        write_text(out_path, render_results_json(run))
    report_path = out_path.with_name(out_path.name + ".report.json")
    write_text(report_path, render_report(run))
    manifest_path = out_path.with_name(out_path.name + ".manifest.json")
    manifest = {
        "tool": "litminer",
        "version": __version__,
        "command": "mine",
        "provider": identity,
        "key_phrase": config.key_phrase,
        "terms_file": str(args.terms),
        "input_term_count": len(terms),
        "p_threshold": config.p_threshold,
        "ranking_mode": config.ranking_mode.value,
        "date_range": {
            "from": date_range.start.isoformat(),
            "to": date_range.end.isoformat(),
        },
        "parallelism": args.parallelism,
        "format": args.format,
        "output": str(out_path),
        "article_total": run.article_total,
        "kp_count": run.kp_count,
        "tallies": run.tallies,
        "started_at": started_at.isoformat(timespec="seconds"),
        "finished_at": finished_at.isoformat(timespec="seconds"),
    }
    write_text(manifest_path, json.dumps(manifest, indent=2, ensure_ascii=False) + "\n")

    if run.diagnostic:
        print(f"note: {run.diagnostic}", file=sys.stderr)
    tallies = run.tallies
    print(f"article_total: {run.article_total}")
    print(f"kp_count: {run.kp_count}")
    print(
        f"significant: {tallies['significant']}  excluded: {tallies['excluded']}"
        f"  failed: {tallies['failed']}  duplicates: {tallies['duplicates']}"
    )
    print(f"results: {out_path}")
    print(f"report: {report_path}")
    print(f"manifest: {manifest_path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (
        CorpusFormatError,
        IndexFormatError,
        IngestionError,
        InvalidPhraseError,
        InconsistentCountsError,
        UndefinedRatioError,
        MiningError,
        TransportError,
        ProtocolError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
