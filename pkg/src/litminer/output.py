"""Result serialization: ranked TSV, structured JSON, sidecar report, manifest.

Both result formats are deterministic byte-for-byte for identical inputs,
and both round-trip: parsing a written file reproduces the exact
TermResult values, because floats are rendered with repr (shortest
round-trip form).  The human-facing ``ratio`` TSV column is fixed to three
decimals; ``ratio_full`` carries the full-precision value.
"""

from __future__ import annotations

import json
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any, Sequence

from .mining import MiningRun, TermResult

RESULTS_FORMAT_NAME = "litminer-results"
RESULTS_FORMAT_VERSION = 1

TSV_COLUMNS = (
    "rank",
    "term",
    "term_plus_kp_count",
    "term_count",
    "kp_count",
    "article_total",
    "ratio",
    "ratio_full",
    "p_value",
)


class ResultParseError(ValueError):
    """A results file that cannot be read back."""


def display_ratio(r: TermResult) -> str:
    """Three-decimal display form of the ranking ratio.

    Rounded half-up from the exact count quotient, not from the float,
    so quotients landing exactly on a half-thousandth (like 3/80) round
    up instead of to-even.  Falls back to float formatting if the ratio
    matches neither denominator (it always matches one in practice).
    """
    for denominator in (r.term_count, r.kp_count):
        if denominator > 0 and r.ratio == r.both_count / denominator:
            exact = Decimal(r.both_count) / Decimal(denominator)
            return str(exact.quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))
    return f"{r.ratio:.3f}"


def render_results_tsv(results: Sequence[TermResult]) -> str:
    lines = ["\t".join(TSV_COLUMNS)]
    for rank, r in enumerate(results, start=1):
        lines.append(
            "\t".join(
                (
                    str(rank),
                    r.term,
                    str(r.both_count),
                    str(r.term_count),
                    str(r.kp_count),
                    str(r.article_total),
                    display_ratio(r),
                    repr(r.ratio),
                    repr(r.p_value),
                )
            )
        )
    return "\n".join(lines) + "\n"


def parse_results_tsv(text: str) -> list[TermResult]:
    lines = text.splitlines()
    if not lines or tuple(lines[0].split("\t")) != TSV_COLUMNS:
        raise ResultParseError("missing or unexpected TSV header")
    results = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != len(TSV_COLUMNS):
            raise ResultParseError(f"line {line_no}: expected {len(TSV_COLUMNS)} fields")
        try:
            results.append(
                TermResult(
                    term=fields[1],
                    both_count=int(fields[2]),
                    term_count=int(fields[3]),
                    kp_count=int(fields[4]),
                    article_total=int(fields[5]),
                    ratio=float(fields[7]),
                    p_value=float(fields[8]),
                    significant=True,
                )
            )
        except ValueError as exc:
            raise ResultParseError(f"line {line_no}: {exc}") from exc
    return results


def _result_record(rank: int, r: TermResult) -> dict[str, Any]:
    return {
        "rank": rank,
        "term": r.term,
        "term_plus_kp_count": r.both_count,
        "term_count": r.term_count,
        "kp_count": r.kp_count,
        "article_total": r.article_total,
        "ratio": r.ratio,
        "p_value": r.p_value,
        "significant": r.significant,
    }


def render_results_json(run: MiningRun) -> str:
    document = {
        "format": RESULTS_FORMAT_NAME,
        "version": RESULTS_FORMAT_VERSION,
        "key_phrase": run.config.key_phrase,
        "date_range": {
            "from": run.config.date_range.start.isoformat(),
            "to": run.config.date_range.end.isoformat(),
        },
        "p_threshold": run.config.p_threshold,
        "ranking_mode": run.config.ranking_mode.value,
        "article_total": run.article_total,
        "kp_count": run.kp_count,
        "results": [
            _result_record(rank, r) for rank, r in enumerate(run.significant, start=1)
        ],
    }
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def parse_results_json(text: str) -> list[TermResult]:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ResultParseError(f"invalid JSON: {exc.msg}") from exc
    if not isinstance(document, dict) or document.get("format") != RESULTS_FORMAT_NAME:
        raise ResultParseError("not a litminer results document")
    if document.get("version") != RESULTS_FORMAT_VERSION:
        raise ResultParseError(f"unsupported results version {document.get('version')!r}")
    results = []
    try:
        for record in document["results"]:
            results.append(
                TermResult(
                    term=record["term"],
                    both_count=record["term_plus_kp_count"],
                    term_count=record["term_count"],
                    kp_count=record["kp_count"],
                    article_total=record["article_total"],
                    ratio=record["ratio"],
                    p_value=record["p_value"],
                    significant=record["significant"],
                )
            )
    except (KeyError, TypeError) as exc:
        raise ResultParseError(f"malformed result record: {exc}") from exc
    return results


def render_report(run: MiningRun) -> str:
    """Sidecar accounting for everything that is not in the ranked output."""
    document = {
        "excluded": [
            {
                "term": e.term,
                "reason": e.reason.value,
                "detail": e.detail,
                "result": None if e.result is None else _result_record(0, e.result) | {"rank": None},
            }
            for e in run.excluded
        ],
        "failed": [{"term": f.term, "error": f.error} for f in run.failed],
        "duplicates": [
            {"dropped": dropped, "kept": kept} for dropped, kept in run.duplicates
        ],
        "diagnostic": run.diagnostic,
    }
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def write_text(path: str | Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
