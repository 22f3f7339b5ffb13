"""Contingency tables, one-sided Fisher's exact test, co-occurrence ratios."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

# Smallest positive double; extreme tables can push the true p-value below
# what floating point can represent, and the contract is 0 < p <= 1.
_MIN_P = math.ulp(0.0)

_LOGFACT_CAP = 1 << 20
_logfact_table: list[float] = [0.0]
_logfact_lock = threading.Lock()

# Up to this many draws the first tail term is computed from exact integer
# binomials, which keeps the relative error near machine precision even for
# corpus-sized grand totals.  Beyond it the log-factorial table takes over;
# accuracy then degrades to roughly one ulp of log(grand_total!).
_EXACT_COMB_DRAW_LIMIT = 10_000

# Once past the distribution's mode, a term this far (in log space) below
# the largest one seen cannot move the sum at double precision.
_NEGLIGIBLE_LOG_GAP = 55.0


class InconsistentCountsError(ValueError):
    """Raised when four counts cannot form a non-negative 2x2 table."""


class UndefinedRatioError(ValueError):
    """Raised when a ratio's denominator count is zero."""


@dataclass(frozen=True)
class ContingencyTable:
    """Document counts for one term against the key phrase.

    ``targ_kp`` counts documents with both the term and the key phrase,
    ``targ_no_kp`` those with the term only, ``no_targ_kp`` those with the
    key phrase only, and ``no_targ_no_kp`` the remainder of the corpus.
    """

    targ_kp: int
    targ_no_kp: int
    no_targ_kp: int
    no_targ_no_kp: int

    def __post_init__(self) -> None:
        for name in ("targ_kp", "targ_no_kp", "no_targ_kp", "no_targ_no_kp"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValueError(f"cell {name} must be an integer, got {value!r}")
            if value < 0:
                raise ValueError(f"cell {name} is negative: {value}")

    @property
    def term_total(self) -> int:
        return self.targ_kp + self.targ_no_kp

    @property
    def kp_total(self) -> int:
        return self.targ_kp + self.no_targ_kp

    @property
    def grand_total(self) -> int:
        return self.targ_kp + self.targ_no_kp + self.no_targ_kp + self.no_targ_no_kp


def derive_table(
    article_total: int, kp_total: int, term_total: int, both_count: int
) -> ContingencyTable:
    """Build the 2x2 table from the four raw counts a pipeline run collects.

    Raises :class:`InconsistentCountsError` naming the first derived cell
    that would go negative, so inconsistent backend answers surface with
    enough context to debug.
    """
    for name, value in (
        ("article_total", article_total),
        ("kp_total", kp_total),
        ("term_total", term_total),
        ("both_count", both_count),
    ):
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValueError(f"{name} must be an integer, got {value!r}")
        if value < 0:
            raise ValueError(f"{name} is negative: {value}")

    targ_kp = both_count
    targ_no_kp = term_total - both_count
    if targ_no_kp < 0:
        raise InconsistentCountsError(
            f"targ_no_kp = {targ_no_kp}: both_count {both_count} exceeds term_total {term_total}"
        )
    no_targ_kp = kp_total - both_count
    if no_targ_kp < 0:
        raise InconsistentCountsError(
            f"no_targ_kp = {no_targ_kp}: both_count {both_count} exceeds kp_total {kp_total}"
        )
    no_targ_no_kp = article_total - targ_kp - targ_no_kp - no_targ_kp
    if no_targ_no_kp < 0:
        raise InconsistentCountsError(
            f"no_targ_no_kp = {no_targ_no_kp}: kp_total {kp_total} plus term_total {term_total}"
            f" minus both_count {both_count} exceeds article_total {article_total}"
        )
    return ContingencyTable(targ_kp, targ_no_kp, no_targ_kp, no_targ_no_kp)


def _log_factorial(n: int) -> float:
    """log(n!) from a lazily grown shared table; read-only once filled."""
    if n < 0:
        raise ValueError(f"factorial of negative value {n}")
    if n >= _LOGFACT_CAP:
        return math.lgamma(n + 1)
    table = _logfact_table
    if n >= len(table):
        with _logfact_lock:
            for i in range(len(_logfact_table), n + 1):
                _logfact_table.append(math.lgamma(i + 1))
    return table[n]


def fisher_one_sided(table: ContingencyTable) -> float:
    """Upper-tail probability of the 2x2 table under fixed margins.

    This is the one-sided Fisher's exact test for over-representation:
    the probability that a hypergeometric draw of ``term_total`` documents
    from ``grand_total``, of which ``kp_total`` contain the key phrase,
    contains at least ``targ_kp`` key-phrase documents.  Always in (0, 1].
    """
    grand = table.grand_total
    kp = table.kp_total
    draws = table.term_total
    observed = table.targ_kp

    lowest = max(0, draws + kp - grand)
    highest = min(draws, kp)
    if observed <= lowest:
        # The whole support is in the tail, including the degenerate
        # margins (term_total == 0 or kp_total == 0).
        return 1.0

    if draws <= _EXACT_COMB_DRAW_LIMIT:
        # Exact integers; the huge factorial cancellations happen before
        # anything is rounded to float.
        log_term = (
            math.log(math.comb(kp, observed))
            + math.log(math.comb(grand - kp, draws - observed))
            - math.log(math.comb(grand, draws))
        )
    else:
        log_term = (
            _log_factorial(kp)
            + _log_factorial(grand - kp)
            + _log_factorial(draws)
            + _log_factorial(grand - draws)
            - _log_factorial(grand)
            - _log_factorial(observed)
            - _log_factorial(kp - observed)
            - _log_factorial(draws - observed)
            - _log_factorial(grand - kp - draws + observed)
        )

    log_terms = [log_term]
    peak = log_term
    for x in range(observed, highest):
        previous = log_term
        # pmf(x + 1) / pmf(x), evaluated in log space.
        log_term += math.log((kp - x) * (draws - x)) - math.log(
            (x + 1) * (grand - kp - draws + x + 1)
        )
        if log_term < previous and log_term < peak - _NEGLIGIBLE_LOG_GAP:
            break
        log_terms.append(log_term)
        if log_term > peak:
            peak = log_term

    total = math.fsum(math.exp(t - peak) for t in log_terms)
    log_p = peak + math.log(total)
    p = math.exp(log_p)
    if p <= 0.0:
        return _MIN_P
    return min(p, 1.0)


def co_occurrence_ratio(table: ContingencyTable) -> float:
    """Fraction of the term's documents that also contain the key phrase."""
    if table.term_total == 0:
        raise UndefinedRatioError("co-occurrence ratio undefined: term_total is 0")
    return table.targ_kp / table.term_total


def keyphrase_cooccurrence_ratio(table: ContingencyTable) -> float:
    """Fraction of the key phrase's documents that also contain the term."""
    if table.kp_total == 0:
        raise UndefinedRatioError("co-occurrence ratio undefined: kp_total is 0")
    return table.targ_kp / table.kp_total
