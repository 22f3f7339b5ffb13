"""Shared test doubles: count providers backed by dictionaries instead of a corpus."""

from __future__ import annotations

import threading

from litminer import DateRange


class StubCountProvider:
    """Answers count queries from fixed numbers.

    term_counts maps each term string to (term_count, both_count). The key
    phrase must match exactly; every call is logged for assertions.
    """

    def __init__(self, article_total, key_phrase, kp_count, term_counts):
        self._article_total = article_total
        self._key_phrase = key_phrase
        self._kp_count = kp_count
        self._term_counts = dict(term_counts)
        self.calls = []
        self._lock = threading.Lock()

    def _log(self, *entry):
        with self._lock:
            self.calls.append(entry)

    def article_total(self, date_range: DateRange) -> int:
        self._log("article_total",)
        return self._article_total

    def count_with(self, phrase: str, date_range: DateRange) -> int:
        self._log("count_with", phrase)
        if phrase == self._key_phrase:
            return self._kp_count
        return self._term_counts[phrase][0]

    def count_with_both(self, phrase_a: str, phrase_b: str, date_range: DateRange) -> int:
        self._log("count_with_both", phrase_a, phrase_b)
        return self._term_counts[phrase_a][1]


class FailingProvider(StubCountProvider):
    """Stub whose term queries raise for a chosen set of terms."""

    def __init__(self, *args, failing_terms=(), fail_totals=False, **kwargs):
        super().__init__(*args, **kwargs)
        self.failing_terms = set(failing_terms)
        self.fail_totals = fail_totals

    def article_total(self, date_range):
        if self.fail_totals:
            raise RuntimeError("backend down")
        return super().article_total(date_range)

    def count_with(self, phrase, date_range):
        if phrase in self.failing_terms:
            raise RuntimeError(f"no answer for {phrase}")
        return super().count_with(phrase, date_range)


def provider_for_table(table):
    """Builds a stub provider replaying one curated reference table."""
    return StubCountProvider(
        article_total=table.article_total,
        key_phrase=table.key_phrase,
        kp_count=table.kp_total,
        term_counts={
            term: (term_count, both) for term, both, term_count, _ratio in table.rows
        },
    )
