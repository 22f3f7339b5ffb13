import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from litminer import (
    ContingencyTable,
    InconsistentCountsError,
    UndefinedRatioError,
    co_occurrence_ratio,
    derive_table,
    fisher_one_sided,
    keyphrase_cooccurrence_ratio,
)
from oracles import hypergeom_upper_tail_exact


def rel_err(approx, exact):
    if exact == 0:
        return abs(approx)
    return abs(approx - float(exact)) / float(exact)


class TestContingencyTable:
    def test_totals(self):
        table = ContingencyTable(3, 1, 1, 3)
        assert table.term_total == 4
        assert table.kp_total == 4
        assert table.grand_total == 8

    @pytest.mark.parametrize("cell", range(4))
    def test_rejects_negative_cells(self, cell):
        values = [1, 1, 1, 1]
        values[cell] = -1
        with pytest.raises(ValueError):
            ContingencyTable(*values)

    def test_rejects_non_integers(self):
        with pytest.raises(ValueError):
            ContingencyTable(1.0, 1, 1, 1)
        with pytest.raises(ValueError):
            ContingencyTable(True, 1, 1, 1)


class TestDeriveTable:
    def test_cells(self):
        table = derive_table(article_total=8, kp_total=4, term_total=4, both_count=3)
        assert (table.targ_kp, table.targ_no_kp, table.no_targ_kp, table.no_targ_no_kp) == (
            3,
            1,
            1,
            3,
        )

    def test_both_exceeding_term_total(self):
        with pytest.raises(InconsistentCountsError, match="targ_no_kp"):
            derive_table(article_total=50, kp_total=30, term_total=10, both_count=20)

    def test_both_exceeding_kp_total(self):
        with pytest.raises(InconsistentCountsError, match="no_targ_kp"):
            derive_table(article_total=50, kp_total=5, term_total=10, both_count=7)

    def test_union_exceeding_article_total(self):
        with pytest.raises(InconsistentCountsError, match="no_targ_no_kp"):
            derive_table(article_total=10, kp_total=8, term_total=7, both_count=2)


class TestFisherOneSided:
    def test_hand_case(self):
        p = fisher_one_sided(ContingencyTable(3, 1, 1, 3))
        assert rel_err(p, Fraction(17, 70)) <= 1e-12

    def test_six_doc_values(self):
        assert rel_err(fisher_one_sided(ContingencyTable(3, 0, 0, 3)), Fraction(1, 20)) <= 1e-12
        # observed co-occurrence at the support minimum: the tail is everything
        assert fisher_one_sided(ContingencyTable(1, 3, 2, 0)) == 1.0

    def test_zero_margins_give_one(self):
        assert fisher_one_sided(ContingencyTable(0, 0, 5, 5)) == 1.0
        assert fisher_one_sided(ContingencyTable(0, 5, 0, 5)) == 1.0
        assert fisher_one_sided(ContingencyTable(0, 0, 0, 0)) == 1.0

    def test_zero_observed_gives_one(self):
        assert fisher_one_sided(ContingencyTable(0, 10, 10, 10)) == 1.0

    def test_matches_oracle_on_fixed_grid(self):
        for kp in (0, 1, 3, 7):
            for term in (0, 1, 4, 9):
                for extra in (0, 5, 12):
                    for both in range(0, min(kp, term) + 1):
                        table = derive_table(kp + term - both + extra, kp, term, both)
                        exact = hypergeom_upper_tail_exact(
                            table.targ_kp,
                            table.targ_no_kp,
                            table.no_targ_kp,
                            table.no_targ_no_kp,
                        )
                        assert rel_err(fisher_one_sided(table), exact) <= 1e-10

    def test_large_scale_against_oracle(self):
        table = derive_table(100_000, 500, 300, 25)
        exact = hypergeom_upper_tail_exact(
            table.targ_kp, table.targ_no_kp, table.no_targ_kp, table.no_targ_no_kp
        )
        assert rel_err(fisher_one_sided(table), exact) <= 1e-10

    def test_underflow_clamps_to_smallest_positive_float(self):
        table = derive_table(27_500_000, 100_000, 20_000, 15_000)
        p = fisher_one_sided(table)
        assert p == math.ulp(0.0)
        assert p > 0.0

    def test_tail_is_monotone_in_observed_count(self):
        draws, kp, grand = 40, 60, 200
        previous = None
        for observed in range(0, min(draws, kp) + 1):
            table = ContingencyTable(
                observed, draws - observed, kp - observed, grand - draws - kp + observed
            )
            p = fisher_one_sided(table)
            if previous is not None:
                assert p <= previous + 1e-15
            previous = p

    @given(
        st.integers(min_value=0, max_value=60),
        st.integers(min_value=0, max_value=60),
        st.integers(min_value=0, max_value=60),
        st.integers(min_value=0, max_value=60),
    )
    @settings(max_examples=300, deadline=None)
    def test_matches_oracle_on_random_tables(self, a, b, c, d):
        table = ContingencyTable(a, b, c, d)
        exact = hypergeom_upper_tail_exact(a, b, c, d)
        p = fisher_one_sided(table)
        assert 0.0 < p <= 1.0
        assert rel_err(p, exact) <= 1e-10


class TestRatios:
    def test_term_denominator(self):
        assert co_occurrence_ratio(ContingencyTable(3, 1, 1, 3)) == 0.75

    def test_keyphrase_denominator(self):
        assert keyphrase_cooccurrence_ratio(ContingencyTable(3, 1, 5, 3)) == 0.375

    def test_zero_denominators_raise(self):
        with pytest.raises(UndefinedRatioError):
            co_occurrence_ratio(ContingencyTable(0, 0, 2, 2))
        with pytest.raises(UndefinedRatioError):
            keyphrase_cooccurrence_ratio(ContingencyTable(0, 2, 0, 2))
