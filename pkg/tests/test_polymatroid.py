from fractions import Fraction as F
from itertools import permutations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clinching.errors import MalformedFunctionError, PreconditionError, UnsupportedSizeError
from clinching.polymatroid import (
    SubmodularFunction, capped_argmin, capped_eval, capped_table, full_mask, greedy_max,
    is_feasible, is_tight, members, subset_sum, tight_sets, validate, violated_set,
)

from conftest import functions, small_rationals, vectors

EX1 = SubmodularFunction.explicit_table(2, [0, 2, 2, 3])


def brute_capped(f, psi, S):
    best = None
    for T in range(1 << f.n):
        if T & ~S:
            continue
        val = f(T) + subset_sum(psi, S & ~T)
        if best is None or val < best:
            best = val
    return best


class TestEval:
    def test_sponsored_search_singleton(self):
        assert SubmodularFunction.sponsored_search([2, 1])(0b01) == 2

    def test_sponsored_search_pair(self):
        assert SubmodularFunction.sponsored_search([2, 1])(0b11) == 3

    def test_empty_set_is_zero(self):
        assert SubmodularFunction.multi_unit(3, 5)(0) == 0
        assert EX1(0) == 0

    def test_multi_unit_constant(self):
        assert SubmodularFunction.multi_unit(2, 1)(0b11) == 1

    def test_accepts_iterables_of_members(self):
        assert EX1([0, 1]) == 3

    def test_missing_table_entry(self):
        with pytest.raises(MalformedFunctionError):
            SubmodularFunction.explicit_table(2, {0: 0, 1: 2, 2: 2})

    def test_ctrs_must_be_nonincreasing(self):
        with pytest.raises(MalformedFunctionError):
            SubmodularFunction.sponsored_search([1, 2])

    def test_floats_refused(self):
        with pytest.raises((TypeError, ValueError)):
            SubmodularFunction.multi_unit(2, 0.5)


class TestValidate:
    def test_example_table_ok(self):
        assert validate(EX1) == []

    def test_supermodular_pair_flagged(self):
        bad = validate(SubmodularFunction.explicit_table(2, [0, 1, 1, 3]))
        assert [(v.kind, v.S, v.T) for v in bad] == [("submodular", 0b01, 0b10)]

    def test_nonzero_empty_set(self):
        bad = validate(SubmodularFunction.explicit_table(1, [1, 2]))
        assert bad[0].kind == "normalized"

    def test_nonmonotone(self):
        bad = validate(SubmodularFunction.explicit_table(2, [0, 2, 2, 1]))
        assert any(v.kind == "monotone" for v in bad)

    def test_size_guard(self):
        f = SubmodularFunction.explicit_table(17, [0] * (1 << 17))
        with pytest.raises(UnsupportedSizeError):
            validate(f)

    @given(functions())
    def test_local_check_matches_pairwise(self, f):
        # the generators only produce valid functions; so must the full definition
        t = f.table
        N = 1 << f.n
        assert all(t[S & T] + t[S | T] <= t[S] + t[T] for S in range(N) for T in range(N))
        assert validate(f) == []


class TestCappedEval:
    def test_examples(self):
        mu = SubmodularFunction.multi_unit(2, 1)
        assert capped_eval(mu, (F(1, 2), F(7, 10)), 0b11) == 1
        assert capped_eval(mu, (F(1, 5), F(3, 10)), 0b11) == F(1, 2)
        assert capped_eval(EX1, (0, 0), 0b11) == 0

    def test_lowest_mask_wins_ties(self):
        mu = SubmodularFunction.multi_unit(2, 1)
        # T = {} gives 1/2 + 1/2 = 1; T = {0} gives 1 + 1/2; T = {0,1} gives 1
        assert capped_argmin(mu, (F(1, 2), F(1, 2)), 0b11) == (1, 0)

    def test_empty_set(self):
        assert capped_eval(EX1, (5, 5), 0) == 0

    @given(functions(), st.data())
    def test_closed_forms_and_table_match_brute_force(self, f, data):
        psi = data.draw(vectors(f.n))
        table = capped_table(f, psi)
        for S in range(1 << f.n):
            want = brute_capped(f, psi, S)
            assert capped_eval(f, psi, S) == want
            assert capped_eval(f, psi, S, method="brute") == want
            assert table[S] == want

    @given(functions(), st.data())
    def test_monotone(self, f, data):
        psi = data.draw(vectors(f.n))
        t = capped_table(f, psi)
        for S in range(1 << f.n):
            for i in range(f.n):
                assert t[S] <= t[S | 1 << i]

    @given(functions(), st.data())
    def test_demand_cap_safety(self, f, data):
        psi = data.draw(vectors(f.n, st.integers(0, 40).map(F)))
        cap = f.total + data.draw(st.integers(0, 3))
        clipped = tuple(min(p, cap) for p in psi)
        for S in range(1 << f.n):
            assert capped_eval(f, psi, S) == capped_eval(f, clipped, S)

    @given(functions(), st.data())
    def test_auxiliary_identity(self, f, data):
        psi = data.draw(vectors(f.n))
        i = data.draw(st.integers(0, f.n - 1))
        if psi[i] == 0:
            return
        lower = data.draw(st.integers(0, 100)) * psi[i] / 101
        psi2 = list(psi)
        psi2[i] = lower
        for S in range(1 << f.n):
            if S >> i & 1:
                assert brute_capped(f, psi2, S) == min(
                    brute_capped(f, psi, S), brute_capped(f, psi, S & ~(1 << i)) + lower)


class TestGreedy:
    def test_examples(self):
        mu = SubmodularFunction.multi_unit(2, 1)
        assert greedy_max(mu, (1, 1), (0, 1)) == (1, 0)
        assert greedy_max(mu, (0, 0)) == (0, 0)
        ss = SubmodularFunction.sponsored_search([2, 1])
        assert greedy_max(ss, (2, 2), (1, 0)) == (1, 2)

    @given(functions(), st.data())
    def test_total_is_capped_value_in_every_order(self, f, data):
        psi = data.draw(vectors(f.n))
        want = capped_eval(f, psi, full_mask(f.n))
        for order in permutations(range(f.n)):
            y = greedy_max(f, psi, order)
            assert sum(y) == want
            assert is_feasible(f, y)
            assert all(0 <= a <= b for a, b in zip(y, psi))


class TestTightness:
    def test_examples(self):
        assert is_tight(EX1, (1, 2), 0b10)
        assert not is_tight(EX1, (1, 2), 0b01)
        assert is_tight(EX1, (0, 0), 0)

    def test_infeasible_point(self):
        with pytest.raises(PreconditionError) as exc:
            is_tight(EX1, (3, 0), 0b01)
        assert "{0}" in str(exc.value)

    def test_violated_set_reports_smallest_mask(self):
        assert violated_set(EX1, (2, 2)) == 0b11
        assert violated_set(EX1, (1, 1)) is None

    @given(functions(n_max=5), st.data())
    def test_uncrossing(self, f, data):
        psi = data.draw(vectors(f.n))
        order = data.draw(st.permutations(range(f.n)))
        x = greedy_max(f, psi, order)
        tight = set(tight_sets(f, x))
        assert 0 in tight
        for S in tight:
            for T in tight:
                assert S & T in tight and S | T in tight


def test_members_roundtrip():
    assert members(0b1011) == [0, 1, 3]


@given(small_rationals)
def test_multi_unit_closed_form(q):
    mu = SubmodularFunction.multi_unit(3, 2)
    psi = (q, q, F(1))
    assert capped_eval(mu, psi, 0b111) == min(F(2), 2 * q + 1)
