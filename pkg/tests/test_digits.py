import math
from itertools import product

import pytest
from hypothesis import given, strategies as st

from affwalk import digits as dg
from affwalk.digits import Digits, ModulusMismatchError


def d(q, mapping):
    return Digits.from_map(q, mapping)


class TestAdd:
    def test_self_inverse_mod_2(self):
        assert dg.add(d(2, {0: 1}), d(2, {0: 1})) == dg.zero(2)

    def test_cancellation_mod_3(self):
        assert dg.add(d(3, {0: 1, 2: 2}), d(3, {0: 2})) == d(3, {2: 2})

    def test_per_index_modular_addition(self):
        # oracle: direct modular addition per index
        a = {-1: 3}
        b = {-1: 4, 1: 1}
        expected = {}
        for i in set(a) | set(b):
            v = (a.get(i, 0) + b.get(i, 0)) % 5
            if v:
                expected[i] = v
        assert dg.add(d(5, a), d(5, b)) == d(5, expected)
        assert dg.add(d(5, a), d(5, b)) == d(5, {-1: 2, 1: 1})

    def test_modulus_mismatch_rejected(self):
        with pytest.raises(ModulusMismatchError):
            dg.add(d(2, {0: 1}), d(3, {0: 1}))

    def test_support_contained_in_union(self):
        a, b = d(3, {0: 1, 4: 2}), d(3, {4: 1, 7: 1})
        out = dg.add(a, b)
        assert set(out.support()) <= set(a.support()) | set(b.support())


class TestNegate:
    def test_characteristic_2(self):
        assert dg.negate(d(2, {3: 1})) == d(2, {3: 1})

    def test_mod_3(self):
        assert dg.negate(d(3, {0: 1})) == d(3, {0: 2})

    def test_per_index_q_minus_d(self):
        assert dg.negate(d(7, {-2: 5, 4: 3})) == d(7, {-2: 2, 4: 4})

    def test_gives_inverses(self):
        a = d(5, {-3: 2, 0: 4, 9: 1})
        assert dg.add(a, dg.negate(a)) == dg.zero(5)


class TestShift:
    def test_empty(self):
        assert dg.shift(dg.zero(3), 5) == dg.zero(3)

    def test_index_translation(self):
        assert dg.shift(d(2, {0: 1, 2: 1}), 3) == d(2, {3: 1, 5: 1})
        assert dg.shift(d(3, {-1: 2}), -2) == d(3, {-3: 2})

    def test_roundtrip(self):
        a = d(5, {-2: 1, 3: 4})
        assert dg.shift(dg.shift(a, 7), -7) == a


class TestTruncateValuation:
    def test_truncate_below(self):
        assert dg.truncate_below(d(2, {0: 1, 3: 1}), 2) == d(2, {0: 1})
        assert dg.truncate_below(d(2, {0: 1}), 0) == dg.zero(2)
        assert dg.truncate_below(d(3, {-4: 2, -1: 1, 6: 2}), 0) == d(3, {-4: 2, -1: 1})

    def test_truncation_parts_readd(self):
        a = d(3, {-4: 2, -1: 1, 6: 2})
        for k in range(-5, 8):
            assert dg.add(dg.truncate_below(a, k), dg.truncate_from(a, k)) == a

    def test_valuation(self):
        assert dg.valuation(dg.zero(2)) == math.inf
        assert dg.valuation(d(3, {-3: 1, 5: 2})) == -3

    def test_valuation_shifts(self):
        a = d(3, {-3: 1, 5: 2})
        assert dg.valuation(dg.shift(a, 11)) == dg.valuation(a) + 11


def all_q2_values():
    """Every q=2 value supported in [-2, 2]."""
    out = []
    for bits in product([0, 1], repeat=5):
        out.append(Digits.from_map(2, dict(zip(range(-2, 3), bits))))
    return out


class TestGroupAxiomsExhaustive:
    def test_abelian_group_q2(self):
        vals = all_q2_values()
        z = dg.zero(2)
        for a in vals:
            assert dg.add(a, z) == a
            assert dg.add(a, dg.negate(a)) == z
            for b in vals:
                assert dg.add(a, b) == dg.add(b, a)
        for a in vals[:8]:
            for b in vals[:8]:
                for c in vals[:8]:
                    assert dg.add(dg.add(a, b), c) == dg.add(a, dg.add(b, c))


digits_st = st.builds(
    lambda q, items: Digits.from_map(q, items),
    st.sampled_from([2, 3, 5]),
    st.dictionaries(st.integers(-20, 20), st.integers(0, 6), max_size=6),
).filter(lambda x: True)


def same_q_pair():
    return st.sampled_from([2, 3, 5]).flatmap(
        lambda q: st.tuples(
            st.builds(
                lambda items: Digits.from_map(q, items),
                st.dictionaries(st.integers(-20, 20), st.integers(0, q - 1), max_size=6),
            ),
            st.builds(
                lambda items: Digits.from_map(q, items),
                st.dictionaries(st.integers(-20, 20), st.integers(0, q - 1), max_size=6),
            ),
        )
    )


@given(same_q_pair(), st.integers(-10, 10))
def test_shift_is_automorphism(pair, n):
    a, b = pair
    assert dg.shift(dg.add(a, b), n) == dg.add(dg.shift(a, n), dg.shift(b, n))


@given(same_q_pair())
def test_add_commutes(pair):
    a, b = pair
    assert dg.add(a, b) == dg.add(b, a)


@given(digits_st)
def test_parse_format_roundtrip(a):
    assert dg.parse_digits(dg.format_digits(a)) == a


def test_parse_examples():
    assert dg.parse_digits("2:{}") == dg.zero(2)
    assert dg.parse_digits("2:{0:1,3:1}") == d(2, {0: 1, 3: 1})
    assert dg.format_digits(d(2, {3: 1, 0: 1})) == "2:{0:1,3:1}"


def test_digit_range_enforced():
    with pytest.raises(ValueError):
        Digits(3, ((0, 3),))
    with pytest.raises(ValueError):
        Digits(3, ((0, 0),))
    with pytest.raises(ValueError):
        Digits(1, ())
