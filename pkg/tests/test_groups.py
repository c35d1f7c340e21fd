from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gmtepi.groups import (
    GroupSpec,
    NormedCoefficient,
    cantor,
    group_add,
    group_gap,
    group_neg,
    group_norm,
    group_norm_fraction,
    integers,
    unit_discrete,
    zero,
)


def test_integer_inverse():
    a = NormedCoefficient(integers(), 2)
    b = NormedCoefficient(integers(), -2)
    assert group_add(a, b).is_zero


def test_cantor_mod2_addition():
    spec = cantor(3)
    a = NormedCoefficient(spec, (1, 0, 0))
    b = NormedCoefficient(spec, (1, 1, 0))
    assert group_add(a, b).value == (0, 1, 0)


def test_unit_discrete_norm_constant():
    u = NormedCoefficient(unit_discrete(), 1)
    two = group_add(u, u)
    assert two.value == 2
    assert group_norm(two) == 1.0


def test_cantor_norms():
    spec = cantor(3)
    assert group_norm_fraction(NormedCoefficient(spec, (1, 0, 0))) == Fraction(1, 3)
    assert group_norm_fraction(NormedCoefficient(spec, (1, 1, 1))) == Fraction(13, 27)


def test_integer_norm_absolute_value():
    assert group_norm(NormedCoefficient(integers(), -5)) == 5.0


def test_group_gap_values():
    assert group_gap(integers()) == 1.0
    assert group_gap(unit_discrete()) == 1.0
    assert group_gap(cantor(4)) == float(Fraction(1, 81))


def test_cantor_gap_matches_enumeration():
    # brute force over the 2^4 - 1 nonzero elements
    spec = cantor(4)
    norms = []
    for code in range(1, 16):
        bits = tuple((code >> i) & 1 for i in range(4))
        norms.append(group_norm_fraction(NormedCoefficient(spec, bits)))
    assert float(min(norms)) == group_gap(spec)


def test_gap_monotone_in_depth():
    gaps = [group_gap(cantor(d)) for d in range(1, 8)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-3


def _random_element(rng, spec):
    if spec.tag == "cantor":
        return NormedCoefficient(spec, tuple(rng.integers(0, 2, spec.depth)))
    return NormedCoefficient(spec, int(rng.integers(-50, 51)))


@pytest.mark.parametrize("spec", [integers(), unit_discrete(), cantor(5)])
def test_norm_axioms_random_pairs(spec):
    rng = np.random.default_rng(11)
    for _ in range(1000):
        a = _random_element(rng, spec)
        b = _random_element(rng, spec)
        na, nb = group_norm_fraction(a), group_norm_fraction(b)
        assert group_norm_fraction(group_neg(a)) == na
        assert group_norm_fraction(group_add(a, b)) <= na + nb
        assert (na == 0) == a.is_zero


@given(st.lists(st.integers(0, 1), min_size=4, max_size=4), st.lists(st.integers(0, 1), min_size=4, max_size=4))
def test_cantor_group_axioms(bits_a, bits_b):
    spec = cantor(4)
    a = NormedCoefficient(spec, tuple(bits_a))
    b = NormedCoefficient(spec, tuple(bits_b))
    assert group_add(a, b) == group_add(b, a)
    assert group_add(a, a).is_zero
    assert group_add(a, zero(spec)) == a


def test_mismatched_groups_rejected():
    with pytest.raises(ValueError):
        group_add(NormedCoefficient(integers(), 1), NormedCoefficient(unit_discrete(), 1))


def test_spec_validation():
    with pytest.raises(ValueError):
        GroupSpec("cantor")
    with pytest.raises(ValueError):
        GroupSpec("integers", depth=3)
    with pytest.raises(ValueError):
        GroupSpec("nope")
