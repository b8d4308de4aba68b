# -*- coding: utf-8 -*-
"""Smith normal form of 2x2 integer matrices."""

import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from reebpa.errors import SmithNonTermination
from reebpa.smith import SNF2x2, smith_normal_form, unimodular_inverse

from conftest import CAT_MAP, NEGATIVE_MAP

entries = st.integers(-60, 60)


def _mul(a, b):
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(2)) for j in range(2)) for i in range(2))


def _det(m):
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def _check(A):
    snf = SNF2x2(A).run()
    d1, d2 = snf.divisors
    assert _mul(snf.P, _mul(A, snf.Q)) == snf.D
    assert snf.D[0][1] == snf.D[1][0] == 0
    assert d1 > 0 and d2 > 0 and d2 % d1 == 0
    assert d1 * d2 == abs(_det(A))
    assert d1 == math.gcd(*A[0], *A[1])
    assert abs(_det(snf.P)) == 1 and abs(_det(snf.Q)) == 1
    return d1, d2


def _level(A, k):
    """A^k - I."""
    M = ((1, 0), (0, 1))
    for _ in range(k):
        M = _mul(M, A)
    return ((M[0][0] - 1, M[0][1]), (M[1][0], M[1][1] - 1))


@given(entries, entries, entries, entries)
def test_snf_invariants(a, b, c, d):
    A = ((a, b), (c, d))
    assume(_det(A) != 0)
    _check(A)


@given(entries, st.integers(-6, 6), entries, entries)
def test_snf_when_one_entry_divides_another(a, m, c, d):
    # the first row is (a, m·a): a divides the entry beside it
    A = ((a, m * a), (c, d))
    assume(_det(A) != 0)
    _check(A)


@pytest.mark.parametrize("k", range(1, 21))
@pytest.mark.parametrize("base", [CAT_MAP, NEGATIVE_MAP], ids=["cat", "negative"])
def test_snf_of_census_levels(base, k):
    _check(_level(base, k))


def test_cat_cube_minus_identity():
    assert _level(CAT_MAP, 3) == ((12, 8), (8, 4))
    assert smith_normal_form(((12, 8), (8, 4))).divisors == (4, 4)


def test_exhausted_passes_raise_typed_error(monkeypatch):
    monkeypatch.setattr(SNF2x2, "MAX_ATTEMPTS", 0)
    with pytest.raises(SmithNonTermination) as info:
        SNF2x2(((12, 8), (8, 4))).run()
    assert info.value.matrix == ((12, 8), (8, 4))


@pytest.mark.parametrize(
    "matrix, divisors",
    [
        (((1, 1), (1, 0)), (1, 1)),      # A - I of the cat map
        (((2, 0), (0, 3)), (1, 6)),
        (((4, 6), (2, 8)), (2, 10)),
        (((6, 3), (3, 1)), (1, 3)),
    ],
)
def test_known_divisors(matrix, divisors):
    d1, d2 = smith_normal_form(matrix).divisors
    assert d1 * d2 == abs(_det(matrix))
    assert (d1, d2) == divisors


def test_cat_square_minus_identity():
    # A^2 = ((5, 3), (3, 2)); A^2 - I has |det| = 5
    assert smith_normal_form(((4, 3), (3, 1))).divisors == (1, 5)


def test_singular_matrix_rejected():
    with pytest.raises(ValueError):
        SNF2x2(((1, 2), (2, 4))).run()


def test_unimodular_inverse():
    m = ((2, 1), (1, 1))
    assert _mul(m, unimodular_inverse(m)) == ((1, 0), (0, 1))
    with pytest.raises(ValueError):
        unimodular_inverse(((2, 0), (0, 1)))
