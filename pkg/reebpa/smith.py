# -*- coding: utf-8 -*-
"""
reebpa/smith.py

Smith normal form of 2x2 integer matrices.

A 2x2 integer matrix A with det A ≠ 0 is transformed to a diagonal matrix D
by unimodular P and Q:

    D = P A Q,    |det A| = d1 * d2,    d1 | d2,    d1, d2 > 0

Everything is exact Python int arithmetic, so results stay correct for the
large entries of high matrix powers.

Usage
-----
snf = SNF2x2(int_mat)
snf.run()
snf.D, snf.P, snf.Q
"""

from __future__ import annotations

from functools import lru_cache

from reebpa.errors import SmithNonTermination


def _mul(a, b):
    return [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]


def _transpose(a):
    return [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]


def _freeze(a) -> tuple:
    return tuple(tuple(int(v) for v in row) for row in a)


class SNF2x2:
    """Smith normal form for a nonsingular 2x2 integer matrix.

    Attributes
    ----------
    D, P, Q : tuple of tuples of int
        D = P A Q with D diagonal, d1 | d2, both positive.
    """

    MAX_ATTEMPTS = 1000

    def __init__(self, A):
        self._A_orig = _freeze(A)
        self._A = [list(row) for row in self._A_orig]
        self._P = [[1, 0], [0, 1]]
        self._Q = [[1, 0], [0, 1]]
        self._D = None

    def run(self) -> "SNF2x2":
        """Calculate SNF.

        Each pass moves the entry of smallest modulus to the pivot and divides
        it out of the first row and column. A nonzero remainder is smaller
        than the pivot, so the pivot modulus strictly decreases until the
        first row and column are clear.
        """
        a = self._A_orig
        if a[0][0] * a[1][1] - a[0][1] * a[1][0] == 0:
            raise ValueError("Determinant is 0.")
        for _ in range(self.MAX_ATTEMPTS):
            self._move_pivot()
            self._reduce_first_column()
            self._reduce_first_row()
            if self._A[1][0] == 0 and self._A[0][1] == 0:
                if self._A[1][1] % self._A[0][0] == 0:
                    break
                # fold row 1 into row 0 and reduce again
                self._row_op([[1, 1], [0, 1]])
        else:
            raise SmithNonTermination(self._A_orig)
        self._finalize()
        assert _freeze(_mul(self._P, _mul(self._A_orig, self._Q))) == self._D
        return self

    # ------------------------------------------------------------------
    def _row_op(self, L):
        self._A = _mul(L, self._A)
        self._P = _mul(L, self._P)

    def _col_op(self, R):
        self._A = _mul(self._A, R)
        self._Q = _mul(self._Q, R)

    def _move_pivot(self):
        entries = [(abs(self._A[i][j]), i, j) for i in range(2) for j in range(2) if self._A[i][j] != 0]
        _, i, j = min(entries)
        if i == 1:
            self._row_op([[0, 1], [1, 0]])
        if j == 1:
            self._col_op([[0, 1], [1, 0]])

    def _reduce_first_column(self):
        a, b = self._A[0][0], self._A[1][0]
        if b == 0:
            return
        self._row_op([[1, 0], [-(b // a), 1]])

    def _reduce_first_row(self):
        a, b = self._A[0][0], self._A[0][1]
        if b == 0:
            return
        self._col_op(_transpose([[1, 0], [-(b // a), 1]]))

    def _finalize(self):
        for i in range(2):
            if self._A[i][i] < 0:
                L = [[1, 0], [0, 1]]
                L[i][i] = -1
                self._row_op(L)
        self._D = _freeze(self._A)

    # ------------------------------------------------------------------
    @property
    def A(self) -> tuple:
        """Return A of D = PAQ."""
        return self._A_orig

    @property
    def D(self) -> tuple:
        """Return D of D = PAQ."""
        return self._D

    @property
    def P(self) -> tuple:
        """Return P of D = PAQ."""
        return _freeze(self._P)

    @property
    def Q(self) -> tuple:
        """Return Q of D = PAQ."""
        return _freeze(self._Q)

    @property
    def divisors(self) -> tuple[int, int]:
        return self._D[0][0], self._D[1][1]


@lru_cache(maxsize=256)
def smith_normal_form(matrix: tuple) -> SNF2x2:
    """Cached SNF of a frozen 2x2 integer matrix."""
    return SNF2x2(matrix).run()


def unimodular_inverse(m) -> tuple:
    """Exact inverse of a 2x2 integer matrix with det ±1."""
    (a, b), (c, d) = m
    det = a * d - b * c
    if det not in (1, -1):
        raise ValueError(f"matrix is not unimodular (det = {det})")
    return ((d * det, -b * det), (-c * det, a * det))
