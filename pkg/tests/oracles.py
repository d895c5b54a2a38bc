"""Independent reference computations used by the tests.

Nothing here calls the Smith normal form code: ranks and determinants come
from fraction-free elimination and invariant factors from gcds of minors.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction


def bareiss(rows):
    """(rank, determinant-or-None) by fraction-free Gaussian elimination."""
    A = [list(r) for r in rows]
    m = len(A)
    n = len(A[0]) if A else 0
    prev = 1
    sign = 1
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if A[i][c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            A[r], A[piv] = A[piv], A[r]
            sign = -sign
        for i in range(r + 1, m):
            for j in range(c + 1, n):
                A[i][j] = (A[i][j] * A[r][c] - A[i][c] * A[r][j]) // prev
            A[i][c] = 0
        prev = A[r][c]
        r += 1
        if r == m:
            break
    det = None
    if m == n:
        det = sign * prev if r == n else 0
        if n == 0:
            det = 1
    return r, det


def rank(rows):
    return bareiss(rows)[0]


def det(rows):
    return bareiss(rows)[1]


def rational_kernel_dim(rows, ncols):
    """ncols - rank over Q, by exact Fraction elimination."""
    A = [[Fraction(x) for x in r] for r in rows]
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        for i in range(len(A)):
            if i != r and A[i][c] != 0:
                f = A[i][c] / A[r][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        r += 1
    return ncols - r


def determinantal_factors(rows):
    """Invariant factors from gcds of k x k minors (small matrices only)."""
    m = len(rows)
    n = len(rows[0]) if rows else 0
    divisors = [1]
    for k in range(1, min(m, n) + 1):
        g = 0
        for ri in itertools.combinations(range(m), k):
            for ci in itertools.combinations(range(n), k):
                g = math.gcd(g, det([[rows[i][j] for j in ci] for i in ri]))
        if g == 0:
            break
        divisors.append(g)
    return [divisors[k] // divisors[k - 1] for k in range(1, len(divisors))]


def homology_oracle(d_out, d_in, n):
    """(betti, torsion) of ker d_out / im d_in on Z^n.

    ker d_out is a pure sublattice, so the torsion of the quotient equals the
    torsion of coker d_in, read off from determinantal divisors.
    """
    betti = rational_kernel_dim(d_out, n) - (rank(d_in) if d_in and d_in[0] else 0)
    torsion = [t for t in determinantal_factors(d_in) if t > 1] if d_in and d_in[0] else []
    return betti, torsion


def matmul(A, B):
    return [[sum(a * b for a, b in zip(row, col)) for col in zip(*B)] for row in A]


def random_unimodular(n, rng: random.Random, ops=12):
    """(P, P^-1) built from elementary operations."""
    P = [[int(i == j) for j in range(n)] for i in range(n)]
    Q = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(ops if n > 1 else 0):
        i, j = rng.sample(range(n), 2)
        k = rng.randint(-2, 2)
        # P <- E P with E = 1 + k e_ij ;  P^-1 <- P^-1 E^-1
        P[i] = [a + k * b for a, b in zip(P[i], P[j])]
        for row in Q:
            row[j] -= k * row[i]
    if n and rng.random() < 0.5:
        P[0] = [-x for x in P[0]]
        for row in Q:
            row[0] = -row[0]
    return P, Q
