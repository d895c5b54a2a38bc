"""Exact integer matrices, Smith normal form and homology of a matrix pair.

Everything here works on Python ints, so there is no overflow no matter how
large the intermediate pivots become.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import CompositionNonzero, DimensionMismatch


class IntMatrix:
    """Dense, immutable integer matrix stored row-major."""

    __slots__ = ("rows", "cols", "_data")

    def __init__(self, rows: int, cols: int, entries: Iterable[int] = ()):
        data = tuple(int(x) for x in entries)
        if rows < 0 or cols < 0:
            raise DimensionMismatch(f"negative shape {rows}x{cols}")
        if len(data) != rows * cols:
            raise DimensionMismatch(
                f"{rows}x{cols} matrix needs {rows * cols} entries, got {len(data)}")
        self.rows = rows
        self.cols = cols
        self._data = data

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> "IntMatrix":
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != cols:
                raise DimensionMismatch("ragged rows")
        return cls(len(rows), cols, [x for r in rows for x in r])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, [0] * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, [1 if i == j else 0 for i in range(n) for j in range(n)])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(ij)
        return self._data[i * self.cols + j]

    def row(self, i: int) -> list[int]:
        return list(self._data[i * self.cols:(i + 1) * self.cols])

    def tolist(self) -> list[list[int]]:
        return [self.row(i) for i in range(self.rows)]

    def entries(self) -> tuple[int, ...]:
        return self._data

    def transpose(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows,
                         [self[i, j] for j in range(self.cols) for i in range(self.rows)])

    T = property(transpose)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch(f"cannot multiply {self.shape} by {other.shape}")
        a = self.tolist()
        bt = other.transpose().tolist()
        return IntMatrix(self.rows, other.cols,
                         [sum(x * y for x, y in zip(ra, cb)) for ra in a for cb in bt])

    def _check_same(self, other: "IntMatrix") -> None:
        if self.shape != other.shape:
            raise DimensionMismatch(f"shape {self.shape} vs {other.shape}")

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        self._check_same(other)
        return IntMatrix(self.rows, self.cols, [x + y for x, y in zip(self._data, other._data)])

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        self._check_same(other)
        return IntMatrix(self.rows, self.cols, [x - y for x, y in zip(self._data, other._data)])

    def __neg__(self) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, [-x for x in self._data])

    def scale(self, k: int) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, [k * x for x in self._data])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntMatrix):
            return NotImplemented
        return self.shape == other.shape and self._data == other._data

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self._data))

    def is_zero(self) -> bool:
        return not any(self._data)

    def max_abs(self) -> int:
        return max((abs(x) for x in self._data), default=0)

    def nonzero(self) -> list[tuple[int, int, int]]:
        return [(i, j, self[i, j]) for i in range(self.rows)
                for j in range(self.cols) if self[i, j]]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "IntMatrix":
        return IntMatrix(len(rows), len(cols), [self[i, j] for i in rows for j in cols])

    def permute(self, row_perm: Sequence[int], col_perm: Sequence[int]) -> "IntMatrix":
        return self.submatrix(row_perm, col_perm)

    def __repr__(self) -> str:
        return f"IntMatrix({self.rows}, {self.cols}, {self.tolist()})"


def block_matrix(blocks: Sequence[Sequence[IntMatrix]]) -> IntMatrix:
    """Assemble a matrix from a grid of compatible blocks."""
    if not blocks:
        return IntMatrix.zeros(0, 0)
    heights = [row[0].rows for row in blocks]
    widths = [b.cols for b in blocks[0]]
    out = []
    for bi, row in enumerate(blocks):
        if len(row) != len(widths):
            raise DimensionMismatch("ragged block row")
        for b, w in zip(row, widths):
            if b.rows != heights[bi] or b.cols != w:
                raise DimensionMismatch("incompatible block shapes")
        for i in range(heights[bi]):
            line = []
            for b in row:
                line.extend(b.row(i))
            out.append(line)
    return IntMatrix(sum(heights), sum(widths), [x for r in out for x in r])


@dataclass(frozen=True)
class SmithDecomposition:
    """U @ M @ V == S with U, V unimodular and S in Smith normal form.

    ``ops`` is the elementary-operation log used to build U and V; each entry
    is ``(side, kind, args)`` with side in {"row", "col"} and kind in
    {"swap", "add", "neg"}.
    """

    U: IntMatrix
    S: IntMatrix
    V: IntMatrix
    rank: int
    invariant_factors: tuple[int, ...]
    ops: tuple[tuple, ...] = field(repr=False, default=())

    def det_signs(self) -> tuple[int, int]:
        """Determinants of U and V read off the operation log."""
        du = dv = 1
        for side, kind, _ in self.ops:
            if kind in ("swap", "neg"):
                if side == "row":
                    du = -du
                else:
                    dv = -dv
        return du, dv


def smith_normal_form(M: IntMatrix) -> SmithDecomposition:
    """Smith normal form with smallest-absolute-value pivoting.

    Ties between equally small pivots go to the lowest (row, col), so the
    output is a deterministic function of the input.

    >>> smith_normal_form(IntMatrix.from_rows([[2, 4], [6, 8]])).invariant_factors
    (2, 4)
    """
    m, n = M.rows, M.cols
    S = M.tolist()
    U = IntMatrix.identity(m).tolist()
    V = IntMatrix.identity(n).tolist()
    ops: list[tuple] = []

    def row_swap(i, j):
        if i == j:
            return
        S[i], S[j] = S[j], S[i]
        U[i], U[j] = U[j], U[i]
        ops.append(("row", "swap", (i, j)))

    def col_swap(i, j):
        if i == j:
            return
        for r in S:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]
        ops.append(("col", "swap", (i, j)))

    def row_add(dst, src, k):
        # row_dst += k * row_src
        if k == 0:
            return
        S[dst] = [a + k * b for a, b in zip(S[dst], S[src])]
        U[dst] = [a + k * b for a, b in zip(U[dst], U[src])]
        ops.append(("row", "add", (dst, src, k)))

    def col_add(dst, src, k):
        if k == 0:
            return
        for r in S:
            r[dst] += k * r[src]
        for r in V:
            r[dst] += k * r[src]
        ops.append(("col", "add", (dst, src, k)))

    def row_neg(i):
        S[i] = [-a for a in S[i]]
        U[i] = [-a for a in U[i]]
        ops.append(("row", "neg", (i,)))

    def smallest(t):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                v = S[i][j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
        return best

    t = 0
    while t < min(m, n):
        best = smallest(t)
        if best is None:
            break
        while True:
            _, i, j = best
            row_swap(t, i)
            col_swap(t, j)
            p = S[t][t]
            for i in range(t + 1, m):
                row_add(i, t, -(S[i][t] // p))
            for j in range(t + 1, n):
                col_add(j, t, -(S[t][j] // p))
            dirty = any(S[i][t] for i in range(t + 1, m)) or any(S[t][j] for j in range(t + 1, n))
            if not dirty:
                bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n)
                            if S[i][j] % p), None)
                if bad is None:
                    break
                row_add(t, bad[0], 1)
            # the remainders are strictly smaller than |p|, so this terminates
            best = min(((abs(S[i][t]), i, t) for i in range(t, m) if S[i][t]),
                       default=None)
            row_best = min(((abs(S[t][j]), t, j) for j in range(t, n) if S[t][j]),
                           default=None)
            best = min(x for x in (best, row_best) if x is not None)
        if S[t][t] < 0:
            row_neg(t)
        t += 1

    rank = t
    factors = tuple(S[i][i] for i in range(rank))
    flat = lambda rows, c: [x for r in rows for x in r]  # noqa: E731
    dec = SmithDecomposition(
        U=IntMatrix(m, m, flat(U, m)),
        S=IntMatrix(m, n, flat(S, n)),
        V=IntMatrix(n, n, flat(V, n)),
        rank=rank,
        invariant_factors=factors,
        ops=tuple(ops),
    )
    _check_decomposition(M, dec)
    return dec


def _check_decomposition(M: IntMatrix, dec: SmithDecomposition) -> None:
    if dec.U @ M @ dec.V != dec.S:
        raise AssertionError("Smith decomposition does not reproduce S")
    S = dec.S
    for i in range(S.rows):
        for j in range(S.cols):
            if i != j and S[i, j]:
                raise AssertionError("S is not diagonal")
    d = dec.invariant_factors
    if any(x <= 0 for x in d) or any(d[k + 1] % d[k] for k in range(len(d) - 1)):
        raise AssertionError("invariant factors violate the divisibility chain")


def rank(M: IntMatrix) -> int:
    return smith_normal_form(M).rank


@dataclass(frozen=True)
class HomologyGroup:
    """Z^betti plus the cyclic torsion summands Z/t for t in ``torsion``."""

    betti: int = 0
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "torsion", tuple(self.torsion))
        if self.betti < 0:
            raise ValueError("betti must be nonnegative")
        if any(t < 2 for t in self.torsion):
            raise ValueError("torsion coefficients must be >= 2")
        if any(b % a for a, b in zip(self.torsion, self.torsion[1:])):
            raise ValueError("torsion coefficients must form a divisibility chain")

    def is_trivial(self) -> bool:
        return self.betti == 0 and not self.torsion

    def to_dict(self) -> dict:
        return {"betti": self.betti, "torsion": list(self.torsion)}

    def __str__(self) -> str:
        parts = []
        if self.betti:
            parts.append("Z" if self.betti == 1 else f"Z^{self.betti}")
        parts.extend(f"Z/{t}" for t in self.torsion)
        return " + ".join(parts) if parts else "0"


def homology_of_pair(d_out: IntMatrix, d_in: IntMatrix) -> HomologyGroup:
    """Homology ker(d_out) / im(d_in) at the middle group of  . -d_in-> C -d_out-> .

    >>> homology_of_pair(IntMatrix.zeros(0, 1), IntMatrix.from_rows([[2]]))
    HomologyGroup(betti=0, torsion=(2,))
    """
    if d_out.cols != d_in.rows:
        raise DimensionMismatch(
            f"d_out has {d_out.cols} columns but d_in has {d_in.rows} rows")
    if not (d_out @ d_in).is_zero():
        raise CompositionNonzero("d_out @ d_in is not zero")
    out = smith_normal_form(d_out)
    inc = smith_normal_form(d_in)
    betti = d_in.rows - out.rank - inc.rank
    return HomologyGroup(betti, tuple(x for x in inc.invariant_factors if x > 1))
