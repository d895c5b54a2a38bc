"""Borel equivariant homology for a reflection acting on a chain complex.

The free resolution of Z over Z[G], G = Z/2 = {1, g}, is

    ... -> Z[G] --(1 + g)--> Z[G] --(1 - g)--> Z[G] --aug--> Z

so column i >= 1 of the double complex maps to column i - 1 by 1 + (-1)^i A,
where A is the action on the complex.  Columns are truncated at i_max.
"""

from __future__ import annotations

from dataclasses import dataclass

from .chain import GradedComplex, Involution, verify_involution
from .errors import NotAnInvolution
from .linalg import HomologyGroup, IntMatrix, homology_of_pair, smith_normal_form


def resolution_differential(i: int) -> IntMatrix:
    """d_i on Z[G] in the basis {1, g}; columns are images of 1 and g."""
    s = (-1) ** i
    return IntMatrix.from_rows([[1, s], [s, 1]])


@dataclass
class ResolutionReport:
    checks: dict[str, bool]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def _kernel_equals_image(kernel_of: IntMatrix, image_of: IntMatrix) -> bool:
    # ker = im over Z iff the composite vanishes and the homology of the pair is 0
    if not (kernel_of @ image_of).is_zero():
        return False
    return homology_of_pair(kernel_of, image_of).is_trivial()


def resolution_check() -> ResolutionReport:
    """Exactness of the resolution at the augmentation and at columns 1, 2."""
    d1, d2, d3 = (resolution_differential(i) for i in (1, 2, 3))
    aug = IntMatrix.from_rows([[1, 1]])
    checks = {
        "augmentation surjective": smith_normal_form(aug).invariant_factors == (1,),
        "ker(augmentation) = im(1 - g)": _kernel_equals_image(aug, d1),
        "ker(1 - g) = im(1 + g)": _kernel_equals_image(d1, d2),
        "ker(1 + g) = im(1 - g)": _kernel_equals_image(d2, d3),
    }
    return ResolutionReport(checks)


@dataclass
class BorelTotalComplex:
    base: GradedComplex
    action: Involution
    column_limit: int
    total: GradedComplex


def borel_total_complex(C: GradedComplex, A: Involution, i_max: int) -> BorelTotalComplex:
    """Total complex of E_{i,j} = C_j for 0 <= i <= i_max."""
    rep = verify_involution(A)
    if not rep.ok:
        raise NotAnInvolution("the action is not an involution commuting with d")
    js = list(C.degrees)
    if not js:
        return BorelTotalComplex(C, A, i_max, GradedComplex({}, name="borel"))
    lo, hi = js[0], js[-1]

    def cells(k):
        return [(i, k - i) for i in range(i_max + 1) if lo <= k - i <= hi]

    basis = {}
    for k in range(lo, hi + i_max + 1):
        basis[k] = [f"{i}|{lab}" for i, j in cells(k) for lab in C.basis(j)]

    def offsets(k):
        out, n = {}, 0
        for i, j in cells(k):
            out[(i, j)] = n
            n += C.rank(j)
        return out, n

    diffs = {}
    for k in range(lo + 1, hi + i_max + 1):
        src, ns = offsets(k)
        tgt, nt = offsets(k - 1)
        rows = [[0] * ns for _ in range(nt)]
        for (i, j), c0 in src.items():
            n = C.rank(j)
            if (i, j - 1) in tgt and n:
                D = C.d(j)
                r0 = tgt[(i, j - 1)]
                s = (-1) ** i
                for a in range(D.rows):
                    for b in range(D.cols):
                        rows[r0 + a][c0 + b] += s * D[a, b]
            if i >= 1 and (i - 1, j) in tgt and n:
                H = IntMatrix.identity(n) + A.a(j).scale((-1) ** i)
                r0 = tgt[(i - 1, j)]
                for a in range(n):
                    for b in range(n):
                        rows[r0 + a][c0 + b] += H[a, b]
        diffs[k] = IntMatrix(nt, ns, [x for r in rows for x in r])
    total = GradedComplex(basis, diffs, name=f"borel({C.name})")
    return BorelTotalComplex(C, A, i_max, total)


def borel_homology(C: GradedComplex, A: Involution, k_max: int,
                   i_max: int | None = None) -> dict[int, HomologyGroup]:
    """Equivariant homology in degrees 0..k_max, with i_max = k_max + 1 by default."""
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    if i_max is None:
        i_max = k_max + 1
    T = borel_total_complex(C, A, i_max).total
    return {k: homology_of_pair(T.d(k), T.d(k + 1)) for k in range(0, k_max + 1)}
