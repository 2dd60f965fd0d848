"""Exact integer arithmetic on SL(2,Z) and Kodaira-type classification.

Monodromy matrices of elliptic fibrations are elements A of SL(2,Z) acting on
the period row vector T = (tau1, tau2) by T -> T*A.  This module classifies A
up to conjugacy into the Kodaira types, computes orders, extracts
monodromy-invariant lattice vectors (bad cycles), and knows the Euler numbers
of the I_b / I_b* families.

All arithmetic is exact.  Entries are restricted to the signed 64-bit range;
any intermediate product leaving that range raises OverflowError instead of
wrapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

#: Returned by :func:`order` for infinite-order matrices.
INFINITE_ORDER = math.inf


def _check64(*values: int) -> None:
    for v in values:
        if not (INT64_MIN <= v <= INT64_MAX):
            raise OverflowError("integer outside 64-bit range: %d" % v)


@dataclass(frozen=True)
class IntMatrix2:
    """2x2 integer matrix of determinant 1 (row-major entries a, b, c, d)."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for v in (self.a, self.b, self.c, self.d):
            if not isinstance(v, int):
                raise TypeError("entries must be integers")
        _check64(self.a, self.b, self.c, self.d)
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError("determinant must be 1")

    @property
    def trace(self) -> int:
        return self.a + self.d

    def __matmul__(self, other: "IntMatrix2") -> "IntMatrix2":
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        _check64(a, b, c, d)
        return IntMatrix2(a, b, c, d)

    def inv(self) -> "IntMatrix2":
        return IntMatrix2(self.d, -self.b, -self.c, self.a)

    def neg(self) -> "IntMatrix2":
        return IntMatrix2(-self.a, -self.b, -self.c, -self.d)

    def apply(self, v: Tuple[int, int]) -> Tuple[int, int]:
        x, y = v
        return (self.a * x + self.b * y, self.c * x + self.d * y)

    def entries(self) -> Tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)


IDENTITY = IntMatrix2(1, 0, 0, 1)
NEG_IDENTITY = IntMatrix2(-1, 0, 0, -1)

FINITE_TAGS = ("II", "III", "IV", "IIstar", "IIIstar", "IVstar")
ALL_TAGS = ("I", "Istar") + FINITE_TAGS


@dataclass(frozen=True)
class KodairaType:
    """Kodaira type tag; b is meaningful for the I / Istar families only."""

    tag: str
    b: int = 0

    def __post_init__(self):
        if self.tag not in ALL_TAGS:
            raise ValueError("unknown tag %r" % (self.tag,))
        if self.tag in ("I", "Istar"):
            if not isinstance(self.b, int) or self.b < 0:
                raise ValueError("b must be a non-negative integer")
        elif self.b != 0:
            raise ValueError("b only applies to I / Istar")

    def __str__(self) -> str:
        if self.tag == "I":
            return "I_%d" % self.b
        if self.tag == "Istar":
            return "I_%d*" % self.b
        return {"II": "II", "III": "III", "IV": "IV",
                "IIstar": "II*", "IIIstar": "III*", "IVstar": "IV*"}[self.tag]

    @staticmethod
    def parse(name: str) -> "KodairaType":
        name = name.strip()
        star = name.endswith("*")
        base = name[:-1] if star else name
        if base.startswith("I_"):
            return KodairaType("Istar" if star else "I", int(base[2:]))
        tag = {"II": "II", "III": "III", "IV": "IV"}.get(base)
        if tag is None:
            raise ValueError("cannot parse Kodaira type %r" % name)
        return KodairaType(tag + "star" if star else tag)


@dataclass(frozen=True)
class Classification:
    """Classification result: type, and P with P * representative * P^-1 = A
    when such an integer conjugation exists.  For parabolic input the raw
    signed b read off from P^-1 A P is kept in parabolic_b."""

    kodaira_type: KodairaType
    conjugator: Optional[IntMatrix2] = None
    parabolic_b: Optional[int] = None


def representative(t: KodairaType) -> IntMatrix2:
    """Table representative of the conjugacy class of each Kodaira type."""
    if t.tag == "I":
        return IDENTITY if t.b == 0 else IntMatrix2(1, t.b, 0, 1)
    if t.tag == "Istar":
        return NEG_IDENTITY if t.b == 0 else IntMatrix2(-1, -t.b, 0, -1)
    base = {
        "II": IntMatrix2(0, 1, -1, 1),
        "IVstar": IntMatrix2(0, -1, 1, -1),
        "IIstar": IntMatrix2(1, -1, 1, 0),
        "IV": IntMatrix2(-1, 1, -1, 0),
        "III": IntMatrix2(0, 1, -1, 0),
        "IIIstar": IntMatrix2(0, -1, 1, 0),
    }
    return base[t.tag]


def order(A: IntMatrix2):
    """Smallest n >= 1 with A^n = 1, or INFINITE_ORDER.

    Trace dispatch, cross-checked by direct powering up to exponent 12.
    """
    tr = A.trace
    if A == IDENTITY:
        n = 1
    elif A == NEG_IDENTITY:
        n = 2
    elif abs(tr) >= 2:
        n = INFINITE_ORDER
    else:
        n = {0: 4, 1: 6, -1: 3}[tr]
    # cross-check by powering
    P = A
    for k in range(1, 13):
        if P == IDENTITY:
            assert n == k, "trace dispatch disagrees with powering"
            return n
        P = P @ A
    assert n == INFINITE_ORDER
    return n


def _primitive(v: Tuple[int, int]) -> Tuple[int, int]:
    g = math.gcd(v[0], v[1])
    return (v[0] // g, v[1] // g)


def invariant_vector_rank(A: IntMatrix2):
    """Rank of the fixed lattice {v : Av = v}, with a primitive generator
    when the rank is 1.  Rank 2 iff A = 1; rank 1 for parabolic trace-2
    matrices; rank 0 otherwise."""
    if A == IDENTITY:
        return 2, None
    if A.trace != 2:
        return 0, None
    # kernel of A - I; rows (a-1, b) and (c, d-1) are proportional
    r1 = (A.a - 1, A.b)
    r2 = (A.c, A.d - 1)
    row = r1 if r1 != (0, 0) else r2
    v = _primitive((row[1], -row[0]))
    assert A.apply(v) == v
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = (-v[0], -v[1])
    return 1, v


def _complete_basis(v: Tuple[int, int]) -> IntMatrix2:
    """P = (v | u) with det P = 1 for primitive v (columns)."""
    g, x, y = _xgcd(v[0], v[1])
    assert g == 1
    # det [[v0, -y], [v1, x]] = v0*x + v1*y = 1
    return IntMatrix2(v[0], -y, v[1], x)


def _xgcd(a: int, b: int):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _integer_kernel_basis(rows):
    """Basis of the integer kernel of a matrix given as a list of int rows.

    Column-operations variant: bring M to column echelon form while tracking
    the unimodular transform; transform columns hitting zero span the kernel.
    """
    m = len(rows)
    n = len(rows[0])
    M = [list(r) for r in rows]
    T = [[1 if i == j else 0 for j in range(n)] for i in range(n)]  # n x n

    def col(j):
        return [M[i][j] for i in range(m)]

    def addcol(j, k, q):  # col_j += q * col_k
        for i in range(m):
            M[i][j] += q * M[i][k]
        for i in range(n):
            T[i][j] += q * T[i][k]

    def swapcol(j, k):
        for i in range(m):
            M[i][j], M[i][k] = M[i][k], M[i][j]
        for i in range(n):
            T[i][j], T[i][k] = T[i][k], T[i][j]

    pivot_col = 0
    for row in range(m):
        if pivot_col >= n:
            break
        # gcd-reduce entries of this row across columns >= pivot_col
        while True:
            nz = [j for j in range(pivot_col, n) if M[row][j] != 0]
            if not nz:
                break
            jmin = min(nz, key=lambda j: abs(M[row][j]))
            swapcol(pivot_col, jmin)
            done = True
            for j in range(pivot_col + 1, n):
                if M[row][j] != 0:
                    q = M[row][j] // M[row][pivot_col]
                    addcol(j, pivot_col, -q)
                    if M[row][j] != 0:
                        done = False
            if done:
                break
        if M[row][pivot_col] != 0:
            pivot_col += 1
    kernel = []
    for j in range(pivot_col, n):
        if all(M[i][j] == 0 for i in range(m)):
            kernel.append([T[i][j] for i in range(n)])
    return kernel


def _elliptic_conjugator(A: IntMatrix2, R: IntMatrix2) -> Optional[IntMatrix2]:
    """Find P in SL(2,Z) with P A P^-1 = R ... i.e. R P = P A, det P = 1."""
    # unknowns (p, q, r, s) for P = (p q; r s); linear system P A - R P = 0
    a, b, c, d = A.entries()
    ra, rb, rc, rd = R.entries()
    rows = [
        [a - ra, c, -rb, 0],
        [b, d - ra, 0, -rb],
        [-rc, 0, a - rd, c],
        [0, -rc, b, d - rd],
    ]
    basis = _integer_kernel_basis(rows)
    if len(basis) != 2:
        return None
    B1, B2 = basis

    def det_of(x):
        return x[0] * x[3] - x[1] * x[2]

    al = det_of(B1)
    ga = det_of(B2)
    be = det_of([B1[i] + B2[i] for i in range(4)]) - al - ga
    disc = be * be - 4 * al * ga
    if disc >= 0:
        return None  # form not definite; no elliptic conjugation decision
    if al < 0:
        return None  # negative definite: 1 not represented
    # q(s,t) = 1 forces |t| <= sqrt(4*al/|disc|), |s| <= sqrt(4*ga/|disc|)
    tmax = min(int(math.isqrt(4 * al // (-disc)) + 1), 10**4)
    smax = min(int(math.isqrt(4 * ga // (-disc)) + 1), 10**4)
    for s in range(-smax, smax + 1):
        for t in range(-tmax, tmax + 1):
            if al * s * s + be * s * t + ga * t * t == 1:
                p = [s * B1[i] + t * B2[i] for i in range(4)]
                P = IntMatrix2(p[0], p[1], p[2], p[3])
                if (P @ A @ P.inv()) == R:
                    # we solved P A P^-1 = R; the conjugator with
                    # P' R P'^-1 = A is the inverse
                    return P.inv()
    return None


def classify(A: IntMatrix2) -> Classification:
    """Kodaira type whose table representative is SL(2,Z)-conjugate to A."""
    if A == IDENTITY:
        return Classification(KodairaType("I", 0), IDENTITY, None)
    if A == NEG_IDENTITY:
        return Classification(KodairaType("Istar", 0), IDENTITY, None)
    tr = A.trace
    if tr == 2:
        _, v = invariant_vector_rank(A)
        P = _complete_basis(v)
        Q = P.inv() @ A @ P
        assert (Q.a, Q.c, Q.d) == (1, 0, 1)
        braw = Q.b
        conj = P if braw > 0 else None
        return Classification(KodairaType("I", abs(braw)), conj, braw)
    if tr == -2:
        sub = classify(A.neg())
        return Classification(
            KodairaType("Istar", sub.kodaira_type.b),
            sub.conjugator,
            sub.parabolic_b,
        )
    candidates = {
        0: ("III", "IIIstar"),
        1: ("II", "IIstar"),
        -1: ("IV", "IVstar"),
    }[tr]
    for tag in candidates:
        t = KodairaType(tag)
        P = _elliptic_conjugator(A, representative(t))
        if P is not None:
            return Classification(t, P, None)
    raise AssertionError("elliptic matrix matched no representative")


def euler_number(t: KodairaType) -> int:
    """Euler number: b for I_b, 6 + b for I_b*.  Finite types are not
    specified by the source data and raise."""
    if t.tag == "I":
        return t.b
    if t.tag == "Istar":
        return 6 + t.b
    raise ValueError("Euler number not specified for type %s" % t)
