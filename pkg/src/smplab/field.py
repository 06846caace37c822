"""Prime-field arithmetic, low-degree extensions and polynomial tools.

Everything here backs the finite-field set-disjointness protocol: inputs
become value tables on an r x c grid, each column is extended to the unique
low-degree univariate polynomial through the nodes 1..r, and the prover's
candidate polynomial is checked by Schwartz-Zippel agreement counting.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import BitString

_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(q: int) -> bool:
    """Deterministic Miller-Rabin, valid for q < 2^64."""
    if q < 2:
        return False
    for p in _MR_WITNESSES:
        if q == p:
            return True
        if q % p == 0:
            return False
    d, r = q - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, q)
        if x in (1, q - 1):
            continue
        for _ in range(r - 1):
            x = x * x % q
            if x == q - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeField:
    """F_q for a verified prime q."""

    q: int

    def __post_init__(self):
        if not is_prime(self.q):
            raise ValueError(f"{self.q} is not prime")

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return a * b % self.q

    def inv(self, a: int) -> int:
        if a % self.q == 0:
            raise ZeroDivisionError("no inverse of 0")
        return pow(a, self.q - 2, self.q)


def find_prime(n: int) -> PrimeField:
    """Smallest prime q with n < q <= 2n (exists by Bertrand's postulate)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    for q in range(n + 1, 2 * n + 1):
        if is_prime(q):
            return PrimeField(q)
    raise AssertionError("Bertrand's postulate violated?!")


def next_prime_above(b: int) -> PrimeField:
    q = b + 1
    while not is_prime(q):
        q += 1
    return PrimeField(q)


@dataclass(frozen=True)
class EvalTable:
    """Values a(i, j) in F_q on the grid [rows] x [cols] (1-based nodes)."""

    values: np.ndarray  # shape (rows, cols), int64 already reduced mod q
    field: PrimeField

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("values must be 2-d")
        if ((self.values < 0) | (self.values >= self.field.q)).any():
            raise ValueError("entries must be reduced mod q")
        self.values.flags.writeable = False

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @staticmethod
    def from_bits(x: BitString, rows: int, cols: int, field: PrimeField) -> "EvalTable":
        """a(i, j) = x[cols*(i-1) + j] with 1-based (i, j), row-major."""
        if x.n != rows * cols:
            raise ValueError("bit string does not fill the grid")
        return EvalTable(x.array.astype(np.int64).reshape(rows, cols), field)

    @cached_property
    def _bary_weights(self) -> np.ndarray:
        """Barycentric weights w_i = prod_{k != i} (x_i - x_k)^(-1), nodes 1..rows."""
        q = self.field.q
        t = self.rows
        w = np.empty(t, dtype=np.int64)
        for i in range(1, t + 1):
            p = 1
            for k in range(1, t + 1):
                if k != i:
                    p = p * ((i - k) % q) % q
            w[i - 1] = pow(int(p), q - 2, q)
        return w


def lde_eval(table: EvalTable, r: int, j: int) -> int:
    """Evaluate column j's low-degree extension at r (j is 1-based)."""
    return int(lde_eval_block(table, r)[j - 1])


def lde_eval_block(table: EvalTable, r: int) -> np.ndarray:
    """All column extensions at one point r: the vector (a~(r, j))_j."""
    q = table.field.q
    t = table.rows
    r = r % q
    nodes = np.arange(1, t + 1, dtype=np.int64)
    diff = (r - nodes) % q
    if (diff == 0).any():
        return table.values[int(r) - 1].copy()
    inv_diff = np.array([pow(int(d), q - 2, q) for d in diff], dtype=np.int64)
    coeff = table._bary_weights * inv_diff % q
    num = coeff @ table.values % q
    den = int(coeff.sum() % q)
    return num * pow(den, q - 2, q) % q


@dataclass(frozen=True)
class UniPoly:
    """Dense univariate polynomial over F_q, constant term first."""

    coeffs: tuple[int, ...]
    field: PrimeField

    def __post_init__(self):
        if any(not 0 <= c < self.field.q for c in self.coeffs):
            raise ValueError("coefficients must be reduced mod q")
        # canonical form: no leading zeros (the zero polynomial is ())
        if self.coeffs and self.coeffs[-1] == 0:
            trimmed = len(self.coeffs)
            while trimmed and self.coeffs[trimmed - 1] == 0:
                trimmed -= 1
            object.__setattr__(self, "coeffs", self.coeffs[:trimmed])

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        if other.field != self.field:
            raise ValueError("mixed fields")
        q = self.field.q
        m = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [0] * (m - len(self.coeffs))
        b = list(other.coeffs) + [0] * (m - len(other.coeffs))
        return UniPoly(tuple((x - y) % q for x, y in zip(a, b)), self.field)

    def to_json(self) -> list[str]:
        return [str(c) for c in self.coeffs]

    @staticmethod
    def from_json(data: list[str], field: PrimeField) -> "UniPoly":
        return UniPoly(tuple(int(c) % field.q for c in data), field)


def poly_eval(p: UniPoly, r: int) -> int:
    """Horner evaluation of p at r."""
    q = p.field.q
    acc = 0
    for c in reversed(p.coeffs):
        acc = (acc * r + c) % q
    return acc


def poly_eval_many(p: UniPoly, rs: np.ndarray) -> np.ndarray:
    q = p.field.q
    acc = np.zeros(len(rs), dtype=np.int64)
    for c in reversed(p.coeffs):
        acc = (acc * rs + c) % q
    return acc


def agreement_count(p1: UniPoly, p2: UniPoly, points: np.ndarray) -> int:
    """|{r in points : p1(r) = p2(r)}|; at most deg(p1 - p2) when p1 != p2."""
    if len(points) < 1:
        raise ValueError("need at least one evaluation point")
    pts = np.asarray(points, dtype=np.int64)
    return int((poly_eval_many(p1, pts) == poly_eval_many(p2, pts)).sum())


def interpolate(xs: list[int], ys: list[int], field: PrimeField) -> UniPoly:
    """Newton divided-difference interpolation through (xs, ys)."""
    q = field.q
    t = len(xs)
    if len(set(x % q for x in xs)) != t:
        raise ValueError("interpolation nodes must be distinct mod q")
    coef = [y % q for y in ys]  # divided differences, built in place
    for level in range(1, t):
        for i in range(t - 1, level - 1, -1):
            num = (coef[i] - coef[i - 1]) % q
            den = (xs[i] - xs[i - level]) % q
            coef[i] = num * pow(den, q - 2, q) % q
    # expand Newton form sum_k coef[k] * prod_{j<k}(x - xs[j])
    poly = [0] * t
    basis = [1] + [0] * (t - 1)
    for k in range(t):
        for d in range(k + 1):
            poly[d] = (poly[d] + coef[k] * basis[d]) % q
        if k + 1 < t:
            new = [0] * t
            for d in range(k + 1):
                new[d + 1] = (new[d + 1] + basis[d]) % q
                new[d] = (new[d] - xs[k] * basis[d]) % q
            basis = new
    return UniPoly(tuple(poly), field)


def s_polynomial(a: EvalTable, b: EvalTable) -> UniPoly:
    """The inner-product polynomial s(i) = sum_j a~(i,j) * b~(i,j) mod q,
    recovered by interpolating at 2*rows - 1 points."""
    if a.rows != b.rows or a.cols != b.cols or a.field != b.field:
        raise ValueError("tables must share grid and field")
    q = a.field.q
    npts = 2 * a.rows - 1
    if npts > q:
        raise ValueError("field too small to host the interpolation nodes")
    xs = list(range(1, npts + 1))
    ys = [int(lde_eval_block(a, r) @ lde_eval_block(b, r) % q) for r in xs]
    return interpolate(xs, ys, a.field)
