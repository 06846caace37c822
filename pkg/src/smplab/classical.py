"""Classical SMP protocols: the "one out of two" grid protocol, the
prover-assisted not-equal protocol, the prover-assisted disjointness
protocol, and a plain row/column equality baseline.

Every protocol ships both a sampled runner (drawing the players' coins from
seeded streams) and an exact evaluator that enumerates or sums over those
coins, so Monte Carlo estimates can be cross-checked against closed values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .codes import CodeSpec, best_row, column, grid_of, row, row_distances
from .core import (
    BitString,
    Message,
    OneOutOfTwoVerdict,
    RandomSource,
    Transcript,
    Verdict,
    hamming_distance,
)
from .field import (
    EvalTable,
    PrimeField,
    UniPoly,
    find_prime,
    lde_eval_block,
    next_prime_above,
    poly_eval,
    poly_eval_many,
)


def _index_bits(k: int) -> int:
    return max(1, (k - 1).bit_length())


# ---------------------------------------------------------------------------
# "One out of two"


@dataclass(frozen=True)
class OneOutOfTwoParams:
    n: int
    spec: CodeSpec

    def __post_init__(self):
        if self.spec.rows != self.spec.cols:
            raise ValueError("one-out-of-two needs a square grid")
        if self.spec.n != self.n:
            raise ValueError("spec does not match n")

    @staticmethod
    def create(n: int) -> "OneOutOfTwoParams":
        return OneOutOfTwoParams(n, CodeSpec.create(n))

    @property
    def k(self) -> int:
        return self.spec.rows

    def expected_lengths(self) -> dict[str, int]:
        k = self.k
        return {"alice": _index_bits(k) + 2 * k, "bob": _index_bits(k) + k}


def _check_promise(x1: BitString, x2: BitString, y: BitString) -> int:
    """Return 1 or 2 for the true answer; raise if the promise fails."""
    first, second = x1 == y, x2 == y
    if first == second:
        raise ValueError("promise violated: exactly one of x1, x2 must equal y")
    return 1 if first else 2


def one_out_of_two_run(
    x1: BitString,
    x2: BitString,
    y: BitString,
    params: OneOutOfTwoParams,
    rng: RandomSource,
) -> tuple[OneOutOfTwoVerdict, Transcript]:
    _check_promise(x1, x2, y)
    k = params.k
    g1, g2 = grid_of(params.spec, x1), grid_of(params.spec, x2)
    gy = grid_of(params.spec, y)
    gen = rng.generator()

    i = int(gen.integers(1, k + 1))  # Bob's uniform column
    b_i = column(gy, i)
    j = best_row(g1, g2)  # Alice's deterministic row
    a1, a2 = row(g1, j), row(g2, j)

    transcript = Transcript(
        alice=Message("classical", _index_bits(k) + 2 * k, (j, a1, a2)),
        bob=Message("classical", _index_bits(k) + k, (i, b_i)),
        merlin=None,
        protocol_type="RR",
    )
    e1, e2 = a1.bits[i - 1], a2.bits[i - 1]
    if e1 != e2:
        t = 1 if b_i.bits[j - 1] == e1 else 2
    else:
        t = 1 if gen.integers(0, 2) == 0 else 2
    verdict = (
        OneOutOfTwoVerdict.FIRST_EQUAL if t == 1 else OneOutOfTwoVerdict.SECOND_EQUAL
    )
    return verdict, transcript


def one_out_of_two_exact(
    x1: BitString, x2: BitString, y: BitString, params: OneOutOfTwoParams
) -> Fraction:
    """Exact success probability, enumerating Bob's column choice.

    On columns where Alice's rows differ the referee is always right; on the
    rest he flips a coin, giving (k + d_j) / 2k for row distance d_j.
    """
    _check_promise(x1, x2, y)
    g1, g2 = grid_of(params.spec, x1), grid_of(params.spec, x2)
    j = best_row(g1, g2)
    d_j = int(row_distances(g1, g2)[j - 1])
    k = params.k
    return Fraction(k + d_j, 2 * k)


# ---------------------------------------------------------------------------
# Not-equal with an untrusted prover (all-classical)


@dataclass(frozen=True)
class NeRrrParams:
    n: int
    spec: CodeSpec
    repetitions: int = 1

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.spec.n != self.n:
            raise ValueError("spec does not match n")

    @staticmethod
    def create(
        n: int, repetitions: int = 1, rows: int | None = None, cols: int | None = None
    ) -> "NeRrrParams":
        return NeRrrParams(n, CodeSpec.create(n, rows=rows, cols=cols), repetitions)

    @property
    def a_rows(self) -> int:
        return self.spec.rows

    @property
    def m_cols(self) -> int:
        return self.spec.cols

    @property
    def distance_threshold(self) -> int:
        return math.ceil(self.m_cols / 3)

    def expected_lengths(self) -> dict[str, int]:
        """Per-round message bits: (a, a, m) shape."""
        return {
            "alice": _index_bits(self.m_cols) + self.a_rows,
            "bob": _index_bits(self.m_cols) + self.a_rows,
            "merlin": _index_bits(self.a_rows) + 2 * self.m_cols,
        }


@dataclass(frozen=True)
class NeMessage:
    """Merlin's claim: a row index plus that row of both encodings."""

    k_row: int
    r_row: BitString
    s_row: BitString


def honest_ne_message(x: BitString, y: BitString, params: NeRrrParams) -> NeMessage:
    """True rows at the best differing row (row 1 when x = y, where no
    qualifying row exists and honesty cannot win anyway)."""
    gx, gy = grid_of(params.spec, x), grid_of(params.spec, y)
    k = best_row(gx, gy) if x != y else 1
    return NeMessage(k, row(gx, k), row(gy, k))


def _ne_message_valid(msg: NeMessage, params: NeRrrParams) -> bool:
    return (
        1 <= msg.k_row <= params.a_rows
        and msg.r_row.n == params.m_cols
        and msg.s_row.n == params.m_cols
    )


def ne_rrr_run(
    x: BitString,
    y: BitString,
    merlin,
    params: NeRrrParams,
    rng: RandomSource,
) -> tuple[Verdict, Transcript]:
    """Run all repetitions with fresh player coins; accept iff every round
    accepts.  A malformed prover message rejects immediately, never errors."""
    if x.n != params.n or y.n != params.n:
        raise ValueError("input length mismatch")
    msg = merlin.message(x, y, params, rng.derive(0))
    gx, gy = grid_of(params.spec, x), grid_of(params.spec, y)
    m = params.m_cols
    gen = rng.derive(1).generator()

    transcript = None
    verdict = Verdict.ACCEPT
    if not _ne_message_valid(msg, params):
        verdict = Verdict.REJECT
        merlin_msg = Message("classical", 0, msg)
    else:
        merlin_msg = Message(
            "classical", _index_bits(params.a_rows) + 2 * m, (msg.k_row, msg.r_row, msg.s_row)
        )
    for _ in range(params.repetitions):
        i = int(gen.integers(1, m + 1))
        j = int(gen.integers(1, m + 1))
        col_x, col_y = column(gx, i), column(gy, j)
        if transcript is None:
            transcript = Transcript(
                alice=Message("classical", _index_bits(m) + params.a_rows, (i, col_x)),
                bob=Message("classical", _index_bits(m) + params.a_rows, (j, col_y)),
                merlin=merlin_msg,
                protocol_type="RRR",
            )
        if verdict is Verdict.REJECT:
            continue
        if col_x.bits[msg.k_row - 1] != msg.r_row.bits[i - 1]:
            verdict = Verdict.REJECT
        elif col_y.bits[msg.k_row - 1] != msg.s_row.bits[j - 1]:
            verdict = Verdict.REJECT
        elif hamming_distance(msg.r_row, msg.s_row) < params.distance_threshold:
            verdict = Verdict.REJECT
    return verdict, transcript


def ne_rrr_exact(
    x: BitString, y: BitString, msg: NeMessage, params: NeRrrParams
) -> Fraction:
    """Exact single-round acceptance of a fixed prover message, enumerating
    both players' column choices.  Raise to params.repetitions for the
    all-rounds probability."""
    if not _ne_message_valid(msg, params):
        return Fraction(0)
    if hamming_distance(msg.r_row, msg.s_row) < params.distance_threshold:
        return Fraction(0)
    gx, gy = grid_of(params.spec, x), grid_of(params.spec, y)
    true_x = row(gx, msg.k_row)
    true_y = row(gy, msg.k_row)
    m = params.m_cols
    accepted = 0
    for i in range(m):
        if msg.r_row.bits[i] != true_x.bits[i]:
            continue
        for j in range(m):
            if msg.s_row.bits[j] == true_y.bits[j]:
                accepted += 1
    return Fraction(accepted, m * m)


# ---------------------------------------------------------------------------
# Plain equality baseline (no prover): random row vs random column


def eq_rr_run(
    x: BitString, y: BitString, spec: CodeSpec, rng: RandomSource
) -> tuple[Verdict, Transcript]:
    gx, gy = grid_of(spec, x), grid_of(spec, y)
    gen = rng.generator()
    j = int(gen.integers(1, spec.rows + 1))
    i = int(gen.integers(1, spec.cols + 1))
    row_x, col_y = row(gx, j), column(gy, i)
    transcript = Transcript(
        alice=Message("classical", _index_bits(spec.rows) + spec.cols, (j, row_x)),
        bob=Message("classical", _index_bits(spec.cols) + spec.rows, (i, col_y)),
        merlin=None,
        protocol_type="RR",
    )
    same = row_x.bits[i - 1] == col_y.bits[j - 1]
    return (Verdict.ACCEPT if same else Verdict.REJECT), transcript


def eq_rr_exact(x: BitString, y: BitString, spec: CodeSpec) -> Fraction:
    """Exact acceptance: the fraction of grid cells where the encodings agree."""
    gx, gy = grid_of(spec, x), grid_of(spec, y)
    d = int((gx.cells != gy.cells).sum())
    return Fraction(spec.padded_len - d, spec.padded_len)


# ---------------------------------------------------------------------------
# Disjointness with an untrusted prover


@dataclass(frozen=True)
class DisjParams:
    """Grid split n = rows * cols with rows = n^alpha, plus the field and the
    Schwartz-Zippel evaluation set S = {1..10*deg(s)}.

    The field starts as the smallest prime in (n, 2n]; when that cannot host
    S (small n), it is enlarged to the smallest prime above 10*deg(s) and the
    deviation is recorded.
    """

    n: int
    alpha: float
    rows: int
    cols: int
    field: PrimeField
    sample_scale: float = 1.0
    q_enlarged: bool = False

    def __post_init__(self):
        if self.rows * self.cols != self.n:
            raise ValueError("rows * cols must equal n")
        if self.field.q <= len(self.eval_set):
            raise ValueError("field cannot host the evaluation set")
        if self.samples_per_player < 1:
            raise ValueError("sample scale too small")

    @staticmethod
    def create(n: int, alpha: float = 2.0 / 3.0, sample_scale: float = 1.0) -> "DisjParams":
        rows = round(n**alpha)
        cols = round(n ** (1.0 - alpha))
        if rows * cols != n or abs(rows - n**alpha) > 1e-6 * rows:
            raise ValueError(f"n={n} is not a perfect power for alpha={alpha}")
        deg = 2 * (rows - 1)
        field = find_prime(n)
        enlarged = False
        if field.q <= 10 * deg:
            field = next_prime_above(10 * deg)
            enlarged = True
        return DisjParams(n, alpha, rows, cols, field, sample_scale, enlarged)

    @property
    def degree_bound(self) -> int:
        return 2 * (self.rows - 1)

    @cached_property
    def eval_set(self) -> np.ndarray:
        s = np.arange(1, 10 * self.degree_bound + 1, dtype=np.int64)
        s.flags.writeable = False
        return s

    @property
    def samples_per_player(self) -> int:
        return math.ceil(self.sample_scale * 100 * math.sqrt(len(self.eval_set)))

    @property
    def field_bits(self) -> int:
        return _index_bits(self.field.q)

    def expected_lengths(self) -> dict[str, int]:
        per_sample = (1 + self.cols) * self.field_bits
        return {
            "alice": self.samples_per_player * per_sample,
            "bob": self.samples_per_player * per_sample,
            "merlin": (self.degree_bound + 1) * self.field_bits,
        }

    def tables(self, x: BitString, y: BitString) -> tuple[EvalTable, EvalTable]:
        return (
            EvalTable.from_bits(x, self.rows, self.cols, self.field),
            EvalTable.from_bits(y, self.rows, self.cols, self.field),
        )


def _player_samples(table: EvalTable, params: DisjParams, gen) -> list[tuple[int, np.ndarray]]:
    rs = np.sort(gen.choice(params.eval_set, size=params.samples_per_player, replace=True))
    return [(int(r), lde_eval_block(table, int(r))) for r in rs]


def disj_rrr_run(
    x: BitString,
    y: BitString,
    merlin,
    params: DisjParams,
    rng: RandomSource,
) -> tuple[Verdict, Transcript]:
    if x.n != params.n or y.n != params.n:
        raise ValueError("input length mismatch")
    ta, tb = params.tables(x, y)
    s_prime: UniPoly = merlin.polynomial(x, y, params, rng.derive(0))
    alice = _player_samples(ta, params, rng.derive(1).generator())
    bob = _player_samples(tb, params, rng.derive(2).generator())

    per_sample = (1 + params.cols) * params.field_bits
    transcript = Transcript(
        alice=Message("classical", len(alice) * per_sample, alice),
        bob=Message("classical", len(bob) * per_sample, bob),
        merlin=Message(
            "classical", (params.degree_bound + 1) * params.field_bits, s_prime.to_json()
        ),
        protocol_type="RRR",
    )

    if s_prime.degree > params.degree_bound:
        return Verdict.REJECT, transcript
    blocks_a = {r: blk for r, blk in alice}
    blocks_b = {r: blk for r, blk in bob}
    common = sorted(set(blocks_a) & set(blocks_b))
    if not common:
        return Verdict.REJECT, transcript
    q = params.field.q
    for r in common:
        s_r = int(blocks_a[r] @ blocks_b[r] % q)
        if s_r != poly_eval(s_prime, r):
            return Verdict.REJECT, transcript
    total = sum(poly_eval(s_prime, i) for i in range(1, params.rows + 1)) % q
    return (Verdict.ACCEPT if total == 0 else Verdict.REJECT), transcript


def _distinct_hit_distribution(c: int, hit_size: int, set_size: int) -> list[Fraction]:
    """Exact law of the number of distinct elements of a fixed size-`hit_size`
    subset touched by c iid uniform draws from a size-`set_size` set."""
    probs = [Fraction(0)] * (min(c, hit_size) + 1)
    probs[0] = Fraction(1)
    for _ in range(c):
        nxt = [Fraction(0)] * len(probs)
        for d, p in enumerate(probs):
            if p == 0:
                continue
            p_new = Fraction(hit_size - d, set_size)
            if d + 1 < len(nxt):
                nxt[d + 1] += p * p_new
                nxt[d] += p * (1 - p_new)
            else:
                nxt[d] += p
        probs = nxt
    return probs


def _prob_no_common_hit(c: int, hit_size: int, set_size: int) -> Fraction:
    """Pr[the two players' draw sets share no element of the fixed subset]."""
    probs = _distinct_hit_distribution(c, hit_size, set_size)
    return sum(
        p * Fraction(set_size - d, set_size) ** c for d, p in enumerate(probs) if p
    )


def disj_rrr_soundness_exact(
    x: BitString, y: BitString, s_prime: UniPoly, params: DisjParams
) -> Fraction:
    """Exact acceptance for a fixed candidate polynomial, summing over both
    players' independent uniform draws.

    Acceptance needs a nonempty collision set lying inside the agreement set
    A = {r in S : s'(r) = s(r)} plus a passing block sum, so it equals
    [sum ok] * (Pr[no collision outside A] - Pr[no collision at all]).
    """
    if s_prime.degree > params.degree_bound:
        return Fraction(0)
    q = params.field.q
    total = sum(poly_eval(s_prime, i) for i in range(1, params.rows + 1)) % q
    if total != 0:
        return Fraction(0)
    ta, tb = params.tables(x, y)
    pts = params.eval_set
    true_vals = np.array(
        [int(lde_eval_block(ta, int(r)) @ lde_eval_block(tb, int(r)) % q) for r in pts],
        dtype=np.int64,
    )
    agree = int((poly_eval_many(s_prime, pts) == true_vals).sum())
    size = len(pts)
    c = params.samples_per_player
    p_outside_ok = _prob_no_common_hit(c, size - agree, size)
    p_no_collision = _prob_no_common_hit(c, size, size)
    return p_outside_ok - p_no_collision
