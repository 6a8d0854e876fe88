"""Round-by-round evolution of the survivor polynomial.

After ``k`` rolls the survivor polynomial ``S_k`` holds, for each sum ``n``,
the probability of standing at ``n`` without having hit the target yet.  One
round multiplies by the die PGF and peels off the terms whose exponent is a
hit; those form the inductee polynomial ``N_k``.  All bookkeeping is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Union

import numpy as np

from .polyring import DieSpec, ScaledPoly, convolve_die, split_by_predicate
from .predicates import FactorSieve, PredicateSpec, build_sieve, hit_mask, is_hit

__all__ = [
    "FixedRounds",
    "TailTarget",
    "GameSpec",
    "InvalidStart",
    "RoundRecord",
    "Trace",
    "Walker",
    "Guarantee",
    "run",
    "truncated_pgf",
    "rounds_to_guarantee",
    "dp_reference",
    "MOMENT_KEYS",
]

# Raw moment accumulators kept per run: sum_k k**j m0_k (j=0..4),
# sum_k m1_k, sum_k m2_k and sum_k k m1_k.
MOMENT_KEYS = ("k0", "k1", "k2", "k3", "k4", "m1", "m2", "km1")


class InvalidStart(ValueError):
    """The starting sum already satisfies the predicate."""


@dataclass(frozen=True)
class FixedRounds:
    R: int

    def __post_init__(self):
        if self.R < 1:
            raise ValueError(f"rounds must be >= 1, got {self.R}")


@dataclass(frozen=True)
class TailTarget:
    eps: Fraction
    r_max: int

    def __post_init__(self):
        object.__setattr__(self, "eps", Fraction(self.eps))
        if not 0 < self.eps:
            raise ValueError("eps must be positive")
        if self.r_max < 1:
            raise ValueError("r_max must be >= 1")


Stop = Union[FixedRounds, TailTarget]


@dataclass(frozen=True)
class GameSpec:
    die: DieSpec
    pred: PredicateSpec
    init: int = 0
    stop: Stop | None = None
    allow_trivial_start: bool = False

    def __post_init__(self):
        if self.init < 0:
            raise ValueError("init must be nonnegative")

    @property
    def round_bound(self) -> int:
        if isinstance(self.stop, FixedRounds):
            return self.stop.R
        if isinstance(self.stop, TailTarget):
            return self.stop.r_max
        return 1

    def with_stop(self, stop: Stop | None) -> GameSpec:
        return GameSpec(self.die, self.pred, self.init, stop, self.allow_trivial_start)

    def describe(self) -> dict:
        out = {
            "die": self.die.describe(),
            "faces": [[v, w] for v, w in self.die.faces],
            "W": self.die.W,
            "predicate": self.pred.name,
            "init": self.init,
        }
        if isinstance(self.stop, FixedRounds):
            out["rounds"] = self.stop.R
        elif isinstance(self.stop, TailTarget):
            out["eps"] = f"{self.stop.eps.numerator}/{self.stop.eps.denominator}"
            out["rmax"] = self.stop.r_max
        return out


@dataclass(frozen=True)
class RoundRecord:
    """Round ``k`` aggregates; every numerator is over ``W**k``."""

    k: int
    hit_mass_num: int
    loc1_num: int
    loc2_num: int
    survivor_num: int


@dataclass(frozen=True)
class Trace:
    spec: GameSpec
    rounds: tuple[RoundRecord, ...] = field(repr=False)
    survivor_mass: Fraction
    moments: dict[str, Fraction] = field(repr=False)
    R: int
    converged: bool = True

    @property
    def a_R(self) -> Fraction:
        return self.moments["k0"]

    def hit_masses(self) -> list[Fraction]:
        W = self.spec.die.W
        return [Fraction(r.hit_mass_num, W**r.k) for r in self.rounds]

    def survivor_masses(self) -> list[Fraction]:
        """``S_k(1)`` for ``k = 0..R``."""
        W = self.spec.die.W
        return [Fraction(1)] + [Fraction(r.survivor_num, W**r.k) for r in self.rounds]

    def partial_expectation(self) -> Fraction:
        """Unconditional ``sum_{k<=R} k P(T = k)``."""
        return self.moments["k1"]


class Walker:
    """Incremental state of one game; :meth:`step` advances one roll.

    The sieve is sized for ``rounds_hint`` rounds and regrown on demand.
    """

    def __init__(self, spec: GameSpec, rounds_hint: int | None = None):
        self.spec = spec
        self.die = spec.die
        self.W = spec.die.W
        self.k = 0
        self.den = 1
        self._sieve: FactorSieve | None = None
        self._sieve_rounds = 0
        self._ensure_sieve(max(rounds_hint or spec.round_bound, 1))
        self.trivial = is_hit(spec.init, spec.pred, self._sieve)
        if self.trivial and not spec.allow_trivial_start:
            raise InvalidStart(f"start {spec.init} already satisfies {spec.pred}")
        self.survivors = ScaledPoly.monomial(spec.init, self.W)
        self.survivor_num = 1
        self.records: list[RoundRecord] = []
        self._acc = dict.fromkeys(MOMENT_KEYS, 0)
        if self.trivial:
            self.survivors = ScaledPoly.zero(self.W)
            self.survivor_num = 0

    def _ensure_sieve(self, rounds: int) -> None:
        if not self.spec.pred.needs_sieve or rounds <= self._sieve_rounds:
            return
        limit = max(self.spec.init + self.die.max_face * rounds, 2)
        self._sieve = build_sieve(limit)
        self._sieve_rounds = rounds

    @property
    def sieve(self) -> FactorSieve | None:
        return self._sieve

    @property
    def survivor_mass(self) -> Fraction:
        return Fraction(self.survivor_num, self.den)

    def survivor_at_most(self, eps: Fraction) -> bool:
        return self.survivor_num * eps.denominator <= eps.numerator * self.den

    def step(self) -> tuple[RoundRecord, ScaledPoly]:
        k = self.k + 1
        if k > self._sieve_rounds:
            self._ensure_sieve(max(2 * self._sieve_rounds, k))
        moved = convolve_die(self.survivors, self.die)
        hits, self.survivors = split_by_predicate(moved, self.spec.pred, self._sieve)
        if hits.is_zero:
            h0 = h1 = h2 = 0
        else:
            c = hits.coeffs
            n = np.arange(hits.lo, hits.hi + 1).astype(object)
            h0 = int(c.sum())
            nc = c * n
            h1 = int(nc.sum())
            h2 = int((nc * n).sum())
        self.k = k
        self.den *= self.W
        self.survivor_num = self.survivor_num * self.W - h0
        acc, W = self._acc, self.W
        kp = 1
        for j in range(5):
            acc[f"k{j}"] = acc[f"k{j}"] * W + kp * h0
            kp *= k
        acc["m1"] = acc["m1"] * W + h1
        acc["m2"] = acc["m2"] * W + h2
        acc["km1"] = acc["km1"] * W + k * h1
        record = RoundRecord(k, h0, h1, h2, self.survivor_num)
        self.records.append(record)
        return record, hits

    def trace(self, converged: bool = True) -> Trace:
        if self.trivial:
            x = self.spec.init
            moments = dict.fromkeys(MOMENT_KEYS, Fraction(0))
            moments.update(k0=Fraction(1), m1=Fraction(x), m2=Fraction(x * x))
            return Trace(self.spec, (), Fraction(0), moments, 0, True)
        moments = {key: Fraction(v, self.den) for key, v in self._acc.items()}
        return Trace(self.spec, tuple(self.records), self.survivor_mass, moments, self.k, converged)


def run(spec: GameSpec) -> Trace:
    """Play rounds until the spec's stop rule is satisfied.

    ``FixedRounds(R)`` plays exactly ``R`` rounds.  ``TailTarget(eps, r_max)``
    stops at the first round whose survivor mass is at most ``eps`` (exact
    comparison), or at ``r_max`` with ``converged=False``.
    """
    stop = spec.stop
    if stop is None:
        raise ValueError("run needs a stop rule (FixedRounds or TailTarget)")
    walker = Walker(spec)
    if walker.trivial:
        return walker.trace()
    if isinstance(stop, FixedRounds):
        for _ in range(stop.R):
            walker.step()
        return walker.trace()
    while not walker.survivor_at_most(stop.eps) and walker.k < stop.r_max:
        walker.step()
    return walker.trace(converged=walker.survivor_at_most(stop.eps))


def iter_rounds(spec: GameSpec, R: int) -> Iterator[tuple[RoundRecord, ScaledPoly]]:
    walker = Walker(spec, R)
    if walker.trivial:
        return
    for _ in range(R):
        yield walker.step()


def truncated_pgf(spec: GameSpec, R: int) -> list[tuple[int, ScaledPoly]]:
    """Inductee polynomials ``[(k, N_k)]`` for ``k = 1..R``: ``F_R(t, x) = sum N_k(x) t**k``."""
    if R < 1:
        raise ValueError("R must be >= 1")
    return [(rec.k, poly) for rec, poly in iter_rounds(spec, R)]


@dataclass(frozen=True)
class Guarantee:
    R: int
    converged: bool
    survivor_mass: Fraction
    trace: Trace = field(repr=False)


def rounds_to_guarantee(spec: GameSpec, eps: Fraction | str | float, r_max: int) -> Guarantee:
    """Smallest ``R`` with ``S_R(1) <= eps``, from one incremental run.

    ``spec.stop`` is ignored.  When ``r_max`` rounds are not enough the result
    has ``converged=False`` and carries ``S_{r_max}(1)``.
    """
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    trace = run(spec.with_stop(TailTarget(eps, r_max)))
    return Guarantee(trace.R, trace.converged, trace.survivor_mass, trace)


def dp_reference(spec: GameSpec, K: int) -> float:
    """Floating-point expected-duration estimate ``E_K = sum_{k<K} P(T > k)``.

    Propagates the survivor probabilities ``p(k, n)`` over non-hit sums in
    double precision.  Rounding is uncontrolled; the exact engine is the
    authority.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    die = spec.die
    init = spec.init
    limit = init + die.max_face * K
    sieve = build_sieve(max(limit, 2)) if spec.pred.needs_sieve else None
    if is_hit(init, spec.pred, sieve):
        if not spec.allow_trivial_start:
            raise InvalidStart(f"start {init} already satisfies {spec.pred}")
        return 0.0
    hits = hit_mask(spec.pred, 0, limit, sieve)
    kernel = np.zeros(die.max_face + 1)
    for v, w in die.faces:
        kernel[v] = w / die.W
    p = np.zeros(limit + 1)
    p[init] = 1.0
    expected = 0.0
    for _ in range(K):
        expected += p.sum()
        p = np.convolve(p, kernel)[: limit + 1]
        p[hits] = 0.0
    return float(expected)
