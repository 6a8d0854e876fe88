"""Number classes that end the game, and the sieve that decides them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "PredicateSpec",
    "FactorSieve",
    "SieveTooSmall",
    "build_sieve",
    "is_hit",
    "hit_mask",
    "parse_predicate",
]

PRIME = "prime"
DISTINCT_PRIME_PRODUCT = "distinct-prime-product"
PERFECT_SQUARE = "perfect-square"
ODD = "odd"
EVEN = "even"
NEVER = "never"

_KINDS = (PRIME, DISTINCT_PRIME_PRODUCT, PERFECT_SQUARE, ODD, EVEN, NEVER)


class SieveTooSmall(ValueError):
    """Raised when a factorization-based predicate is asked about n > limit."""


@dataclass(frozen=True)
class PredicateSpec:
    kind: str
    k: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown predicate kind {self.kind!r}")
        if self.kind == DISTINCT_PRIME_PRODUCT:
            if self.k is None or self.k < 2:
                raise ValueError("distinct-prime-product needs k >= 2")
        elif self.k is not None:
            raise ValueError(f"{self.kind} takes no parameter")

    @classmethod
    def prime(cls) -> PredicateSpec:
        return cls(PRIME)

    @classmethod
    def distinct_prime_product(cls, k: int) -> PredicateSpec:
        return cls(DISTINCT_PRIME_PRODUCT, k)

    @classmethod
    def perfect_square(cls) -> PredicateSpec:
        return cls(PERFECT_SQUARE)

    @property
    def needs_sieve(self) -> bool:
        return self.kind in (PRIME, DISTINCT_PRIME_PRODUCT)

    @property
    def name(self) -> str:
        if self.kind == DISTINCT_PRIME_PRODUCT:
            return f"{self.kind}:{self.k}"
        return self.kind

    def __str__(self) -> str:
        return self.name


def parse_predicate(text: str) -> PredicateSpec:
    """Parse a CLI predicate string such as ``prime`` or ``distinct-prime-product:3``."""
    text = text.strip().lower()
    if text == "semiprime":
        return PredicateSpec(DISTINCT_PRIME_PRODUCT, 2)
    if text.startswith(DISTINCT_PRIME_PRODUCT + ":"):
        _, _, k = text.partition(":")
        try:
            return PredicateSpec(DISTINCT_PRIME_PRODUCT, int(k))
        except ValueError as exc:
            raise ValueError(f"bad predicate {text!r}: {exc}") from None
    if text in _KINDS and text != DISTINCT_PRIME_PRODUCT:
        return PredicateSpec(text)
    raise ValueError(
        f"unknown predicate {text!r}; expected one of prime, semiprime, "
        "distinct-prime-product:K, perfect-square, odd, even, never"
    )


@dataclass(frozen=True)
class FactorSieve:
    """Smallest-prime-factor table for ``0 <= n <= limit``.

    ``spf[0]`` and ``spf[1]`` are 0; for ``n >= 2`` the entry is the smallest
    prime dividing ``n``.
    """

    limit: int
    spf: np.ndarray = field(repr=False)

    def smallest_prime_factor(self, n: int) -> int:
        self._check(n)
        if n < 2:
            raise ValueError(f"{n} has no prime factor")
        return int(self.spf[n])

    def factorize(self, n: int) -> list[int]:
        """Prime factors of ``n`` with multiplicity, ascending."""
        self._check(n)
        out = []
        while n > 1:
            p = int(self.spf[n])
            out.append(p)
            n //= p
        return out

    def _check(self, n: int) -> None:
        if n > self.limit:
            raise SieveTooSmall(f"{n} exceeds sieve limit {self.limit}")

    @cached_property
    def is_prime(self) -> np.ndarray:
        n = np.arange(self.limit + 1)
        out = self.spf == n
        out[:2] = False
        return out

    @cached_property
    def omega(self) -> np.ndarray:
        """Number of distinct prime factors of each n."""
        out = np.zeros(self.limit + 1, dtype=np.int16)
        for p in np.flatnonzero(self.is_prime):
            out[p::p] += 1
        return out

    @cached_property
    def squarefree(self) -> np.ndarray:
        out = np.ones(self.limit + 1, dtype=bool)
        out[0] = False
        for p in np.flatnonzero(self.is_prime):
            sq = int(p) * int(p)
            if sq > self.limit:
                break
            out[sq::sq] = False
        return out


def build_sieve(limit: int) -> FactorSieve:
    if limit < 2:
        raise ValueError(f"sieve limit must be >= 2, got {limit}")
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p]:
            continue
        block = spf[p * p :: p]
        block[block == 0] = p
    rest = np.flatnonzero(spf == 0)
    spf[rest] = rest
    spf[:2] = 0
    spf.setflags(write=False)
    return FactorSieve(limit, spf)


def is_hit(n: int, pred: PredicateSpec, sieve: FactorSieve | None = None) -> bool:
    """Whether the running sum ``n`` ends the game under ``pred``."""
    kind = pred.kind
    if kind == NEVER:
        return False
    if kind == ODD:
        return n % 2 == 1
    if kind == EVEN:
        return n % 2 == 0
    if kind == PERFECT_SQUARE:
        return n >= 0 and math.isqrt(n) ** 2 == n
    if sieve is None:
        raise SieveTooSmall(f"predicate {pred} needs a sieve")
    sieve._check(n)
    if n < 2:
        return False
    if kind == PRIME:
        return bool(sieve.spf[n] == n)
    return bool(sieve.squarefree[n]) and int(sieve.omega[n]) == pred.k


def hit_mask(pred: PredicateSpec, lo: int, hi: int, sieve: FactorSieve | None = None) -> np.ndarray:
    """Boolean array over ``lo..hi`` (inclusive) marking hits; vectorised ``is_hit``."""
    if hi < lo:
        return np.zeros(0, dtype=bool)
    kind = pred.kind
    if kind == NEVER:
        return np.zeros(hi - lo + 1, dtype=bool)
    if kind in (ODD, EVEN):
        n = np.arange(lo, hi + 1)
        return (n % 2 == 1) if kind == ODD else (n % 2 == 0)
    if kind == PERFECT_SQUARE:
        out = np.zeros(hi - lo + 1, dtype=bool)
        m = math.isqrt(lo)
        if m * m < lo:
            m += 1
        while m * m <= hi:
            out[m * m - lo] = True
            m += 1
        return out
    if sieve is None or hi > sieve.limit:
        raise SieveTooSmall(f"{hi} exceeds sieve limit {sieve.limit if sieve else None}")
    if kind == PRIME:
        return sieve.is_prime[lo : hi + 1].copy()
    return sieve.squarefree[lo : hi + 1] & (sieve.omega[lo : hi + 1] == pred.k)
