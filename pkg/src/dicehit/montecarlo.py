"""Seeded simulation of the game, used as an independent check on the exact engine."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .engine import GameSpec, InvalidStart
from .predicates import build_sieve, hit_mask, is_hit

__all__ = ["SimResult", "simulate", "GENERATOR", "CHUNK"]

GENERATOR = "numpy PCG64, streams spawned from SeedSequence(seed) per chunk"
# Trials are split into fixed-size chunks, each with its own spawned stream,
# so results do not depend on the number of workers.
CHUNK = 1 << 16


@dataclass(frozen=True)
class SimResult:
    trials: int
    hits: int
    sum_T: int
    sum_T2: int
    sum_N: int
    seed: int
    cap: int

    @property
    def hit_fraction(self) -> float:
        return self.hits / self.trials

    @property
    def mean_T(self) -> float:
        return self.sum_T / self.hits if self.hits else math.nan

    @property
    def var_T(self) -> float:
        """Population variance of the duration over terminating trials."""
        if not self.hits:
            return math.nan
        return float(Fraction(self.hits * self.sum_T2 - self.sum_T**2, self.hits**2))

    @property
    def mean_N(self) -> float:
        return self.sum_N / self.hits if self.hits else math.nan

    @property
    def std_error(self) -> float:
        """Normal-approximation standard error of ``mean_T``."""
        if not self.hits:
            return math.nan
        return math.sqrt(self.var_T / self.hits)

    def as_dict(self) -> dict:
        def num(x: float):
            return None if math.isnan(x) else x

        return {
            "trials": self.trials,
            "hits": self.hits,
            "hit_fraction": self.hit_fraction,
            "mean_T": num(self.mean_T),
            "var_T": num(self.var_T),
            "std_error_T": num(self.std_error),
            "mean_N": num(self.mean_N),
            "cap": self.cap,
            "seed": self.seed,
            "generator": GENERATOR,
        }


def _run_chunk(seq: np.random.SeedSequence, n: int, spec: GameSpec, cap: int, table: np.ndarray):
    rng = np.random.Generator(np.random.PCG64(seq))
    values = np.array([v for v, _ in spec.die.faces], dtype=np.int64)
    cumulative = np.cumsum([w for _, w in spec.die.faces])
    W = int(cumulative[-1])
    sums = np.full(n, spec.init, dtype=np.int64)
    alive = np.arange(n)
    hits = sum_t = sum_t2 = sum_n = 0
    for r in range(1, cap + 1):
        if len(alive) == 0:
            break
        u = rng.integers(0, W, size=len(alive))
        sums[alive] += values[np.searchsorted(cumulative, u, side="right")]
        done = table[sums[alive]]
        n_done = int(done.sum())
        if n_done:
            hits += n_done
            sum_t += r * n_done
            sum_t2 += r * r * n_done
            sum_n += int(sums[alive[done]].sum())
            alive = alive[~done]
    return hits, sum_t, sum_t2, sum_n


def simulate(spec: GameSpec, trials: int, cap: int, seed: int, workers: int = 1) -> SimResult:
    """Play ``trials`` independent games, each cut off after ``cap`` rolls.

    Faces are drawn with one uniform integer in ``[0, W)`` per roll, so face
    probabilities are exactly ``weight / W``.  Statistics cover terminating
    trials only, matching the conditional quantities of the exact engine at
    ``R = cap``.
    """
    if trials < 1 or cap < 1:
        raise ValueError("trials and cap must be >= 1")
    limit = spec.init + spec.die.max_face * cap
    sieve = build_sieve(max(limit, 2)) if spec.pred.needs_sieve else None
    if is_hit(spec.init, spec.pred, sieve):
        raise InvalidStart(f"start {spec.init} already satisfies {spec.pred}")
    table = hit_mask(spec.pred, 0, limit, sieve)
    sizes = [min(CHUNK, trials - i) for i in range(0, trials, CHUNK)]
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(seqs, sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _run_chunk(job[0], job[1], spec, cap, table), jobs))
    else:
        parts = [_run_chunk(s, n, spec, cap, table) for s, n in jobs]
    h, t, t2, nn = (sum(col) for col in zip(*parts))
    return SimResult(trials, h, t, t2, nn, seed, cap)
