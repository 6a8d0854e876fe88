"""Exact distribution of the number of die rolls needed for a running sum to
land in a number class (primes, distinct-prime products, squares, ...)."""

__version__ = "0.1.0"

from .engine import (
    FixedRounds,
    GameSpec,
    InvalidStart,
    TailTarget,
    Trace,
    dp_reference,
    rounds_to_guarantee,
    run,
    truncated_pgf,
)
from .montecarlo import SimResult, simulate
from .polyring import DieSpec, ScaledPoly, convolve, die_pgf, location_moment, mass, split_by_predicate
from .predicates import PredicateSpec, build_sieve, is_hit, parse_predicate
from .stats import NoHits, Summary, estimate_constant, render_decimal, summarize

__all__ = [
    "DieSpec",
    "FixedRounds",
    "GameSpec",
    "InvalidStart",
    "NoHits",
    "PredicateSpec",
    "ScaledPoly",
    "SimResult",
    "Summary",
    "TailTarget",
    "Trace",
    "build_sieve",
    "convolve",
    "die_pgf",
    "dp_reference",
    "estimate_constant",
    "is_hit",
    "location_moment",
    "mass",
    "parse_predicate",
    "render_decimal",
    "rounds_to_guarantee",
    "run",
    "simulate",
    "split_by_predicate",
    "summarize",
    "truncated_pgf",
]
