"""Conditional statistics of a finished trace and exact decimal rendering."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .engine import GameSpec, InvalidStart, Trace, Walker

__all__ = [
    "NoHits",
    "Surd",
    "Summary",
    "ConstantEstimate",
    "summarize",
    "render_decimal",
    "render_sqrt",
    "estimate_constant",
    "common_prefix_digits",
    "KURTOSIS_CONVENTION",
    "SKEWNESS_CONVENTION",
]

SKEWNESS_CONVENTION = "mu3/sigma^3"
KURTOSIS_CONVENTION = "mu4/sigma^4 (not excess; excess = kurt - 3)"


class NoHits(ValueError):
    """No game ended within the truncation, so conditional statistics are undefined."""


def _floor_log10(p: int, q: int) -> int:
    """``floor(log10(p / q))`` for positive integers."""
    e = math.floor((p.bit_length() - q.bit_length()) * math.log10(2))

    def at_least(e: int) -> bool:  # p / q >= 10**e
        return p >= q * 10**e if e >= 0 else p * 10**-e >= q

    while not at_least(e):
        e -= 1
    while at_least(e + 1):
        e += 1
    return e


def _format(negative: bool, digits_str: str, e: int) -> str:
    """Lay out ``0.d1d2... * 10**(e+1)``, i.e. leading digit at ``10**e``."""
    n = len(digits_str)
    sign = "-" if negative else ""
    if -4 <= e < n:
        if e >= 0:
            whole, frac = digits_str[: e + 1], digits_str[e + 1 :]
        else:
            whole, frac = "0", "0" * (-e - 1) + digits_str
        return sign + whole + ("." + frac if frac else "")
    mant = digits_str[0] + ("." + digits_str[1:] if n > 1 else "")
    return f"{sign}{mant}e{e:+d}"


def _finish(negative: bool, N: int, e: int, digits: int) -> str:
    if N == 10**digits:
        N //= 10
        e += 1
    return _format(negative, str(N), e)


def render_decimal(x: Fraction | int, digits: int) -> str:
    """``x`` correctly rounded (half-even) to ``digits`` significant digits.

    Fixed notation for ``1e-4 <= |x| < 10**digits``, scientific otherwise.
    """
    if digits < 1:
        raise ValueError("digits must be >= 1")
    x = Fraction(x)
    if x == 0:
        return "0"
    p, q = abs(x.numerator), x.denominator
    e = _floor_log10(p, q)
    s = digits - 1 - e
    if s >= 0:
        num, den = p * 10**s, q
    else:
        num, den = p, q * 10**-s
    N, r = divmod(num, den)
    if 2 * r > den or (2 * r == den and N % 2 == 1):
        N += 1
    return _finish(x < 0, N, e, digits)


def render_sqrt(square: Fraction, digits: int, negative: bool = False) -> str:
    """``±sqrt(square)`` correctly rounded to ``digits`` significant digits, via integer roots."""
    if digits < 1:
        raise ValueError("digits must be >= 1")
    square = Fraction(square)
    if square < 0:
        raise ValueError("cannot take the square root of a negative number")
    if square == 0:
        return "0"
    p, q = square.numerator, square.denominator
    e = _floor_log10(p, q) // 2
    s = digits - 1 - e
    # y = sqrt(square) * 10**s; need round-half-even(y).
    if s >= 0:
        num, den = 4 * p * 10 ** (2 * s), q
    else:
        num, den = 4 * p, q * 10 ** (-2 * s)
    t = math.isqrt(num // den)  # floor(2y)
    N = t // 2
    if t % 2 == 1:
        tie = num % den == 0 and t * t == num // den
        if not tie or N % 2 == 1:
            N += 1
    return _finish(negative, N, e, digits)


@dataclass(frozen=True)
class Surd:
    """``sign * sqrt(square)`` with an exact rational ``square``."""

    sign: int
    square: Fraction

    def decimal(self, digits: int) -> str:
        return render_sqrt(self.square, digits, negative=self.sign < 0)

    def __float__(self) -> float:
        return self.sign * math.sqrt(self.square)


Value = Fraction | Surd | None

# Order of reported quantities; shared by every output format.
FIELDS = ("a_R", "tail", "M", "L_abs", "L_rel", "var_T", "skew_T", "kurt_T", "var_N", "cov", "corr")


@dataclass(frozen=True)
class Summary:
    """Statistics of the duration ``T`` and final sum ``N`` conditioned on ``T <= R``.

    ``skew_T`` and ``corr`` are irrational in general and are carried as
    :class:`Surd`; undefined quantities (zero variance) are ``None``.
    """

    R: int
    digits: int
    a_R: Fraction
    tail: Fraction
    M: Fraction
    L_abs: Fraction
    L_rel: Fraction
    var_T: Fraction
    skew_T: Surd | None
    kurt_T: Fraction | None
    var_N: Fraction
    cov: Fraction
    corr: Surd | None
    partial_E_T: Fraction = field(repr=False)
    converged: bool = True

    def value(self, name: str) -> Value:
        return getattr(self, name)

    def decimal(self, name: str, digits: int | None = None) -> str | None:
        v = self.value(name)
        digits = digits or self.digits
        if v is None:
            return None
        if isinstance(v, Surd):
            return v.decimal(digits)
        return render_decimal(v, digits)

    def decimals(self) -> dict[str, str | None]:
        return {name: self.decimal(name) for name in FIELDS}


def summarize(trace: Trace, digits: int = 30) -> Summary:
    """Conditional moments of the truncated game from the trace's raw sums."""
    m = trace.moments
    a = m["k0"]
    if a == 0:
        raise NoHits(f"no hits within {trace.R} rounds")
    mean = m["k1"] / a
    e2, e3, e4 = m["k2"] / a, m["k3"] / a, m["k4"] / a
    var_t = e2 - mean**2
    mu3 = e3 - 3 * mean * e2 + 2 * mean**3
    mu4 = e4 - 4 * mean * e3 + 6 * mean**2 * e2 - 3 * mean**4
    loc = m["m1"] / a
    var_n = m["m2"] / a - loc**2
    cov = m["km1"] / a - mean * loc
    if var_t > 0:
        skew = Surd((mu3 > 0) - (mu3 < 0), mu3**2 / var_t**3)
        kurt = mu4 / var_t**2
    else:
        skew = kurt = None
    if var_t > 0 and var_n > 0:
        corr = Surd((cov > 0) - (cov < 0), cov**2 / (var_t * var_n))
    else:
        corr = None
    return Summary(
        R=trace.R,
        digits=digits,
        a_R=a,
        tail=1 - a,
        M=mean,
        L_abs=loc,
        L_rel=loc - trace.spec.init,
        var_T=var_t,
        skew_T=skew,
        kurt_T=kurt,
        var_N=var_n,
        cov=cov,
        corr=corr,
        partial_E_T=m["k1"],
        converged=trace.converged,
    )


def common_prefix_digits(a: str, b: str) -> int:
    """Number of significant digits two renderings share before diverging."""
    count = 0
    started = False
    for ca, cb in zip(a, b):
        if ca != cb:
            break
        if ca.isdigit():
            if ca != "0":
                started = True
            if started:
                count += 1
        elif ca in "eE":
            break
    return count


@dataclass(frozen=True)
class ConstantEstimate:
    value: str
    R: int
    R_check: int
    converged: bool
    agreeing_digits: int


_GUARD = 5


def estimate_constant(
    spec: GameSpec,
    digits: int,
    r0: int = 200,
    quantity: str = "M",
    r_cap: int = 12800,
) -> ConstantEstimate:
    """Estimate ``lim M_R`` (or ``L_R`` with ``quantity="L_abs"``) by doubling ``R``.

    Stops once the renderings of the quantity at ``R`` and ``2R`` agree on at
    least ``digits + 1`` significant digits; the extra agreeing digit is a
    guard band and is not reported.  All rounds come from one incremental run.
    """
    if digits < 1 or r0 < 1:
        raise ValueError("digits and r0 must be >= 1")
    if quantity not in ("M", "L_abs", "L_rel"):
        raise ValueError(f"cannot estimate {quantity!r}")
    walker = Walker(spec.with_stop(None), rounds_hint=min(2 * r0, r_cap))
    if walker.trivial:
        raise InvalidStart("estimate_constant needs a start off the target")
    width = digits + _GUARD

    def value_at(R: int) -> Fraction:
        while walker.k < R:
            walker.step()
        return summarize(walker.trace(), width).value(quantity)

    R = r0
    prev = value_at(R)
    agree = 0
    while 2 * R <= r_cap:
        cur = value_at(2 * R)
        agree = common_prefix_digits(render_decimal(prev, width), render_decimal(cur, width))
        if agree >= digits + 1:
            return ConstantEstimate(render_decimal(prev, digits), R, 2 * R, True, agree)
        R *= 2
        prev = cur
    partial = render_decimal(prev, max(agree - 1, 1))
    return ConstantEstimate(partial, R, R, False, agree)
