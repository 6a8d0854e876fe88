from decimal import Decimal, localcontext
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from dicehit.engine import FixedRounds, GameSpec, run
from dicehit.polyring import DieSpec
from dicehit.predicates import PredicateSpec
from dicehit.stats import (
    NoHits,
    common_prefix_digits,
    estimate_constant,
    render_decimal,
    render_sqrt,
    summarize,
)

from oracles import conditional_moments, enumerate_paths, oracle_hit

PRIME = PredicateSpec.prime()


def fair_prime(R):
    return run(GameSpec(DieSpec.fair(6), PRIME, 0, FixedRounds(R)))


def test_render_examples():
    assert render_decimal(F(2, 9), 10) == "0.2222222222"
    assert render_decimal(F(1, 2), 3) == "0.500"
    assert render_decimal(F(-1, 3), 2) == "-0.33"
    assert render_decimal(0, 5) == "0"
    assert render_decimal(F(5, 10**5), 2) == "5.0e-5"
    assert render_decimal(F(1, 10**4), 1) == "0.0001"
    assert render_decimal(12345, 3) == "1.23e+4"
    assert render_decimal(F(999, 1), 3) == "999"
    assert render_decimal(F(9999, 10), 3) == "1.00e+3"
    assert render_decimal(F(9996, 10), 3) == "1.00e+3"
    assert render_decimal(F(2, 1), 5) == "2.0000"


def test_render_half_even():
    assert render_decimal(F(125, 1000), 2) == "0.12"
    assert render_decimal(F(135, 1000), 2) == "0.14"
    assert render_decimal(F(25, 1), 1) == "2e+1"
    assert render_decimal(F(35, 1), 1) == "4e+1"


def test_render_tail_at_200():
    tail = summarize(fair_prime(200)).tail
    assert render_decimal(tail, 14) == "2.9020152044089e-19"


def _decimal_reference(x: F, digits: int) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = digits
        return Decimal(x.numerator) / Decimal(x.denominator)


fractions = st.fractions(min_value=F(-(10**9)), max_value=F(10**9)).filter(lambda x: x != 0)


@given(fractions, st.integers(1, 40))
def test_render_matches_decimal_module(x, digits):
    # decimal division is correctly rounded half-even at the context precision
    assert Decimal(render_decimal(x, digits)) == _decimal_reference(x, digits)


@given(fractions, st.integers(1, 40))
def test_render_round_trip(x, digits):
    back = F(Decimal(render_decimal(x, digits)))
    assert abs(back - x) < F(10) ** (1 - digits) * abs(x)


@given(st.fractions(min_value=F(1, 10**12), max_value=F(10**12)), st.integers(1, 30))
def test_render_sqrt_matches_decimal_module(x, digits):
    with localcontext() as ctx:
        ctx.prec = digits + 60
        root = (Decimal(x.numerator) / Decimal(x.denominator)).sqrt()
        ctx.prec = digits
        expected = +root  # half-even rounding to the context precision
    assert Decimal(render_sqrt(x, digits)) == expected


def test_render_sqrt_exact_ties():
    # sqrt(2.25) = 1.5 exactly; half-even to one digit gives 2
    assert render_sqrt(F(9, 4), 1) == "2"
    assert render_sqrt(F(25, 4), 1) == "2"  # 2.5 -> 2
    assert render_sqrt(F(4), 3) == "2.00"
    assert render_sqrt(F(1, 100), 2, negative=True) == "-0.10"


def test_hand_derived_two_rounds():
    s = summarize(fair_prime(2))
    assert s.a_R == F(1, 2) + F(2, 9) == F(13, 18)
    assert s.M == (1 * F(1, 2) + 2 * F(2, 9)) / F(13, 18) == F(17, 13)


def test_deterministic_duration():
    s = summarize(run(GameSpec(DieSpec(((1, 1),)), PRIME, 0, FixedRounds(7))))
    assert s.M == 2 and s.var_T == 0
    assert s.skew_T is None and s.kurt_T is None and s.corr is None
    assert s.decimal("skew_T") is None


def test_no_hits():
    with pytest.raises(NoHits):
        summarize(run(GameSpec(DieSpec(((4, 1), (6, 1))), PRIME, 0, FixedRounds(20))))


@pytest.mark.parametrize(
    "die,pred,init,R",
    [
        (DieSpec.fair(6), PRIME, 0, 6),
        (DieSpec.parse("1:2,2:1,4:1"), PredicateSpec.distinct_prime_product(2), 0, 8),
        (DieSpec.fair(3), PredicateSpec.perfect_square(), 5, 7),
    ],
)
def test_summary_matches_enumeration(die, pred, init, R):
    law = enumerate_paths(die.faces, lambda n: oracle_hit(n, pred.kind, pred.k), init, R)
    ref = conditional_moments(law)
    s = summarize(run(GameSpec(die, pred, init, FixedRounds(R))))
    assert s.a_R == ref["a"] and s.tail == 1 - ref["a"]
    assert s.M == ref["M"] and s.L_abs == ref["L"] and s.L_rel == ref["L"] - init
    # variance both ways: E[T^2] - E[T]^2 (summary) versus sum (k - M)^2 p (oracle)
    assert s.var_T == ref["var_T"]
    assert s.var_N == ref["var_N"] and s.cov == ref["cov"]
    assert s.skew_T.square == ref["mu3"] ** 2 / ref["var_T"] ** 3
    assert s.skew_T.sign == (ref["mu3"] > 0) - (ref["mu3"] < 0)
    assert s.kurt_T == ref["mu4"] / ref["var_T"] ** 2
    assert s.corr.square == ref["cov"] ** 2 / (ref["var_T"] * ref["var_N"])
    assert s.corr.square <= 1


def test_invariants_at_200():
    s = summarize(fair_prime(200), 20)
    assert s.a_R + s.tail == 1 and 0 <= s.a_R <= 1
    assert s.var_T >= 0 and s.var_N >= 0
    assert s.corr.square <= 1
    assert s.decimal("corr").startswith("0.965644")


def test_a_R_monotone():
    values = [summarize(fair_prime(R)).a_R for R in (1, 2, 5, 10, 40)]
    assert values == sorted(values)


def test_common_prefix_digits():
    assert common_prefix_digits("2.4284", "2.4285") == 4
    assert common_prefix_digits("0.00123", "0.00124") == 2
    assert common_prefix_digits("1.5e-7", "1.5e-8") == 2


def test_estimate_constant_deterministic():
    est = estimate_constant(GameSpec(DieSpec(((1, 1),)), PRIME), 12, r0=10)
    assert est.value == "2.00000000000" and est.R == 10 and est.converged


def test_estimate_constant_twenty_digits():
    est = estimate_constant(GameSpec(DieSpec.fair(6), PRIME), 20)
    assert est.value == "2.4284979136935042304"
    assert est.converged and est.R_check == 2 * est.R


def test_estimate_constant_gives_up():
    est = estimate_constant(GameSpec(DieSpec.fair(6), PRIME), 40, r0=5, r_cap=40)
    assert not est.converged
