import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fdrbounds.bounds import (
    RateExponents,
    grouped_feasible,
    iid_location_feasible,
    kappa_star,
    lehmann_gamma_lower,
    scale_sigma_lower,
    spiked_feasible,
)
from fdrbounds.exceptions import ParameterError, PreconditionError

FEASIBLE = RateExponents(0.5, 0.8, 0.1, 0.01)
INFEASIBLE = RateExponents(0.5, 0.8, 0.3, 0.1)


@st.composite
def exponents(draw):
    s = draw(st.floats(0.01, 0.97))
    r = draw(st.floats(s + 0.01, 0.99))
    return RateExponents(s, r, draw(st.floats(0, 2)), draw(st.floats(0, 2)))


def test_kappa_star_values():
    assert kappa_star(0.5, 0.8) == pytest.approx(0.028125, abs=1e-15)
    assert kappa_star(0.7, 0.8) == pytest.approx(0.003125, abs=1e-15)
    assert kappa_star(0.6, 0.6) == 0.0
    with pytest.raises(ParameterError):
        kappa_star(0.8, 0.5)


def test_exponent_validation():
    with pytest.raises(ParameterError):
        RateExponents(0.8, 0.5)
    with pytest.raises(ParameterError):
        RateExponents(0.2, 0.5, kappa_alpha=-0.1)


def test_iid_feasible_example():
    res = iid_location_feasible(FEASIBLE)
    oracle = mpmath.sqrt(0.8) - mpmath.sqrt(0.6) - mpmath.sqrt(0.01)
    assert res.feasible
    assert res.slack == pytest.approx(float(oracle), abs=1e-14)
    assert res.slack == pytest.approx(0.01983, abs=1e-5)


def test_iid_infeasible_example():
    res = iid_location_feasible(INFEASIBLE)
    # sqrt(s + kappa_alpha) = sqrt(r) here, so only -sqrt(0.1) remains
    assert not res.feasible
    assert res.slack == pytest.approx(-float(mpmath.sqrt(0.1)), abs=1e-14)


@given(exponents())
def test_kappa_star_clause_implied_by_slack(e):
    # sqrt(r) >= sqrt(s + ka) + sqrt(kb) already forces min(ka, kb) <= kappa*
    res = iid_location_feasible(e)
    if res.slack > 1e-9:
        assert res.feasible
    if res.slack >= 0:
        assert min(e.kappa_alpha, e.kappa_beta) <= kappa_star(e.s, e.r) + 1e-9


@given(st.floats(0.01, 0.97), st.data())
def test_zero_decay_always_feasible(s, data):
    r = data.draw(st.floats(s + 0.01, 0.99))
    assert iid_location_feasible(RateExponents(s, r)).feasible


@given(exponents())
def test_spiked_zero_correlation_reduces_exactly(e):
    assert spiked_feasible(e, 0.0, 0.0).slack == iid_location_feasible(e).slack


def test_spiked_zero_correlation_many_tuples():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        s = rng.uniform(0.01, 0.9)
        e = RateExponents(s, rng.uniform(s + 0.01, 0.99), *rng.uniform(0, 1, size=2))
        assert spiked_feasible(e, 0.0, 0.0).slack == iid_location_feasible(e).slack


def test_spiked_example_flips_to_feasible():
    res = spiked_feasible(INFEASIBLE, 0.75, 0.75)
    oracle = mpmath.sqrt(0.8) - mpmath.sqrt(0.25) * mpmath.sqrt(0.8) - mpmath.sqrt(0.25) * mpmath.sqrt(0.1)
    assert res.feasible
    assert res.slack == pytest.approx(float(oracle), abs=1e-14)
    assert res.slack == pytest.approx(0.28910, abs=1e-5)


@given(exponents())
def test_spiked_near_full_correlation_feasible(e):
    assert spiked_feasible(e, 1 - 1e-9, 1 - 1e-9).feasible


def test_grouped_examples():
    for e in (FEASIBLE, INFEASIBLE, RateExponents(0.5, 0.8)):
        assert grouped_feasible(e, 0.1).slack == iid_location_feasible(e).slack
    assert grouped_feasible(FEASIBLE, 0.1).feasible
    assert not grouped_feasible(INFEASIBLE, 0.1).feasible
    with pytest.raises(ParameterError):
        grouped_feasible(FEASIBLE, 0.5)


@given(exponents(), st.floats(0.001, 0.5))
def test_slack_monotone(e, step):
    base = iid_location_feasible(e).slack
    bumped = [
        RateExponents(e.s, e.r, e.kappa_alpha + step, e.kappa_beta),
        RateExponents(e.s, e.r, e.kappa_alpha, e.kappa_beta + step),
    ]
    for b in bumped:
        assert iid_location_feasible(b).slack <= base
    if e.r + step < 1:
        assert iid_location_feasible(RateExponents(e.s, e.r + step, e.kappa_alpha,
                                                   e.kappa_beta)).slack >= base
    if e.s + step < e.r:
        assert iid_location_feasible(RateExponents(e.s + step, e.r, e.kappa_alpha,
                                                   e.kappa_beta)).slack <= base
    assert spiked_feasible(e, 0.2, 0.3).slack <= spiked_feasible(e, 0.2 + step / 2, 0.3).slack
    assert spiked_feasible(e, 0.2, 0.3).slack <= spiked_feasible(e, 0.2, 0.3 + step / 2).slack


def test_scale_sigma_example():
    value = scale_sigma_lower(0.5, 0.01, 0.01, 100, 0.25)
    pi2 = 2 * mpmath.pi
    oracle = (1 / (mpmath.sqrt(pi2) * 32)) / mpmath.mpf("0.02") * mpmath.sqrt(
        mpmath.log(10**4) + 2 * mpmath.log(50)
    )
    assert value == pytest.approx(float(oracle), rel=1e-12)
    assert value == pytest.approx(2.5728, abs=1e-4)


def test_scale_sigma_precondition_and_surrogate():
    with pytest.raises(PreconditionError):
        scale_sigma_lower(0.5, 0.05, 0.01, 100, 0.25)
    weak = scale_sigma_lower(0.5, 0.01, 1.0, 100, 0.25, strict=False)
    assert weak < scale_sigma_lower(0.5, 0.01, 0.01, 100, 0.25) / 40
    assert scale_sigma_lower(0.5, 0.01, 0.01, 100, 0.25, eta=0.5) == pytest.approx(
        0.5 * scale_sigma_lower(0.5, 0.01, 0.01, 100, 0.25)
    )


def test_scale_sigma_monotone():
    base = scale_sigma_lower(0.5, 0.005, 0.005, 100, 0.25)
    assert scale_sigma_lower(0.6, 0.005, 0.005, 100, 0.25) > base
    assert scale_sigma_lower(0.5, 0.008, 0.005, 100, 0.25) < base
    assert scale_sigma_lower(0.5, 0.005, 0.008, 100, 0.25) < base


def test_scale_sigma_asymptotic_trend():
    # with alpha = beta = n**-0.7 the bound tracks n**0.7 * sqrt(2 (s + 0.7) log n)
    ratios = []
    for n in (1e3, 1e4, 1e5):
        m = round(n ** 0.8)
        s_n = math.log(n / m) / math.log(n)
        v = scale_sigma_lower(s_n, n ** -0.7, n ** -0.7, m, 0.25)
        ratios.append(v / (n ** 0.7 * math.sqrt(2 * 0.9 * math.log(n))))
    assert max(ratios) / min(ratios) < 1.25


def test_lehmann_example():
    res = lehmann_gamma_lower(0.001, 0.01, 0.25, 100, 10_000)
    t = mpmath.mpf("0.12") + mpmath.mpf("0.01") + mpmath.sqrt(3 * 32 * mpmath.mpf("0.01") / 25)
    inv = (1 - t) / t * mpmath.log(
        mpmath.mpf("0.25") / (3 * mpmath.mpf("0.01") * mpmath.mpf("0.001"))
        / (1 + 4 * mpmath.log(12))
    )
    assert res.t == pytest.approx(float(t), rel=1e-12)
    assert res.t == pytest.approx(0.32596, abs=1e-5)
    assert res.inv_gamma_lb == pytest.approx(float(inv), rel=1e-12)


def test_lehmann_vacuous_limit_and_errors():
    with pytest.raises(PreconditionError):
        lehmann_gamma_lower(0.1, 0.01, 0.25, 100, 10_000)
    with pytest.raises(PreconditionError):
        lehmann_gamma_lower(0.001, 0.25 / 3, 0.25, 100, 10_000)
    # as beta grows toward the vacuous edge the bound shrinks toward 0
    values = [lehmann_gamma_lower(0.001, b, 0.25, 10**4, 10**6).inv_gamma_lb
              for b in (0.01, 0.03, 0.05, 0.07)]
    assert values == sorted(values, reverse=True)
    assert values[-1] < 0.2 * values[0]


def test_lehmann_monotone_trend():
    grid = [(a, b) for a in (1e-4, 1e-3, 5e-3) for b in (0.002, 0.005, 0.01)]
    table = {ab: lehmann_gamma_lower(*ab, 0.25, 100, 10_000).inv_gamma_lb for ab in grid}
    for a in (1e-4, 1e-3, 5e-3):
        col = [table[(a, b)] for b in (0.002, 0.005, 0.01)]
        assert col == sorted(col, reverse=True)
    for b in (0.002, 0.005, 0.01):
        row = [table[(a, b)] for a in (1e-4, 1e-3, 5e-3)]
        assert row == sorted(row, reverse=True)
