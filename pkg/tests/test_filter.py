import math

import numpy as np
import pytest
from scipy import integrate

from quasiprob.errors import FilterConvergenceError
from quasiprob.filter import (
    EXACT_NORMALIZATION,
    autocorrelation,
    build_filter_profile,
    filter_value,
    omega_base,
)


def test_normalization_matches_closed_form(profile13):
    assert profile13.quadrature_error <= 1e-12
    assert profile13.normalization == pytest.approx(EXACT_NORMALIZATION, rel=1e-12)


def test_origin_value_is_one(profile13):
    assert filter_value(profile13, 0.0) == 1.0


def test_vanishes_beyond_cutoff(profile13):
    assert profile13.b_cut == pytest.approx(5.2)
    assert filter_value(profile13, 5.2) <= 1e-15
    assert filter_value(profile13, 5.2001) == 0.0
    assert filter_value(profile13, -100.0) == 0.0


def test_profile_is_even_positive_and_non_increasing(profile13):
    b = np.linspace(0.0, profile13.b_cut, 501)
    values = filter_value(profile13, b)
    assert np.array_equal(values, filter_value(profile13, -b))
    assert np.all(profile13.values > 0)
    assert np.all(np.diff(profile13.values) <= 1e-15)
    assert np.all(values <= 1.0 + 1e-15)


def test_width_scaling_law():
    narrow = build_filter_profile(1.3)
    wide = build_filter_profile(1.7)
    b = np.linspace(0.0, 5.0, 97)
    assert np.allclose(filter_value(narrow, b), filter_value(wide, b * 1.7 / 1.3), atol=1e-10, rtol=0)


def test_unit_autocorrelation_against_adaptive_quadrature():
    r = 1.1

    def integrand(y, x):
        return math.exp(-((x * x + y * y) ** 2) - (((x + r) ** 2 + y * y) ** 2))

    reference, _ = integrate.dblquad(integrand, -3.5, 3.5, -3.5, 3.5, epsabs=1e-13, epsrel=1e-11)
    assert autocorrelation([r])[0] == pytest.approx(reference, rel=1e-8)


def test_refined_rule_agrees():
    r = np.array([0.0, 1.0, 2.0])
    base = autocorrelation(r)
    fine = autocorrelation(r, refinement=4)
    assert np.allclose(base, fine, rtol=1e-12, atol=1e-18)
    assert abs(base[1] / base[0] - fine[1] / fine[0]) <= 1e-10


def test_omega_base():
    assert omega_base(0.0) == 1.0
    assert omega_base(1.0) == pytest.approx(math.exp(-1.0))


@pytest.mark.parametrize("w", [0.0, -1.0, float("nan")])
def test_invalid_width_rejected(w):
    with pytest.raises(ValueError):
        build_filter_profile(w)


def test_unconverged_quadrature_raises(monkeypatch):
    import quasiprob.filter as filter_module

    monkeypatch.setattr(filter_module, "EXACT_NORMALIZATION", EXACT_NORMALIZATION * (1 + 1e-6))
    filter_module._unit_profile.cache_clear()
    try:
        with pytest.raises(FilterConvergenceError):
            build_filter_profile(1.0, n_nodes=128)
    finally:
        filter_module._unit_profile.cache_clear()
