#!/usr/bin/env python3
"""
Tests for charge profiles, cut leakage and the transport fits
"""
import math

import numpy as np
import pytest

from circuits import CircuitSpec, apply_layer, build_circuit
from errors import FitUnavailableError, InvalidArgumentError
from statevector_core import SiteBasisSign, init_computational, init_product_x, init_zero_block
from transport import (
    LeakageCurve,
    LeakageEntry,
    charge_profile,
    domain_wall_spread,
    ensemble_domain_wall_slope,
    fit_diffusive_leakage,
    fit_log_log_slope,
    mean_leakage,
    measure_leakage,
)

PLUS, MINUS = SiteBasisSign.PLUS, SiteBasisSign.MINUS


def synthetic_curve(leakage_of):
    entries = [LeakageEntry(m, t, leakage_of(m, t)) for m in range(1, 9) for t in range(1, 61)]
    return LeakageCurve(tuple(entries))


def test_charge_profiles():
    np.testing.assert_allclose(charge_profile(init_computational([0] * 6)), np.ones(6))
    np.testing.assert_allclose(charge_profile(init_product_x([PLUS, MINUS] * 3)), np.zeros(6), atol=1e-15)
    np.testing.assert_allclose(charge_profile(init_computational([1, 1, 1, 0, 0, 0])),
                               [-1, -1, -1, 1, 1, 1])


def test_leakage_starts_at_zero():
    spec = build_circuit(8, 4, 1)
    psi_init = init_product_x([PLUS, MINUS, MINUS, PLUS, PLUS, PLUS, MINUS, PLUS])
    curve = measure_leakage(spec, psi_init, [1, 2, 3, 4], [0, 2, 4])
    frame = curve.to_frame()
    assert len(frame) == 12
    assert (frame[frame["t"] == 0]["leakage"] == 0).all()
    assert ((frame["leakage"] >= 0) & (frame["leakage"] <= 1)).all()


def test_identity_circuit_has_no_leakage():
    spec = CircuitSpec.identity(8, 5)
    curve = measure_leakage(spec, init_product_x([MINUS] * 8), [1, 2, 3], range(6))
    assert all(entry.leakage == 0 for entry in curve.entries)
    assert all(variance == 0 for _, variance in domain_wall_spread(spec, range(6)))


def test_leakage_range_checks():
    spec = build_circuit(6, 3, 0)
    psi_init = init_product_x([PLUS] * 6)
    with pytest.raises(InvalidArgumentError):
        measure_leakage(spec, psi_init, [4], [1])
    with pytest.raises(InvalidArgumentError):
        measure_leakage(spec, psi_init, [1], [4])


def test_total_charge_is_conserved():
    spec = build_circuit(10, 12, 5)
    state = init_zero_block(init_product_x([PLUS, MINUS] * 5), 2)
    total = charge_profile(state).sum()
    for t in range(1, 13):
        apply_layer(state, spec, t)
        assert charge_profile(state).sum() == pytest.approx(total, abs=1e-9)


def test_domain_wall_starts_sharp():
    spread = domain_wall_spread(build_circuit(8, 6, 2), [0, 3, 6])
    assert spread[0] == (0, 0.0)
    assert all(variance > 0 for _, variance in spread[1:])


def test_mean_leakage_averages_per_point():
    first = LeakageCurve((LeakageEntry(1, 1, 0.2), LeakageEntry(1, 2, 0.4)))
    second = LeakageCurve((LeakageEntry(1, 1, 0.4), LeakageEntry(1, 2, 0.0)))
    averaged = mean_leakage([first, second])
    assert [e.leakage for e in averaged.entries] == pytest.approx([0.3, 0.2])
    with pytest.raises(InvalidArgumentError):
        mean_leakage([])


def test_fit_recovers_planted_diffusion_constant():
    fit = fit_diffusive_leakage(synthetic_curve(lambda m, t: math.exp(-3.0 * m * m / t)))
    assert fit.diffusion_coefficient_c == pytest.approx(3.0, abs=1e-6)
    assert fit.exponent_z == pytest.approx(0.5)
    assert fit.num_points >= 8
    assert fit.goodness < 1e-9


def test_fit_recovers_planted_exponent():
    fit = fit_diffusive_leakage(synthetic_curve(lambda m, t: math.exp(-m / t ** 0.7)))
    assert abs(fit.exponent_z - 0.7) <= 0.05


def test_fit_needs_enough_points():
    curve = LeakageCurve(tuple(LeakageEntry(1, t, 0.1) for t in range(1, 5)))
    with pytest.raises(FitUnavailableError):
        fit_diffusive_leakage(curve)


def test_log_log_slope():
    t = np.arange(1, 30)
    slope, intercept = fit_log_log_slope(t, 2.0 * t ** 0.5)
    assert slope == pytest.approx(0.5, abs=1e-12)
    assert math.exp(intercept) == pytest.approx(2.0)
    with pytest.raises(FitUnavailableError):
        fit_log_log_slope([0, 1], [1, 0])


def test_ensemble_spread_frame():
    slope, mean = ensemble_domain_wall_slope(8, 6, [0, 1, 2], 1, 6)
    assert list(mean["t"]) == list(range(1, 7))
    assert math.isfinite(slope)


@pytest.mark.slow
def test_domain_wall_spreads_diffusively():
    slope, _ = ensemble_domain_wall_slope(20, 40, range(30), 4, 40)
    assert 0.8 <= slope <= 1.2


@pytest.mark.slow
def test_leakage_collapse_is_diffusive():
    n = 8
    t_values = range(0, 31)
    curves = []
    for seed in range(20):
        spec = build_circuit(2 * n, 30, seed)
        rng = np.random.default_rng(seed)
        psi_init = init_product_x([PLUS if bit else MINUS for bit in rng.integers(0, 2, 2 * n)])
        curves.append(measure_leakage(spec, psi_init, range(1, n + 1), t_values))
    averaged = mean_leakage(curves)
    frame = averaged.to_frame()
    # A wider zero block leaks less.
    at_t = frame[frame["t"] == 20].sort_values("m")["leakage"].to_numpy()
    assert np.all(np.diff(at_t) <= 1e-12)
    fit = fit_diffusive_leakage(averaged)
    assert 0.35 <= fit.exponent_z <= 0.65
