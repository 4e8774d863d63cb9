"""Tests for the optimum relaying threshold."""

import math

import numpy as np
import pytest

from tbs_noma.analytic import ModeCoefficients, abep_e2e, q_func, q_inv
from tbs_noma.errors import ConfigurationError
from tbs_noma.threshold_opt import (
    Convention,
    active_mask,
    aggregate_delta,
    brute_force_threshold,
    delta_terms,
    optimum_threshold,
    phi_opt,
    phi_stationary,
    sinr_th_opt,
    stationary_weights,
)

MODE1 = ModeCoefficients(mode_id=1, n_terms=2, alpha=(0.5, 0.5), beta=(0.8, 3.2),
                         m_far=2, relay_beta=2.0)


def test_phi_opt_per_term_sum():
    phi = phi_opt(MODE1, np.array([0.125, 0.05]))
    expected = q_inv(0.25) ** 2 / 0.8 + q_inv(0.1) ** 2 / 3.2
    assert phi == pytest.approx(expected, rel=1e-12)
    assert phi == pytest.approx(1.0819, abs=1e-4)


def test_phi_opt_skips_inactive_terms():
    phi = phi_opt(MODE1, np.array([0.6, 0.05]))
    assert phi == pytest.approx(q_inv(0.1) ** 2 / 3.2)
    assert phi_opt(MODE1, np.array([math.nan, 0.7])) == 0.0


def test_phi_opt_alpha_excluded():
    phi = phi_opt(MODE1, np.array([0.125, 0.05]), include_alpha=False)
    assert phi == pytest.approx(q_inv(0.125) ** 2 / 0.8 + q_inv(0.05) ** 2 / 3.2)


def test_active_mask():
    assert active_mask(np.array([0.1, 0.5, math.nan, 0.49])).tolist() == [True, False, False, True]


def test_sinr_th_opt_inverts_phi():
    assert sinr_th_opt(5.0, 0.2, 0.8) == pytest.approx(2.0)
    assert sinr_th_opt(0.0, 0.2, 0.8) == 0.0
    assert sinr_th_opt(math.inf, 0.2, 0.8) == pytest.approx(4.0)
    with pytest.raises(ConfigurationError):
        sinr_th_opt(-1.0, 0.2, 0.8)


@pytest.mark.parametrize("delta", [0.3, 0.05, 1e-4, 1e-9])
def test_phi_stationary_solves_first_order_condition(delta):
    phi = phi_stationary(MODE1, delta)
    value = float(np.sum(MODE1.alphas * q_func(np.sqrt(MODE1.betas * phi))))
    assert value == pytest.approx(delta, rel=1e-8)


def test_phi_stationary_with_weights():
    weights = np.array([0.8, 0.2])
    phi = phi_stationary(MODE1, 0.05, weights)
    value = float(np.sum(weights * q_func(np.sqrt(MODE1.betas * phi))))
    assert value == pytest.approx(0.05, rel=1e-8)
    assert phi != pytest.approx(phi_stationary(MODE1, 0.05), rel=1e-3)


@pytest.mark.parametrize("snr_db", [10.0, 20.0, 30.0])
def test_stationary_weights_share_the_gap(equal_gains, snr_db):
    config = equal_gains.config(snr_db)
    weights = stationary_weights(equal_gains.coeffs(), config)
    assert np.sum(weights) == pytest.approx(1.0)
    # the inner point suffers most from a wrong relayed bit
    assert weights[0] > weights[1] > 0.0


@pytest.mark.parametrize("mode_id", [1, 2, 4, 6])
@pytest.mark.parametrize("snr_db", [15.0, 30.0])
def test_stationary_optimum_matches_brute_force_all_modes(equal_gains, mode_id, snr_db):
    coeffs = equal_gains.coeffs(mode_id)
    config = equal_gains.config(snr_db)
    closed = optimum_threshold(coeffs, config).sinr_th_opt
    brute = brute_force_threshold(coeffs, config)
    assert abs(closed - brute.sinr_th) <= max(1e-3, brute.grid_step)


def test_phi_stationary_outside_range():
    assert phi_stationary(MODE1, 0.5) == 0.0
    assert phi_stationary(MODE1, 0.9) == 0.0
    assert phi_stationary(MODE1, -0.1) == 0.0
    assert phi_stationary(MODE1, math.nan) == 0.0


def test_delta_terms_shape(equal_gains):
    config = equal_gains.config(20.0)
    deltas = delta_terms(equal_gains.coeffs(), config)
    assert deltas.shape == (2,)
    assert 0.0 < aggregate_delta(equal_gains.coeffs(), config) < 0.5


@pytest.mark.parametrize("snr_db", [10.0, 20.0, 30.0, 40.0])
def test_closed_form_matches_brute_force(equal_gains, snr_db):
    coeffs = equal_gains.coeffs()
    config = equal_gains.config(snr_db)
    closed = optimum_threshold(coeffs, config)
    brute = brute_force_threshold(coeffs, config)
    assert abs(closed.sinr_th_opt - brute.sinr_th) <= max(1e-3, brute.grid_step)


def test_optimum_nondecreasing_in_snr(equal_gains, strong_relay):
    for scenario in (equal_gains, strong_relay):
        curve = [optimum_threshold(scenario.coeffs(), scenario.config(snr_db)).sinr_th_opt
                 for snr_db in range(0, 45, 5)]
        assert all(b >= a - 1e-12 for a, b in zip(curve, curve[1:]))


def test_optimum_below_feasibility_bound(strong_relay):
    for snr_db in range(0, 45, 5):
        solution = optimum_threshold(strong_relay.coeffs(), strong_relay.config(snr_db))
        assert solution.sinr_th_opt < 4.0


def test_brute_force_argmin_is_minimum(strong_relay):
    coeffs = strong_relay.coeffs()
    config = strong_relay.config(25.0)
    brute = brute_force_threshold(coeffs, config)
    closed = optimum_threshold(coeffs, config).sinr_th_opt
    for sinr_th in (0.0, 1.0, 2.0, closed):
        assert brute.abep <= abep_e2e(coeffs, config, sinr_th) + 1e-12


def test_optimum_beats_fixed_thresholds(strong_relay):
    coeffs = strong_relay.coeffs()
    for snr_db in (5.0, 15.0, 25.0, 35.0):
        config = strong_relay.config(snr_db)
        at_optimum = abep_e2e(coeffs, config, optimum_threshold(coeffs, config).sinr_th_opt)
        for fixed in (0.0, 0.5, 1.0, 2.0, 3.0):
            assert at_optimum <= abep_e2e(coeffs, config, fixed) + 1e-9


def test_conventions_reported(equal_gains):
    config = equal_gains.config(20.0)
    for convention in Convention:
        solution = optimum_threshold(equal_gains.coeffs(), config, convention)
        assert solution.convention is convention
        assert 0.0 <= solution.sinr_th_opt < 9.0


def test_brute_force_bounds(equal_gains):
    coeffs = equal_gains.coeffs()
    config = equal_gains.config(10.0)
    with pytest.raises(ConfigurationError):
        brute_force_threshold(coeffs, config, lo=2.0, hi=1.0)
    with pytest.raises(ConfigurationError):
        brute_force_threshold(coeffs, config, hi=10.0)
    with pytest.raises(ConfigurationError):
        brute_force_threshold(coeffs, config, steps=2)
