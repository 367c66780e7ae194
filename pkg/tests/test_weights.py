"""Weight functions: frozen values, derivative accuracy, table behavior."""

import math

import numpy as np
import pytest

from nullwave.errors import DomainError
from nullwave.weights import (
    WeightParams,
    eval_bracket,
    eval_phi_theta,
    eval_psi,
    get_psi_table,
)

import oracles


def test_bracket_is_sqrt_one_plus_x_squared():
    x = np.array([-3.0, 0.0, 0.5, 3.0, 1.0e4])
    assert np.allclose(eval_bracket(x), np.sqrt(1.0 + x * x), rtol=1e-15)


def test_phi_theta_frozen_value_delta_quarter():
    phi, theta = eval_phi_theta(np.array([2.0]), WeightParams(delta=0.25))
    assert phi[0] == pytest.approx(oracles.PHI_AT_2_DELTA_025, rel=1e-14)
    assert theta[0] == pytest.approx(phi[0] ** 3, rel=1e-13)


def test_phi_is_even_and_increasing_in_abs_x():
    params = WeightParams(delta=0.5)
    x = np.linspace(0.0, 40.0, 200)
    phi_pos, _ = eval_phi_theta(x, params)
    phi_neg, _ = eval_phi_theta(-x, params)
    assert np.allclose(phi_pos, phi_neg, rtol=1e-15)
    assert np.all(np.diff(phi_pos) > 0.0)


def test_psi_normalization_constant_frozen():
    table = get_psi_table(WeightParams(delta=0.5))
    assert table.i_total == pytest.approx(oracles.I_TOTAL_DELTA_05,
                                          rel=1e-10)


def test_psi_at_zero_frozen():
    table = get_psi_table(WeightParams(delta=0.5))
    psi, _ = eval_psi(np.array([0.0]), table)
    assert psi[0] == pytest.approx(oracles.PSI_AT_0_DELTA_05, rel=1e-12)


def test_psi_positive_and_decreasing():
    table = get_psi_table(WeightParams(delta=0.5))
    x = np.linspace(-8.0, 60.0, 500)
    psi, dpsi = eval_psi(x, table)
    assert np.all(psi > 0.0)
    assert np.all(np.diff(psi) < 0.0)
    assert np.all(dpsi < 0.0)


def test_psi_derivative_matches_finite_differences():
    table = get_psi_table(WeightParams(delta=0.5))
    xs = np.linspace(-5.0, 15.0, 41)
    h = 1.0e-4
    _, dpsi = eval_psi(xs, table)
    psi_p, _ = eval_psi(xs + h, table)
    psi_m, _ = eval_psi(xs - h, table)
    fd = (psi_p - psi_m) / (2.0 * h)
    assert np.allclose(dpsi, fd, rtol=5e-7, atol=1e-12)


def test_psi_tail_approaches_floor():
    table = get_psi_table(WeightParams(delta=0.5))
    psi, _ = eval_psi(np.array([1.0e6]), table)
    floor = math.exp(-oracles.I_TOTAL_DELTA_05)
    assert floor < psi[0] < floor * 1.005


def test_psi_table_cached_per_params():
    a = get_psi_table(WeightParams(delta=0.5))
    b = get_psi_table(WeightParams(delta=0.5))
    c = get_psi_table(WeightParams(delta=0.25))
    assert a is b
    assert c is not a


@pytest.mark.parametrize("delta", [-0.1, 0.0, 1.0, 1.5])
def test_delta_out_of_range_rejected(delta):
    with pytest.raises(DomainError):
        WeightParams(delta=delta)


def test_eval_psi_vectorized_shape():
    table = get_psi_table(WeightParams(delta=0.5))
    x = np.linspace(-2.0, 30.0, 17).reshape(17)
    psi, dpsi = eval_psi(x, table)
    assert psi.shape == x.shape and dpsi.shape == x.shape
