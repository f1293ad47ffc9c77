# -*- coding: utf-8 -*-
"""
高斯态模块测试
"""

import json

import numpy as np
import pytest

from conftest import inv_sqrt_series, nearest_neighbour
from bounds import theorem1_bound
from coupling import build_algebraic, build_disordered_chain, build_rotating_wave, make_coupling
from exception_handler import ErrorCode, LatticeException, StateException
from gaussian import (
    GaussianState, corr_pp, corr_xx, correlation_sweep, entropy, fit_algebraic_decay,
    fit_decay, ground_state, position_correlations_dual, reduced_state,
    rotating_wave_thermal_closed_form, symplectic_eigenvalues, thermal_state, validate_state
)
from lattice import build_lattice, complement, cubic_block, make_region, path, ring
from spectral import INV_SQRT, SQRT, matrix_function, mode_spectrum, operator_norm


@pytest.fixture
def non_commuting():
    lat = path(6)
    vx = np.eye(6) - 0.3 * lat.adjacency
    vp = np.diag(np.linspace(0.5, 2.0, 6)) + 0.1 * lat.adjacency
    return make_coupling(lat, vx, vp)


def test_ground_state_with_identity_momentum(ring_coupling):
    state = ground_state(ring_coupling)
    np.testing.assert_allclose(state.gamma_x, inv_sqrt_series(ring_coupling.vx), atol=1e-12)
    np.testing.assert_allclose(state.gamma_p, matrix_function(ring_coupling.vx, SQRT), atol=1e-12)
    np.testing.assert_allclose(symplectic_eigenvalues(state), np.ones(40), atol=1e-8)
    assert corr_xx(state, 0, 1) == state.gamma_x[0, 1]
    assert corr_pp(state, 3, 2) == state.gamma_p[3, 2]


def test_product_state_has_no_correlations(ring40):
    state = ground_state(make_coupling(ring40, np.eye(40), np.eye(40)))
    np.testing.assert_allclose(state.gamma_x, np.eye(40), atol=1e-14)
    np.testing.assert_allclose(state.gamma_p, np.eye(40), atol=1e-14)
    assert entropy(state, make_region(ring40, range(10))).entropy_bits == pytest.approx(0.0, abs=1e-10)


def test_dual_position_formula(non_commuting):
    state = ground_state(non_commuting)
    np.testing.assert_allclose(position_correlations_dual(non_commuting), state.gamma_x, atol=1e-10)
    np.testing.assert_allclose(symplectic_eigenvalues(state), np.ones(6), atol=1e-8)


def test_thermal_methods_agree(ring_coupling):
    general = thermal_state(ring_coupling, 1.0, method="general")
    commuting = thermal_state(ring_coupling, 1.0, method="commuting")
    np.testing.assert_allclose(general.gamma_x, commuting.gamma_x, atol=1e-10)
    np.testing.assert_allclose(general.gamma_p, commuting.gamma_p, atol=1e-10)
    assert validate_state(general)[0] > 1.0


def test_thermal_state_errors(non_commuting):
    with pytest.raises(StateException) as info:
        thermal_state(non_commuting, 1.0, method="commuting")
    assert info.value.error_code == ErrorCode.STATE_INVALID_METHOD
    with pytest.raises(StateException) as info:
        thermal_state(non_commuting, 0.0)
    assert info.value.error_code == ErrorCode.STATE_INVALID_TEMPERATURE
    with pytest.raises(StateException):
        thermal_state(non_commuting, 1.0, method="exact")
    assert symplectic_eigenvalues(thermal_state(non_commuting, 2.0))[0] >= 1.0 - 1e-8


@pytest.mark.parametrize("T", [0.3, 2.0, 50.0])
def test_rotating_wave_thermal_closed_form(T):
    state = thermal_state(build_rotating_wave(20, 0.3), T)
    closed = rotating_wave_thermal_closed_form(20, 0.3, T)
    np.testing.assert_allclose(state.gamma_x, closed, atol=1e-9 * max(1.0, np.max(np.abs(closed))))
    np.testing.assert_allclose(state.gamma_p, closed, atol=1e-9 * max(1.0, np.max(np.abs(closed))))


@pytest.mark.parametrize("T", [0.05, 0.1, 0.2, 0.4])
def test_thermal_converges_to_ground(ring_coupling, T):
    """|γ(T) − γ(0)| ≤ ‖V_x^{−1}‖·‖M^{1/2}‖·2/(e^{ΔE/T}−1)"""
    ground = ground_state(ring_coupling)
    thermal = thermal_state(ring_coupling, T)
    gap = mode_spectrum(ring_coupling).gap
    envelope = (operator_norm(matrix_function(ring_coupling.vx, INV_SQRT)) ** 2
                * np.sqrt(operator_norm(ring_coupling.vx)) * 2.0 / np.expm1(gap / T))
    assert np.max(np.abs(thermal.gamma_x - ground.gamma_x)) <= envelope + 1e-12


def test_pure_state_entropy_symmetry(square_coupling, square12):
    state = ground_state(square_coupling)
    regions = [cubic_block(square12, [4, 4], [3, 3]), make_region(square12, [0, 13, 26, 100, 143])]
    for region in regions:
        inside = entropy(state, region).entropy_bits
        outside = entropy(state, complement(square12, region)).entropy_bits
        assert inside > 0.0
        assert inside == pytest.approx(outside, abs=1e-8)


def test_single_mode_entropy():
    state = GaussianState(gamma_x=np.array([[3.0]]), gamma_p=np.array([[3.0]]), temperature=1.0)
    report = entropy(state, make_region(ring(3), [0]))
    assert report.symplectic_eigenvalues[0] == pytest.approx(3.0)
    # S = 2·log₂2 − 1·log₂1
    assert report.entropy_bits == pytest.approx(2.0)


def test_uncertainty_violation_detected():
    state = GaussianState(gamma_x=np.eye(2) * 0.5, gamma_p=np.eye(2) * 0.5)
    with pytest.raises(StateException) as info:
        validate_state(state)
    assert info.value.error_code == ErrorCode.STATE_UNCERTAINTY_VIOLATED


def test_index_and_region_errors(ring_coupling, ring40):
    state = ground_state(ring_coupling)
    with pytest.raises(StateException) as info:
        corr_xx(state, 0, 40)
    assert info.value.error_code == ErrorCode.STATE_INDEX_OUT_OF_RANGE
    with pytest.raises(LatticeException):
        reduced_state(state, make_region(ring40, []))
    with pytest.raises(StateException):
        state.block("xp")


def test_high_temperature_correlation_length():
    c = build_rotating_wave(101, 0.3)
    fit = fit_decay(thermal_state(c, 1000.0), "xx", c.lattice, cutoff=1e-8)
    # q = (1 − √(1 − 4c²))/(2c) = 1/3
    assert fit.xi == pytest.approx(1.0 / np.log(3.0), rel=1e-2)


def test_fit_decay_needs_three_distances(ring40):
    state = ground_state(make_coupling(ring40, np.eye(40), np.eye(40)))
    with pytest.raises(StateException) as info:
        fit_decay(state, "xx", ring40)
    assert info.value.error_code == ErrorCode.STATE_INSUFFICIENT_DATA


def test_algebraic_fit_recovers_exponent(ring40):
    state = ground_state(build_algebraic(ring40, 3.0))
    algebraic = fit_algebraic_decay(state, "xx", ring40)
    exponential = fit_decay(state, "xx", ring40)
    assert algebraic.eta == pytest.approx(3.0, abs=1e-6)
    assert algebraic.residual < exponential.residual


def test_correlation_sweep_rows():
    lat = build_lattice({"kind": "explicit", "n": 3, "edges": [[0, 1]]})
    state = ground_state(nearest_neighbour(lat, 0.3))
    rows = correlation_sweep(state, lat)
    assert [(i, j) for i, j, *_ in rows] == [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
    assert rows[1][2] == 1
    assert rows[2][2] is None
    assert rows[2][3] == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("case", ["ring", "non_commuting"])
def test_diagonal_correlations_grow_with_temperature(case, ring_coupling, non_commuting):
    c = ring_coupling if case == "ring" else non_commuting
    states = [ground_state(c)] + [thermal_state(c, T) for T in (0.1, 0.5, 2.0, 10.0)]
    for block in ("xx", "pp"):
        diagonals = [np.diag(state.block(block)) for state in states]
        for colder, hotter in zip(diagonals, diagonals[1:]):
            assert np.all(hotter >= colder * (1.0 - 1e-12))
        assert np.all(diagonals[-1] > diagonals[0])


@pytest.mark.parametrize("seed", range(5))
def test_fitted_length_below_theorem1_length(seed, ring_coupling):
    for c in (ring_coupling, build_disordered_chain(40, seed)):
        state = ground_state(c)
        xx, _ = theorem1_bound(c)
        fit = fit_decay(state, "xx", c.lattice)
        assert 0.0 < fit.xi <= xx.xi


def test_state_export_round_trip(non_commuting):
    state = thermal_state(non_commuting, 2.0)
    restored = GaussianState.from_dict(json.loads(json.dumps(state.to_dict())))
    assert restored.temperature == 2.0
    np.testing.assert_array_equal(restored.gamma_x, state.gamma_x)
    np.testing.assert_array_equal(restored.gamma_p, state.gamma_p)


@pytest.mark.parametrize("data", [
    {"gamma_x": [[1.0]]},
    {"gamma_x": [[1.0, 0.0]], "gamma_p": [[1.0, 0.0]]},
    {"gamma_x": [[1.0]], "gamma_p": [[1.0, 0.0], [0.0, 1.0]]},
    {"gamma_x": [[1.0]], "gamma_p": [[1.0]], "temperature": -1.0},
    {"gamma_x": "x", "gamma_p": [[1.0]]},
])
def test_state_import_rejects_malformed_data(data):
    with pytest.raises(StateException) as info:
        GaussianState.from_dict(data)
    assert info.value.error_code == ErrorCode.STATE_INVALID_FORMAT
