"""Harmonic lens transform: time dictionary, unitarity, intertwining."""

import math

import numpy as np
import pytest

from boselab.grid import Grid1D, GridError, TensorState
from boselab.lens import (
    LensMap,
    LensResolutionError,
    LensWindowError,
    boundary_mass_fraction,
    intertwine_energy_check,
    intertwine_linear_check,
    lens_function,
    lens_function_inverse,
    lens_kernel,
    lens_kernel_inverse,
)
from boselab.marginals import partial_trace, trace_norm
from boselab.nls import trap_ground_state

GRID = Grid1D(64, 8.0)


def ground_pair():
    phi, _ = trap_ground_state(GRID, 1.0)
    return phi


def test_time_dictionary_inverse_pair():
    lmap = LensMap(1.5)
    for t in (0.0, 0.2, -0.4, 0.6):
        tau = lmap.tau_of_t(t)
        assert lmap.t_of_tau(tau) == pytest.approx(t, abs=1e-14)
        assert tau == pytest.approx(math.tan(1.5 * t) / 1.5, rel=1e-14)
    assert lmap.cos_factor(0.4) == pytest.approx(math.cos(0.6))
    flat = LensMap(0.0)
    assert flat.tau_of_t(0.7) == 0.7
    assert flat.t_of_tau(0.7) == 0.7
    with pytest.raises(GridError):
        LensMap(-1.0)


def test_window_rejections():
    lmap = LensMap(1.0)
    with pytest.raises(LensWindowError):
        lmap.tau_of_t(math.pi / 2)
    with pytest.raises(LensWindowError):
        lmap.tau_of_t(1.5)  # cos = 0.07 < the 0.2 guard
    # tau has no window: any real tau maps back inside
    assert abs(lmap.t_of_tau(1e6)) < math.pi / 2


def test_flat_frequency_is_identity():
    phi = ground_pair()
    u = TensorState(GRID, phi, omega=0.0)
    psi, t = lens_function(LensMap(0.0), u, 0.7)
    assert t == 0.7
    assert np.max(np.abs(psi.amplitudes - u.amplitudes)) == 0.0
    back, tau = lens_function_inverse(LensMap(0.0), psi, 0.7)
    assert tau == 0.7
    assert np.max(np.abs(back.amplitudes - u.amplitudes)) == 0.0


@pytest.mark.parametrize("n_particles", [1, 2])
def test_unitarity_and_round_trip(n_particles):
    phi = ground_pair()
    amp = phi if n_particles == 1 else np.multiply.outer(phi, phi)
    u = TensorState(GRID, amp, omega=1.0)
    lmap = LensMap(1.0)
    psi, t = lens_function(lmap, u, 0.3)
    assert t == pytest.approx(math.atan(0.3))
    assert abs(psi.norm() - 1.0) < 1e-7
    back, tau = lens_function_inverse(lmap, psi, t)
    assert tau == pytest.approx(0.3, abs=1e-12)
    assert np.max(np.abs(back.amplitudes - u.amplitudes)) < 1e-12


def test_kernel_transform_preserves_trace_norm():
    phi = ground_pair()
    u = TensorState(GRID, np.multiply.outer(phi, phi), omega=1.0)
    marg = partial_trace(u, 1)
    lmap = LensMap(1.0)
    lensed, t = lens_kernel(lmap, marg, 0.3)
    assert abs(trace_norm(lensed) - trace_norm(marg)) < 1e-7
    assert lensed.trace().real == pytest.approx(1.0, abs=1e-7)
    back, tau = lens_kernel_inverse(lmap, lensed, t)
    assert tau == pytest.approx(0.3, abs=1e-12)
    assert np.max(np.abs(back.kernel - marg.kernel)) < 1e-12


def test_boundary_guard_rejects_underresolved_stretch():
    wide = np.exp(-GRID.x ** 2 / (2 * 4.0 ** 2)).astype(np.complex128)
    wide /= math.sqrt(GRID.h * float(np.sum(np.abs(wide) ** 2)))
    state = TensorState(GRID, wide, omega=1.0)
    assert boundary_mass_fraction(state) > 1e-6
    with pytest.raises(LensResolutionError, match="boundary mass"):
        lens_function(LensMap(1.0), state, 4.0)


def test_intertwine_linear_flows():
    phi = ground_pair()
    res = intertwine_linear_check(LensMap(1.0), GRID, phi, 0.4, dt=1e-3)
    # correct half-kinetic convention intertwines to splitting accuracy;
    # the full-Laplacian control misses by an order-one margin
    assert res["defect"] < 1e-5
    assert res["defect_wrong_convention"] > 1e-1


def test_intertwine_zero_run_is_exact():
    res = intertwine_linear_check(LensMap(1.0), GRID, ground_pair(), 0.0)
    assert res == {"defect": 0.0, "defect_wrong_convention": 0.0}


def test_intertwine_small_frequency_limit():
    # as omega -> 0 the lens degenerates to the identity and both flows
    # coincide: the defect must vanish far below the generic tolerance
    res = intertwine_linear_check(LensMap(1e-3), GRID, ground_pair(),
                                  0.2, dt=1e-3)
    assert res["defect"] < 1e-6
    assert res["defect_wrong_convention"] > 1e-3


def test_intertwine_energy_comparability():
    phi = ground_pair()
    flat = intertwine_energy_check(LensMap(0.0), TensorState(GRID, phi), 0.3)
    # identity lens: the ratio is pinned between the two symbol envelopes
    assert 1.0 <= flat["ratio"] <= 2.0
    assert flat["t"] == 0.3
    trapped = intertwine_energy_check(
        LensMap(1.0), TensorState(GRID, phi, omega=1.0), 0.3)
    assert 0.5 <= trapped["ratio"] <= 2.0
    assert trapped["flat"] > 0 and trapped["trapped"] > 0
