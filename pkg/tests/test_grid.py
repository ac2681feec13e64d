"""Grid, transform, state, and weight behavior."""

import math

import numpy as np
import pytest

from boselab.grid import (
    Grid1D,
    GridError,
    SobolevWeight,
    TensorState,
    apply_symbol,
    apply_weight_squared,
    dense_weight_squared,
    dft_axis,
    random_state,
    symmetrize,
    symmetry_residual,
    weighted_norm_squared,
)


def test_grid_geometry():
    g = Grid1D(64, 8.0)
    assert g.h == pytest.approx(0.25)
    assert g.x[0] == pytest.approx(-8.0)
    assert g.x[-1] == pytest.approx(8.0 - g.h)
    assert np.allclose(np.diff(g.x), g.h)
    assert g.k_max == pytest.approx(math.pi * 64 / 16.0)
    assert np.max(np.abs(g.k)) <= g.k_max


def test_grid_refine_keeps_box():
    g = Grid1D(32, 4.0)
    fine = g.refine()
    assert fine.n == 64
    assert fine.length == g.length
    assert fine.h == pytest.approx(g.h / 2)
    # coarse points are a subset of the fine points
    assert np.allclose(fine.x[::2], g.x)


@pytest.mark.parametrize("n", [0, -4, 3, 33, 100])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(GridError):
        Grid1D(n, 8.0)


def test_grid_rejects_bad_length():
    with pytest.raises(GridError):
        Grid1D(64, 0.0)
    with pytest.raises(GridError):
        Grid1D(64, -1.0)


def test_dft_matches_continuum_gaussian_transform():
    # integral f(x) e^{-ikx} dx of a unit gaussian is sqrt(2 pi) e^{-k^2/2};
    # at L = 16 the periodization error is below machine precision
    g = Grid1D(256, 16.0)
    f = np.exp(-g.x ** 2 / 2).astype(np.complex128)
    fhat = dft_axis(f, g, 0)
    exact = math.sqrt(2 * math.pi) * np.exp(-g.k ** 2 / 2)
    assert np.max(np.abs(fhat - exact)) < 1e-13


@pytest.mark.parametrize("seed,axis", [(0, 0), (1, 1), (2, 0), (3, 1)])
def test_dft_round_trip_and_unitarity(seed, axis):
    g = Grid1D(32, 4.0)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
    ah = dft_axis(a, g, axis)
    back = dft_axis(ah, g, axis, inverse=True)
    assert np.max(np.abs(back - a)) < 1e-12
    lhs = np.sum(np.abs(ah) ** 2) / (2 * g.length)
    rhs = np.sum(np.abs(a) ** 2) * g.h
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_apply_symbol_on_plane_wave():
    g = Grid1D(64, 8.0)
    k0 = g.k[5]
    wave = np.exp(1j * k0 * g.x)
    out = apply_symbol(wave, g.k ** 2, 0)
    assert np.max(np.abs(out - k0 ** 2 * wave)) < 1e-12


def test_tensor_state_norm_and_inner():
    g = Grid1D(32, 4.0)
    amp = np.full((32, 32), 1.0 / (2 * g.length), dtype=np.complex128)
    state = TensorState(g, amp)
    assert state.n_particles == 2
    # |amp|^2 summed with h^2 weight: (2L)^{-2} * n^2 * h^2 = 1
    assert state.norm() == pytest.approx(1.0, rel=1e-12)
    other = TensorState(g, 1j * amp)
    val = state.inner(other)
    assert val == pytest.approx(1j, rel=1e-12)
    unit = state.normalized()
    assert unit.norm() == pytest.approx(1.0, rel=1e-14)


def test_tensor_state_copy_is_independent():
    g = Grid1D(16, 4.0)
    state = random_state(g, 2, seed=0)
    dup = state.copy()
    dup.amplitudes[0, 0] += 1.0
    assert state.amplitudes[0, 0] != dup.amplitudes[0, 0]


def test_sobolev_weight_symbols():
    g = Grid1D(64, 8.0)
    s = SobolevWeight("S", omega=2.0)
    l = SobolevWeight("L")
    assert np.allclose(s.squared_symbol(g), 1.0 + 0.5 * g.k ** 2)
    assert np.allclose(l.squared_symbol(g), 1.0 + g.k ** 2)
    assert np.allclose(s.squared_potential(g), 0.5 * 4.0 * g.x ** 2)
    assert np.allclose(l.squared_potential(g), 0.0)
    with pytest.raises(GridError):
        SobolevWeight("Q")
    with pytest.raises(GridError):
        SobolevWeight("S", omega=-1.0)


def test_weighted_norm_on_plane_wave():
    g = Grid1D(64, 8.0)
    k0 = g.k[3]
    amp = np.exp(1j * k0 * g.x) / math.sqrt(2 * g.length)
    flat = TensorState(g, amp, omega=0.0)
    assert weighted_norm_squared(flat, [0], "L") == pytest.approx(
        1.0 + k0 ** 2, rel=1e-12)
    assert weighted_norm_squared(flat, [0], "S") == pytest.approx(
        1.0 + 0.5 * k0 ** 2, rel=1e-12)
    trapped = TensorState(g, amp, omega=1.0)
    x2_mean = float(g.h * np.sum(g.x ** 2 * np.abs(amp) ** 2))
    assert weighted_norm_squared(trapped, [0], "S") == pytest.approx(
        1.0 + 0.5 * k0 ** 2 + 0.5 * x2_mean, rel=1e-12)


def test_weighted_norm_multi_axis_is_product_on_product_state():
    # <phi x phi, W1^2 W2^2 (phi x phi)> = <phi, W^2 phi>^2
    g = Grid1D(32, 6.0)
    phi = np.exp(-g.x ** 2).astype(np.complex128)
    phi /= math.sqrt(g.h * np.sum(np.abs(phi) ** 2))
    pair = TensorState(g, np.multiply.outer(phi, phi), omega=1.0)
    one = TensorState(g, phi, omega=1.0)
    single = weighted_norm_squared(one, [0], "S")
    both = weighted_norm_squared(pair, [0, 1], "S")
    assert both == pytest.approx(single ** 2, rel=1e-12)


def test_apply_weight_squared_matches_dense_operator():
    g = Grid1D(32, 4.0)
    state = random_state(g, 1, omega=1.5, seed=4)
    for kind in ("S", "L"):
        dense = dense_weight_squared(g, kind, omega=1.5)
        fast = apply_weight_squared(state, [0], kind).amplitudes
        ref = dense @ state.amplitudes
        assert np.max(np.abs(fast - ref)) < 1e-12


def test_weight_axis_validation():
    g = Grid1D(16, 4.0)
    state = random_state(g, 2, seed=0)
    with pytest.raises(GridError):
        apply_weight_squared(state, [2], "S")
    with pytest.raises(GridError):
        apply_weight_squared(state, [0, 0], "S")


def test_symmetrize_product_pair():
    g = Grid1D(32, 6.0)
    f = np.exp(-(g.x - 1.0) ** 2).astype(np.complex128)
    h = np.exp(-(g.x + 1.0) ** 2).astype(np.complex128)
    state = TensorState(g, np.multiply.outer(f, h))
    sym = symmetrize(state)
    assert symmetry_residual(sym) < 1e-14
    assert sym.norm() == pytest.approx(1.0, rel=1e-13)
    # projection direction: (f x h + h x f) up to scale
    manual = np.multiply.outer(f, h) + np.multiply.outer(h, f)
    manual = manual / math.sqrt(g.h ** 2 * np.sum(np.abs(manual) ** 2))
    overlap = abs(g.h ** 2 * np.sum(np.conj(manual) * sym.amplitudes))
    assert overlap == pytest.approx(1.0, rel=1e-12)


def test_symmetrize_rejects_antisymmetric_input():
    g = Grid1D(32, 6.0)
    f = np.exp(-(g.x - 1.0) ** 2).astype(np.complex128)
    h = np.exp(-(g.x + 1.0) ** 2).astype(np.complex128)
    anti = np.multiply.outer(f, h) - np.multiply.outer(h, f)
    with pytest.raises(GridError, match="annihilated"):
        symmetrize(TensorState(g, anti))


def test_random_state_seeding_and_symmetry():
    g = Grid1D(16, 4.0)
    a = random_state(g, 3, omega=1.0, seed=7, k_filter=2.0, symmetric=True)
    b = random_state(g, 3, omega=1.0, seed=7, k_filter=2.0, symmetric=True)
    c = random_state(g, 3, omega=1.0, seed=8, k_filter=2.0, symmetric=True)
    assert np.array_equal(a.amplitudes, b.amplitudes)
    assert not np.array_equal(a.amplitudes, c.amplitudes)
    assert a.norm() == pytest.approx(1.0, rel=1e-12)
    assert symmetry_residual(a) < 1e-12
    loose = random_state(g, 2, seed=1)
    assert loose.norm() == pytest.approx(1.0, rel=1e-12)
