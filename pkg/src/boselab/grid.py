"""Periodic grid, discrete Fourier conventions, and weighted Sobolev norms.

All wavefunctions live on the uniform periodic grid

    x_j = -L + j*h,   j = 0..n-1,   h = 2L/n,

with wavenumbers k_m = pi*m/L for m in {-n/2, ..., n/2-1} (standard DFT
layout).  The discrete L^2 inner product carries the quadrature weight h^N
for an N-particle state, so continuum formulas transfer literally:

    <psi, phi> = h^N * sum conj(psi) * phi.

The forward transform approximates the continuum Fourier integral,
psi_hat(k_m) ~= h * sum_j psi(x_j) exp(-i k_m x_j), and the inverse
reconstructs psi(x_j) = (1/2L) * sum_m psi_hat(k_m) exp(+i k_m x_j).
Diagonal Fourier multipliers (kinetic phases, Sobolev symbols) are applied
with raw fft/ifft pairs since the normalization cancels.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Raised for inconsistent grid parameters or state payloads."""


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid1D:
    """One-dimensional periodic grid on [-L, L) with n points.

    n must be a power of two (keeps FFT lengths predictable and makes the
    dyadic refinement studies exact).
    """

    n: int
    length: float  # the half-width L

    def __post_init__(self):
        if not _is_power_of_two(self.n):
            raise GridError(f"grid size must be a power of two, got {self.n}")
        if self.length <= 0:
            raise GridError(f"grid half-width must be positive, got {self.length}")

    @property
    def h(self) -> float:
        return 2.0 * self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return -self.length + self.h * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        """Wavenumbers k_m = pi*m/L in FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    @property
    def k_max(self) -> float:
        return np.pi * (self.n // 2) / self.length

    def refine(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.n * factor, self.length)


def dft_axis(a: np.ndarray, grid: Grid1D, axis: int, inverse: bool = False) -> np.ndarray:
    """Semi-discrete Fourier transform along one axis.

    Forward: values of h * sum_j a(x_j) exp(-i k_m x_j) in FFT ordering.
    Inverse: reconstructs grid samples from such coefficients.  The pair
    is unitary up to the h versus 1/(2L) quadrature weights:
    sum |a_hat|^2 / (2L) == sum |a|^2 * h.
    """
    if a.shape[axis] != grid.n:
        raise GridError("axis length does not match grid")
    m = np.rint(np.fft.fftfreq(grid.n) * grid.n).astype(np.int64)
    # exp(i k_m L) = (-1)^m regardless of the sign of m
    phase = np.where(m % 2 == 0, 1.0, -1.0)
    shape = [1] * a.ndim
    shape[axis] = grid.n
    phase = phase.reshape(shape)
    if not inverse:
        return grid.h * phase * np.fft.fft(a, axis=axis)
    return np.fft.ifft(phase * a, axis=axis) / grid.h


def apply_symbol(a: np.ndarray, symbol: np.ndarray, axis: int) -> np.ndarray:
    """Apply a Fourier-diagonal operator along one axis (raw fft round trip)."""
    shape = [1] * a.ndim
    shape[axis] = symbol.size
    sym = symbol.reshape(shape)
    return np.fft.ifft(sym * np.fft.fft(a, axis=axis), axis=axis)


@dataclass
class TensorState:
    """N-particle wavefunction as a complex tensor of shape (n,)*N.

    Axis j holds the coordinate of particle j+1 (row-major).  omega is the
    trap frequency the state is associated with; it feeds the S-type
    Sobolev weights and the Hamiltonians built downstream.
    """

    grid: Grid1D
    amplitudes: np.ndarray
    omega: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.complex128)
        if a.ndim < 1 or any(s != self.grid.n for s in a.shape):
            raise GridError(
                f"amplitudes of shape {a.shape} do not match grid size {self.grid.n}"
            )
        if self.omega < 0:
            raise GridError("trap frequency must be nonnegative")
        self.amplitudes = a

    @property
    def n_particles(self) -> int:
        return self.amplitudes.ndim

    def norm(self) -> float:
        w = self.grid.h ** self.n_particles
        return math.sqrt(w * float(np.sum(np.abs(self.amplitudes) ** 2)))

    def normalized(self) -> "TensorState":
        nrm = self.norm()
        if nrm == 0:
            raise GridError("cannot normalize the zero state")
        return TensorState(self.grid, self.amplitudes / nrm, self.omega)

    def inner(self, other: "TensorState") -> complex:
        if other.amplitudes.shape != self.amplitudes.shape:
            raise GridError("states live on different tensor grids")
        w = self.grid.h ** self.n_particles
        return w * complex(np.vdot(self.amplitudes, other.amplitudes))

    def copy(self) -> "TensorState":
        return TensorState(self.grid, self.amplitudes.copy(), self.omega)


@dataclass(frozen=True)
class SobolevWeight:
    """Square root weights S = (1 - d^2/2 + omega^2 x^2/2)^(1/2) (kind 'S')
    or L = (1 - d^2)^(1/2) (kind 'L'), applied through their squares."""

    kind: str
    omega: float = 0.0

    def __post_init__(self):
        if self.kind not in ("S", "L"):
            raise GridError(f"unknown weight kind {self.kind!r}")
        if self.kind == "S" and self.omega < 0:
            raise GridError("trap frequency must be nonnegative")

    def squared_symbol(self, grid: Grid1D) -> np.ndarray:
        """Kinetic part of the squared weight as a Fourier symbol."""
        k2 = grid.k ** 2
        if self.kind == "L":
            return 1.0 + k2
        return 1.0 + 0.5 * k2

    def squared_potential(self, grid: Grid1D) -> np.ndarray:
        """Multiplication part of the squared weight on grid points."""
        if self.kind == "L":
            return np.zeros(grid.n)
        return 0.5 * self.omega ** 2 * grid.x ** 2


def apply_weight_squared(state: TensorState, axes, kind: str = "S") -> TensorState:
    """Apply the product of squared Sobolev weights over the given axes.

    kind 'S' uses the state's trap frequency; kind 'L' is the flat-space
    weight 1 - d^2.  The squared operator is exactly Fourier-kinetic plus
    position multiplication, so repeated application realizes integer
    powers of S^2 without any eigendecomposition.
    """
    axes = _normalize_axes(axes, state.n_particles)
    weight = SobolevWeight(kind, state.omega if kind == "S" else 0.0)
    sym = weight.squared_symbol(state.grid)
    pot = weight.squared_potential(state.grid)
    out = state.amplitudes
    for ax in axes:
        kin = apply_symbol(out, sym, ax)
        shape = [1] * out.ndim
        shape[ax] = state.grid.n
        out = kin + pot.reshape(shape) * out
    return TensorState(state.grid, out, state.omega)


def weighted_norm_squared(state: TensorState, axes, kind: str = "S") -> float:
    """<psi, prod_j W_j^2 psi> over the given axes; always real and >= ||psi||^2
    for kind 'S' or 'L' since both squared weights are >= 1."""
    weighted = apply_weight_squared(state, axes, kind)
    value = state.inner(weighted)
    return float(value.real)


def _normalize_axes(axes, ndim: int):
    if isinstance(axes, (int, np.integer)):
        axes = [int(axes)]
    axes = [int(a) for a in axes]
    for a in axes:
        if a < 0 or a >= ndim:
            raise GridError(f"axis {a} out of range for {ndim} particles")
    if len(set(axes)) != len(axes):
        raise GridError("repeated axes in weight application")
    return axes


def symmetrize(state: TensorState, renormalize: bool = True, tol: float = 1e-12) -> TensorState:
    """Project onto the bosonic (permutation-symmetric) sector.

    Averages over all N! axis permutations.  With renormalize=True the
    result is rescaled to unit norm; a projection that annihilates the
    state (norm below tol) is an error.
    """
    ndim = state.n_particles
    if ndim == 1:
        return state.copy() if not renormalize else state.normalized()
    acc = np.zeros_like(state.amplitudes)
    count = 0
    for perm in itertools.permutations(range(ndim)):
        acc += np.transpose(state.amplitudes, perm)
        count += 1
    out = TensorState(state.grid, acc / count, state.omega)
    if not renormalize:
        return out
    nrm = out.norm()
    if nrm < tol:
        raise GridError("symmetrization annihilated the state")
    return TensorState(state.grid, out.amplitudes / nrm, state.omega)


def symmetry_residual(state: TensorState) -> float:
    """Max-abs deviation from bosonic symmetry over all transpositions."""
    ndim = state.n_particles
    worst = 0.0
    for i in range(ndim):
        for j in range(i + 1, ndim):
            perm = list(range(ndim))
            perm[i], perm[j] = perm[j], perm[i]
            diff = state.amplitudes - np.transpose(state.amplitudes, perm)
            worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def dense_symbol_operator(grid: Grid1D, symbol: np.ndarray) -> np.ndarray:
    """Dense n x n matrix of a Fourier multiplier (for small-grid oracles)."""
    f = np.fft.fft(np.eye(grid.n), axis=0)
    finv = np.fft.ifft(np.eye(grid.n), axis=0)
    return finv @ (symbol[:, None] * f)


def dense_weight_squared(grid: Grid1D, kind: str = "S", omega: float = 0.0) -> np.ndarray:
    """Dense one-particle matrix of S^2 or L^2 (Hermitian to rounding)."""
    weight = SobolevWeight(kind, omega)
    mat = dense_symbol_operator(grid, weight.squared_symbol(grid))
    mat = mat + np.diag(weight.squared_potential(grid))
    return 0.5 * (mat + mat.conj().T)


def random_state(grid: Grid1D, n_particles: int, omega: float = 0.0,
                 seed=None, k_filter: float | None = None,
                 symmetric: bool = False) -> TensorState:
    """Random normalized state, optionally band-filtered and symmetrized.

    k_filter applies a Gaussian factor exp(-k^2/(2 k_filter^2)) per axis so
    the draw has smooth samples; None keeps white noise across all modes.
    """
    rng = np.random.default_rng(seed)
    shape = (grid.n,) * n_particles
    a = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if k_filter is not None:
        sym = np.exp(-grid.k ** 2 / (2.0 * k_filter ** 2))
        for ax in range(n_particles):
            a = apply_symbol(a, sym, ax)
    state = TensorState(grid, a, omega)
    if symmetric and n_particles > 1:
        return symmetrize(state)
    return state.normalized()
