"""Lens transform between trapped and flat-space evolutions.

For trap frequency omega > 0 the map acts on an N-particle function u of
the flat time tau as

    (M_N u)(t, x) = exp(-i omega tan(omega t) |x|^2 / 2)
                    * cos(omega t)^(-N/2) * u(tan(omega t)/omega, x/cos(omega t)),

with the time dictionary tau = tan(omega t)/omega, valid on the window
|t| < pi/(2 omega).  The inverse evaluates at contracted points y*cos
and removes the quadratic phase.  Kernels transform with the phase on
both argument groups and the power cos^(-k).

Spatial rescaling is done by evaluating the trigonometric interpolant
(zero-padded Fourier series) at the stretched or contracted points.  The
outward stretch samples the periodic continuation beyond the box, which
is only meaningful when the state carries negligible mass near the
boundary; that is guarded explicitly.  omega = 0 is the identity map.

The map is unitary in the continuum; on the grid it is unitary up to
the interpolation error, which is spectrally small for smooth decaying
states.  Composed with the free half-Laplacian flow it reproduces the
trapped linear flow exactly (checked), while a full-Laplacian flat flow
leaves an order-one defect (negative control for the kinetic convention).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid1D, GridError, TensorState
from .marginals import MarginalDensity
from .nls import NLSProblem, evolve_nls


class LensWindowError(ValueError):
    """Trap time outside the principal lens window."""


class LensResolutionError(ValueError):
    """State support escapes the box under the lens rescaling."""


COS_GUARD = 0.2
BOUNDARY_MASS_TOL = 1e-6
BOUNDARY_FRACTION = 0.9


@dataclass(frozen=True)
class LensMap:
    """Time dictionary and per-axis transform matrices for one omega."""

    omega: float

    def __post_init__(self):
        if self.omega < 0:
            raise GridError("trap frequency must be nonnegative")

    def tau_of_t(self, t: float) -> float:
        if self.omega == 0.0:
            return t
        self._check_window(t)
        return math.tan(self.omega * t) / self.omega

    def t_of_tau(self, tau: float) -> float:
        if self.omega == 0.0:
            return tau
        return math.atan(self.omega * tau) / self.omega

    def cos_factor(self, t: float) -> float:
        return math.cos(self.omega * t)

    def _check_window(self, t: float):
        c = math.cos(self.omega * t)
        if abs(self.omega * t) >= 0.5 * math.pi or c < COS_GUARD:
            raise LensWindowError(
                f"t = {t} outside the lens window (cos(omega t) = {c:.3f} < {COS_GUARD})"
            )


def evaluation_matrix(grid: Grid1D, targets: np.ndarray) -> np.ndarray:
    """Matrix P with (P @ fft(u))_j = trig interpolant of u at targets[j]."""
    m = np.rint(np.fft.fftfreq(grid.n) * grid.n).astype(np.int64)
    k = np.pi * m / grid.length
    targets = np.asarray(targets, dtype=float)
    return np.exp(1j * np.outer(targets + grid.length, k)) / grid.n


def boundary_mass_fraction(state: TensorState) -> float:
    """Mass fraction outside |x| > BOUNDARY_FRACTION * L along any axis."""
    grid = state.grid
    outside = np.abs(grid.x) > BOUNDARY_FRACTION * grid.length
    dens = np.abs(state.amplitudes) ** 2
    total = float(np.sum(dens))
    if total == 0.0:
        return 0.0
    worst = 0.0
    for ax in range(state.n_particles):
        sel = [slice(None)] * state.n_particles
        sel[ax] = outside
        worst = max(worst, float(np.sum(dens[tuple(sel)])) / total)
    return worst


def one_particle_matrices(grid: Grid1D, omega: float, t: float):
    """Forward and inverse per-axis lens matrices at trap time t.

    Forward: samples of exp(-i omega tan(omega t) x^2/2) c^(-1/2) u(x/c).
    Inverse: samples of exp(+i omega tan(omega t) c^2 y^2/2) c^(1/2) psi(y c).
    """
    c = math.cos(omega * t)
    if c < COS_GUARD:
        raise LensWindowError(f"cos(omega t) = {c:.3f} below guard {COS_GUARD}")
    tn = math.tan(omega * t)
    x = grid.x
    fmat = np.fft.fft(np.eye(grid.n), axis=0)
    fwd = (np.exp(-0.5j * omega * tn * x ** 2)[:, None] / math.sqrt(c)) * (
        evaluation_matrix(grid, x / c) @ fmat
    )
    inv = (np.exp(0.5j * omega * tn * c ** 2 * x ** 2)[:, None] * math.sqrt(c)) * (
        evaluation_matrix(grid, x * c) @ fmat
    )
    return fwd, inv


def _apply_axis(a: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    moved = np.moveaxis(a, axis, 0)
    out = np.tensordot(mat, moved, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def lens_function(lmap: LensMap, u: TensorState, tau: float):
    """Map a flat-time state u(tau) to the trapped-frame state at t(tau).

    Returns (psi, t).  omega = 0 returns a copy (exact identity).
    """
    if lmap.omega == 0.0:
        return u.copy(), tau
    t = lmap.t_of_tau(tau)
    frac = boundary_mass_fraction(u)
    if frac > BOUNDARY_MASS_TOL:
        raise LensResolutionError(
            f"boundary mass fraction {frac:.2e} exceeds {BOUNDARY_MASS_TOL:.0e}; "
            "the stretched support would wrap the box"
        )
    fwd, _ = one_particle_matrices(u.grid, lmap.omega, t)
    out = u.amplitudes
    for ax in range(u.n_particles):
        out = _apply_axis(out, fwd, ax)
    return TensorState(u.grid, out, lmap.omega), t


def lens_function_inverse(lmap: LensMap, psi: TensorState, t: float):
    """Map a trapped-frame state psi(t) to the flat-time state at tau(t)."""
    if lmap.omega == 0.0:
        return psi.copy(), t
    tau = lmap.tau_of_t(t)
    _, inv = one_particle_matrices(psi.grid, lmap.omega, t)
    out = psi.amplitudes
    for ax in range(psi.n_particles):
        out = _apply_axis(out, inv, ax)
    return TensorState(psi.grid, out, lmap.omega), tau


def kernel_boundary_fraction(marginal: MarginalDensity) -> float:
    """Diagonal-density fraction outside |x| > BOUNDARY_FRACTION * L."""
    grid = marginal.grid
    dens = np.abs(np.real(np.diagonal(marginal.kernel))).reshape((grid.n,) * marginal.k)
    total = float(np.sum(dens))
    if total == 0.0:
        return 0.0
    outside = np.abs(grid.x) > BOUNDARY_FRACTION * grid.length
    worst = 0.0
    for ax in range(marginal.k):
        sel = [slice(None)] * marginal.k
        sel[ax] = outside
        worst = max(worst, float(np.sum(dens[tuple(sel)])) / total)
    return worst


def lens_kernel(lmap: LensMap, marginal: MarginalDensity, tau: float):
    """Kernel transport: gamma -> M gamma M^dagger on k particles."""
    if lmap.omega == 0.0:
        return MarginalDensity(marginal.grid, marginal.k, marginal.kernel.copy(),
                               lmap.omega), tau
    frac = kernel_boundary_fraction(marginal)
    if frac > BOUNDARY_MASS_TOL:
        raise LensResolutionError(
            f"kernel boundary density fraction {frac:.2e} exceeds "
            f"{BOUNDARY_MASS_TOL:.0e}; the stretched support would wrap the box"
        )
    t = lmap.t_of_tau(tau)
    fwd, _ = one_particle_matrices(marginal.grid, lmap.omega, t)
    out = marginal.tensor()
    for ax in range(marginal.k):
        out = _apply_axis(out, fwd, ax)
    for ax in range(marginal.k, 2 * marginal.k):
        out = _apply_axis(out, fwd.conj(), ax)
    side = marginal.grid.n ** marginal.k
    return MarginalDensity(marginal.grid, marginal.k, out.reshape(side, side),
                           lmap.omega), t


def lens_kernel_inverse(lmap: LensMap, marginal: MarginalDensity, t: float):
    if lmap.omega == 0.0:
        return MarginalDensity(marginal.grid, marginal.k, marginal.kernel.copy(),
                               lmap.omega), t
    tau = lmap.tau_of_t(t)
    _, inv = one_particle_matrices(marginal.grid, lmap.omega, t)
    out = marginal.tensor()
    for ax in range(marginal.k):
        out = _apply_axis(out, inv, ax)
    for ax in range(marginal.k, 2 * marginal.k):
        out = _apply_axis(out, inv.conj(), ax)
    side = marginal.grid.n ** marginal.k
    return MarginalDensity(marginal.grid, marginal.k, out.reshape(side, side),
                           lmap.omega), tau


def intertwine_linear_check(lmap: LensMap, grid: Grid1D, phi0: np.ndarray,
                            t_run: float, dt: float = 1e-4) -> dict:
    """Lens intertwining of the linear flows, with a convention control.

    Evolves phi0 under the trapped linear equation to t_run, and under
    the free half-Laplacian flow to tau(t_run), then compares the lensed
    free solution against the trapped one.  The same comparison with the
    full-Laplacian free flow (wrong kinetic convention) is returned as a
    negative control; it should be order one.
    """
    omega = lmap.omega
    tau_run = lmap.tau_of_t(t_run)
    if t_run == 0.0:
        return {"defect": 0.0, "defect_wrong_convention": 0.0}

    trapped = NLSProblem(grid, b0=0.0, omega=omega, side="trapped")
    n_steps = max(2, int(round(t_run / dt)))
    traj_t = evolve_nls(trapped, phi0, t_run / n_steps, n_steps)
    psi_ref = traj_t.fields[-1]

    defects = {}
    for label, half in (("defect", True), ("defect_wrong_convention", False)):
        free = NLSProblem(grid, b0=0.0, omega=0.0, side="lens", half_kinetic=half)
        m_steps = max(2, int(round(tau_run / dt)))
        traj_f = evolve_nls(free, phi0, tau_run / m_steps, m_steps)
        u_state = TensorState(grid, traj_f.fields[-1], omega)
        psi_pred, _ = lens_function(lmap, u_state, tau_run)
        diff = psi_pred.amplitudes - psi_ref
        defects[label] = float(math.sqrt(grid.h * np.sum(np.abs(diff) ** 2)))
    return defects


def intertwine_energy_check(lmap: LensMap, u: TensorState, tau: float,
                            k: int = 1) -> dict:
    """Compare flat L-weights on u with trapped S-weights on its lens image.

    Returns both quadratic forms and their ratio; the comparison constant
    of the continuum statement is the departure of the ratio from 1.
    """
    from .grid import weighted_norm_squared

    axes = list(range(k))
    lhs = weighted_norm_squared(u, axes, "L")
    psi, t = lens_function(lmap, u, tau)
    rhs = weighted_norm_squared(psi, axes, "S")
    return {"flat": lhs, "trapped": rhs, "ratio": lhs / rhs, "t": t}
