"""Exact pair functional on a 1D periodic lattice.

Kernels follow the measure-weighted operator convention shared with
`trialstate`: a matrix A of kernel values composes as (AB)(x,z) =
sum_y A(x,y) B(y,z) dx and traces as tr A = sum_x A(x,x) dx. The energy
is evaluated term by term (kinetic, external, pairing, exchange, direct)
and the reported total is the literal float sum of the parts.

The feasible set is 0 <= extended block <= 1 with a fixed one-body trace.
Projection onto it clips the block spectrum after a scalar shift on the
particle rows, with the shift found by root bracketing; the clipped
matrix is then averaged with its particle-hole reflection, which restores
the exact block structure (and keeps the pair block symmetric) without
leaving the operator interval, since the reflection is an isometry of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .errors import (
    ConfigurationError,
    InconsistentInputError,
    PreconditionError,
    ResolutionError,
)
from .grids_potentials import Grid, PotentialSpec, TrapSpec, eval_potential, eval_trap
from .pairstate import BoundState
from .trialstate import _alpha0_on_separations, _pair_index_maps


@dataclass(frozen=True)
class LatticeModel:
    """Discretized operator tables for one (h, grid, V, W) configuration."""

    grid: Grid
    h: float
    kinetic: np.ndarray
    w_diag: np.ndarray
    v_pair: np.ndarray
    e_b: float
    bound_state: BoundState
    kinetic_matrix: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class BHFState:
    """One-body kernel gamma and pair kernel alpha (both n x n, real)."""

    gamma: np.ndarray
    alpha: np.ndarray


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    external: float
    pairing: float
    exchange: float
    direct: float
    total: float


@dataclass(frozen=True)
class DecompositionResult:
    """Condensate projection of a pair kernel and its remainder.

    psi_half holds the projected wavefunction on the doubled midpoint
    grid; psi_extracted is its restriction to the primary nodes (the even
    half-grid points coincide with them, so restriction is exact). The
    remainder xi satisfies alpha = c_h psi_half a0 + xi identically and
    is orthogonal to the pair ground state within each midpoint fiber.
    """

    psi_extracted: np.ndarray
    psi_half: np.ndarray
    xi: np.ndarray
    orthogonality_residual: float
    xi_norm: float


@dataclass(frozen=True)
class DiagnosticsReport:
    gap_energy: float
    depletion: float
    gamma2: float
    psi_norm: float
    grad_psi_norm: float
    xi_norm: float
    grad_X_xi_norm: float
    grad_r_xi_norm: float
    alpha4: float


@dataclass(frozen=True)
class KernelInequalityReport:
    lhs_dir: float
    rhs_dir: float
    lhs_ex: float
    rhs_ex: float
    passed: bool


@dataclass(frozen=True)
class BHFOptions:
    step: float | None = None
    max_iter: int = 500
    tol: float = 1e-6
    backtracks: int = 60


@dataclass(frozen=True)
class MinimizeResult:
    state: BHFState
    energy: EnergyBreakdown
    iterations: int
    converged: bool
    history: tuple


def assemble(
    h: float, grid: Grid, v: PotentialSpec, w: TrapSpec, bs: BoundState
) -> LatticeModel:
    """Build the operator tables for the lattice functional.

    The kinetic term is spectral (multiplier table h^2 p^2 on FFT modes,
    realized as a circulant matrix), the interaction is sampled at the
    scaled minimal-image separations |x_i - x_j| / h, and the trap enters
    as the diagonal h^2 W(x_i). Raises ResolutionError when fewer than 8
    lattice points span the microscale h or when V has not decayed at the
    half-box image distance.
    """
    if h <= 0.0:
        raise ConfigurationError("scale parameter h must be positive")
    if grid.kind != "periodic" or grid.dimension != 1:
        raise PreconditionError("lattice functional needs a 1D periodic grid")
    points_per_h = h / grid.spacing
    if points_per_h < 8.0:
        n_min = int(np.ceil(8.0 * grid.length / h))
        raise ResolutionError(
            f"{points_per_h:.2f} lattice points per microscale h;"
            f" need >= 8 (minimum n = {n_min})"
        )

    n = grid.n
    k_offsets = np.abs(np.arange(-n // 2, n // 2)) * grid.spacing / h
    v_samples = eval_potential(v, k_offsets)
    v_scale = float(np.max(np.abs(v_samples)))
    edge = abs(float(eval_potential(v, np.array([0.5 * grid.length / h]))[0]))
    if v_scale > 0.0 and edge > 1e-9 * v_scale:
        raise ResolutionError(
            "interaction has not decayed at the half-box image distance;"
            " enlarge the box or increase h"
        )

    k_index, _ = _pair_index_maps(n)
    v_pair = v_samples[k_index + n // 2]
    kinetic = h * h * grid.momentum_sq()
    column = np.fft.ifft(kinetic).real
    kinetic_matrix = scipy.linalg.circulant(column)
    w_diag = h * h * eval_trap(w, grid.radii())
    return LatticeModel(
        grid, h, kinetic, w_diag, v_pair, bs.e_b, bs, kinetic_matrix
    )


def bhf_energy(state: BHFState, model: LatticeModel) -> EnergyBreakdown:
    """All five terms of the functional under the lattice measure."""
    gamma, alpha = state.gamma, state.alpha
    if gamma.shape != model.v_pair.shape or alpha.shape != model.v_pair.shape:
        raise PreconditionError("state kernels do not match the model lattice")
    dx = model.grid.spacing
    diag = np.diagonal(gamma)
    kinetic = float(np.sum(model.kinetic_matrix * gamma.T)) * dx
    external = float(model.w_diag @ diag) * dx
    pairing = 0.5 * float(np.sum(model.v_pair * alpha * alpha)) * dx * dx
    exchange = -0.5 * float(np.sum(model.v_pair * gamma * gamma)) * dx * dx
    direct = float(diag @ model.v_pair @ diag) * dx * dx
    total = kinetic + external + pairing + exchange + direct
    return EnergyBreakdown(kinetic, external, pairing, exchange, direct, total)


def bhf_gradient(state: BHFState, model: LatticeModel):
    """Analytic kernel gradients (d E = sum grad * d kernel entrywise)."""
    gamma, alpha = state.gamma, state.alpha
    dx = model.grid.spacing
    grad_gamma = dx * model.kinetic_matrix + np.diag(dx * model.w_diag)
    grad_gamma = grad_gamma - dx * dx * model.v_pair * gamma
    grad_gamma = grad_gamma + np.diag(
        2.0 * dx * dx * (model.v_pair @ np.diagonal(gamma))
    )
    grad_alpha = dx * dx * model.v_pair * alpha
    return grad_gamma, grad_alpha


def _ph_reflect(block: np.ndarray) -> np.ndarray:
    """K (1 - block) K^T with K = [[0, I], [-I, 0]].

    K is orthogonal, so the reflection maps the operator interval [0, 1]
    to itself; fixed points are exactly the matrices with the physical
    structure (consistent hole block, symmetric pair block).
    """
    m = block.shape[0] // 2
    out = np.empty_like(block)
    eye = np.eye(m)
    out[:m, :m] = eye - block[m:, m:]
    out[:m, m:] = block[m:, :m]
    out[m:, :m] = block[:m, m:]
    out[m:, m:] = eye - block[:m, :m]
    return out


def project_feasible(
    state: BHFState,
    spacing: float,
    trace_target: float,
    mu_hint: float = 0.0,
) -> BHFState:
    """Nearest-structure feasible state with the prescribed one-body trace.

    Clips the spectrum of the extended block to [0, 1] after shifting the
    particle rows by a scalar mu (found by bracketing so the clipped
    one-body trace equals trace_target), then averages with the
    particle-hole reflection to restore the exact block structure. The
    clipped trace is nonincreasing in mu, so the root is unique up to
    plateaus and any root is accepted.
    """
    n = state.gamma.shape[0]
    if not np.isfinite(trace_target) or trace_target < 0.0 or trace_target > n:
        raise InconsistentInputError(
            f"one-body trace {trace_target} outside the feasible range [0, {n}]"
        )
    weighted_gamma = 0.5 * (state.gamma + state.gamma.T) * spacing
    weighted_alpha = 0.5 * (state.alpha + state.alpha.T) * spacing
    block = np.empty((2 * n, 2 * n))
    block[:n, :n] = weighted_gamma
    block[:n, n:] = weighted_alpha
    block[n:, :n] = weighted_alpha
    block[n:, n:] = np.eye(n) - weighted_gamma
    signs = np.concatenate([np.ones(n), -np.ones(n)])

    def clipped(mu):
        vals, vecs = np.linalg.eigh(block - mu * np.diag(signs))
        return (vecs * np.clip(vals, 0.0, 1.0)) @ vecs.T

    def trace_gap(mu):
        return float(np.trace(clipped(mu)[:n, :n])) - trace_target

    gap0 = trace_gap(mu_hint)
    if abs(gap0) <= 1e-12 * max(1.0, trace_target):
        mu = mu_hint
    else:
        lo = hi = mu_hint
        width = 0.5
        # trace_gap decreases in mu: widen until the root is bracketed.
        while trace_gap(lo) < 0.0:
            lo -= width
            width *= 2.0
        width = 0.5
        while trace_gap(hi) > 0.0:
            hi += width
            width *= 2.0
        mu = brentq(trace_gap, lo, hi, xtol=1e-13, rtol=8.9e-16)
    final = clipped(mu)
    final = 0.5 * (final + _ph_reflect(final))
    gamma = final[:n, :n] / spacing
    alpha = 0.5 * (final[:n, n:] + final[n:, :n].T) / spacing
    return BHFState(gamma, alpha)


def minimize_bhf(
    model: LatticeModel,
    initial: BHFState,
    trace_target: float | None = None,
    opts: BHFOptions | None = None,
) -> MinimizeResult:
    """Projected gradient descent on the lattice functional.

    Each iteration takes a gradient step on (gamma, alpha), projects back
    onto the feasible set, and accepts the candidate only if the energy
    does not increase beyond 1e-12; the step halves on rejection and
    grows gently after acceptance. Terminates when the projected-step
    displacement per unit step drops below opts.tol. Step underflow
    returns the best state found with converged=False instead of raising.
    """
    opts = opts or BHFOptions()
    if trace_target is None:
        trace_target = 1.0 / model.h
    dx = model.grid.spacing
    step0 = opts.step if opts.step is not None else 1.0 / dx
    state = project_feasible(initial, dx, trace_target)
    breakdown = bhf_energy(state, model)
    history = []

    def residual_row(it, bd, st):
        constraint = abs(float(np.trace(st.gamma)) * dx - trace_target)
        return (
            it,
            bd.total,
            bd.kinetic,
            bd.external,
            bd.pairing,
            bd.exchange,
            bd.direct,
            constraint,
        )

    history.append(residual_row(0, breakdown, state))
    step = step0
    converged = False
    iterations = 0
    for it in range(1, opts.max_iter + 1):
        grad_gamma, grad_alpha = bhf_gradient(state, model)
        accepted = None
        for _ in range(opts.backtracks):
            trial = BHFState(
                state.gamma - step * grad_gamma, state.alpha - step * grad_alpha
            )
            candidate = project_feasible(trial, dx, trace_target)
            cand_bd = bhf_energy(candidate, model)
            if cand_bd.total <= breakdown.total + 1e-12:
                accepted = (candidate, cand_bd)
                break
            step *= 0.5
        iterations = it
        if accepted is None:
            break
        displacement = dx * float(
            np.sqrt(
                np.sum((accepted[0].gamma - state.gamma) ** 2)
                + np.sum((accepted[0].alpha - state.alpha) ** 2)
            )
        )
        state, breakdown = accepted
        history.append(residual_row(it, breakdown, state))
        if displacement / step <= opts.tol:
            converged = True
            break
        step = min(step * 1.3, 1e6 * step0)
    return MinimizeResult(state, breakdown, iterations, converged, tuple(history))


def decompose_alpha(
    alpha: np.ndarray, bs: BoundState, h: float, grid: Grid
) -> DecompositionResult:
    """Split a pair kernel into a condensate product part and a remainder.

    Within each midpoint fiber the kernel is projected on the pair ground
    state sampled at the scaled lattice separations, normalized by the
    discrete class sum of its squares (two values, one per separation
    parity), which makes the remainder exactly orthogonal to the ground
    state fiber by fiber and the reconstruction exact by construction.
    """
    n = grid.n
    if alpha.shape != (n, n):
        raise PreconditionError("pair kernel does not match the grid")
    k_index, s_index = _pair_index_maps(n)
    a0_by_k = _alpha0_on_separations(bs, n, grid.spacing, h)
    a0_mat = a0_by_k[k_index + n // 2]
    c_h = 1.0 / h
    class_sq = np.array(
        [np.sum(a0_by_k[0::2] ** 2), np.sum(a0_by_k[1::2] ** 2)]
    )
    # Separation indices in [-n/2, n/2) start at parity n/2 mod 2; the
    # stored order is k = -n/2, ..., so entry 0 has parity (n/2) mod 2.
    base_parity = (n // 2) % 2
    parity_sq = np.empty(2)
    parity_sq[base_parity] = class_sq[0]
    parity_sq[1 - base_parity] = class_sq[1]
    if np.min(parity_sq) <= 0.0:
        raise ResolutionError(
            "pair ground state vanishes on a separation parity class;"
            " the lattice does not resolve the microscale"
        )
    numerator = np.bincount(
        s_index.ravel(), weights=(alpha * a0_mat).ravel(), minlength=2 * n
    )
    s_parity = np.arange(2 * n) % 2
    psi_half = numerator / (c_h * parity_sq[s_parity])
    alpha_psi = c_h * psi_half[s_index] * a0_mat
    xi = alpha - alpha_psi
    residual_fiber = np.bincount(
        s_index.ravel(), weights=(xi * a0_mat).ravel(), minlength=2 * n
    )
    orthogonality = float(np.max(np.abs(residual_fiber))) * 2.0 * grid.spacing
    xi_norm = float(np.sqrt(np.sum(xi * xi))) * grid.spacing
    return DecompositionResult(
        psi_half[0::2].copy(), psi_half, xi, orthogonality, xi_norm
    )


def apriori_diagnostics(
    state: BHFState, bs: BoundState, h: float, model: LatticeModel
) -> DiagnosticsReport:
    """Size measures of the condensate split for remainder bookkeeping."""
    grid = model.grid
    dx = grid.spacing
    gamma, alpha = state.gamma, state.alpha
    pair_sq = (alpha @ alpha) * dx
    diff = gamma - pair_sq
    gap_energy = float(np.sum(model.kinetic_matrix * diff.T)) * dx
    gap_energy += 0.5 * model.e_b * float(np.trace(diff)) * dx
    depletion = float(np.trace(diff)) * dx
    gamma2 = float(np.sum(gamma * gamma)) * dx * dx
    alpha4 = float(np.sum(pair_sq * pair_sq)) * dx * dx

    dec = decompose_alpha(alpha, bs, h, grid)
    psi = dec.psi_extracted
    psi_norm = float(np.sqrt(np.sum(psi * psi) * dx))
    p = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=dx)
    psi_hat = np.fft.fft(psi)
    grad_psi_norm = float(
        np.sqrt(np.sum(p * p * np.abs(psi_hat) ** 2) * dx / grid.n)
    )
    # xi(x, y) = xi~(X, r) with X = (x+y)/2, r = x - y, so the macroscale
    # derivative is (d_x + d_y) xi and the separation derivative is
    # (d_x - d_y) xi / 2; both are spectral on the periodic square.
    xi_hat = np.fft.fft2(dec.xi)
    p_sum_sq = (p[:, None] + p[None, :]) ** 2
    p_diff_sq = 0.25 * (p[:, None] - p[None, :]) ** 2
    scale = dx / grid.n
    grad_x = float(np.sqrt(np.sum(p_sum_sq * np.abs(xi_hat) ** 2)) * scale)
    grad_r = float(np.sqrt(np.sum(p_diff_sq * np.abs(xi_hat) ** 2)) * scale)
    return DiagnosticsReport(
        gap_energy,
        depletion,
        gamma2,
        psi_norm,
        grad_psi_norm,
        dec.xi_norm,
        grad_x,
        grad_r,
        alpha4,
    )


def gamma_six_pieces(state: BHFState, spacing: float):
    """The six kernels whose sum reassembles gamma (pure operator algebra).

    With M = alpha alphabar and D = gamma - M the pieces are M, M^2,
    gamma - M - gamma^2, D^2, M D, and D M; their sum telescopes to gamma
    because (M + D)^2 = gamma^2.
    """
    gamma, alpha = state.gamma, state.alpha
    pair_sq = (alpha @ alpha) * spacing
    diff = gamma - pair_sq
    gamma_sq = (gamma @ gamma) * spacing
    return (
        pair_sq,
        (pair_sq @ pair_sq) * spacing,
        gamma - pair_sq - gamma_sq,
        (diff @ diff) * spacing,
        (pair_sq @ diff) * spacing,
        (diff @ pair_sq) * spacing,
    )


def kernel_inequality_check(
    sigma: np.ndarray,
    delta: np.ndarray,
    v: np.ndarray,
    spacing: float = 1.0,
) -> KernelInequalityReport:
    """Direct and exchange perturbation bounds for positive kernels.

    For sigma, delta >= 0 both the direct-term change (densities) and the
    exchange-term change (squared kernels) between sigma and sigma + delta
    are bounded by twice the |V|-weighted product of the perturbed density
    with the perturbation density. Verified by direct summation.
    """
    for name, kernel in (("sigma", sigma), ("delta", delta)):
        smallest = float(np.min(np.linalg.eigvalsh(kernel)))
        if smallest < -1e-10:
            raise PreconditionError(
                f"{name} is not positive semidefinite (eigenvalue {smallest:.2e})"
            )
    shifted = sigma + delta
    dens_shifted = np.diagonal(shifted)
    dens_base = np.diagonal(sigma)
    dens_delta = np.diagonal(delta)
    w = spacing * spacing
    lhs_dir = abs(
        float(
            np.sum(
                v
                * (
                    np.outer(dens_shifted, dens_shifted)
                    - np.outer(dens_base, dens_base)
                )
            )
        )
        * w
    )
    lhs_ex = abs(float(np.sum(v * (shifted * shifted - sigma * sigma))) * w)
    rhs = 2.0 * float(np.sum(np.abs(v) * np.outer(dens_shifted, dens_delta))) * w
    passed = lhs_dir <= rhs + 1e-10 and lhs_ex <= rhs + 1e-10
    return KernelInequalityReport(lhs_dir, rhs, lhs_ex, rhs, passed)
