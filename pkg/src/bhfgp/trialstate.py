"""Pair-product trial states on the 1D verification lattice.

The trial pair kernel is alpha(x, y) = c_h psi((x+y)/2) alpha0((x-y)/h)
with c_h = h^{-(d+1)/2}, and the one-body part is
gamma = alpha alpha^* + (1 + h^s) (alpha alpha^*)^2 with slack exponent
s = 1/2 by default. Operator algebra on the lattice is measure-weighted:
the matrix representing a kernel is kernel * dx, so compositions are plain
matmuls and operator traces are matrix traces.

psi is evaluated at the half-step midpoints (x_i + x_j)/2 by band-limited
interpolation (zero-padded FFT with the Nyquist coefficient split evenly),
so no O(dx) interpolation error pollutes remainder studies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .coupling import CouplingConstants
from .errors import (
    ConfigurationError,
    InconsistentInputError,
    PreconditionError,
    ResolutionError,
)
from .gp import CondensateState, gp_energy
from .grids_potentials import Grid
from .pairstate import BoundState


@dataclass(frozen=True)
class TrialState:
    h: float
    psi: object
    bound_state: BoundState
    dimension: int
    c_h: float
    slack_exponent: float
    grid: Grid | None
    lattice_alpha: np.ndarray | None
    lattice_gamma: np.ndarray | None


@dataclass(frozen=True)
class AdmissibilityReport:
    alpha_opnorm: float
    guara_min: float
    passed: bool
    tol_psd: float = 1e-10


def _psi_samples(psi, grid: Grid) -> np.ndarray:
    if isinstance(psi, CondensateState):
        return np.asarray(psi.psi, dtype=float)
    return np.asarray(psi, dtype=float)


def _band_limited_double(values: np.ndarray) -> np.ndarray:
    """Resample a periodic signal onto the doubled grid (Nyquist split)."""
    n = len(values)
    spectrum = np.fft.fft(values)
    doubled = np.zeros(2 * n, dtype=complex)
    doubled[: n // 2] = spectrum[: n // 2]
    doubled[-(n // 2 - 1):] = spectrum[-(n // 2 - 1):]
    doubled[n // 2] = 0.5 * spectrum[n // 2]
    doubled[2 * n - n // 2] = 0.5 * spectrum[n // 2]
    out = 2.0 * np.fft.ifft(doubled)
    return np.real(out) if np.isrealobj(values) else out


def _alpha0_table(bs: BoundState):
    """(distances, values) table of alpha0 against |x|, for interpolation."""
    nodes = bs.grid.nodes()
    vals = np.asarray(bs.alpha0, dtype=float)
    if bs.grid.kind == "radial":
        return nodes, vals
    order = np.argsort(np.abs(nodes))
    return np.abs(nodes)[order], vals[order]


def _alpha0_values(bs: BoundState, q: np.ndarray) -> np.ndarray:
    """alpha0 at arbitrary separations q.

    Periodic pair grids allow exact trigonometric synthesis from the
    stored samples, so resampling adds no interpolation error on top of
    the eigensolve; beyond the half-box the decayed tail is cut to zero.
    Radial tables fall back to linear interpolation.
    """
    q = np.asarray(q, dtype=float)
    if bs.grid.kind == "periodic":
        nb = bs.grid.n
        coeff = np.fft.fft(np.asarray(bs.alpha0, dtype=float))
        p = 2.0 * np.pi * np.fft.fftfreq(nb, d=bs.grid.spacing)
        phase = np.exp(1j * np.outer(q - bs.grid.nodes()[0], p))
        vals = np.real(phase @ coeff) / nb
        vals[np.abs(q) > 0.5 * bs.grid.length] = 0.0
        return vals
    dist, table = _alpha0_table(bs)
    return np.interp(np.abs(q), dist, table, right=0.0)


def _pair_index_maps(n: int):
    """Separation and midpoint index tables for the periodic pair lattice.

    k_index[i, j] is the minimal-image index of x_i - x_j in [-n/2, n/2);
    s_index[i, j] locates the pair midpoint on the doubled grid. The
    midpoint of a wrapped pair lies at the seam, not at mid-box, so the
    midpoint is unwrapped through the minimal-image separation.
    """
    k_index = np.arange(n)[:, None] - np.arange(n)[None, :]
    k_index = (k_index + n // 2) % n - n // 2
    s_index = (2 * np.arange(n)[:, None] - k_index) % (2 * n)
    return k_index, s_index


def _alpha0_on_separations(bs: BoundState, n: int, spacing: float, h: float):
    """alpha0 at the scaled lattice separations k*dx/h, k in [-n/2, n/2).

    Sampling at |separation| keeps the even pair function exactly even,
    which the bit-level symmetry of alpha relies on. The exact-antipodal
    entry (k = -n/2) is zeroed: its two midpoint images differ, and the
    wrap guard already certifies the pair function is negligible there.
    """
    vals = _alpha0_values(bs, np.abs(np.arange(-n // 2, n // 2)) * spacing / h)
    vals[0] = 0.0
    return vals


def build_trial(
    h: float,
    psi,
    bs: BoundState,
    grid: Grid | None,
    d: int,
    slack_exponent: float = 0.5,
) -> TrialState:
    """Assemble the trial pair kernel and its one-body companion.

    Lattice kernels are built only for d = 1 on a periodic grid; other
    dimensions get a formula-level TrialState with kernels set to None.
    Raises ResolutionError when fewer than 8 lattice points fall across the
    scaled pair support (the message names the minimum n) or when the pair
    function has not decayed at the half-box wrap distance.
    """
    if not 0.0 < h <= 1.0:
        raise ConfigurationError("scale parameter h must lie in (0, 1]")
    c_h = h ** (-(d + 1) / 2.0)
    if d != 1 or grid is None:
        return TrialState(h, psi, bs, d, c_h, slack_exponent, grid, None, None)
    if grid.kind != "periodic" or grid.dimension != 1:
        raise PreconditionError("lattice kernels need a 1D periodic grid")

    dist, vals = _alpha0_table(bs)
    peak = float(np.max(np.abs(vals)))
    support = float(np.max(dist[np.abs(vals) >= 1e-2 * peak]))
    points_across = 2.0 * support * h / grid.spacing
    if points_across < 8.0:
        n_min = int(np.ceil(4.0 * grid.length / (h * support)))
        raise ResolutionError(
            f"pair support covers {points_across:.1f} lattice points;"
            f" need >= 8 (minimum n = {n_min})"
        )
    wrap_value = abs(float(np.interp(0.5 * grid.length / h, dist, vals, right=0.0)))
    if wrap_value > 1e-6 * peak:
        raise ResolutionError(
            "pair function has not decayed at the half-box wrap distance;"
            " enlarge the box or increase h"
        )

    n = grid.n
    psi_half = _band_limited_double(_psi_samples(psi, grid))
    k_index, s_index = _pair_index_maps(n)
    a0_by_k = _alpha0_on_separations(bs, n, grid.spacing, h)
    alpha = c_h * psi_half[s_index] * a0_by_k[k_index + n // 2]

    weighted = alpha * grid.spacing
    pair_sq = weighted @ weighted
    gamma = (pair_sq + (1.0 + h**slack_exponent) * (pair_sq @ pair_sq)) / grid.spacing
    return TrialState(h, psi, bs, d, c_h, slack_exponent, grid, alpha, gamma)


def pair_operator_eigenvalues(ts: TrialState) -> np.ndarray:
    """Ascending eigenvalues of alpha alpha^* as a lattice operator."""
    if ts.lattice_alpha is None:
        raise PreconditionError("lattice kernels are not assembled")
    weighted = ts.lattice_alpha * ts.grid.spacing
    return np.linalg.eigvalsh(weighted @ weighted)


def alpha_operator_norm(ts: TrialState) -> float:
    """Largest singular value of alpha; iterative, for large sweeps."""
    if ts.lattice_alpha is None:
        raise PreconditionError("lattice kernels are not assembled")
    from scipy.sparse.linalg import LinearOperator, eigsh

    weighted = ts.lattice_alpha * ts.grid.spacing
    n = weighted.shape[0]
    if n <= 1024:
        return float(np.sqrt(np.max(np.linalg.eigvalsh(weighted @ weighted))))
    op = LinearOperator((n, n), matvec=lambda x: weighted @ (weighted @ x))
    top = eigsh(op, k=1, which="LA", return_eigenvectors=False)
    return float(np.sqrt(top[0]))


def _guara_polynomial(a: np.ndarray, h: float, s: float) -> np.ndarray:
    """q(a) = eigenvalue of gamma - gamma^2 - alpha alpha^* at pair mode a."""
    c = 1.0 + h**s
    return a * a * (h**s - 2.0 * c * a - c * c * a * a)


def check_admissibility(ts: TrialState, tol_psd: float = 1e-10) -> AdmissibilityReport:
    """Certify 0 <= Gamma <= 1 through the pair-mode spectrum.

    gamma is a polynomial in A = alpha alpha^*, so gamma - gamma^2 - A is
    diagonal in A's eigenbasis and its smallest eigenvalue is the minimum
    of q(a) over the spectrum.
    """
    eigs = pair_operator_eigenvalues(ts)
    q = _guara_polynomial(np.clip(eigs, 0.0, None), ts.h, ts.slack_exponent)
    guara_min = float(np.min(q))
    return AdmissibilityReport(
        alpha_opnorm=float(np.sqrt(max(eigs[-1], 0.0))),
        guara_min=guara_min,
        passed=guara_min >= -tol_psd,
        tol_psd=tol_psd,
    )


def trace_normalizer(
    h: float, alpha_l2_sq: float, alpha_s4_4: float, slack_exponent: float = 0.5
) -> float:
    """Root of lambda^2 a + (1+h^s) lambda^4 b = 1/h in [1/2, 2].

    a and b are the squared Hilbert-Schmidt and fourth-power Schatten-4
    norms of the unscaled pair kernel; scaling psi by lambda scales them by
    lambda^2 and lambda^4.
    """
    c = 1.0 + h**slack_exponent
    target = 1.0 / h

    def f(lam):
        return lam * lam * alpha_l2_sq + c * lam**4 * alpha_s4_4 - target

    lo, hi = 0.5, 2.0
    if f(lo) > 0.0 or f(hi) < 0.0:
        raise InconsistentInputError(
            "trace equation has no root in [1/2, 2];"
            " the trial state is too far from the particle-number constraint"
        )
    lam = brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16)
    # One Newton polish so the certificate holds at full precision.
    slope = 2.0 * lam * alpha_l2_sq + 4.0 * c * lam**3 * alpha_s4_4
    if slope > 0.0:
        lam -= f(lam) / slope
    return float(lam)


def normalize_for_trace(ts: TrialState) -> float:
    """Trace normalizer from the exact lattice Schatten norms."""
    eigs = np.clip(pair_operator_eigenvalues(ts), 0.0, None)
    a = float(np.sum(eigs))
    b = float(np.sum(eigs * eigs))
    return trace_normalizer(ts.h, a, b, ts.slack_exponent)


def predict_expansion(h: float, psi: CondensateState, cc: CouplingConstants,
                      e_b: float) -> float:
    """Two-term expansion -E_b/(2h) + (h/2) E(psi) at coupling cc.g."""
    total = gp_energy(psi.psi, psi.trap, cc.g, psi.grid).total
    return -e_b / (2.0 * h) + 0.5 * h * total
