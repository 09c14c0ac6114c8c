"""Effective coupling constants generated by a pair bound state.

In the unitary Fourier convention the three contributions are

    g_bcs = (2 pi)^d ∫ |alpha0_hat(p)|^4 (2 p^2 + E_b) d^d p
    g_dir = 2 ∫ V(x) d^d x
    g_ex  = -∫ (alpha0 * alpha0)(x)^2 V(x) d^d x

and g = g_bcs + g_dir + g_ex. Each quadrature carries a last-octave tail
estimate: the fraction of the absolute integrand mass in the outer half of
the grid's range. A tail above `tail_tol` means the grid truncates the
integral and raises ResolutionError rather than returning a silently
degraded number.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResolutionError
from .grids_potentials import Grid, StabilityReport
from .pairstate import BoundState, self_convolution

#: Default ceiling on the last-octave quadrature tail.
TAIL_TOL = 1e-6


@dataclass(frozen=True)
class CouplingConstants:
    g_bcs: float
    g_dir: float
    g_ex: float
    g: float
    assumption2_passed: bool | None
    quadrature_error_estimate: float


def _tail_fraction(integrand: np.ndarray, coords: np.ndarray, weights) -> float:
    mass = np.abs(integrand) * weights
    total = float(np.sum(mass))
    if total == 0.0:
        return 0.0
    outer = np.abs(coords) >= 0.5 * np.max(np.abs(coords))
    return float(np.sum(mass[outer]) / total)


def _g_bcs_with_tail(bs: BoundState) -> tuple[float, float]:
    grid = bs.grid
    d = bs.dimension
    p = grid.frequencies() if grid.dimension == 1 or grid.kind == "radial" else None
    if p is None:
        raise ResolutionError("g_bcs needs a 1D periodic or radial grid")
    integrand = np.abs(bs.alpha0_hat) ** 4 * (2.0 * p * p + bs.e_b)
    value = (2.0 * np.pi) ** d * grid.integrate_conjugate(integrand)
    tail = _tail_fraction(integrand, p, grid.conjugate_weights())
    return value, tail


def _g_dir_with_tail(v: np.ndarray, grid: Grid) -> tuple[float, float]:
    value = 2.0 * grid.integrate(v)
    tail = _tail_fraction(v, grid.radii(), grid.weights())
    return value, tail


def _g_ex_with_tail(bs: BoundState, v: np.ndarray) -> tuple[float, float]:
    grid = bs.grid
    conv = self_convolution(bs.alpha0, grid)
    integrand = -(conv * conv) * v
    value = grid.integrate(integrand)
    tail = _tail_fraction(integrand, grid.radii(), grid.weights())
    return value, tail


def _checked(name: str, pair: tuple[float, float], tail_tol: float) -> float:
    value, tail = pair
    if tail > tail_tol:
        raise ResolutionError(
            f"{name}: last-octave tail {tail:.2e} above {tail_tol:g};"
            " enlarge the grid range"
        )
    return value


def g_bcs(bs: BoundState, tail_tol: float = TAIL_TOL) -> float:
    """Quartic bound-state contribution; always positive."""
    return _checked("g_bcs", _g_bcs_with_tail(bs), tail_tol)


def g_dir(v: np.ndarray, grid: Grid, tail_tol: float = TAIL_TOL) -> float:
    """Direct (density-density) contribution 2 ∫ V."""
    return _checked("g_dir", _g_dir_with_tail(v, grid), tail_tol)


def g_ex(bs: BoundState, v: np.ndarray, tail_tol: float = TAIL_TOL) -> float:
    """Exchange contribution -∫ (alpha0 * alpha0)^2 V on the state's grid."""
    return _checked("g_ex", _g_ex_with_tail(bs, v), tail_tol)


def coupling_total(
    bs: BoundState,
    v: np.ndarray,
    stability: StabilityReport | None = None,
    tail_tol: float = TAIL_TOL,
) -> CouplingConstants:
    """All coupling constants for the interaction samples v on bs.grid.

    `stability` is the report from check_assumption2 when the caller ran
    it; its pass flag is carried through so downstream consumers know
    whether g > 0 is guaranteed rather than incidental.
    """
    bcs_pair = _g_bcs_with_tail(bs)
    dir_pair = _g_dir_with_tail(v, bs.grid)
    ex_pair = _g_ex_with_tail(bs, v)
    for name, pair in (("g_bcs", bcs_pair), ("g_dir", dir_pair), ("g_ex", ex_pair)):
        _checked(name, pair, tail_tol)
    passed = None if stability is None else stability.passed
    return CouplingConstants(
        g_bcs=bcs_pair[0],
        g_dir=dir_pair[0],
        g_ex=ex_pair[0],
        g=bcs_pair[0] + dir_pair[0] + ex_pair[0],
        assumption2_passed=passed,
        quadrature_error_estimate=max(bcs_pair[1], dir_pair[1], ex_pair[1]),
    )
