"""Grids, interaction/trap primitives, and interaction stability checks.

Conventions
-----------
Periodic grids sample x_k = -length/2 + k*spacing with n even; fields on a
3D periodic grid are (n, n, n) arrays over the product of the same axis.
Radial grids sample r_k = (k+1)*spacing, k = 0..n-1, and represent radially
symmetric functions in 3D with integration measure 4 pi r^2 dr.

Grid.integrate uses plain node weights (spacing^d periodic, 4 pi r^2 dr
radial). On the radial grid this is the exact Parseval partner of the
spherical transform in `pairstate`, and for integrands vanishing at the
origin (guaranteed by the r^2 factor) and decayed at the outer boundary it
is trapezoid-accurate, O(spacing^2).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BracketError, ConfigurationError, NoBoundStateError

#: Energies above -EPS_BIND do not count as bound.
EPS_BIND = 1e-10


@dataclass(frozen=True)
class Grid:
    """Computational grid, periodic (1D or 3D) or radial (3D only)."""

    dimension: int
    kind: str
    n: int
    length: float

    def __post_init__(self):
        if self.dimension not in (1, 3):
            raise ConfigurationError(f"dimension must be 1 or 3, got {self.dimension}")
        if self.kind not in ("periodic", "radial"):
            raise ConfigurationError(f"unknown grid kind {self.kind!r}")
        if self.kind == "radial" and self.dimension != 3:
            raise ConfigurationError("radial grids are 3D only")
        if self.n < 8:
            raise ConfigurationError(f"need at least 8 nodes, got {self.n}")
        if self.kind == "periodic" and self.n % 2 != 0:
            raise ConfigurationError("periodic grids need even n")
        if not self.length > 0:
            raise ConfigurationError(f"length must be positive, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    def nodes(self) -> np.ndarray:
        """Axis nodes (periodic) or radial nodes (radial)."""
        if self.kind == "radial":
            return (np.arange(self.n) + 1.0) * self.spacing
        return -0.5 * self.length + np.arange(self.n) * self.spacing

    def radii(self) -> np.ndarray:
        """|x| at every grid point, shaped like a field array."""
        axis = self.nodes()
        if self.kind == "radial":
            return axis
        if self.dimension == 1:
            return np.abs(axis)
        a2 = axis * axis
        return np.sqrt(a2[:, None, None] + a2[None, :, None] + a2[None, None, :])

    def frequencies(self) -> np.ndarray:
        """Axis frequencies: FFT order (periodic) or (j+1)*dp (radial)."""
        if self.kind == "radial":
            dp = np.pi / (self.length + self.spacing)
            return (np.arange(self.n) + 1.0) * dp
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    def momentum_sq(self) -> np.ndarray:
        """|p|^2 at every conjugate node, shaped like a transformed field."""
        p = self.frequencies()
        if self.dimension == 1 or self.kind == "radial":
            return p * p
        p2 = p * p
        return p2[:, None, None] + p2[None, :, None] + p2[None, None, :]

    def weights(self):
        """Integration weight per node; scalar for periodic 3D."""
        if self.kind == "radial":
            return 4.0 * np.pi * self.nodes() ** 2 * self.spacing
        return self.spacing**self.dimension

    def conjugate_weights(self):
        """Integration weight per conjugate node."""
        if self.kind == "radial":
            dp = np.pi / (self.length + self.spacing)
            return 4.0 * np.pi * self.frequencies() ** 2 * dp
        return (2.0 * np.pi / self.length) ** self.dimension

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values * self.weights()))

    def integrate_conjugate(self, values: np.ndarray) -> float:
        return float(np.sum(values * self.conjugate_weights()))

    def norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(self.integrate(np.abs(f) ** 2)))


@dataclass(frozen=True)
class PotentialTerm:
    """One radially symmetric interaction primitive.

    kinds: 'square-well' (depth, radius; value -depth inside, -depth/2 on the
    edge node so that grid quadrature of the jump stays second order and the
    value matches the symmetric limit of the Fourier representation),
    'gaussian' (amplitude * exp(-r^2 / (2 width^2))), 'difference-of-gaussians'
    (the gaussian minus amplitude2 * exp(-r^2 / (2 width2^2))), and 'tabulated'
    (linear interpolation of (r, values), zero beyond the last radius).
    """

    kind: str
    depth: float = 0.0
    radius: float = 0.0
    amplitude: float = 0.0
    width: float = 0.0
    amplitude2: float = 0.0
    width2: float = 0.0
    r: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        kinds = ("square-well", "gaussian", "difference-of-gaussians", "tabulated")
        if self.kind not in kinds:
            raise ConfigurationError(f"unknown potential kind {self.kind!r}")
        if self.kind == "square-well" and not self.radius > 0:
            raise ConfigurationError("square-well needs radius > 0")
        if self.kind in ("gaussian", "difference-of-gaussians") and not self.width > 0:
            raise ConfigurationError(f"{self.kind} needs width > 0")
        if self.kind == "difference-of-gaussians" and not self.width2 > 0:
            raise ConfigurationError("difference-of-gaussians needs width2 > 0")
        if self.kind == "tabulated":
            rr = np.asarray(self.r, dtype=float)
            if rr.size < 2 or rr.size != len(self.values):
                raise ConfigurationError("tabulated needs matching r/values, len >= 2")
            if rr[0] != 0.0 or np.any(np.diff(rr) <= 0):
                raise ConfigurationError("tabulated radii must ascend from 0")


@dataclass(frozen=True)
class PotentialSpec:
    """Scaled sum of interaction primitives: V(x) = scale * sum(terms)."""

    terms: tuple
    scale: float = 1.0

    def __post_init__(self):
        if len(self.terms) == 0:
            raise ConfigurationError("potential needs at least one term")


def _eval_term(term: PotentialTerm, r: np.ndarray) -> np.ndarray:
    r = np.abs(r)
    if term.kind == "square-well":
        out = np.where(r < term.radius, -term.depth, 0.0)
        return np.where(r == term.radius, -0.5 * term.depth, out)
    if term.kind == "gaussian":
        return term.amplitude * np.exp(-(r * r) / (2.0 * term.width**2))
    if term.kind == "difference-of-gaussians":
        return term.amplitude * np.exp(
            -(r * r) / (2.0 * term.width**2)
        ) - term.amplitude2 * np.exp(-(r * r) / (2.0 * term.width2**2))
    return np.interp(r, np.asarray(term.r), np.asarray(term.values), right=0.0)


def eval_potential(spec: PotentialSpec, r: np.ndarray) -> np.ndarray:
    """Evaluate the interaction at radii |r| (any array shape)."""
    r = np.asarray(r, dtype=float)
    total = np.zeros_like(r)
    for term in spec.terms:
        total += _eval_term(term, r)
    return spec.scale * total


@dataclass(frozen=True)
class TrapSpec:
    """External trap: polynomial in |x| with optional plateau cutoff.

    coefficients are ascending powers of |x|. Beyond `cutoff` the trap is
    held at its cutoff value; an unbounded trap (non-constant without a
    cutoff) is accepted with a one-time warning, since the theory behind
    the functional assumes a bounded W.
    """

    coefficients: tuple
    cutoff: float | None = None

    def __post_init__(self):
        if len(self.coefficients) == 0:
            raise ConfigurationError("trap needs at least one coefficient")
        if self.cutoff is not None and not self.cutoff > 0:
            raise ConfigurationError("trap cutoff must be positive")
        if self.cutoff is None and any(c != 0.0 for c in self.coefficients[1:]):
            warnings.warn("unbounded trap accepted; energies depend on box size",
                          stacklevel=2)


def eval_trap(spec: TrapSpec, r: np.ndarray) -> np.ndarray:
    """Evaluate the trap at |x| (any array shape)."""
    r = np.abs(np.asarray(r, dtype=float))
    if spec.cutoff is not None:
        r = np.minimum(r, spec.cutoff)
    return np.polynomial.polynomial.polyval(r, np.asarray(spec.coefficients))


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of the interaction stability check.

    margin_pointwise = min over nodes of V - max(V, 0)/2 - U (should be >= 0
    up to tolerance); fourier_min = min over frequency nodes of Re U_hat
    (should be >= 0 up to tolerance: a nonnegative transform makes the
    repulsive part dominate on every lattice by Poisson summation).
    """

    passed: bool
    margin_pointwise: float
    fourier_min: float
    tol_pointwise: float = 1e-9
    tol_fourier: float = 1e-9


def construct_stable_potential(u: np.ndarray, grid: Grid):
    """Build a stable interaction V = 2 U_+ - U_- from U = u * u(-.).

    u is symmetrized to be even first, so U is its self-convolution and
    U_hat = (2 pi)^(d/2) |u_hat|^2 >= 0 by construction. The returned pair
    (V, U) satisfies V - max(V, 0)/2 = U exactly, node by node.
    """
    from .pairstate import self_convolution

    u = np.asarray(u, dtype=float)
    if grid.kind == "periodic":
        idx = (-np.arange(grid.n)) % grid.n
        if grid.dimension == 1:
            u = 0.5 * (u + u[idx])
        else:
            u = 0.5 * (u + u[np.ix_(idx, idx, idx)])
    big_u = self_convolution(u, grid)
    v = np.where(big_u >= 0.0, 2.0 * big_u, big_u)
    return v, big_u


def check_assumption2(
    v: np.ndarray,
    u: np.ndarray,
    grid: Grid,
    tol_pointwise: float = 1e-9,
    tol_fourier: float = 1e-9,
) -> StabilityReport:
    """Check the stability inequality V - V_+/2 >= U with U_hat >= 0.

    U must be even (real transform); V and U are node samples on `grid`.
    """
    from .pairstate import fourier

    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    margin = float(np.min(v - 0.5 * np.maximum(v, 0.0) - u))
    u_hat = fourier(u, grid)
    fourier_min = float(np.min(np.real(u_hat)))
    passed = margin >= -tol_pointwise and fourier_min >= -tol_fourier
    return StabilityReport(passed, margin, fourier_min, tol_pointwise, tol_fourier)


def binding_threshold(
    spec: PotentialSpec,
    grid: Grid,
    lam_hi: float = 1.0,
    lam_max: float = 1e6,
    rtol: float = 1e-3,
    laplacian: str | None = None,
) -> float:
    """Smallest coupling lambda at which -2*Laplacian + lambda*V binds.

    Detection compares the ground energy of the scaled interaction on
    `grid` against a box-aware cutoff (states shallower than the box level
    spacing cannot be told from scattering states), so the answer carries
    a positive bias of order sqrt(cutoff); large boxes shrink it. Radial
    grids default to the fd2 tridiagonal solve, which stays fast for the
    near-threshold states this search lives on. The initial bracket
    [0, lam_hi] is doubled up to lam_max; raises BracketError if even
    lam_max does not bind.
    """
    from scipy.optimize import brentq

    from .pairstate import solve_ground_state

    if laplacian is None and grid.kind == "radial":
        laplacian = "fd2"
    v1 = eval_potential(spec, grid.radii())
    eps_detect = max(EPS_BIND, 2.0 * (np.pi / grid.length) ** 2)

    def ground_energy(lam: float) -> float:
        try:
            bs = solve_ground_state(
                lam * v1, grid, laplacian=laplacian, check_decay=False
            )
        except NoBoundStateError:
            return 0.0
        return -bs.e_b

    while ground_energy(lam_hi) > -eps_detect:
        lam_hi *= 2.0
        if lam_hi > lam_max:
            raise BracketError(
                f"no bound state up to lambda = {lam_max:g} on this grid"
            )
    lam_lo = lam_hi / 2.0 if lam_hi > 1.0 else 0.0

    def f(lam: float) -> float:
        return ground_energy(lam) + eps_detect

    if f(lam_lo) <= 0.0:
        # Already bound at the lower edge; the bracket start binds.
        return lam_lo
    return float(brentq(f, lam_lo, lam_hi, rtol=rtol))
