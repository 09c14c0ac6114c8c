"""Pair bound states and the Fourier machinery they share.

The transform convention is unitary: f_hat(p) = (2pi)^(-d/2) ∫ f(x) e^(-ipx) dx.
On periodic grids this is realized by phased FFTs (exact Parseval with the
grid weights); on radial grids by a type-I sine transform over r*f(r) whose
box is (n+1)*spacing, which is exactly unitary with respect to the measures
4 pi r^2 dr and 4 pi p^2 dp.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import (
    ConfigurationError,
    GridTooSmallError,
    NoBoundStateError,
    SolverError,
)
from .grids_potentials import EPS_BIND, Grid

#: Dense 1D eigensolves are used up to this size; Lanczos beyond.
_DENSE_LIMIT = 1200


def _axis_sign(n: int) -> np.ndarray:
    # e^(i p_j L/2) = (-1)^j for every FFT-order index j (n even).
    return 1.0 - 2.0 * (np.arange(n) % 2)


def fourier(f: np.ndarray, grid: Grid, inverse: bool = False) -> np.ndarray:
    """Unitary Fourier transform between a grid and its conjugate nodes.

    Periodic grids return complex arrays in FFT frequency order; radial
    grids return real arrays on the nodes p_j = (j+1) pi / (length+spacing).
    """
    f = np.asarray(f)
    if grid.kind == "radial":
        r = grid.nodes()
        p = grid.frequencies()
        dr = grid.spacing
        dp = np.pi / (grid.length + dr)
        const = (2.0 * np.pi) ** -1.5 * 2.0 * np.pi
        if inverse:
            return const * dp * scipy.fft.dst(p * f, type=1) / r
        return const * dr * scipy.fft.dst(r * f, type=1) / p

    n = grid.n
    sign = _axis_sign(n)
    if grid.dimension == 1:
        if inverse:
            dp = 2.0 * np.pi / grid.length
            return (2.0 * np.pi) ** -0.5 * dp * n * np.fft.ifft(f * sign)
        return (2.0 * np.pi) ** -0.5 * grid.spacing * sign * np.fft.fft(f)
    phase = sign[:, None, None] * sign[None, :, None] * sign[None, None, :]
    if inverse:
        dp = 2.0 * np.pi / grid.length
        return ((2.0 * np.pi) ** -0.5 * dp * n) ** 3 * scipy.fft.ifftn(f * phase)
    return ((2.0 * np.pi) ** -0.5 * grid.spacing) ** 3 * phase * scipy.fft.fftn(f)


def inverse_fourier(f_hat: np.ndarray, grid: Grid) -> np.ndarray:
    return fourier(f_hat, grid, inverse=True)


def self_convolution(f: np.ndarray, grid: Grid) -> np.ndarray:
    """(f * f)(x) = ∫ f(y) f(x-y) dy via the convolution theorem.

    Periodic grids give the circular convolution; the caller is responsible
    for f being supported well inside the box when the linear one is meant.
    """
    d = grid.dimension
    f_hat = fourier(f, grid)
    out = fourier((2.0 * np.pi) ** (d / 2.0) * f_hat * f_hat, grid, inverse=True)
    if np.isrealobj(f):
        return np.real(out)
    return out


@dataclass(frozen=True)
class BoundState:
    """Ground state of the pair Hamiltonian -2*Laplacian + V.

    e_b is the binding energy (the ground energy is -e_b < 0); spectral_gap
    is the distance from -e_b/2 to the rest of the spectrum of
    -Laplacian + V/2, i.e. (E1 - E0)/2 in pair-Hamiltonian units. alpha0 is
    the L2-normalized ground wavefunction on `grid` (sign fixed so its
    integral is positive) and alpha0_hat its transform on the conjugate
    nodes; residual is the certified relative eigenresidual.
    """

    dimension: int
    grid: Grid
    e_b: float
    spectral_gap: float
    alpha0: np.ndarray
    alpha0_hat: np.ndarray
    residual: float

    def to_json(self) -> str:
        payload = {
            "dimension": self.dimension,
            "grid": {
                "dimension": self.grid.dimension,
                "kind": self.grid.kind,
                "n": self.grid.n,
                "length": self.grid.length,
            },
            "E_b": self.e_b,
            "spectral_gap": self.spectral_gap,
            "alpha0": self.alpha0.tolist(),
            "alpha0_hat": self.alpha0_hat.tolist(),
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "BoundState":
        d = json.loads(text)
        grid = Grid(**d["grid"])
        return cls(
            dimension=d["dimension"],
            grid=grid,
            e_b=d["E_b"],
            spectral_gap=d["spectral_gap"],
            alpha0=np.asarray(d["alpha0"], dtype=float),
            alpha0_hat=np.asarray(d["alpha0_hat"], dtype=float),
            residual=0.0,
        )


def _radial_bands(v: np.ndarray, grid: Grid, laplacian: str) -> np.ndarray:
    """Symmetric lower-band form of -2 u'' + V u on r_k = (k+1) dr.

    The u-equation has u(0) = 0 and odd continuation across the origin; at
    fourth order the ghost node -u(dr) folds back onto the first node and
    keeps the matrix symmetric.
    """
    n = grid.n
    inv = 1.0 / (6.0 * grid.spacing**2)
    if laplacian == "fd2":
        bands = np.zeros((2, n))
        bands[0] = 24.0 * inv + v  # 4/dr^2
        bands[1, :-1] = -12.0 * inv  # -2/dr^2
        return bands
    if laplacian != "fd4":
        raise ConfigurationError(f"radial grids support fd4/fd2, got {laplacian!r}")
    bands = np.zeros((3, n))
    bands[0] = 30.0 * inv + v
    bands[0, 0] = 29.0 * inv
    bands[0, 0] += v[0]
    bands[1, :-1] = -16.0 * inv
    bands[2, :-2] = inv
    return bands


def _bands_matvec(bands: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = bands[0] * u
    for k in range(1, bands.shape[0]):
        off = bands[k, :-k]
        out[k:] += off * u[:-k]
        out[:-k] += off * u[k:]
    return out


def _bands_to_sparse(bands: np.ndarray) -> scipy.sparse.csc_matrix:
    n = bands.shape[1]
    diags = [bands[0]]
    offsets = [0]
    for k in range(1, bands.shape[0]):
        diags += [bands[k, :-k], bands[k, :-k]]
        offsets += [-k, k]
    return scipy.sparse.diags(diags, offsets, shape=(n, n), format="csc")


def _solve_radial(v, grid, laplacian):
    bands = _radial_bands(v, grid, laplacian)
    if laplacian == "fd2":
        # Tridiagonal LAPACK path: O(n) per eigenvalue, robust for the
        # near-threshold states where shift-invert Lanczos stalls.
        vals, vecs = scipy.linalg.eigh_tridiagonal(
            bands[0], bands[1, :-1], select="i", select_range=(0, 1)
        )
    else:
        sigma = float(np.min(v)) - 1.0
        v0 = np.exp(-grid.nodes() / grid.length)
        try:
            vals, vecs = scipy.sparse.linalg.eigsh(
                _bands_to_sparse(bands), k=2, sigma=sigma, which="LM", v0=v0
            )
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
        except scipy.sparse.linalg.ArpackError:
            vals, vecs = scipy.linalg.eig_banded(
                bands, lower=True, select="i", select_range=(0, 1)
            )
    resid = np.linalg.norm(_bands_matvec(bands, vecs[:, 0]) - vals[0] * vecs[:, 0])
    return vals, vecs, resid


def _kinetic_circulant(grid: Grid, laplacian: str) -> np.ndarray:
    if laplacian == "spectral":
        eigs = 2.0 * grid.momentum_sq()
        col = np.fft.ifft(eigs).real
    elif laplacian == "fd2":
        col = np.zeros(grid.n)
        col[0] = 4.0 / grid.spacing**2
        col[1] = col[-1] = -2.0 / grid.spacing**2
    else:
        raise ConfigurationError(f"periodic grids support spectral/fd2, got {laplacian!r}")
    return scipy.linalg.circulant(col)


def _solve_periodic_1d(v, grid, laplacian):
    n = grid.n
    if n <= _DENSE_LIMIT:
        h = _kinetic_circulant(grid, laplacian) + np.diag(v)
        vals, vecs = scipy.linalg.eigh(h, subset_by_index=(0, 1))
        resid = np.linalg.norm(h @ vecs[:, 0] - vals[0] * vecs[:, 0])
        return vals, vecs, resid

    if laplacian == "spectral":
        p2 = 2.0 * grid.momentum_sq()

        def matvec(x):
            return np.fft.ifft(p2 * np.fft.fft(x)).real + v * x

        op = scipy.sparse.linalg.LinearOperator((n, n), matvec=matvec, dtype=float)
        apply_h = matvec
    else:
        main = np.full(n, 4.0 / grid.spacing**2) + v
        off = np.full(n - 1, -2.0 / grid.spacing**2)
        h = scipy.sparse.diags(
            [main, off, off, [-2.0 / grid.spacing**2], [-2.0 / grid.spacing**2]],
            [0, 1, -1, n - 1, -(n - 1)],
            format="csr",
        )
        op = h
        apply_h = h.dot
    x = grid.nodes()
    v0 = np.exp(-(x * x) / (2.0 * (grid.length / 16.0) ** 2))
    try:
        vals, vecs = scipy.sparse.linalg.eigsh(
            op, k=2, which="SA", v0=v0, ncv=min(n, 80), tol=1e-12, maxiter=100 * n
        )
    except scipy.sparse.linalg.ArpackNoConvergence:
        # Tight tolerances stall when the first excited level sits inside
        # the near-degenerate cluster of delocalized box modes. The relaxed
        # setting still lands far below the residual certificate threshold.
        vals, vecs = scipy.sparse.linalg.eigsh(
            op, k=2, which="SA", v0=v0, ncv=min(n, 160), tol=1e-9, maxiter=200 * n
        )
    resid = np.linalg.norm(apply_h(vecs[:, 0]) - vals[0] * vecs[:, 0])
    return vals, vecs, resid


def solve_ground_state(
    v: np.ndarray,
    grid: Grid,
    laplacian: str | None = None,
    eps_bind: float = EPS_BIND,
    decay_tol: float = 1e-6,
    check_decay: bool = True,
    refine: bool = True,
) -> BoundState:
    """Solve -2*Laplacian u + V u = E u for the ground state, E = -e_b.

    laplacian: 'fd4' (radial default), 'fd2', or 'spectral' (1D default).
    With refine=True (default) the finite-difference paths add a half-
    resolution companion solve and Richardson-extrapolate e_b and the gap,
    which removes the O(spacing^2) error that kink-carrying potentials
    (square wells) induce regardless of stencil order. The eigenfunction
    and the residual certificate always belong to the full-resolution
    discrete operator; extrapolation touches scalars only, so refined
    results require node-commensurate jump radii to keep their advantage.

    Raises NoBoundStateError when the ground energy is above -eps_bind,
    GridTooSmallError when the state has not decayed at the boundary, and
    SolverError when the eigenresidual certificate fails.
    """
    v = np.asarray(v, dtype=float)
    if grid.kind == "periodic" and grid.dimension != 1:
        raise ConfigurationError("pair solves support radial 3D and periodic 1D grids")
    if v.shape != (grid.n,):
        raise ConfigurationError(f"potential shape {v.shape} does not match grid")

    if grid.kind == "radial":
        method = laplacian or "fd4"
        vals, vecs, resid = _solve_radial(v, grid, method)
    else:
        method = laplacian or "spectral"
        vals, vecs, resid = _solve_periodic_1d(v, grid, method)

    e0, e1 = float(vals[0]), float(vals[1])
    if refine and method in ("fd4", "fd2") and grid.n >= 64:
        # Coarse radial nodes (k+1)*2dr are the odd-index fine nodes; the
        # coarse periodic grid keeps every other node. Subsampling is exact.
        coarse = Grid(grid.dimension, grid.kind, grid.n // 2, grid.length)
        v_c = v[1::2] if grid.kind == "radial" else v[::2]
        if grid.kind == "radial":
            cvals, _, _ = _solve_radial(v_c, coarse, method)
        else:
            cvals, _, _ = _solve_periodic_1d(v_c, coarse, method)
        e0 = (4.0 * e0 - float(cvals[0])) / 3.0
        e1 = (4.0 * e1 - float(cvals[1])) / 3.0
    rel_resid = resid / (1.0 + abs(e0))
    if rel_resid > 1e-8:
        raise SolverError(f"eigenresidual {rel_resid:.2e} exceeds 1e-8")
    if e0 >= -eps_bind:
        raise NoBoundStateError(f"ground energy {e0:.3e} is not below {-eps_bind:.0e}")

    u = vecs[:, 0]
    if grid.kind == "radial":
        alpha0 = u / (np.sqrt(4.0 * np.pi) * grid.nodes())
        boundary = abs(alpha0[-1])
    else:
        # Even interaction => even ground state; symmetrizing makes the
        # transform real to machine precision.
        idx = (-np.arange(grid.n)) % grid.n
        u = 0.5 * (u + u[idx])
        alpha0 = u / np.sqrt(grid.spacing)
        boundary = max(abs(alpha0[0]), abs(alpha0[1]), abs(alpha0[-1]))
    alpha0 = alpha0 / grid.norm(alpha0)
    if grid.integrate(alpha0) < 0.0:
        alpha0 = -alpha0
    if check_decay and boundary > decay_tol * np.max(np.abs(alpha0)):
        raise GridTooSmallError(
            f"boundary amplitude {boundary:.2e} above {decay_tol:g} of the peak;"
            " enlarge the box"
        )

    alpha0_hat = fourier(alpha0, grid)
    if grid.kind == "periodic":
        alpha0_hat = np.real(alpha0_hat)

    return BoundState(
        dimension=grid.dimension,
        grid=grid,
        e_b=-e0,
        spectral_gap=0.5 * (e1 - e0),
        alpha0=alpha0,
        alpha0_hat=alpha0_hat,
        residual=float(rel_resid),
    )
