"""Transform invariants and pair ground-state solves."""

import numpy as np
import pytest

from bhfgp import (
    BoundState,
    Grid,
    GridTooSmallError,
    NoBoundStateError,
    PotentialSpec,
    PotentialTerm,
    eval_potential,
    fourier,
    inverse_fourier,
    self_convolution,
    solve_ground_state,
)

from oracles import shooting_binding_3d, square_well_binding_1d, square_well_binding_3d


def test_parseval_periodic_1d():
    rng = np.random.default_rng(7)
    g = Grid(1, "periodic", 128, 17.0)
    f = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    f_hat = fourier(f, g)
    assert np.isclose(
        g.integrate(np.abs(f) ** 2),
        g.integrate_conjugate(np.abs(f_hat) ** 2),
        rtol=1e-12,
    )


def test_round_trip_periodic_1d():
    rng = np.random.default_rng(8)
    g = Grid(1, "periodic", 128, 9.0)
    f = rng.standard_normal(g.n)
    back = inverse_fourier(fourier(f, g), g)
    assert np.max(np.abs(back - f)) < 1e-12


def test_parseval_and_round_trip_periodic_3d():
    rng = np.random.default_rng(9)
    g = Grid(3, "periodic", 16, 5.0)
    f = rng.standard_normal((16, 16, 16))
    f_hat = fourier(f, g)
    assert np.isclose(
        g.integrate(f * f), g.integrate_conjugate(np.abs(f_hat) ** 2), rtol=1e-12
    )
    assert np.max(np.abs(inverse_fourier(f_hat, g) - f)) < 1e-12


def test_parseval_and_round_trip_radial():
    rng = np.random.default_rng(10)
    g = Grid(3, "radial", 256, 20.0)
    f = rng.standard_normal(g.n)
    f_hat = fourier(f, g)
    assert np.isclose(
        g.integrate(f * f), g.integrate_conjugate(f_hat * f_hat), rtol=1e-12
    )
    assert np.max(np.abs(inverse_fourier(f_hat, g) - f)) < 1e-10


def test_gaussian_fixed_point_1d():
    """e^(-x^2/2) is its own unitary transform."""
    g = Grid(1, "periodic", 256, 32.0)
    f_hat = fourier(np.exp(-0.5 * g.nodes() ** 2), g)
    expected = np.exp(-0.5 * g.frequencies() ** 2)
    assert np.max(np.abs(f_hat - expected)) < 1e-8


def test_gaussian_fixed_point_radial():
    g = Grid(3, "radial", 2048, 40.0)
    f_hat = fourier(np.exp(-0.5 * g.nodes() ** 2), g)
    expected = np.exp(-0.5 * g.frequencies() ** 2)
    assert np.max(np.abs(f_hat - expected)) < 1e-8


def test_gaussian_fixed_point_periodic_3d():
    g = Grid(3, "periodic", 48, 20.0)
    f = np.exp(-0.5 * g.radii() ** 2)
    f_hat = fourier(f, g)
    expected = np.exp(-0.5 * g.momentum_sq())
    assert np.max(np.abs(f_hat - expected)) < 1e-8


def test_ball_indicator_transform():
    """Indicator of |x| <= a transforms to
    (2pi)^(-3/2) 4pi (sin(pa) - pa cos(pa)) / p^3."""
    a = 1.0
    g = Grid(3, "radial", 4096, 32.0)
    f = np.where(g.nodes() < a, 1.0, 0.0)
    f = np.where(g.nodes() == a, 0.5, f)
    f_hat = fourier(f, g)
    p = g.frequencies()
    expected = (2 * np.pi) ** -1.5 * 4 * np.pi * (np.sin(p * a) - p * a * np.cos(p * a)) / p**3
    assert np.max(np.abs(f_hat - expected)) < 1e-5


def test_convolution_theorem_periodic():
    """fourier(f * f) = (2pi)^(d/2) fourier(f)^2."""
    g = Grid(1, "periodic", 256, 24.0)
    x = g.nodes()
    f = np.exp(-0.5 * x * x) * (1.0 + 0.3 * np.cos(x))
    conv = self_convolution(f, g)
    lhs = fourier(conv, g)
    rhs = (2 * np.pi) ** 0.5 * fourier(f, g) ** 2
    assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_self_convolution_gaussian_1d():
    """Gaussians e^(-x^2/(2w^2)) self-convolve to sqrt(pi w^2) e^(-x^2/(4w^2))."""
    w = 0.7
    g = Grid(1, "periodic", 512, 24.0)
    x = g.nodes()
    conv = self_convolution(np.exp(-x * x / (2 * w * w)), g)
    expected = np.sqrt(np.pi * w * w) * np.exp(-x * x / (4 * w * w))
    assert np.max(np.abs(conv - expected)) < 1e-10


def test_self_convolution_gaussian_radial():
    w = 1.0
    g = Grid(3, "radial", 1024, 24.0)
    r = g.nodes()
    conv = self_convolution(np.exp(-r * r / 2), g)
    expected = np.pi**1.5 * np.exp(-r * r / 4)
    assert np.max(np.abs(conv - expected)) < 1e-8


def test_self_convolution_value_at_zero_is_norm():
    """(f * f)(0) = ||f||^2 for even f; checked against the grid integral."""
    g = Grid(1, "periodic", 256, 20.0)
    x = g.nodes()
    f = np.exp(-np.abs(x)) * (x * x + 0.2)
    f = 0.5 * (f + f[(-np.arange(g.n)) % g.n])
    conv = self_convolution(f, g)
    # x = 0 is node n/2.
    assert np.isclose(conv[g.n // 2], g.integrate(f * f), rtol=1e-10)


def test_square_well_3d_binding():
    """Acceptance-grade solve: refined fd4 against the transcendental value."""
    e_exact = square_well_binding_3d(10.0, 1.0)
    g = Grid(3, "radial", 2048, 16.0)
    v = eval_potential(
        PotentialSpec(terms=(PotentialTerm(kind="square-well", depth=10.0, radius=1.0),)), g.radii()
    )
    bs = solve_ground_state(v, g)
    assert abs(bs.e_b - e_exact) / e_exact < 1e-6
    assert bs.spectral_gap > 0.9
    assert bs.residual < 1e-8


def test_gaussian_well_3d_vs_shooting():
    """Smooth potential: refined fd4 matches the shooting oracle to 1e-6."""
    depth = 8.0

    def v_of_r(r):
        return -depth * np.exp(-0.5 * r * r)

    e_oracle = shooting_binding_3d(v_of_r, 0.5, depth, 14.0)
    g = Grid(3, "radial", 2048, 20.0)
    bs = solve_ground_state(v_of_r(g.nodes()), g)
    assert abs(bs.e_b - e_oracle) / e_oracle < 1e-6


def test_square_well_1d_binding():
    e_exact = square_well_binding_1d(5.0, 1.0)
    g = Grid(1, "periodic", 1024, 32.0)
    v = eval_potential(
        PotentialSpec(terms=(PotentialTerm(kind="square-well", depth=5.0, radius=1.0),)), g.radii()
    )
    bs = solve_ground_state(v, g)
    assert abs(bs.e_b - e_exact) / e_exact < 1e-3
    assert bs.dimension == 1


def test_alpha0_normalized_even_positive():
    g = Grid(1, "periodic", 512, 36.0)
    v = -4.0 * np.exp(-0.5 * g.nodes() ** 2)
    bs = solve_ground_state(v, g)
    assert np.isclose(g.integrate(bs.alpha0**2), 1.0, rtol=1e-12)
    assert g.integrate(bs.alpha0) > 0
    idx = (-np.arange(g.n)) % g.n
    assert np.max(np.abs(bs.alpha0 - bs.alpha0[idx])) < 1e-12
    assert np.isrealobj(bs.alpha0_hat)


def test_fd2_variant_close_to_spectral():
    g = Grid(1, "periodic", 512, 28.0)
    v = -5.0 * np.exp(-0.5 * g.nodes() ** 2)
    e_spec = solve_ground_state(v, g).e_b
    e_fd2 = solve_ground_state(v, g, laplacian="fd2").e_b
    assert abs(e_fd2 - e_spec) / e_spec < 5e-3
    e_fd2_raw = solve_ground_state(v, g, laplacian="fd2", refine=False).e_b
    # Refinement should move fd2 toward the spectral value.
    assert abs(e_fd2 - e_spec) < abs(e_fd2_raw - e_spec)


def test_lanczos_path_matches_dense():
    """Above the dense cutoff the FFT Lanczos path must agree."""
    v_fun = lambda x: -5.0 * np.exp(-0.5 * x * x)
    g_small = Grid(1, "periodic", 1024, 28.0)
    g_large = Grid(1, "periodic", 2048, 28.0)
    e_small = solve_ground_state(v_fun(g_small.nodes()), g_small).e_b
    e_large = solve_ground_state(v_fun(g_large.nodes()), g_large).e_b
    assert abs(e_small - e_large) / e_small < 1e-8


def test_no_bound_state_raises():
    """Unit 3D square well at coupling 1 < pi^2/2 has no bound state."""
    g = Grid(3, "radial", 1024, 40.0)
    v = eval_potential(
        PotentialSpec(terms=(PotentialTerm(kind="square-well", depth=1.0, radius=1.0),)), g.radii()
    )
    with pytest.raises(NoBoundStateError):
        solve_ground_state(v, g)


def test_grid_too_small_raises():
    g = Grid(3, "radial", 512, 4.0)
    v = eval_potential(
        PotentialSpec(terms=(PotentialTerm(kind="square-well", depth=10.0, radius=1.0),)), g.radii()
    )
    with pytest.raises(GridTooSmallError):
        solve_ground_state(v, g)


def test_bound_state_json_round_trip():
    g = Grid(1, "periodic", 192, 36.0)
    v = -4.0 * np.exp(-0.5 * g.nodes() ** 2)
    bs = solve_ground_state(v, g)
    bs2 = BoundState.from_json(bs.to_json())
    assert bs2.grid == bs.grid
    assert bs2.e_b == bs.e_b
    assert np.array_equal(bs2.alpha0, bs.alpha0)
