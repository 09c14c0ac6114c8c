"""Pair-product trial kernels: identities, admissibility, trace normalization.

The workhorse configuration is a shallow wide condensate in a flat-bottom
steep-wall trap. One-dimensional kernels keep the pair operator norm at
order one instead of letting it shrink with h, so low peak density is the
only way the admissibility certificate can come out positive; the trap
below was sized for exactly that.
"""

import warnings

import numpy as np
import pytest

from bhfgp import (
    ConfigurationError,
    Grid,
    InconsistentInputError,
    PotentialSpec,
    PotentialTerm,
    PreconditionError,
    ResolutionError,
    TrapSpec,
    eval_potential,
    solve_ground_state,
)
from bhfgp.coupling import CouplingConstants
from bhfgp.gp import CondensateState, GPOptions, gp_minimize
from bhfgp.pairstate import BoundState
from bhfgp.trialstate import (
    AdmissibilityReport,
    TrialState,
    alpha_operator_norm,
    build_trial,
    check_admissibility,
    normalize_for_trace,
    pair_operator_eigenvalues,
    predict_expansion,
    trace_normalizer,
)

BOX = 48.0


def _shallow_trap() -> TrapSpec:
    """W(x) = 4 (x/22.5)^26, cut at |x| = 24: flat floor, steep walls."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return TrapSpec(tuple([0.0] * 26 + [4.0 / 22.5**26]), cutoff=24.0)


@pytest.fixture(scope="module")
def bound_state() -> BoundState:
    grid = Grid(1, "periodic", 1024, 32.0)
    well = PotentialSpec(
        terms=(PotentialTerm(kind="gaussian", amplitude=-10.0, width=0.5),)
    )
    return solve_ground_state(eval_potential(well, grid.nodes()), grid)


@pytest.fixture(scope="module")
def trials(bound_state):
    """Condensate and trial kernel per scale, n doubling as h halves."""
    trap = _shallow_trap()
    opts = GPOptions(tol=1e-9, max_iter=60000)
    out = {}
    for h in (0.125, 0.0625, 0.03125):
        lattice = Grid(1, "periodic", round(64 / h), BOX)
        state = gp_minimize(trap, 3.0, lattice, opts)
        out[h] = (state, build_trial(h, state, bound_state, lattice, 1))
    return out


def test_kernel_symmetry_is_exact(trials):
    _, ts = trials[0.125]
    assert np.max(np.abs(ts.lattice_alpha - ts.lattice_alpha.T)) == 0.0


def test_hilbert_schmidt_identity(trials, bound_state):
    state, ts = trials[0.0625]
    assert abs(state.norm - 1.0) < 1e-10
    a0_norm = bound_state.grid.integrate(bound_state.alpha0**2)
    assert abs(a0_norm - 1.0) < 1e-10
    hs_sq = float(np.sum(ts.lattice_alpha**2)) * ts.grid.spacing**2
    ratio = ts.h * hs_sq
    assert 0.98 < ratio < 1.02


def test_trace_matches_schatten_form(trials):
    _, ts = trials[0.0625]
    eigs = np.clip(pair_operator_eigenvalues(ts), 0.0, None)
    a, b = float(np.sum(eigs)), float(np.sum(eigs**2))
    trace = float(np.trace(ts.lattice_gamma)) * ts.grid.spacing
    expected = a + (1.0 + ts.h**0.5) * b
    assert abs(trace - expected) <= 1e-10 * (1.0 + trace)


def test_admissibility_of_shallow_cloud(trials):
    for h in (0.125, 0.0625):
        _, ts = trials[h]
        report = check_admissibility(ts)
        assert report.passed
        assert report.guara_min >= -1e-10
        assert 0.25 < report.alpha_opnorm < 0.35


def test_admissibility_rejects_inflated_cloud(trials, bound_state):
    state, ts = trials[0.125]
    inflated = build_trial(0.125, 10.0 * state.psi, bound_state, ts.grid, 1)
    report = check_admissibility(inflated)
    assert not report.passed
    assert report.guara_min < -1e-3


def test_extended_one_body_eigenvalues_bounded(trials):
    _, ts = trials[0.125]
    dx = ts.grid.spacing
    gam = ts.lattice_gamma * dx
    alp = ts.lattice_alpha * dx
    n = ts.grid.n
    big = np.block([[gam, alp], [alp, np.eye(n) - gam]])
    eigs = np.linalg.eigvalsh(big)
    assert eigs.min() >= -1e-9
    assert eigs.max() <= 1.0 + 1e-9


def test_operator_norm_tracks_half_power_scaling(trials):
    scaled = {h: alpha_operator_norm(ts) / h**0.5 for h, (_, ts) in trials.items()}
    base = scaled[0.125]
    for h, expected in ((0.0625, np.sqrt(2.0)), (0.03125, 2.0)):
        ratio = scaled[h] / base
        assert abs(ratio - expected) <= 0.02 * expected
        assert ratio <= 3.0


@pytest.mark.xfail(
    strict=True,
    reason="one-dimensional pair kernels keep the gamma sup at order one, so"
    " the contrast gamma_sup/h grows like 1/h; the [1/3, 3] band presumes"
    " the three-dimensional h^1 decay of the pair operator",
)
def test_gamma_contrast_band(trials):
    contrast = {}
    for h, (_, ts) in trials.items():
        sup = float(np.max(pair_operator_eigenvalues(ts)))
        contrast[h] = (sup + (1.0 + h**0.5) * sup**2) / h
    base = contrast[0.125]
    for h in (0.0625, 0.03125):
        assert 1.0 / 3.0 <= contrast[h] / base <= 3.0


def test_trace_normalizer_rebuild_certificate(trials, bound_state):
    state, ts = trials[0.0625]
    lam = normalize_for_trace(ts)
    assert 0.9 < lam < 1.0
    eigs = np.clip(pair_operator_eigenvalues(ts), 0.0, None)
    a, b = float(np.sum(eigs)), float(np.sum(eigs**2))
    c = 1.0 + ts.h**0.5
    residual = abs(lam**2 * a + c * lam**4 * b - 1.0 / ts.h) * ts.h
    assert residual <= 1e-12
    rebuilt = build_trial(ts.h, lam * state.psi, bound_state, ts.grid, 1)
    trace = float(np.trace(rebuilt.lattice_gamma)) * ts.grid.spacing
    assert abs(trace * ts.h - 1.0) <= 1e-8


def test_trace_normalizer_quadratic_stub():
    lam = trace_normalizer(0.25, 5.0, 0.0)
    assert abs(lam - np.sqrt(0.8)) <= 1e-14


def test_trace_normalizer_rejects_inconsistent_scales():
    with pytest.raises(InconsistentInputError):
        trace_normalizer(1.0, 100.0, 0.0)
    with pytest.raises(InconsistentInputError):
        trace_normalizer(1.0, 1e-6, 1e-6)


def test_trace_normalizer_rate_with_volume_scaled_norms():
    """|lam - 1| = O(h^2) when the Schatten norms carry 3D volume scaling."""
    hs = np.array([0.125, 0.0625, 0.03125, 0.015625])
    devs = []
    for h in hs:
        a = (1.0 + 0.1 * h**2) / h
        b = 0.4 * h
        devs.append(abs(trace_normalizer(h, a, b) - 1.0))
    slope = np.polyfit(np.log(hs), np.log(devs), 1)[0]
    assert slope >= 1.8


def test_build_rejects_scale_outside_unit_interval(trials, bound_state):
    state, ts = trials[0.125]
    for bad in (0.0, -0.125, 1.5):
        with pytest.raises(ConfigurationError):
            build_trial(bad, state, bound_state, ts.grid, 1)


def test_build_accepts_unit_scale(trials, bound_state):
    state, ts = trials[0.125]
    unit = build_trial(1.0, state, bound_state, ts.grid, 1)
    assert unit.c_h == 1.0
    assert unit.lattice_alpha is not None


def test_microscale_guard_names_minimum_n(trials, bound_state):
    state, _ = trials[0.125]
    coarse = Grid(1, "periodic", 128, BOX)
    psi = state.psi[::4]
    with pytest.raises(ResolutionError) as err:
        build_trial(0.125, psi, bound_state, coarse, 1)
    message = str(err.value)
    assert "minimum n" in message
    assert int(message.rsplit("=", 1)[1].strip(" )")) >= 400


def test_wrap_guard_flags_undecayed_pair_tail():
    wide = Grid(1, "periodic", 512, 32.0)
    alpha0 = np.pi ** (-0.25) * np.exp(-0.5 * wide.nodes() ** 2)
    bs = BoundState(
        dimension=1,
        grid=wide,
        e_b=1.0,
        spectral_gap=1.0,
        alpha0=alpha0,
        alpha0_hat=alpha0,
        residual=0.0,
    )
    tiny = Grid(1, "periodic", 64, 3.0)
    with pytest.raises(ResolutionError, match="wrap"):
        build_trial(1.0, np.full(64, 1.0 / np.sqrt(3.0)), bs, tiny, 1)


def test_formula_level_state_has_no_kernels(bound_state):
    ts = build_trial(0.1, None, bound_state, None, 3)
    assert ts.c_h == pytest.approx(0.1 ** (-2.0))
    assert ts.lattice_alpha is None
    with pytest.raises(PreconditionError):
        check_admissibility(ts)


def _flat_condensate(trap_height: float) -> CondensateState:
    grid = Grid(1, "periodic", 64, 8.0)
    psi = np.full(64, 1.0 / np.sqrt(8.0))
    return CondensateState(
        psi=psi,
        norm=1.0,
        energy=2.0 * trap_height,
        chemical_potential=2.0 * trap_height,
        residual=0.0,
        grid=grid,
        trap=TrapSpec((trap_height,)),
        iterations=0,
        converged=True,
    )


def test_predicted_energy_arithmetic():
    cc = CouplingConstants(
        g_bcs=1.0,
        g_dir=0.0,
        g_ex=0.0,
        g=0.0,
        assumption2_passed=True,
        quadrature_error_estimate=0.0,
    )
    state = _flat_condensate(1.0)
    assert predict_expansion(0.1, state, cc, 1.0) == pytest.approx(-4.9, abs=1e-12)
    assert predict_expansion(0.05, state, cc, 1.0) < predict_expansion(
        0.1, state, cc, 1.0
    )


def test_admissibility_certificate_positive_in_dilute_box():
    """Weakly bound pair in a huge box: every admissibility clause holds.

    The certificate g - g^2 - a^2 per pair eigenvalue a needs the largest
    eigenvalue below [sqrt(1 + sqrt(h)) - 1] / (1 + sqrt(h)), about 0.31 at
    h = 1/16. A flat condensate spreads the kernel mass over the whole box,
    so a 128-wide box at n = 1024 lands the operator norm near 0.23 with
    margin to spare.
    """
    micro = Grid(1, "periodic", 2048, 64.0)
    well = PotentialSpec(
        terms=(PotentialTerm(kind="gaussian", amplitude=-2.2, width=0.6),)
    )
    bs = solve_ground_state(eval_potential(well, micro.nodes()), micro)
    assert bs.e_b == pytest.approx(0.689851, rel=1e-4)

    lattice = Grid(1, "periodic", 1024, 128.0)
    state = gp_minimize(TrapSpec((0.0,)), 1.0, lattice, GPOptions(tol=1e-10))
    ts = build_trial(1.0 / 16.0, state, bs, lattice, 1)
    lam = normalize_for_trace(ts)
    assert lam == pytest.approx(0.944688, abs=1e-4)

    scaled = build_trial(1.0 / 16.0, lam * state.psi, bs, lattice, 1)
    report = check_admissibility(scaled)
    assert report.passed
    assert report.guara_min >= -report.tol_psd
    assert report.alpha_opnorm == pytest.approx(0.2291, abs=2e-3)
    eigs = pair_operator_eigenvalues(scaled)
    assert eigs.min() >= -1e-10
    assert eigs.max() <= 1.0 + 1e-10
