"""Null geodesic integration, projection, reparameterization, curve tools."""

import numpy as np
import pytest

from nulllift.dynamics import (
    IntegratorConfig,
    PhasePoint,
    arclength_resample,
    dense_states,
    hamiltonian_value,
    hausdorff_distance,
    integrate_null_geodesic,
    null_initial_momentum,
    reparameterize,
    write_trajectory_csv,
)
from nulllift.errors import DomainError
from nulllift.fields import ScalarField, parse_scalar_field
from nulllift.geometry import conformal_rescale
from nulllift.lifts import (
    builtin_system,
    eisenhart_duval_lift,
    initial_phase_point,
    reduce_trajectory,
    signed_clock_lift,
)


@pytest.fixture
def free_lift():
    return eisenhart_duval_lift(builtin_system("free"))


@pytest.fixture
def osc_lift():
    return eisenhart_duval_lift(builtin_system("harmonic", omega=1.0))


def test_phase_point_validation():
    with pytest.raises(DomainError):
        PhasePoint([1.0, 2.0], [1.0])
    with pytest.raises(DomainError):
        PhasePoint([np.nan], [1.0])
    pt = PhasePoint([1, 2], [3, 4])
    assert pt.y.dtype == float


def test_integrator_config_validation():
    with pytest.raises(DomainError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(DomainError):
        IntegratorConfig(lambda_max=0.0)
    with pytest.raises(DomainError):
        IntegratorConfig(max_step=-1.0)


def test_hamiltonian_value_examples(free_lift, osc_lift):
    assert hamiltonian_value(free_lift.metric, PhasePoint([0, 0, 0], [1, 0, 0])) == 0.5
    # p_u p_v cancels the kinetic part on the cone
    assert hamiltonian_value(free_lift.metric, PhasePoint([0, 0, 0], [1, -0.5, 1])) == 0.0
    got = hamiltonian_value(osc_lift.metric, PhasePoint([1, 0, 0], [0, -0.5, 1]))
    assert got == pytest.approx(0.0, abs=1e-15)


def test_null_completion_linear_sheet(osc_lift):
    # the vertical pair makes the condition linear in p_u whenever p_v != 0
    p = null_initial_momentum(osc_lift.metric, [1.0, 0.0, 0.0], [0.3, 0.0, 2.0], 1)
    want = -(0.5 * 0.3**2 + 2.0**2 * 0.5) / 2.0
    assert p[1] == pytest.approx(want, abs=1e-14)
    assert abs(hamiltonian_value(osc_lift.metric, PhasePoint([1, 0, 0], p))) < 1e-14
    with pytest.raises(DomainError):
        # with p_v = 0 the u-momentum drops out of the condition entirely
        null_initial_momentum(osc_lift.metric, [1.0, 0.0, 0.0], [0.3, 0.0, 0.0], 1)
    with pytest.raises(DomainError):
        null_initial_momentum(osc_lift.metric, [1.0, 0.0, 0.0], [0.3, 0.0, 1.0], 7)


def test_null_completion_quadratic_sheets():
    s = builtin_system("custom", n=1, V="0.5*q^2 + 1")
    lift = signed_clock_lift(s, -1)
    y = [1.0, 0.0, 0.0]
    partial = [0.0, 1.0, 0.0]
    with pytest.raises(DomainError):
        null_initial_momentum(lift.metric, y, partial, 2)
    up = null_initial_momentum(lift.metric, y, partial, 2, guess=1.0)
    dn = null_initial_momentum(lift.metric, y, partial, 2, guess=-1.0)
    assert up[2] == pytest.approx(np.sqrt(1.5))
    assert dn[2] == pytest.approx(-np.sqrt(1.5))
    # flipping the clock sign makes the required square negative
    flipped = signed_clock_lift(s, 1)
    with pytest.raises(DomainError):
        null_initial_momentum(flipped.metric, y, partial, 2, guess=1.0)


def test_flat_lift_runs_straight(free_lift):
    pt = initial_phase_point(free_lift, [0.2], [0.7])
    cfg = IntegratorConfig(lambda_max=5.0, project_index=1)
    traj = integrate_null_geodesic(free_lift.metric, pt, cfg)
    G = free_lift.metric.g_inv(pt.y)
    vel = G @ pt.p
    for k in (0, traj.n_steps // 2, traj.n_steps):
        lam = traj.lambdas[k]
        assert np.max(np.abs(traj.states[k] - (pt.y + lam * vel))) < 1e-9
        assert np.max(np.abs(traj.momenta[k] - pt.p)) < 1e-12
    mid = np.array([1.7, 2.9])
    Y, P = traj.sample(mid)
    assert np.max(np.abs(Y - (pt.y + mid[:, None] * vel))) < 1e-9


def test_initial_data_must_sit_on_shell(free_lift):
    cfg = IntegratorConfig(lambda_max=1.0, project_index=1)
    with pytest.raises(DomainError):
        integrate_null_geodesic(free_lift.metric, PhasePoint([0, 0, 0], [1, 0, 1]), cfg)
    with pytest.raises(DomainError):
        # projection enabled but nobody said which momentum to move
        integrate_null_geodesic(
            free_lift.metric,
            PhasePoint([0, 0, 0], [1, -0.5, 1]),
            IntegratorConfig(lambda_max=1.0),
        )


def test_null_drift_with_and_without_projection(osc_lift):
    pt = initial_phase_point(osc_lift, [1.0], [0.0])
    on = IntegratorConfig(lambda_max=10.0, project_index=1)
    traj = integrate_null_geodesic(osc_lift.metric, pt, on)
    assert traj.max_abs_hamiltonian <= 1e-8
    assert np.max(np.abs(traj.ham_values)) <= 1e-8
    off = IntegratorConfig(lambda_max=10.0, null_projection=False)
    traj = integrate_null_geodesic(osc_lift.metric, pt, off)
    assert traj.max_abs_hamiltonian <= 1e-6


def test_projection_repairs_sloppy_tolerances(osc_lift):
    pt = initial_phase_point(osc_lift, [1.0], [0.0])
    cfg = IntegratorConfig(
        rel_tol=1e-6, abs_tol=1e-8, lambda_max=-10.0, project_index=1, null_tol=1e-12
    )
    traj = integrate_null_geodesic(osc_lift.metric, pt, cfg)
    assert traj.n_projections > 0
    assert traj.max_abs_hamiltonian <= 1e-10
    base = reduce_trajectory(traj, osc_lift)
    assert np.max(np.abs(base.q[:, 0] - np.cos(base.t))) < 1e-3


def test_lambda_grid_is_strictly_increasing(osc_lift):
    pt = initial_phase_point(osc_lift, [1.0], [0.0])
    for lam_max in (7.0, -7.0):
        cfg = IntegratorConfig(lambda_max=lam_max, project_index=1)
        traj = integrate_null_geodesic(osc_lift.metric, pt, cfg)
        assert np.all(np.diff(traj.lambdas) > 0)
        assert traj.lambdas[0] == min(0.0, lam_max)
        assert traj.lambdas[-1] == max(0.0, lam_max)
        assert traj.states.shape == (traj.n_steps + 1, 3)


def test_kepler_long_run_conserves_angular_momentum():
    """Ten elliptic orbits: L and the vertical momentum hold to 1e-8."""
    lift = eisenhart_duval_lift(builtin_system("kepler"))
    q0, p0 = np.array([1.0, 0.0]), np.array([0.0, 1.1])
    energy = 0.5 * 1.1**2 - 1.0
    period = 2 * np.pi * (-1.0 / (2 * energy)) ** 1.5
    pt = initial_phase_point(lift, q0, p0)
    cfg = IntegratorConfig(lambda_max=-10 * period, project_index=2)
    traj = integrate_null_geodesic(lift.metric, pt, cfg)
    base = reduce_trajectory(traj, lift)
    L = base.q[:, 0] * base.p[:, 1] - base.q[:, 1] * base.p[:, 0]
    assert np.max(np.abs(L - 1.1)) < 1e-8
    assert np.max(np.abs(traj.momenta[:, 3] - 1.0)) < 1e-8
    assert np.max(np.abs(base.energy - energy)) < 1e-8
    assert base.t[-1] == pytest.approx(10 * period)


def test_reparameterize_constant_factor(osc_lift):
    pt = initial_phase_point(osc_lift, [1.0], [0.0])
    cfg = IntegratorConfig(lambda_max=4.0, project_index=1)
    traj = integrate_null_geodesic(osc_lift.metric, pt, cfg)
    same = reparameterize(traj, ScalarField.constant(1.0, 3))
    assert np.max(np.abs(same.lambdas - traj.lambdas)) < 1e-12
    doubled = reparameterize(traj, ScalarField.constant(2.0, 3))
    assert np.max(np.abs(doubled.lambdas - 4.0 * traj.lambdas)) < 1e-10
    assert doubled.states is not traj.states
    assert np.array_equal(doubled.states, traj.states)
    assert np.max(np.abs(doubled.ham_values - traj.ham_values / 4.0)) < 1e-18
    with pytest.raises(DomainError):
        reparameterize(same, ScalarField.constant(1.0, 3))  # dense data was dropped


def test_reparameterize_matches_rescaled_flow(osc_lift):
    """Integrating Omega^-2 H reproduces the quadrature-reparameterized curve."""
    omega = parse_scalar_field("exp(0.1*q + 0.05*sin(u))", ("q", "u", "v"))
    pt = initial_phase_point(osc_lift, [1.0], [0.0])
    cfg = IntegratorConfig(lambda_max=6.0, max_step=0.1, project_index=1)
    traj = integrate_null_geodesic(osc_lift.metric, pt, cfg)
    rep = reparameterize(traj, omega)
    assert rep.quadrature_error < 1e-5
    rescaled = conformal_rescale(osc_lift.metric, omega)
    cfg2 = IntegratorConfig(
        lambda_max=float(rep.lambdas[-1]), max_step=0.1, project_index=1
    )
    traj2 = integrate_null_geodesic(rescaled, pt, cfg2)
    Y2, P2 = traj2.sample(rep.lambdas)
    assert np.max(np.abs(Y2 - rep.states)) < 1e-5
    assert np.max(np.abs(P2 - rep.momenta)) < 1e-5
    d = hausdorff_distance(dense_states(traj, 2000), dense_states(traj2, 2000))
    assert d < 1e-5


def test_reparameterize_rejects_vanishing_factor(osc_lift):
    pt = initial_phase_point(osc_lift, [1.0], [0.0])
    cfg = IntegratorConfig(lambda_max=2.0, project_index=1)
    traj = integrate_null_geodesic(osc_lift.metric, pt, cfg)
    with pytest.raises(DomainError):
        # q = cos(lambda) changes sign inside the window
        reparameterize(traj, parse_scalar_field("q", ("q", "u", "v")))


def test_sample_outside_range(free_lift):
    pt = initial_phase_point(free_lift, [0.0], [1.0])
    cfg = IntegratorConfig(lambda_max=1.0, project_index=1)
    traj = integrate_null_geodesic(free_lift.metric, pt, cfg)
    with pytest.raises(DomainError):
        traj.sample([1.5])
    with pytest.raises(DomainError):
        traj.sample([-0.1])


def test_csv_round_trip(tmp_path, osc_lift):
    pt = initial_phase_point(osc_lift, [1.0], [0.0])
    cfg = IntegratorConfig(lambda_max=2.0, project_index=1)
    traj = integrate_null_geodesic(osc_lift.metric, pt, cfg)
    path = tmp_path / "curve.csv"
    write_trajectory_csv(traj, path)
    with open(path) as fh:
        header = fh.readline().strip()
    assert header == "lambda,y1,y2,y3,p1,p2,p3,H"
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    assert data.shape == (len(traj.lambdas), 8)
    assert np.max(np.abs(data[:, 0] - traj.lambdas)) == 0.0
    assert np.max(np.abs(data[:, 1:4] - traj.states)) == 0.0
    assert np.max(np.abs(data[:, 7] - traj.ham_values)) == 0.0


def test_arclength_resample_spacing():
    t = np.linspace(0, np.pi, 200)
    arc = np.column_stack([np.cos(t), np.sin(t)])
    out = arclength_resample(arc, 50)
    steps = np.linalg.norm(np.diff(out, axis=0), axis=1)
    assert np.max(steps) - np.min(steps) < 1e-3
    assert np.max(np.abs(np.linalg.norm(out, axis=1) - 1.0)) < 1e-3
    with pytest.raises(DomainError):
        arclength_resample(np.zeros((3, 2)), 10)
    with pytest.raises(DomainError):
        arclength_resample(arc[:1], 10)


def test_hausdorff_distance_cases():
    t = np.linspace(0, 2 * np.pi, 400)
    circle = np.column_stack([np.cos(t), np.sin(t)])
    shifted = np.roll(circle, 57, axis=0)  # same point set, shifted sampling
    assert hausdorff_distance(circle, shifted) < 1e-3
    offset = circle + np.array([0.05, 0.0])
    d = hausdorff_distance(circle, offset)
    assert 0.04 < d <= 0.0501
    # asymmetry of the one-sided distances is hidden by the symmetric max
    seg = np.array([[0.0, 0.0], [1.0, 0.0]])
    longer = np.array([[0.0, 0.0], [2.0, 0.0]])
    assert hausdorff_distance(seg, longer) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        hausdorff_distance(seg[:1], longer)
