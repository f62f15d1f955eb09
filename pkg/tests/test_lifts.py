"""Lift constructors, their closed-form inverse metrics, and reductions."""

import numpy as np
import pytest

from nulllift.dynamics import (
    IntegratorConfig,
    PhasePoint,
    Trajectory,
    hamiltonian_value,
    hausdorff_distance,
    dense_states,
    integrate_null_geodesic,
    reparameterize,
)
from nulllift.errors import DomainError, LiftError
from nulllift.fields import MatrixField, ScalarField, parse_scalar_field
from nulllift.geometry import rescale_by_factor
from nulllift.lifts import (
    NaturalSystem,
    base_var_names,
    builtin_system,
    ccm_dual,
    ccm_lift,
    eisenhart_duval_lift,
    initial_phase_point,
    jacobi_system,
    multi_potential_lift,
    reduce_trajectory,
    signed_clock_lift,
)
from oracles import newton_flow


def charged_system(e=1.3):
    """1-dof system with vector potential and time-dependent potential."""
    names = base_var_names(1)
    V = parse_scalar_field("0.5*q^2 + 0.2*sin(t)*q", names)
    A = (parse_scalar_field("0.3*q", names),)
    h_inv = MatrixField.from_entries([[parse_scalar_field("1 + 0.1*q^2", names)]])
    return NaturalSystem(1, h_inv, V, A, e)


def test_natural_hamiltonian_matches_formula():
    s = charged_system(e=1.3)
    rng = np.random.default_rng(3)
    for _ in range(10):
        q, p, t = rng.uniform(-1, 1, size=3)
        h = 1 + 0.1 * q**2
        a = 0.3 * q
        v = 0.5 * q**2 + 0.2 * np.sin(t) * q
        want = 0.5 * h * (p + 1.3 * a) ** 2 + 1.3**2 * v
        assert abs(s.hamiltonian([q], [p], t) - want) < 1e-12
    assert s.has_vector_potential
    assert not builtin_system("free").has_vector_potential


def test_builtin_registry():
    assert builtin_system("free", n=2).hamiltonian([0, 0], [3, 4]) == pytest.approx(12.5)
    harm = builtin_system("harmonic", omega=2.0)
    assert harm.hamiltonian([1.5], [0.0]) == pytest.approx(4.5)
    kep = builtin_system("kepler")
    assert kep.hamiltonian([3.0, 4.0], [0.0, 0.0]) == pytest.approx(-0.2)
    cust = builtin_system("custom", n=1, V="q^4", h_inv=[["1 + q^2"]])
    assert cust.hamiltonian([2.0], [1.0]) == pytest.approx(0.5 * 5.0 + 16.0)
    with pytest.raises(DomainError):
        builtin_system("does-not-exist")
    with pytest.raises(DomainError):
        builtin_system("harmonic", omegaa=1.0)
    with pytest.raises(DomainError):
        builtin_system("kepler", n=1)


def test_ed_lift_structural_entries():
    s = builtin_system("harmonic", omega=1.4)
    lift = eisenhart_duval_lift(s)
    assert lift.coord_names == ("q", "u", "v")
    g = lift.metric.g
    # exact zeros stay symbolic constants, not small numbers
    assert g.entry(0, 1).constant_value == 0.0
    assert g.entry(2, 2).constant_value == 0.0
    assert g.entry(0, 0).constant_value == 1.0
    assert g.entry(1, 2).constant_value == 1.0
    for q in (0.0, 0.7, -1.2):
        val = lift.metric.value([q, 0.3, -0.5])
        assert val[1, 1] == pytest.approx(-(1.4 * q) ** 2)
    ginv = lift.metric.g_inv
    assert ginv.entry(1, 1).constant_value == 0.0
    assert ginv.entry(0, 1).constant_value == 0.0


def test_ed_lift_inverse_blocks_with_vector_potential():
    s = charged_system()
    lift = eisenhart_duval_lift(s)
    rng = np.random.default_rng(11)
    for _ in range(10):
        y = rng.uniform(-1.5, 1.5, size=3)
        q, u = y[0], y[1]
        t = -u / s.e
        h = 1 + 0.1 * q**2
        a = 0.3 * q
        G = lift.metric.g_inv(y)
        assert G[0, 0] == pytest.approx(h, abs=1e-14)
        assert G[0, 2] == pytest.approx(-h * a, abs=1e-14)
        assert G[1, 2] == pytest.approx(1.0)
        assert G[1, 1] == 0.0
        v = 0.5 * q**2 + 0.2 * np.sin(t) * q
        assert G[2, 2] == pytest.approx(2 * v + h * a * a, abs=1e-13)
        # lower metric picks up A in the (q, u) slot
        glow = lift.metric.value(y)
        assert glow[0, 1] == pytest.approx(a, abs=1e-14)
        assert np.max(np.abs(glow @ G - np.eye(3))) < 1e-12


def test_ed_on_shell_hamiltonian_identity():
    s = charged_system(e=1.7)
    lift = eisenhart_duval_lift(s)
    rng = np.random.default_rng(5)
    for _ in range(20):
        y = rng.uniform(-1.2, 1.2, size=3)
        p = rng.uniform(-2, 2, size=3)
        q, u = y[0], y[1]
        t = -u / s.e
        h = 1 + 0.1 * q**2
        a = 0.3 * q
        v = 0.5 * q**2 + 0.2 * np.sin(t) * q
        direct = (
            0.5 * h * (p[0] - p[2] * a) ** 2 + p[2] ** 2 * v + p[1] * p[2]
        )
        got = hamiltonian_value(lift.metric, PhasePoint(y, p))
        assert abs(got - direct) < 1e-10
        # with p_v pinned at e the lift value splits into base energy plus e p_u
        p_shell = p.copy()
        p_shell[2] = s.e
        got = hamiltonian_value(lift.metric, PhasePoint(y, p_shell))
        base = s.hamiltonian([q], [-p_shell[0]], t)
        assert abs(got - (base + s.e * p_shell[1])) < 1e-10


def test_ed_zero_coupling_rejected():
    s = builtin_system("harmonic", e=0.0)
    with pytest.raises(LiftError):
        eisenhart_duval_lift(s)


def test_signed_clock_identity_and_schur_inverse():
    names = base_var_names(1)
    s = NaturalSystem(
        1,
        MatrixField.identity(1, 2),
        parse_scalar_field("0 - 1/q", names),
        (parse_scalar_field("0.3*q", names),),
        e=1.3,
    )
    lift = signed_clock_lift(s, -1, probe_points=[(0.5,), (2.0,)])
    assert lift.coord_names == ("q", "v", "T")
    rng = np.random.default_rng(17)
    for _ in range(20):
        q = float(rng.uniform(0.3, 2.0))
        y = np.array([q, rng.uniform(-1, 1), rng.uniform(-1, 1)])
        p = rng.uniform(-2, 2, size=3)
        v = -1.0 / q
        a = 0.3 * q
        direct = 0.5 * (p[0] + p[1] * a) ** 2 + p[1] ** 2 * v - p[2] ** 2
        got = hamiltonian_value(lift.metric, PhasePoint(y, p))
        assert abs(got - direct) < 1e-10
        glow = lift.metric.value(y)
        assert np.max(np.abs(glow @ lift.metric.g_inv(y) - np.eye(3))) < 1e-10
        p_shell = p.copy()
        p_shell[1] = s.e
        got = hamiltonian_value(lift.metric, PhasePoint(y, p_shell))
        base = s.hamiltonian([q], [p_shell[0]], 0.0)
        assert abs(got - (base - p_shell[2] ** 2)) < 1e-10


def test_signed_clock_rejections():
    free = builtin_system("free")
    with pytest.raises(LiftError):
        signed_clock_lift(free, 1)
    harm = builtin_system("harmonic")
    with pytest.raises(LiftError):
        # V = q^2/2 vanishes at the origin probe
        signed_clock_lift(harm, 1, probe_points=[(0.0,)])
    mixed = builtin_system("custom", n=1, V="q")
    with pytest.raises(LiftError):
        signed_clock_lift(mixed, 1, probe_points=[(-1.0,), (1.0,)])
    with pytest.raises(DomainError):
        signed_clock_lift(harm, 2)


def test_multi_potential_identity():
    qn = ("q",)
    h = MatrixField.from_entries([[parse_scalar_field("1 + 0.2*q^2", qn)]])
    pots = [
        parse_scalar_field("0.5*q^2", qn),
        parse_scalar_field("q^3", qn),
        ScalarField.constant(0.7, 1),
    ]
    couplings = (1.2, -0.8, 2.0)
    lift = multi_potential_lift(h, pots, couplings)
    assert lift.coord_names == ("q", "u1", "v1", "u2", "v2", "u3", "v3")
    rng = np.random.default_rng(23)
    for _ in range(20):
        y = rng.uniform(-1, 1, size=7)
        p = rng.uniform(-2, 2, size=7)
        q = y[0]
        hv = 1 + 0.2 * q**2
        vs = (0.5 * q**2, q**3, 0.7)
        direct = 0.5 * hv * p[0] ** 2
        for m in range(3):
            direct += vs[m] * p[2 + 2 * m] ** 2 + p[1 + 2 * m] * p[2 + 2 * m]
        got = hamiltonian_value(lift.metric, PhasePoint(y, p))
        assert abs(got - direct) < 1e-10
        # on the reduction shell: base hamiltonian plus the clock terms
        p_shell = p.copy()
        for m in range(3):
            p_shell[2 + 2 * m] = couplings[m]
        base = 0.5 * hv * p_shell[0] ** 2 + sum(
            couplings[m] ** 2 * vs[m] for m in range(3)
        )
        got = hamiltonian_value(lift.metric, PhasePoint(y, p_shell))
        rest = sum(couplings[m] * p_shell[1 + 2 * m] for m in range(3))
        assert abs(got - (base + rest)) < 1e-10


def test_multi_potential_nondegenerate_where_potentials_vanish():
    # one pair per potential keeps det(g) = (-1)^k even at V_k = 0
    qn = ("q",)
    lift = multi_potential_lift(
        MatrixField.identity(1, 1),
        [parse_scalar_field("q", qn), parse_scalar_field("q^2", qn)],
    )
    y = np.zeros(5)
    g = lift.metric.value(y)
    assert np.linalg.det(g) == pytest.approx(1.0)
    assert np.max(np.abs(g @ lift.metric.g_inv(y) - np.eye(5))) < 1e-14


def test_multi_potential_rejections():
    qn = ("q",)
    v1 = parse_scalar_field("q^2", qn)
    with pytest.raises(LiftError):
        multi_potential_lift(MatrixField.identity(1, 1), [v1])
    with pytest.raises(LiftError):
        multi_potential_lift(MatrixField.identity(1, 1), [v1, v1], (1.0, 0.0))
    with pytest.raises(LiftError):
        multi_potential_lift(MatrixField.identity(1, 1), [v1, v1], (1.0,))
    with pytest.raises(DomainError):
        # fields over (q, t) are not allowed here; q-only arity is required
        multi_potential_lift(
            MatrixField.identity(1, 2), [parse_scalar_field("q^2", ("q", "t"))] * 2
        )


def test_initial_phase_point_is_null_for_every_kind():
    harm = builtin_system("custom", n=1, V="0.5*q^2 + 1")
    lifts = [
        eisenhart_duval_lift(harm),
        signed_clock_lift(harm, -1),
        multi_potential_lift(
            MatrixField.identity(1, 1),
            [parse_scalar_field("0.5*q^2", ("q",)), ScalarField.constant(1.0, 1)],
        ),
    ]
    for lift in lifts:
        pt = initial_phase_point(lift, [0.8], [0.6])
        assert abs(hamiltonian_value(lift.metric, pt)) < 1e-12
        for idx, val in lift.reduction.fixed_momenta.items():
            assert pt.p[idx] == val
    F = parse_scalar_field("1 + q^2", base_var_names(1))
    clift = ccm_lift(builtin_system("custom", n=1, V="0.5*q^2"), F, 1.0)
    pt = initial_phase_point(clift, [0.3], [0.8], g=0.1)
    assert abs(hamiltonian_value(clift.metric, pt)) < 1e-12
    assert pt.p[2] == pytest.approx(np.sqrt(0.1))
    with pytest.raises(DomainError):
        initial_phase_point(clift, [0.3], [0.8])
    with pytest.raises(DomainError):
        initial_phase_point(clift, [0.3], [0.8], g=0.1, bogus=2)


def test_initial_phase_point_encodes_start_time():
    s = charged_system(e=1.7)
    lift = eisenhart_duval_lift(s)
    pt = initial_phase_point(lift, [0.4], [0.2], t0=2.0)
    assert pt.y[1] == pytest.approx(-1.7 * 2.0)
    assert abs(hamiltonian_value(lift.metric, pt)) < 1e-12
    with pytest.raises(DomainError):
        initial_phase_point(signed_clock_lift(builtin_system("custom", n=1, V="q^2+1"), -1),
                            [0.4], [0.2], t0=2.0)


def test_reduce_free_particle_is_straight():
    lift = eisenhart_duval_lift(builtin_system("free"))
    pt = initial_phase_point(lift, [0.5], [0.75])
    cfg = IntegratorConfig(lambda_max=-8.0, project_index=1)
    base = reduce_trajectory(integrate_null_geodesic(lift.metric, pt, cfg), lift)
    fit = np.polyfit(base.t, base.q[:, 0], 1)
    assert np.max(np.abs(np.polyval(fit, base.t) - base.q[:, 0])) < 1e-9
    assert fit[0] == pytest.approx(0.75, abs=1e-9)
    assert np.max(np.abs(base.p[:, 0] - 0.75)) < 1e-10


@pytest.fixture(scope="module")
def oscillator_reduction():
    lift = eisenhart_duval_lift(builtin_system("harmonic", omega=1.0))
    pt = initial_phase_point(lift, [1.0], [0.0])
    cfg = IntegratorConfig(lambda_max=-10.0, project_index=1)
    traj = integrate_null_geodesic(lift.metric, pt, cfg)
    return lift, traj, reduce_trajectory(traj, lift)


def test_reduce_oscillator_matches_cosine(oscillator_reduction):
    lift, traj, base = oscillator_reduction
    assert base.t[0] == pytest.approx(0.0) and base.t[-1] == pytest.approx(10.0)
    assert np.max(np.abs(base.q[:, 0] - np.cos(base.t))) < 1e-6
    assert np.max(np.abs(base.p[:, 0] + np.sin(base.t))) < 1e-6
    assert np.max(np.abs(base.energy - 0.5)) < 1e-9
    # the lift's conserved vertical momentum stays put
    assert np.max(np.abs(traj.momenta[:, 2] - 1.0)) < 1e-8


def test_reduce_oscillator_matches_independent_flow(oscillator_reduction):
    _, _, base = oscillator_reduction
    sol = newton_flow(
        lambda q: np.eye(1), lambda q: np.asarray(q), [1.0], [0.0], (0.0, 10.0)
    )
    ref = sol.sol(base.t)
    assert np.max(np.abs(base.q[:, 0] - ref[0])) < 1e-6
    assert np.max(np.abs(base.p[:, 0] - ref[1])) < 1e-6


def test_reduce_dense_resampling(oscillator_reduction):
    _, _, base = oscillator_reduction
    tg = np.linspace(0.3, 9.7, 40)
    q, p = base.at(tg)
    assert np.max(np.abs(q[:, 0] - np.cos(tg))) < 1e-6
    assert np.max(np.abs(p[:, 0] + np.sin(tg))) < 1e-6


def test_time_dependent_potential_reduces_correctly():
    # V = q sin t gives the exact solution q = q0 + (p0 - 1) t + sin t at e = 1
    s = builtin_system("custom", n=1, V="q * sin(t)")
    lift = eisenhart_duval_lift(s)
    pt = initial_phase_point(lift, [0.0], [0.0])
    cfg = IntegratorConfig(lambda_max=-6.0, project_index=1)
    base = reduce_trajectory(integrate_null_geodesic(lift.metric, pt, cfg), lift)
    t = base.t
    assert np.max(np.abs(base.q[:, 0] - (np.sin(t) - t))) < 1e-6
    assert np.max(np.abs(base.p[:, 0] - (np.cos(t) - 1.0))) < 1e-6
    # the energy readout tracks the instantaneous (non-conserved) base energy
    direct = 0.5 * base.p[:, 0] ** 2 + base.q[:, 0] * np.sin(t)
    assert np.max(np.abs(base.energy - direct)) < 1e-8


def test_cross_lift_base_dynamics_agree():
    """Three different lifts of one system must reduce to one base motion."""
    s = builtin_system("custom", n=1, V="0.5*q^2 + 1")
    qn = ("q",)
    runs = []
    lift = eisenhart_duval_lift(s)
    runs.append((lift, initial_phase_point(lift, [1.0], [0.0]), -10.0, 1))
    lift = signed_clock_lift(s, -1, probe_points=[(0.0,), (1.0,)])
    runs.append((lift, initial_phase_point(lift, [1.0], [0.0]), 10.0, 2))
    lift = multi_potential_lift(
        MatrixField.identity(1, 1),
        [parse_scalar_field("0.5*q^2", qn), ScalarField.constant(1.0, 1)],
    )
    runs.append((lift, initial_phase_point(lift, [1.0], [0.0]), -10.0, 1))
    tg = np.linspace(0.2, 9.8, 25)
    curves = []
    for lift, pt, lam_max, proj in runs:
        cfg = IntegratorConfig(lambda_max=lam_max, project_index=proj)
        base = reduce_trajectory(integrate_null_geodesic(lift.metric, pt, cfg), lift)
        q, p = base.at(tg)
        curves.append(np.column_stack([q, p]))
    for other in curves[1:]:
        assert np.max(np.abs(curves[0] - other)) < 1e-5


def test_reduce_rejects_drifting_fixed_momentum():
    lift = eisenhart_duval_lift(builtin_system("free"))
    lam = np.linspace(0.0, 1.0, 5)
    states = np.zeros((5, 3))
    states[:, 1] = -lam  # u advances so reduced time is fine
    momenta = np.tile([0.0, 0.0, 1.0], (5, 1))
    momenta[:, 2] += np.linspace(0, 1e-3, 5)
    traj = Trajectory(lam, states, momenta, np.zeros(5), 0.0, 4, 0)
    with pytest.raises(LiftError):
        reduce_trajectory(traj, lift)
    momenta[:, 2] = 1.0
    states[:, 1] = 0.0  # frozen u collapses the reduced clock
    with pytest.raises(LiftError):
        reduce_trajectory(Trajectory(lam, states, momenta, np.zeros(5), 0.0, 4, 0), lift)


def test_jacobi_flat_is_scaled_kinetic():
    jac = jacobi_system(builtin_system("free", n=2), 0.8)
    y = np.array([0.3, -0.4])
    assert np.max(np.abs(jac.metric.value(y) - 1.6 * np.eye(2))) < 1e-14
    assert np.max(np.abs(jac.metric.g_inv(y) - np.eye(2) / 1.6)) < 1e-14


def test_jacobi_domain_guards():
    harm = builtin_system("harmonic")
    jac = jacobi_system(harm, 1.0, probe_points=[(0.0,), (1.0,)])
    assert jac.factor(0.5) == pytest.approx(0.875)
    assert jac.validate_point([0.5]) == pytest.approx(0.875)
    with pytest.raises(DomainError):
        jac.validate_point([1.5])
    with pytest.raises(DomainError):
        jac.metric.value([1.5])  # past the turning point the factor guard trips
    with pytest.raises(LiftError):
        jacobi_system(harm, 1.0, probe_points=[(2.0,)])
    with pytest.raises(LiftError):
        jacobi_system(charged_system(), 1.0)


def test_jacobi_arclength_flow_reproduces_orbit():
    """Unit-speed geodesics of 2(E-V)h traverse the energy-E oscillator orbit."""
    jac = jacobi_system(builtin_system("harmonic"), 1.0)
    pt = PhasePoint([0.0], [np.sqrt(2.0)])
    assert hamiltonian_value(jac.metric, pt) == pytest.approx(0.5, abs=1e-12)
    s_end = 1.0 + np.sin(1.0) * np.cos(1.0)  # arc length reached at t = 1
    cfg = IntegratorConfig(
        rel_tol=1e-11,
        abs_tol=1e-13,
        max_step=0.05,
        lambda_max=s_end,
        null_projection=False,
        shell_value=0.5,
    )
    traj = integrate_null_geodesic(jac.metric, pt, cfg)
    assert np.max(np.abs(2.0 * traj.ham_values - 1.0)) < 1e-8
    lam = traj.lambdas
    mids = 0.5 * (lam[:-1] + lam[1:])
    Ym, _ = traj.sample(mids)

    def clock_rate(q):
        return 1.0 / (2.0 * (1.0 - 0.5 * q**2))

    f0 = clock_rate(traj.states[:-1, 0])
    fm = clock_rate(Ym[:, 0])
    f1 = clock_rate(traj.states[1:, 0])
    t = np.concatenate([[0.0], np.cumsum(np.diff(lam) / 6.0 * (f0 + 4 * fm + f1))])
    assert t[-1] == pytest.approx(1.0, abs=1e-7)
    assert np.max(np.abs(traj.states[:, 0] - np.sqrt(2) * np.sin(t))) < 1e-5
    # momenta need no rescaling between the two clocks
    assert np.max(np.abs(traj.momenta[:, 0] - np.sqrt(2) * np.cos(t))) < 1e-5


def test_ccm_dual_shares_level_sets():
    names = base_var_names(1)
    V = parse_scalar_field("0.5*q^2", names)
    F = parse_scalar_field("1 + q^2", names)
    H0 = NaturalSystem(1, MatrixField.identity(1, 2), V)
    pair = ccm_dual(H0, F, g=0.9, h=0.7, probe_points=[(0.0,), (1.0,)])
    rng = np.random.default_rng(31)
    for _ in range(15):
        q, p = rng.uniform(-1.5, 1.5, size=2)
        want = (H0.hamiltonian([q], [p]) - 0.7) / (1 + q**2)
        assert abs(pair.dual.hamiltonian([q], [p]) - want) < 1e-12
    matched = pair.matched_original()
    q, p = 0.4, 1.1
    want = H0.hamiltonian([q], [p]) - 0.9 * (1 + q**2)
    assert abs(matched.hamiltonian([q], [p]) - want) < 1e-12
    # F = 1 swaps nothing but the constant shift
    one = ScalarField.constant(1.0, 2)
    trivial = ccm_dual(H0, one, g=0.9, h=0.7)
    assert abs(trivial.dual.hamiltonian([q], [p]) - (H0.hamiltonian([q], [p]) - 0.7)) < 1e-12


def test_ccm_lift_momentum_identity():
    names = base_var_names(1)
    F = parse_scalar_field("1 + q^2", names)
    H0 = NaturalSystem(1, MatrixField.identity(1, 2), parse_scalar_field("0.5*q^2", names))
    lift = ccm_lift(H0, F, 1.0, probe_points=[(0.3,), (1.0,)])
    assert lift.coord_names == ("q", "y", "w", "z")
    rng = np.random.default_rng(41)
    for _ in range(20):
        y = rng.uniform(-1.5, 1.5, size=4)
        p = rng.uniform(-2, 2, size=4)
        q = y[0]
        direct = (
            0.5 * p[0] ** 2
            + 0.5 * q**2 * p[1] ** 2
            - (1 + q**2) * p[2] ** 2
            - p[3] ** 2
        )
        assert abs(hamiltonian_value(lift.metric, PhasePoint(y, p)) - direct) < 1e-10
    # V = 0 drops the y pair entirely
    free = NaturalSystem(1, MatrixField.identity(1, 2), ScalarField.zero(2))
    slim = ccm_lift(free, F, -1.0)
    assert slim.coord_names == ("q", "w", "z")
    got = hamiltonian_value(slim.metric, PhasePoint([0.5, 0, 0], [1.0, 0.4, 0.3]))
    assert got == pytest.approx(0.5 - 1.25 * 0.16 + 0.09)


def test_ccm_rescaled_metric_is_the_dual_lift():
    """1/F times the lift's inverse metric is the dual system's lift, slots swapped."""
    names = base_var_names(1)
    V = parse_scalar_field("0.5*q^2", names)
    F = parse_scalar_field("1 + q^2", names)
    H0 = NaturalSystem(1, MatrixField.identity(1, 2), V)
    lift = ccm_lift(H0, F, 1.0)
    one_over_f = 1.0 / F
    dual_sys = NaturalSystem(1, H0.h_inv.scale(one_over_f), V * one_over_f)
    dlift = ccm_lift(dual_sys, one_over_f, 1.0)
    perm = [0, 1, 3, 2]  # the coupling clock and the energy clock trade places
    rng = np.random.default_rng(43)
    for _ in range(20):
        y = rng.uniform(-1.5, 1.5, size=4)
        y[0] = rng.uniform(0.2, 1.5)
        fv = 1 + y[0] ** 2
        left = lift.metric.inverse_value(y) / fv
        right = dlift.metric.inverse_value(y)[np.ix_(perm, perm)]
        assert np.max(np.abs(left - right)) < 1e-10
        left = lift.metric.value(y) * fv
        right = dlift.metric.value(y)[np.ix_(perm, perm)]
        assert np.max(np.abs(left - right)) < 1e-10


def test_ccm_lift_null_curves_survive_rescaling():
    names = base_var_names(1)
    F = parse_scalar_field("1 + q^2", names)
    H0 = NaturalSystem(1, MatrixField.identity(1, 2), parse_scalar_field("0.5*q^2", names))
    lift = ccm_lift(H0, F, 1.0)
    pt = initial_phase_point(lift, [0.3], [0.8], g=0.1)
    cfg = IntegratorConfig(lambda_max=3.0, max_step=0.1, project_index=3)
    traj = integrate_null_geodesic(lift.metric, pt, cfg)
    rep = reparameterize(traj, lift.meta["F_field"].apply("sqrt"))
    rescaled = rescale_by_factor(lift.metric, lift.meta["F_field"])
    cfg2 = IntegratorConfig(
        lambda_max=float(rep.lambdas[-1]), max_step=0.1, project_index=3
    )
    traj2 = integrate_null_geodesic(rescaled, pt, cfg2)
    Y2, P2 = traj2.sample(rep.lambdas)
    assert np.max(np.abs(Y2 - rep.states)) < 1e-5
    assert np.max(np.abs(P2 - rep.momenta)) < 1e-5
    d = hausdorff_distance(dense_states(traj, 2000), dense_states(traj2, 2000))
    assert d < 1e-5


def test_ccm_rejections():
    names = base_var_names(1)
    F = parse_scalar_field("1 + q^2", names)
    V = parse_scalar_field("0.5*q^2", names)
    charged = charged_system()
    with pytest.raises(LiftError):
        ccm_dual(charged, F, 1.0, 1.0)
    scaled = NaturalSystem(1, MatrixField.identity(1, 2), V, (), e=2.0)
    with pytest.raises(LiftError):
        ccm_lift(scaled, F, 1.0)
    H0 = NaturalSystem(1, MatrixField.identity(1, 2), V)
    negF = parse_scalar_field("q^2 - 1", names)
    with pytest.raises(LiftError):
        ccm_lift(H0, negF, 1.0, probe_points=[(0.5,)])
    with pytest.raises(LiftError):
        ccm_lift(H0, F, 1.0, probe_points=[(0.0,)])  # V dies at the origin
    with pytest.raises(DomainError):
        ccm_lift(H0, F, 0.5)
