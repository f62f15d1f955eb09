"""Null lifts of natural Hamiltonian systems and reductions to base dynamics.

A natural system is H = (1/2) h^{ij}(p_i + e A_i)(p_j + e A_j) + e^2 V with
fields over (q^1..q^n, t). Each lift constructor returns a LiftedSystem
whose metric carries a closed-form inverse, so geodesic integration never
has to invert matrices numerically. Lift coordinates are always ordered
base-coordinates-first; the extra coordinates per kind are:

* eisenhart-duval: (u, v), metric h dq dq + 2 du (dv - V du + A dq);
* signed-clock:    (v, T), invertible only where V is bounded away from 0;
* multi-potential: (u_1, v_1, ..., u_k, v_k), one null pair per potential;
* ccm:             ([y], w, z), the coupling-swap lift (y dropped when V = 0).

Reduction conventions per kind live in the ReductionRecord attached to each
lift; `reduce_trajectory` applies them uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets as jm
from .errors import DomainError, LiftError
from .fields import MatrixField, ScalarField, parse_scalar_field
from .geometry import Metric


def base_var_names(n):
    """Expression variable names for an n-dof base system: q[,q2..] and t."""
    if n == 1:
        return ("q", "t")
    return tuple("q%d" % (i + 1) for i in range(n)) + ("t",)


@dataclass
class NaturalSystem:
    """Base Hamiltonian data; all fields share arity n+1 over (q, t)."""

    n: int
    h_inv: MatrixField
    V: ScalarField
    A: tuple = ()
    e: float = 1.0

    def __post_init__(self):
        if not self.A:
            self.A = tuple(ScalarField.zero(self.n + 1) for _ in range(self.n))
        else:
            self.A = tuple(self.A)
        if len(self.A) != self.n:
            raise DomainError("need %d vector-potential components" % self.n)
        if self.h_inv.dim != self.n:
            raise DomainError("kinetic matrix dimension != n")
        arity = self.n + 1
        fields_ = (self.V,) + self.A
        if self.h_inv.arity != arity or any(f.arity != arity for f in fields_):
            raise DomainError("system fields must have arity n+1 (coordinates plus time)")
        self.e = float(self.e)

    def hamiltonian(self, q, p, t=0.0):
        args = [float(x) for x in q] + [float(t)]
        hv = self.h_inv(args)
        a = np.array([float(f(*args)) for f in self.A])
        pe = np.asarray(p, dtype=float) + self.e * a
        return float(0.5 * pe @ hv @ pe + self.e**2 * float(self.V(*args)))

    @property
    def has_vector_potential(self):
        return any(not a.is_identically_zero for a in self.A)


@dataclass(frozen=True)
class ReductionRecord:
    """How lifted phase data projects back to the base system.

    fixed_momenta maps a lift momentum index to the constant it must hold.
    Base momenta are momentum_sign times the corresponding lift momenta.
    Time is time_scale * y[time_index] when time_index is set, else the
    integration parameter itself. The conserved-energy readout is
    sum(scale * p[i]) over energy_terms plus scale * p[i]^2 for the
    optional energy_square entry.
    """

    fixed_momenta: dict
    momentum_sign: float
    time_index: int | None
    time_scale: float
    energy_terms: tuple = ()
    energy_square: tuple | None = None
    description: str = ""


@dataclass
class LiftedSystem:
    metric: Metric
    kind: str
    n: int
    coord_names: tuple
    reduction: ReductionRecord
    system: NaturalSystem | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.metric.dim


@dataclass
class BaseTrajectory:
    """Reduced samples (t, q, p) with a per-sample energy readout."""

    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    energy: np.ndarray
    _traj: object = None
    _lift: LiftedSystem = None
    _lam_affine: tuple = None

    def at(self, t_query):
        """Dense evaluation via the underlying lifted trajectory."""
        if self._traj is None or self._lam_affine is None:
            raise DomainError("trajectory has no dense origin to sample")
        lam0, dldt = self._lam_affine
        lams = lam0 + dldt * np.atleast_1d(np.asarray(t_query, dtype=float))
        Y, P = self._traj.sample(lams)
        rec = self._lift.reduction
        n = self._lift.n
        return Y[:, :n], rec.momentum_sign * P[:, :n]


def _sum_fields(fields_, arity):
    total = ScalarField.zero(arity)
    for f in fields_:
        total = total + f
    return total


def _lift_coordinates(n, N):
    return [ScalarField.coordinate(i, N) for i in range(n)]


def _frozen_time_subs(n, N):
    # autonomous reading of the base fields: the time slot is pinned at 0
    return _lift_coordinates(n, N) + [ScalarField.zero(N)]


def _guard_positive(f, label):
    """Wrap a field so evaluation fails outside its positive domain."""

    def ev(*args):
        val = f(*args)
        if jm.real_part(val) <= 0.0:
            raise DomainError("%s must stay positive (got %r)" % (label, jm.real_part(val)))
        return val

    return ScalarField.from_function(ev, f.arity, name="guard(%s)" % f.provenance)


def eisenhart_duval_lift(s):
    """The null lift with one (u, v) pair and linear momentum coupling.

    The time slot of the base fields is identified with -u/e, matching the
    reduction time rule, so time-dependent potentials lift correctly.
    """
    if s.e == 0.0:
        raise LiftError("coupling e must be nonzero to identify t with -u/e")
    n = s.n
    N = n + 2
    u_idx, v_idx = n, n + 1
    subs = _lift_coordinates(n, N) + [ScalarField.coordinate(u_idx, N) * (-1.0 / s.e)]
    hc = s.h_inv.compose(subs)
    Vc = s.V.compose(subs)
    Ac = [a.compose(subs) for a in s.A]
    z = ScalarField.zero(N)
    one = ScalarField.constant(1.0, N)

    h_low = hc.inverse()
    rows = [[z] * N for _ in range(N)]
    for i in range(n):
        for j in range(i, n):
            rows[i][j] = rows[j][i] = h_low.entry(i, j)
        rows[i][u_idx] = rows[u_idx][i] = Ac[i]
    rows[u_idx][u_idx] = -2.0 * Vc
    rows[u_idx][v_idx] = rows[v_idx][u_idx] = one
    g = MatrixField.from_entries(rows)

    irows = [[z] * N for _ in range(N)]
    for i in range(n):
        for j in range(i, n):
            irows[i][j] = irows[j][i] = hc.entry(i, j)
        irows[i][v_idx] = irows[v_idx][i] = -_sum_fields(
            [hc.entry(i, j) * Ac[j] for j in range(n)], N
        )
    irows[u_idx][v_idx] = irows[v_idx][u_idx] = one
    irows[v_idx][v_idx] = 2.0 * Vc + _sum_fields(
        [hc.entry(i, j) * Ac[i] * Ac[j] for i in range(n) for j in range(n)], N
    )
    g_inv = MatrixField.from_entries(irows)

    names = base_var_names(n)[:-1] + ("u", "v")
    reduction = ReductionRecord(
        fixed_momenta={v_idx: s.e},
        momentum_sign=-1.0,
        time_index=u_idx,
        time_scale=-1.0 / s.e,
        energy_terms=((u_idx, -s.e),),
        description="p_v = e; t = -u/e; base p_i = -p_i; H = -e p_u",
    )
    return LiftedSystem(Metric(N, g, g_inv), "eisenhart-duval", n, names, reduction, s)


def signed_clock_lift(s, sign, probe_points=None):
    """Null lift with a squared clock momentum; needs V of one fixed sign.

    `probe_points` is the user-declared working region: a list of base q
    points where V (read at t=0) is checked to be nonzero and of one sign.
    Time-dependent data is outside this lift's domain; the time argument
    of the base fields is frozen at 0.
    """
    sign = float(sign)
    if sign not in (1.0, -1.0):
        raise DomainError("sign must be +1 or -1")
    if s.V.is_identically_zero:
        raise LiftError("clock lift needs a nonvanishing potential")
    if probe_points is not None:
        vals = []
        for pt in probe_points:
            args = [float(x) for x in pt] + [0.0]
            vals.append((tuple(pt), float(s.V(*args))))
        bad = [pt for pt, v in vals if abs(v) < 1e-12]
        if bad:
            raise LiftError("potential vanishes on the working region at %r" % (bad[0],))
        signs = {v > 0 for _, v in vals}
        if len(signs) > 1:
            raise LiftError("potential changes sign on the working region")

    n = s.n
    N = n + 2
    v_idx, t_idx = n, n + 1
    subs = _frozen_time_subs(n, N)
    hc = s.h_inv.compose(subs)
    Vc = s.V.compose(subs)
    Ac = [a.compose(subs) for a in s.A]
    z = ScalarField.zero(N)

    irows = [[z] * N for _ in range(N)]
    for i in range(n):
        for j in range(i, n):
            irows[i][j] = irows[j][i] = hc.entry(i, j)
        irows[i][v_idx] = irows[v_idx][i] = _sum_fields(
            [hc.entry(i, j) * Ac[j] for j in range(n)], N
        )
    irows[v_idx][v_idx] = 2.0 * Vc + _sum_fields(
        [hc.entry(i, j) * Ac[i] * Ac[j] for i in range(n) for j in range(n)], N
    )
    irows[t_idx][t_idx] = ScalarField.constant(2.0 * sign, N)
    g_inv = MatrixField.from_entries(irows)

    h_low = hc.inverse()
    two_v = 2.0 * Vc
    rows = [[z] * N for _ in range(N)]
    for i in range(n):
        for j in range(i, n):
            rows[i][j] = rows[j][i] = h_low.entry(i, j) + Ac[i] * Ac[j] / two_v
        rows[i][v_idx] = rows[v_idx][i] = -Ac[i] / two_v
    rows[v_idx][v_idx] = 1.0 / two_v
    rows[t_idx][t_idx] = ScalarField.constant(sign / 2.0, N)
    g = MatrixField.from_entries(rows)

    names = base_var_names(n)[:-1] + ("v", "T")
    reduction = ReductionRecord(
        fixed_momenta={v_idx: s.e},
        momentum_sign=1.0,
        time_index=None,
        time_scale=1.0,
        energy_square=(t_idx, -sign),
        description="p_v = e; t = lambda; H = %+g p_T^2" % (-sign),
    )
    lift = LiftedSystem(Metric(N, g, g_inv), "signed-clock", n, names, reduction, s)
    lift.meta["sign"] = sign
    return lift


def multi_potential_lift(h_inv, potentials, couplings=None):
    """One null (u_k, v_k) pair per potential; non-degenerate for any V_k.

    Spatial fields here are functions of q alone (arity n); the base system
    recovered at reduction is H = h^{ij}p_ip_j/2 + sum_k e_k^2 V_k.
    """
    n = h_inv.dim
    k = len(potentials)
    if k < 2:
        raise LiftError("multi-potential lift needs at least two potentials")
    if couplings is None:
        couplings = (1.0,) * k
    couplings = tuple(float(e) for e in couplings)
    if len(couplings) != k:
        raise LiftError("need one coupling per potential")
    if any(e == 0.0 for e in couplings):
        raise LiftError("couplings must be nonzero")
    if h_inv.arity != n or any(v.arity != n for v in potentials):
        raise DomainError("multi-potential fields must be functions of q alone")

    N = n + 2 * k
    ext = tuple(range(n))
    hc = h_inv.extend(N, ext)
    Vc = [v.extend(N, ext) for v in potentials]
    z = ScalarField.zero(N)
    one = ScalarField.constant(1.0, N)

    h_low = hc.inverse()
    rows = [[z] * N for _ in range(N)]
    irows = [[z] * N for _ in range(N)]
    for i in range(n):
        for j in range(i, n):
            rows[i][j] = rows[j][i] = h_low.entry(i, j)
            irows[i][j] = irows[j][i] = hc.entry(i, j)
    for m in range(k):
        u = n + 2 * m
        v = u + 1
        rows[u][u] = -2.0 * Vc[m]
        rows[u][v] = rows[v][u] = one
        irows[u][v] = irows[v][u] = one
        irows[v][v] = 2.0 * Vc[m]
    g = MatrixField.from_entries(rows)
    g_inv = MatrixField.from_entries(irows)

    qnames = base_var_names(n)[:-1]
    names = qnames + tuple(
        name for m in range(k) for name in ("u%d" % (m + 1), "v%d" % (m + 1))
    )
    fixed = {n + 2 * m + 1: couplings[m] for m in range(k)}
    reduction = ReductionRecord(
        fixed_momenta=fixed,
        momentum_sign=-1.0,
        time_index=n,
        time_scale=-1.0 / couplings[0],
        energy_terms=tuple((n + 2 * m, -couplings[m]) for m in range(k)),
        description="p_{v_k} = e_k; t = -u_1/e_1; H = -sum e_k p_{u_k}",
    )
    lift = LiftedSystem(Metric(N, g, g_inv), "multi-potential", n, names, reduction)
    lift.meta["couplings"] = couplings
    return lift


@dataclass
class JacobiSystem:
    """Arc-length geometry of a fixed-energy natural system.

    The metric is 2(E - e^2 V) h_{ij}; its unit-speed geodesics traverse the
    base orbits of energy E, with clock rates ds = 2(E - e^2 V) dt and the
    half-arc-length time dT/dt = E - e^2 V. Base momenta carry over
    unchanged.
    """

    metric: Metric
    energy: float
    factor: ScalarField  # E - e^2 V over the base coordinates
    base: NaturalSystem

    def validate_point(self, q):
        val = float(self.factor(*[float(x) for x in q]))
        if val <= 0.0:
            raise DomainError("energy minus potential is %r <= 0 at %r" % (val, list(q)))
        return val


def jacobi_system(s, E, probe_points=None):
    if s.has_vector_potential:
        raise LiftError("the arc-length construction needs a system without vector potential")
    n = s.n
    subs = _frozen_time_subs(n, n)
    W = (s.e**2) * s.V.compose(subs)
    factor = ScalarField.constant(float(E), n) - W
    if probe_points is not None:
        for pt in probe_points:
            val = float(factor(*[float(x) for x in pt]))
            if val <= 0.0:
                raise LiftError("E - V is %r <= 0 at probe %r" % (val, tuple(pt)))
    guarded = _guard_positive(factor, "E - V")
    two_f = 2.0 * guarded
    hc = s.h_inv.compose(subs)
    g = hc.inverse().scale(two_f)
    g_inv = hc.scale(1.0 / two_f)
    return JacobiSystem(Metric(n, g, g_inv), float(E), factor, s)


@dataclass
class CCMDual:
    """Coupling-swap pair: dual system G = (H0 - h)/F with dT = F dt."""

    dual: NaturalSystem
    F: ScalarField
    g: float
    h: float
    original: NaturalSystem

    def matched_original(self):
        """H = H0 - g F as a natural system (integrate at energy h)."""
        s = self.original
        return NaturalSystem(s.n, s.h_inv, s.V - self.g * self.F, (), 1.0)


def _require_plain_kinetic(s, what):
    if s.e != 1.0:
        raise LiftError("%s supports coupling e = 1 only" % what)
    if s.has_vector_potential:
        raise LiftError("%s needs a system without vector potential" % what)


def ccm_dual(H0, F, g, h, probe_points=None):
    """Swap a multiplicative coupling with the Hamiltonian value."""
    _require_plain_kinetic(H0, "the coupling swap")
    if F.arity != H0.n + 1:
        raise DomainError("F must share the base field arity")
    if probe_points is not None:
        for pt in probe_points:
            val = float(F(*[float(x) for x in pt], 0.0))
            if val <= 0.0:
                raise LiftError("F is %r <= 0 at probe %r" % (val, tuple(pt)))
    one_over_f = 1.0 / F
    dual = NaturalSystem(H0.n, H0.h_inv.scale(one_over_f), (H0.V - float(h)) * one_over_f)
    return CCMDual(dual, F, float(g), float(h), H0)


def ccm_lift(H0, F, sign_h, probe_points=None):
    """Null lift carrying both the coupling clock and the energy clock.

    Coordinates are (q, [y], w, z) with the y pair dropped when V = 0; the
    squared momenta p_y^2 = 1, p_w^2 = g, p_z^2 = |h| recover the original
    system at H0 - g F = h, with sign_h the sign of h.
    """
    _require_plain_kinetic(H0, "the coupling-swap lift")
    sign_h = float(sign_h)
    if sign_h not in (1.0, -1.0):
        raise DomainError("sign_h must be +1 or -1")
    n = H0.n
    include_y = not H0.V.is_identically_zero
    N = n + (3 if include_y else 2)
    y_idx = n if include_y else None
    w_idx, z_idx = N - 2, N - 1

    subs = _frozen_time_subs(n, N)
    hc = H0.h_inv.compose(subs)
    Vc = H0.V.compose(subs)
    Fc = F.compose(subs)
    if probe_points is not None:
        for pt in probe_points:
            args = [float(x) for x in pt] + [0.0]
            fval = float(F(*args))
            if fval <= 0.0:
                raise LiftError("F is %r <= 0 at probe %r" % (fval, tuple(pt)))
            if include_y and abs(float(H0.V(*args))) < 1e-12:
                raise LiftError("V vanishes at probe %r; drop it or shift it" % (tuple(pt),))

    z = ScalarField.zero(N)
    irows = [[z] * N for _ in range(N)]
    rows = [[z] * N for _ in range(N)]
    h_low = hc.inverse()
    for i in range(n):
        for j in range(i, n):
            irows[i][j] = irows[j][i] = hc.entry(i, j)
            rows[i][j] = rows[j][i] = h_low.entry(i, j)
    if include_y:
        irows[y_idx][y_idx] = 2.0 * Vc
        rows[y_idx][y_idx] = 1.0 / (2.0 * Vc)
    irows[w_idx][w_idx] = -2.0 * Fc
    rows[w_idx][w_idx] = -1.0 / (2.0 * Fc)
    irows[z_idx][z_idx] = ScalarField.constant(-2.0 * sign_h, N)
    rows[z_idx][z_idx] = ScalarField.constant(-sign_h / 2.0, N)

    qnames = base_var_names(n)[:-1]
    names = qnames + (("y",) if include_y else ()) + ("w", "z")
    fixed = {y_idx: 1.0} if include_y else {}
    reduction = ReductionRecord(
        fixed_momenta=fixed,
        momentum_sign=1.0,
        time_index=None,
        time_scale=1.0,
        energy_square=(z_idx, sign_h),
        description="p_y = 1; p_w^2 = g; p_z^2 = |h|; t = lambda; H readout = sign(h) p_z^2",
    )
    lift = LiftedSystem(
        Metric(N, MatrixField.from_entries(rows), MatrixField.from_entries(irows)),
        "ccm",
        n,
        names,
        reduction,
        H0,
    )
    lift.meta["sign_h"] = sign_h
    lift.meta["has_y"] = include_y
    lift.meta["F_field"] = Fc
    lift.meta["V_field"] = Vc
    return lift


def initial_phase_point(lift, q0, p0, t0=0.0, **choices):
    """Lifted null phase point matching base data (q0, p0) at time t0.

    Fixed momenta are set from the lift's reduction record and the one
    remaining component is completed against the null condition. Squared
    clock momenta have two admissible signs; the root nearer `clock_guess`
    (default +1) is taken. The ccm lift also needs the coupling value `g`.
    """
    from .dynamics import PhasePoint, null_initial_momentum

    q0 = np.asarray(q0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    n = lift.n
    if q0.shape != (n,) or p0.shape != (n,):
        raise DomainError("base data must be vectors of length %d" % n)
    N = lift.dim
    rec = lift.reduction
    y = np.zeros(N)
    y[:n] = q0
    p = np.zeros(N)
    p[:n] = rec.momentum_sign * p0
    for idx, val in rec.fixed_momenta.items():
        p[idx] = val
    guess = float(choices.pop("clock_guess", 1.0))

    if lift.kind == "eisenhart-duval":
        if t0 != 0.0:
            y[rec.time_index] = t0 / rec.time_scale
        unknown, guess = lift.n, None
    elif lift.kind == "multi-potential":
        if t0 != 0.0:
            y[rec.time_index] = t0 / rec.time_scale
        unknown, guess = n, None
    elif lift.kind == "signed-clock":
        if t0 != 0.0:
            raise DomainError("clock reductions start at t = 0")
        unknown = N - 1
    elif lift.kind == "ccm":
        if t0 != 0.0:
            raise DomainError("clock reductions start at t = 0")
        if "g" not in choices:
            raise DomainError("the coupling-swap lift needs the coupling value g")
        gval = float(choices.pop("g"))
        if gval < 0.0:
            raise DomainError("coupling value g must be nonnegative")
        p[N - 2] = np.sqrt(gval)
        unknown = N - 1
    else:
        raise DomainError("no initial-data rule for lift kind %r" % lift.kind)
    if choices:
        raise DomainError("unknown choices: %s" % sorted(choices))
    p = null_initial_momentum(lift.metric, y, p, unknown, guess=guess)
    return PhasePoint(y, p)


def reduce_trajectory(traj, lift, tol=1e-8):
    """Project a lifted trajectory to (t, q, p) with the lift's conventions."""
    rec = lift.reduction
    lam = np.asarray(traj.lambdas, dtype=float)
    Y = np.asarray(traj.states, dtype=float)
    P = np.asarray(traj.momenta, dtype=float)
    for idx, val in rec.fixed_momenta.items():
        drift = float(np.max(np.abs(P[:, idx] - val)))
        if drift > tol:
            raise LiftError(
                "fixed momentum %s deviates from %r by %.3e (tolerance %.1e)"
                % (lift.coord_names[idx], val, drift, tol)
            )
    n = lift.n
    q = Y[:, :n].copy()
    p = rec.momentum_sign * P[:, :n]
    if rec.time_index is not None:
        t = rec.time_scale * Y[:, rec.time_index]
    else:
        t = lam.copy()
    energy = np.zeros(len(t))
    for idx, scale in rec.energy_terms:
        energy = energy + scale * P[:, idx]
    if rec.energy_square is not None:
        idx, scale = rec.energy_square
        energy = energy + scale * P[:, idx] ** 2

    order = np.argsort(t)
    t = t[order]
    if not np.all(np.diff(t) > 0.0):
        raise LiftError("reduced time is not strictly monotone")
    q, p, energy = q[order], p[order], energy[order]
    lam_sorted = lam[order]
    affine = None
    if len(t) >= 2:
        dldt = (lam_sorted[-1] - lam_sorted[0]) / (t[-1] - t[0])
        affine = (float(lam_sorted[0] - dldt * t[0]), float(dldt))
    return BaseTrajectory(t, q, p, energy, _traj=traj, _lift=lift, _lam_affine=affine)


# -- builtin systems -----------------------------------------------------------


def builtin_system(name, **params):
    """Registry of ready-made base systems: free, harmonic, kepler, custom."""
    if name == "free":
        n = int(params.pop("n", 1))
        e = float(params.pop("e", 1.0))
        _reject_extras(name, params)
        return NaturalSystem(
            n, MatrixField.identity(n, n + 1), ScalarField.zero(n + 1), (), e
        )
    if name == "harmonic":
        omega = float(params.pop("omega", 1.0))
        n = int(params.pop("n", 1))
        e = float(params.pop("e", 1.0))
        _reject_extras(name, params)
        names = base_var_names(n)
        text = " + ".join("0.5 * %r * %s^2" % (omega**2, names[i]) for i in range(n))
        return NaturalSystem(
            n, MatrixField.identity(n, n + 1), parse_scalar_field(text, names), (), e
        )
    if name == "kepler":
        G0 = float(params.pop("G0", 1.0))
        M = float(params.pop("M", 1.0))
        n = int(params.pop("n", 2))
        e = float(params.pop("e", 1.0))
        _reject_extras(name, params)
        if n < 2:
            raise DomainError("kepler needs n >= 2")
        names = base_var_names(n)
        r2 = " + ".join("%s^2" % names[i] for i in range(n))
        text = "0 - %r / sqrt(%s)" % (G0 * M, r2)
        return NaturalSystem(
            n, MatrixField.identity(n, n + 1), parse_scalar_field(text, names), (), e
        )
    if name == "custom":
        return _custom_system(params)
    raise DomainError("unknown builtin system %r" % name)


def _reject_extras(name, params):
    if params:
        raise DomainError("unknown parameters for %r: %s" % (name, sorted(params)))


def _custom_system(params):
    n = int(params.pop("n"))
    e = float(params.pop("e", 1.0))
    names = base_var_names(n)
    v_spec = params.pop("V", "0")
    a_spec = params.pop("A", None)
    h_spec = params.pop("h_inv", None)
    _reject_extras("custom", params)
    V = v_spec if isinstance(v_spec, ScalarField) else parse_scalar_field(str(v_spec), names)
    A = ()
    if a_spec:
        A = tuple(
            a if isinstance(a, ScalarField) else parse_scalar_field(str(a), names)
            for a in a_spec
        )
    if h_spec is None:
        h_inv = MatrixField.identity(n, n + 1)
    elif isinstance(h_spec, MatrixField):
        h_inv = h_spec
    else:
        rows = [
            [
                f if isinstance(f, ScalarField) else parse_scalar_field(str(f), names)
                for f in row
            ]
            for row in h_spec
        ]
        h_inv = MatrixField.from_entries(rows)
    return NaturalSystem(n, h_inv, V, A, e)
