"""Geodesic Hamiltonian integration and conformal reparameterization.

The flow integrated here is Hamilton's equations of H = (1/2) p g^{-1} p:

    dy/dlambda = g^{-1} p,    dp/dlambda = -(1/2) d(g^{-1}) p p.

Null initial data stays null up to integrator drift; with projection on,
one designated momentum component is re-solved against the null condition
whenever the drift exceeds the configured tolerance. The right-hand side
evaluates only the closed-form inverse-metric entry fields and their exact
first-derivative fields, prepared once per integration.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45

from .errors import DomainError
from .fields import eval_field


@dataclass
class PhasePoint:
    y: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).copy()
        self.p = np.asarray(self.p, dtype=float).copy()
        if self.y.shape != self.p.shape or self.y.ndim != 1:
            raise DomainError("coordinates and momenta must be vectors of equal length")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.p))):
            raise DomainError("phase point has non-finite entries")


@dataclass
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    lambda_max: float = 10.0
    null_projection: bool = True
    null_tol: float = 1e-10
    project_index: int | None = None
    shell_value: float = 0.0  # nonzero only for internal non-null diagnostics

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.null_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.max_step <= 0:
            raise DomainError("max_step must be positive")
        if self.lambda_max == 0.0:
            raise DomainError("lambda_max must be nonzero")


@dataclass
class Trajectory:
    """Accepted integration samples, stored with lambda strictly increasing."""

    lambdas: np.ndarray
    states: np.ndarray
    momenta: np.ndarray
    ham_values: np.ndarray
    max_abs_hamiltonian: float
    n_steps: int
    n_projections: int
    dense: list = field(default=None, repr=False)
    quadrature_error: float = 0.0

    def sample(self, lams):
        """Dense-output evaluation of (y, p) at arbitrary parameter values."""
        if not self.dense:
            raise DomainError("trajectory carries no dense interpolant")
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        lefts = np.array([seg[0] for seg in self.dense])
        n = self.states.shape[1]
        Y = np.empty((len(lams), n))
        P = np.empty((len(lams), n))
        lo = self.lambdas[0] - 1e-12
        hi = self.lambdas[-1] + 1e-12
        for k, lam in enumerate(lams):
            if lam < lo or lam > hi:
                raise DomainError("parameter %r outside integrated range" % lam)
            i = int(np.searchsorted(lefts, lam, side="right")) - 1
            i = min(max(i, 0), len(self.dense) - 1)
            z = self.dense[i][2](lam)
            Y[k] = z[:n]
            P[k] = z[n:]
        return Y, P

    def phase_point(self, k):
        return PhasePoint(self.states[k], self.momenta[k])


class _InverseMetricTable:
    """Prepared evaluation plan for g^{-1} entries and their gradients.

    Entries known to be constant are cached as floats; gradient fields
    that are identically zero are dropped so the flow's right-hand side
    touches only the genuinely varying pieces.
    """

    def __init__(self, metric):
        g_inv = metric.g_inv if metric.g_inv is not None else metric.inverse_field()
        self.dim = n = metric.dim
        self.upper = []  # (i, j, const_or_None, field, [(a, grad_field), ...])
        for i in range(n):
            for j in range(i, n):
                f = g_inv.entry(i, j)
                grads = []
                if f.constant_value is None:
                    for a in range(n):
                        df = f.partial(a)
                        if df.constant_value != 0.0:
                            grads.append((a, df))
                self.upper.append((i, j, f.constant_value, f, grads))

    def matrix(self, y):
        out = np.zeros((self.dim, self.dim))
        args = [float(v) for v in y]
        for i, j, const, f, _ in self.upper:
            v = const if const is not None else float(f(*args))
            out[i, j] = v
            out[j, i] = v
        return out

    def hamiltonian(self, y, p):
        return float(0.5 * p @ self.matrix(y) @ p)

    def flow_rhs(self, y, p):
        args = [float(v) for v in y]
        ydot = np.zeros(self.dim)
        pdot = np.zeros(self.dim)
        for i, j, const, f, grads in self.upper:
            pipj = p[i] * p[j]
            gij = const if const is not None else float(f(*args))
            if gij != 0.0:
                ydot[i] += gij * p[j]
                if i != j:
                    ydot[j] += gij * p[i]
            if i != j:
                pipj *= 2.0
            if pipj != 0.0:
                for a, df in grads:
                    pdot[a] -= 0.5 * float(df(*args)) * pipj
        return ydot, pdot


def hamiltonian_value(metric, pt):
    """(1/2) p g^{-1} p at a phase point."""
    if not isinstance(pt, PhasePoint):
        pt = PhasePoint(*pt)
    ginv = (
        metric.g_inv(pt.y) if metric.g_inv is not None else metric.inverse_value(pt.y)
    )
    return float(0.5 * pt.p @ ginv @ pt.p)


def null_initial_momentum(metric, y, p_partial, unknown_index, guess=None, target=0.0):
    """Complete one momentum component so the phase point lies on the cone.

    The null condition is quadratic in the unknown component; the linear
    case (zero diagonal inverse-metric entry, as for the u-momentum of a
    null-pair lift) is solved directly. With two distinct real roots the
    one closer to `guess` is returned; without a guess that situation is
    an error, since either sheet would be a silent choice.
    """
    y = np.asarray(y, dtype=float)
    p = np.asarray(p_partial, dtype=float).copy()
    k = int(unknown_index)
    if not 0 <= k < metric.dim:
        raise DomainError("unknown momentum index out of range")
    ginv = metric.g_inv(y) if metric.g_inv is not None else metric.inverse_value(y)
    scale = max(float(np.max(np.abs(ginv))), 1.0)
    a = 0.5 * ginv[k, k]
    others = [i for i in range(metric.dim) if i != k]
    b = float(ginv[k, others] @ p[others])
    c = float(0.5 * p[others] @ ginv[np.ix_(others, others)] @ p[others]) - float(target)

    if abs(a) <= 1e-14 * scale:
        if abs(b) <= 1e-14 * scale:
            raise DomainError(
                "momentum component %d does not appear in the null condition" % k
            )
        root = -c / b
    else:
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            raise DomainError(
                "no real momentum closes the null condition (discriminant %r)" % disc
            )
        sq = float(np.sqrt(disc))
        r1 = (-b - sq) / (2.0 * a)
        r2 = (-b + sq) / (2.0 * a)
        if abs(r1 - r2) <= 1e-12 * max(1.0, abs(r1) + abs(r2)):
            root = 0.5 * (r1 + r2)
        elif guess is None:
            raise DomainError(
                "two null completions exist (%r and %r); pass a guess to pick a sheet"
                % (r1, r2)
            )
        else:
            root = r1 if abs(r1 - guess) <= abs(r2 - guess) else r2
    p[k] = root
    return p


def integrate_null_geodesic(metric, pt0, cfg):
    """Adaptive 5(4) Runge-Kutta integration of the geodesic Hamiltonian flow."""
    if not isinstance(pt0, PhasePoint):
        pt0 = PhasePoint(*pt0)
    n = metric.dim
    if len(pt0.y) != n:
        raise DomainError("phase point dimension %d != metric dimension %d" % (len(pt0.y), n))
    table = _InverseMetricTable(metric)

    def rhs(_lam, z):
        ydot, pdot = table.flow_rhs(z[:n], z[n:])
        return np.concatenate([ydot, pdot])

    ham = table.hamiltonian

    h0 = ham(pt0.y, pt0.p) - cfg.shell_value
    if abs(h0) > cfg.null_tol:
        raise DomainError(
            "initial data misses the required shell: residual %.3e > %.1e"
            % (abs(h0), cfg.null_tol)
        )
    if cfg.null_projection and cfg.project_index is None:
        raise DomainError("null projection needs a designated momentum index")

    lam_end = cfg.lambda_max
    z = np.concatenate([pt0.y, pt0.p])
    lams = [0.0]
    zs = [z.copy()]
    hs = [h0 + cfg.shell_value]
    dense = []
    n_projections = 0
    max_h = abs(h0)
    rk = RK45(rhs, 0.0, z, lam_end, rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step)
    while rk.status == "running":
        rk.step()
        if rk.status == "failed":
            raise DomainError("integrator failed (step-size underflow)")
        seg = rk.dense_output()
        dense.append((min(seg.t_old, seg.t), max(seg.t_old, seg.t), seg))
        y = rk.y[:n].copy()
        p = rk.y[n:].copy()
        resid = ham(y, p) - cfg.shell_value
        if cfg.null_projection and abs(resid) > cfg.null_tol:
            p = null_initial_momentum(
                metric,
                y,
                p,
                cfg.project_index,
                guess=p[cfg.project_index],
                target=cfg.shell_value,
            )
            n_projections += 1
            resid = ham(y, p) - cfg.shell_value
            if rk.status == "running":
                rk = RK45(
                    rhs,
                    rk.t,
                    np.concatenate([y, p]),
                    lam_end,
                    rtol=cfg.rel_tol,
                    atol=cfg.abs_tol,
                    max_step=cfg.max_step,
                    first_step=min(abs(rk.step_size), abs(lam_end - rk.t)),
                )
        max_h = max(max_h, abs(resid))
        lams.append(rk.t)
        zs.append(np.concatenate([y, p]))
        hs.append(resid + cfg.shell_value)

    lams = np.array(lams)
    Z = np.array(zs)
    hs = np.array(hs)
    if lam_end < 0:
        lams = lams[::-1].copy()
        Z = Z[::-1].copy()
        hs = hs[::-1].copy()
    dense.sort(key=lambda seg: seg[0])
    return Trajectory(
        lambdas=lams,
        states=Z[:, :n],
        momenta=Z[:, n:],
        ham_values=hs,
        max_abs_hamiltonian=float(max_h),
        n_steps=len(lams) - 1,
        n_projections=n_projections,
        dense=dense,
    )


def reparameterize(traj, omega):
    """Change the curve parameter by d(new)/d(old) = Omega^2 along the curve.

    Points and momenta are untouched; only the parameter values move. The
    quadrature is Simpson on the accepted grid with dense midpoints, and
    the accumulated Richardson error estimate lands in quadrature_error.
    The stored Hamiltonian diagnostics are rescaled to the Omega^-2 flow.
    """
    lams = traj.lambdas
    if traj.dense is None:
        raise DomainError("reparameterization needs the dense interpolant")
    mids = 0.5 * (lams[:-1] + lams[1:])
    Ymid, _ = traj.sample(mids)
    o_nodes = np.array([eval_field(omega, yrow) for yrow in traj.states])
    o_mids = np.array([eval_field(omega, yrow) for yrow in Ymid])
    both = np.concatenate([o_nodes, o_mids])
    if np.min(both) * np.max(both) <= 0.0:
        # a sign change (or an exact zero) means the factor vanished somewhere
        raise DomainError("rescaling factor vanishes along the trajectory")
    f_nodes = o_nodes**2
    f_mids = o_mids**2
    h = np.diff(lams)
    simpson = h / 6.0 * (f_nodes[:-1] + 4.0 * f_mids + f_nodes[1:])
    trapezoid = h / 2.0 * (f_nodes[:-1] + f_nodes[1:])
    err = float(np.sum(np.abs(simpson - trapezoid)) / 15.0)
    new_lams = np.concatenate([[0.0], np.cumsum(simpson)]) + lams[0]
    if traj.ham_values is None:
        new_ham, new_max = None, float("nan")
    else:
        new_ham = traj.ham_values / f_nodes
        new_max = float(np.max(np.abs(new_ham)))
    return Trajectory(
        lambdas=new_lams,
        states=traj.states.copy(),
        momenta=traj.momenta.copy(),
        ham_values=new_ham,
        max_abs_hamiltonian=new_max,
        n_steps=traj.n_steps,
        n_projections=traj.n_projections,
        dense=None,
        quadrature_error=err,
    )


def write_trajectory_csv(traj, path):
    """One row per accepted step: lambda, coordinates, momenta, H."""
    n = traj.states.shape[1]
    header = (
        ["lambda"]
        + ["y%d" % (i + 1) for i in range(n)]
        + ["p%d" % (i + 1) for i in range(n)]
        + ["H"]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(len(traj.lambdas)):
            # mapped or reparameterized flows carry no Hamiltonian record
            hval = float("nan") if traj.ham_values is None else traj.ham_values[k]
            row = (
                [traj.lambdas[k]]
                + list(traj.states[k])
                + list(traj.momenta[k])
                + [hval]
            )
            writer.writerow(["%.17g" % v for v in row])


def dense_states(traj, count):
    """Coordinate polyline sampled from the dense interpolant, uniform in lambda.

    Comparing raw accepted-step polylines conflates curve distance with
    chordal sag; sampling a few thousand dense points keeps the sag below
    typical curve-matching tolerances.
    """
    lams = np.linspace(traj.lambdas[0], traj.lambdas[-1], count)
    Y, _ = traj.sample(lams)
    return Y


def arclength_resample(points, count):
    """Resample a polyline at `count` points equally spaced in chord length."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise DomainError("need a polyline of at least two points")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0.0:
        raise DomainError("polyline has zero length")
    grid = np.linspace(0.0, s[-1], count)
    return np.column_stack([np.interp(grid, s, pts[:, j]) for j in range(pts.shape[1])])


def _directed_polyline_distance(P, Q):
    a = Q[:-1]
    d = Q[1:] - a
    dd = np.einsum("md,md->m", d, d)
    dd = np.where(dd == 0.0, 1.0, dd)
    worst = 0.0
    for pnt in P:
        w = pnt - a
        t = np.clip(np.einsum("md,md->m", w, d) / dd, 0.0, 1.0)
        proj = a + t[:, None] * d
        dist = float(np.min(np.linalg.norm(pnt - proj, axis=1)))
        worst = max(worst, dist)
    return worst


def hausdorff_distance(P, Q):
    """Symmetric point-set distance between two polylines."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if len(P) < 2 or len(Q) < 2:
        raise DomainError("need polylines of at least two points")
    return max(_directed_polyline_distance(P, Q), _directed_polyline_distance(Q, P))
