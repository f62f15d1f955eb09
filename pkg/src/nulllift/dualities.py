"""Coordinate changes of lifted systems: pullbacks, null-form extraction,
and a small catalog of named transformations with closed-form duals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EDFormError, MapError, SingularMetricError
from .fields import MatrixField, ScalarField, parse_scalar_field
from .geometry import schwarzian_derivative


def _metric_of(target):
    return getattr(target, "metric", target)


def _fsum(fields, arity):
    total = None
    for f in fields:
        if f.is_identically_zero:
            continue
        total = f if total is None else total + f
    return ScalarField.zero(arity) if total is None else total


class DualityMap:
    """A smooth change of lift coordinates with exact derivative access.

    ``forward[k]`` gives target coordinate k as a field over the source
    coordinates; every component shares one arity equal to the manifold
    dimension.  ``nu`` records the vertical clock-rate ratio for maps
    that advertise themselves as preserving the null translation
    direction (the last coordinate), and is None otherwise.
    """

    def __init__(self, forward, inverse=None, nu=None, name="custom", meta=None):
        self.forward = tuple(forward)
        if not self.forward:
            raise MapError("forward map needs at least one component")
        arity = self.forward[0].arity
        if any(f.arity != arity for f in self.forward):
            raise MapError("forward components must share one arity")
        if len(self.forward) != arity:
            raise MapError(
                "map has %d components but its fields take %d coordinates"
                % (len(self.forward), arity)
            )
        if inverse is not None:
            inverse = tuple(inverse)
            if len(inverse) != arity or any(f.arity != arity for f in inverse):
                raise MapError("inverse map must match the forward dimension")
        self.inverse = inverse
        self.nu = None if nu is None else float(nu)
        self.name = name
        self.meta = dict(meta or {})
        self._jac = None

    @property
    def dim(self):
        return len(self.forward)

    def map_point(self, y):
        args = [float(t) for t in np.asarray(y, dtype=float)]
        return np.array([f(*args) for f in self.forward], dtype=float)

    def _jacobian_rows(self):
        if self._jac is None:
            self._jac = [
                [comp.partial(b) for b in range(self.dim)] for comp in self.forward
            ]
        return self._jac

    def jacobian(self, y):
        """J[a, b] = d(target coordinate a)/d(source coordinate b) at y."""
        args = [float(t) for t in np.asarray(y, dtype=float)]
        rows = self._jacobian_rows()
        J = np.empty((self.dim, self.dim))
        for a in range(self.dim):
            for b in range(self.dim):
                c = rows[a][b].constant_value
                J[a, b] = c if c is not None else float(rows[a][b](*args))
        if not np.all(np.isfinite(J)):
            raise SingularMetricError(
                "jacobian has non-finite entries at %r" % ([float(t) for t in y],)
            )
        return J

    def invert_point(self, ybar, guess=None):
        """Source point mapping to ybar; Newton fallback when no closed inverse."""
        ybar = np.asarray(ybar, dtype=float)
        if self.inverse is not None:
            args = [float(t) for t in ybar]
            return np.array([f(*args) for f in self.inverse], dtype=float)
        y = np.array(ybar if guess is None else guess, dtype=float)
        scale = max(1.0, float(np.max(np.abs(ybar))))
        r = self.map_point(y) - ybar
        for _ in range(50):
            if np.max(np.abs(r)) <= 1e-12 * scale:
                return y
            J = self.jacobian(y)
            try:
                step = np.linalg.solve(J, r)
            except np.linalg.LinAlgError:
                raise MapError(
                    "jacobian singular while inverting at %r" % (list(ybar),)
                ) from None
            t = 1.0
            for _ in range(30):
                cand = y - t * step
                rc = self.map_point(cand) - ybar
                if np.max(np.abs(rc)) < np.max(np.abs(r)):
                    y, r = cand, rc
                    break
                t *= 0.5
            else:
                raise MapError("inversion stalled at %r" % (list(ybar),))
        raise MapError("inversion did not converge at %r" % (list(ybar),))

    def bargmann_defect(self, y):
        """Worst violation at y of the vertical-translation conditions.

        Checks that no target coordinate except the last depends on the
        source's last coordinate, and that the last one depends on it with
        the constant rate 1/nu.
        """
        if self.nu is None:
            raise MapError("map %r carries no clock-rate ratio nu" % self.name)
        J = self.jacobian(y)
        col = J[:, self.dim - 1]
        worst = abs(col[self.dim - 1] - 1.0 / self.nu)
        for a in range(self.dim - 1):
            worst = max(worst, abs(col[a]))
        return float(worst)

    def check_bargmann(self, sample, tol=1e-10):
        for y in sample:
            d = self.bargmann_defect(y)
            if d > tol:
                raise MapError(
                    "map %r breaks the vertical-translation conditions at %r "
                    "(defect %.3e > %.1e)" % (self.name, list(map(float, y)), d, tol)
                )


def pullback_metric(dmap, target, y):
    """The matrix (f*g)(y) = J(y)^T g(f(y)) J(y) for the target metric g."""
    metric = _metric_of(target)
    y = np.asarray(y, dtype=float)
    J = dmap.jacobian(y)
    det = float(np.linalg.det(J))
    if not np.isfinite(det) or abs(det) < 1e-12 * max(1.0, float(np.max(np.abs(J)))) ** dmap.dim:
        raise SingularMetricError("jacobian is singular at %r (det=%r)" % (list(y), det))
    gbar = metric.value(dmap.map_point(y))
    return J.T @ gbar @ J


def pullback_metric_field(dmap, target):
    """The pullback as a symmetric MatrixField over the source coordinates."""
    metric = _metric_of(target)
    N = dmap.dim
    if metric.dim != N:
        raise MapError(
            "map dimension %d does not match metric dimension %d" % (N, metric.dim)
        )
    rows = dmap._jacobian_rows()
    composed = {}
    for c in range(N):
        for d in range(c, N):
            gf = metric.g.entry(c, d)
            if not gf.is_identically_zero:
                composed[(c, d)] = gf.compose(dmap.forward)
    out = [[None] * N for _ in range(N)]
    for a in range(N):
        for b in range(a, N):
            terms = []
            for (c, d), gcd in composed.items():
                jca, jdb = rows[c][a], rows[d][b]
                if not (jca.is_identically_zero or jdb.is_identically_zero):
                    terms.append(jca * jdb * gcd)
                if c != d:
                    jda, jcb = rows[d][a], rows[c][b]
                    if not (jda.is_identically_zero or jcb.is_identically_zero):
                        terms.append(jda * jcb * gcd)
            out[a][b] = out[b][a] = _fsum(terms, N)
    return MatrixField.from_entries(out)


@dataclass
class EDExtraction:
    """Null-lift data recovered from a pullback, as fields over source coords.

    residual is the largest structural-constraint violation seen on the
    sample the extraction was validated against (0 for closed-form
    predictions).
    """

    omega2: ScalarField
    h: MatrixField
    V: ScalarField
    A: tuple
    residual: float

    @property
    def spatial_dim(self):
        return self.h.dim


def extract_ed_form(dmap, target, sample, tol=1e-9):
    """Test that the pullback keeps the null-lift shape and split it.

    The pullback must have no (v, v) or (spatial, v) components; the
    remaining blocks then determine a conformal factor, a spatial metric,
    a scalar potential, and a covector potential.
    """
    sample = [np.asarray(y, dtype=float) for y in sample]
    if not sample:
        raise MapError("extraction needs at least one sample point")
    P = pullback_metric_field(dmap, target)
    N = dmap.dim
    n = N - 2
    u_idx, v_idx = n, N - 1
    constraints = [(v_idx, v_idx)] + [(i, v_idx) for i in range(n)]
    worst, worst_pt, worst_comp = 0.0, None, None
    for y in sample:
        args = [float(t) for t in y]
        for comp in constraints:
            r = abs(float(P.entry(*comp)(*args)))
            if r > worst:
                worst, worst_pt, worst_comp = r, y, comp
    if worst > tol:
        raise EDFormError(
            "pullback is not of null-lift form: |g[%d,%d]| = %.3e at %r exceeds %g"
            % (worst_comp[0], worst_comp[1], worst, list(worst_pt), tol),
            point=worst_pt,
            component=worst_comp,
            residual=worst,
        )
    # the vertical direction must stay Killing: the surviving blocks may
    # not depend on v, else the image is not a null lift at all
    survivors = [(u_idx, v_idx), (u_idx, u_idx)]
    survivors += [(i, j) for i in range(n) for j in range(i, n)]
    survivors += [(u_idx, i) for i in range(n)]
    for comp in survivors:
        dP = P.entry(*comp).partial(v_idx)
        if dP.is_identically_zero:
            continue
        for y in sample:
            r = abs(float(dP(*[float(t) for t in y])))
            if r > tol:
                raise EDFormError(
                    "pullback block g[%d,%d] drifts along the vertical direction "
                    "(rate %.3e at %r)" % (comp[0], comp[1], r, list(y)),
                    point=y,
                    component=comp,
                    residual=r,
                )
    omega2 = P.entry(u_idx, v_idx)
    for y in sample:
        val = float(omega2(*[float(t) for t in y]))
        if not val > 0.0:
            raise EDFormError(
                "extracted conformal factor %.3e is not positive at %r" % (val, list(y)),
                point=y,
                component=(u_idx, v_idx),
                residual=val,
            )
    h = MatrixField.from_entries(
        [[P.entry(i, j) / omega2 for j in range(n)] for i in range(n)]
    )
    V = P.entry(u_idx, u_idx) / omega2 * (-0.5)
    A = tuple(P.entry(u_idx, i) / omega2 for i in range(n))
    return EDExtraction(omega2, h, V, A, residual=worst)


def classify_duality(dmap, source, target, sample, tol=1e-8):
    """One of 'dynamical-symmetry', 'projective-duality', 'not-equivalent'.

    The map earns a verdict other than not-equivalent when its pullback of
    the target metric stays inside the source metric's conformal class at
    every sample point; it is a symmetry rather than a duality when the
    target itself already sits in that class.
    """
    gsrc = _metric_of(source)
    gtar = _metric_of(target)

    def conformal_mismatch(m, g):
        c = float(np.tensordot(m, g) / np.tensordot(g, g))
        return float(np.linalg.norm(m - c * g)) / max(1.0, float(np.linalg.norm(m)))

    for y in sample:
        P = pullback_metric(dmap, gtar, y)
        if conformal_mismatch(P, gsrc.value(np.asarray(y, dtype=float))) > tol:
            return "not-equivalent"
    for y in sample:
        y = np.asarray(y, dtype=float)
        if conformal_mismatch(gtar.value(y), gsrc.value(y)) > tol:
            return "projective-duality"
    return "dynamical-symmetry"


# -- named transformation catalog -------------------------------------------

CATALOG = {
    "dark_energy": "clock reparameterization of a scalar-potential system; "
    "adds a quadratic confining term measured by the clock's schwarzian",
    "em_field": "clock reparameterization with a constant spatial metric and "
    "a covector potential; needs a mobius clock",
    "dirac_gravity": "inversion-type clock map trading a time-dependent "
    "coupling for a static one",
    "schrodinger_group": "conformal symmetry of the free flat lift built "
    "from rotation/boost/translation blocks and a unimodular clock action",
}

_DEFAULT_CLOCK_PROBE = (0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75)


def _reject_extras(params, name):
    if params:
        raise MapError("unknown parameters for %r: %s" % (name, sorted(params)))


def _clock_function(raw):
    if isinstance(raw, str):
        return parse_scalar_field(raw, ("u",))
    if isinstance(raw, ScalarField):
        if raw.arity != 1:
            raise MapError("clock function must depend on the single variable u")
        return raw
    raise MapError("clock function must be an expression string or a one-variable field")


def _clock_rate_sign(phi, probe):
    """Sign of phi' on the probe set; must be one nonzero sign throughout."""
    d1 = phi.partial(0)
    sign = 0.0
    for u in probe:
        try:
            val = float(d1(float(u)))
        except (DomainError, ArithmeticError) as err:
            raise MapError(
                "clock rate not usable at probe u=%r (%s); pass u_probe=..." % (u, err)
            ) from None
        if not np.isfinite(val) or val == 0.0:
            raise MapError("clock rate vanishes at probe u=%r" % (u,))
        s = 1.0 if val > 0.0 else -1.0
        if sign == 0.0:
            sign = s
        elif s != sign:
            raise MapError("clock rate changes sign across the probe set")
    return sign


def _coordinate_squares(n, N, quad=None):
    """Sum_{ij} quad[i,j] q^i q^j (identity weights when quad is None)."""
    terms = []
    for i in range(n):
        qi = ScalarField.coordinate(i, N)
        for j in range(i, n):
            if quad is None:
                if i != j:
                    continue
                w = 1.0
            else:
                w = float(quad[i, j]) * (1.0 if i == j else 2.0)
            if w == 0.0:
                continue
            qj = ScalarField.coordinate(j, N)
            terms.append(qi * qj if w == 1.0 else w * (qi * qj))
    return _fsum(terms, N)


def _constant_matrix(raw, what):
    if isinstance(raw, MatrixField):
        vals = np.empty((raw.dim, raw.dim))
        for i in range(raw.dim):
            for j in range(raw.dim):
                c = raw.entry(i, j).constant_value
                if c is None:
                    raise MapError("%s entries must be constant for this map" % what)
                vals[i, j] = c
    else:
        vals = np.asarray(raw, dtype=float)
    if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
        raise MapError("%s must be a square matrix" % what)
    if not np.all(np.isfinite(vals)):
        raise MapError("%s has non-finite entries" % what)
    if np.max(np.abs(vals - vals.T)) > 1e-12:
        raise MapError("%s must be symmetric" % what)
    if abs(np.linalg.det(vals)) < 1e-12:
        raise MapError("%s is singular" % what)
    return vals


def _clock_pieces(phi, sigma, n, N):
    """Extended fields: rate |phi'|, curvature phi'', schwarzian, and sqrt rate."""
    d1 = phi.partial(0)
    d2 = d1.partial(0)
    d3 = d2.partial(0)
    rate = (sigma * d1).extend(N, (n,))
    curv = d2.extend(N, (n,))
    ratio = d2.extend(N, (n,)) / d1.extend(N, (n,))
    schw = d3.extend(N, (n,)) / d1.extend(N, (n,)) - 1.5 * (ratio * ratio)
    return rate, curv, ratio, schw, rate.apply("sqrt")


def _clock_reparameterization_map(name, params, quad_matrix):
    """Shared builder for the two clock-reparameterization catalog entries."""
    phi = _clock_function(params.pop("phi"))
    probe = tuple(params.pop("u_probe", _DEFAULT_CLOCK_PROBE))
    inv_raw = params.pop("phi_inverse", None)
    sigma = _clock_rate_sign(phi, probe)
    if quad_matrix is None:
        n = int(params.pop("n", 1))
        if n < 1:
            raise MapError("spatial dimension must be at least 1")
    else:
        n = quad_matrix.shape[0]
    _reject_extras(params, name)
    if name == "em_field":
        for u in probe:
            s = schwarzian_derivative(phi, float(u))
            if abs(s) > 1e-9:
                raise MapError(
                    "em_field needs a mobius clock; schwarzian is %.3e at u=%r" % (s, u)
                )
    N = n + 2
    rate, curv, ratio, schw, rho = _clock_pieces(phi, sigma, n, N)
    quad = _coordinate_squares(n, N, quad_matrix)
    v = ScalarField.coordinate(N - 1, N, "v")
    forward = tuple(rho * ScalarField.coordinate(i, N) for i in range(n)) + (
        phi.extend(N, (n,)),
        sigma * (v - 0.25 * (ratio * quad)),
    )
    inverse = None
    if inv_raw is not None:
        psi = _clock_function(inv_raw)
        for u in probe:
            r = abs(float(psi(float(phi(float(u))))) - float(u))
            if r > 1e-9:
                raise MapError("phi_inverse fails the round trip at u=%r (off by %.3e)" % (u, r))
        d1_b = phi.partial(0).compose([psi]).extend(N, (n,))
        d2_b = phi.partial(0).partial(0).compose([psi]).extend(N, (n,))
        rate_b = sigma * d1_b
        quad_b = _coordinate_squares(n, N, quad_matrix) / rate_b
        inverse = tuple(
            ScalarField.coordinate(i, N) / rate_b.apply("sqrt") for i in range(n)
        ) + (
            psi.extend(N, (n,)),
            sigma * ScalarField.coordinate(N - 1, N) + 0.25 * ((d2_b / d1_b) * quad_b),
        )
    meta = {
        "n": n,
        "sigma": sigma,
        "omega2": rate,
        "rho": rho,
        "clock": phi,
        "clock_rate": rate,
        "clock_curvature": curv,
        "schwarzian": schw,
        "quadratic_form": quad,
    }
    if quad_matrix is not None:
        meta["h_matrix"] = quad_matrix
    return DualityMap(forward, inverse=inverse, nu=sigma, name=name, meta=meta)


def _dirac_gravity_map(params):
    a = float(params.pop("a"))
    b = float(params.pop("b"))
    c = float(params.pop("c"))
    d = float(params.pop("d"))
    n = int(params.pop("n", 3))
    _reject_extras(params, "dirac_gravity")
    if a == 0.0:
        raise MapError("parameter a must be nonzero")
    if n < 1:
        raise MapError("spatial dimension must be at least 1")
    N = n + 2
    u = ScalarField.coordinate(n, N, "u")
    v = ScalarField.coordinate(N - 1, N, "v")
    shifted = u + b
    omega = a / shifted
    qsq = _coordinate_squares(n, N)
    forward = tuple(omega * ScalarField.coordinate(i, N) for i in range(n)) + (
        (-a * a) / shifted + c,
        v + qsq / (2.0 * shifted) + d,
    )
    # closed inverse: u+b = a^2/(c-ubar) and q = a qbar/(c-ubar)
    ub = ScalarField.coordinate(n, N, "u")
    vb = ScalarField.coordinate(N - 1, N, "v")
    denom = c - ub
    inverse = tuple(
        a * ScalarField.coordinate(i, N) / denom for i in range(n)
    ) + (
        (a * a) / denom - b,
        vb - _coordinate_squares(n, N) / (2.0 * denom) - d,
    )
    uu = ScalarField.coordinate(0, 1, "u")
    meta = {
        "n": n,
        "omega2": omega * omega,
        "omega": omega,
        "clock": (-a * a) / (uu + b) + c,
        "params": (a, b, c, d),
    }
    return DualityMap(forward, inverse=inverse, nu=1.0, name="dirac_gravity", meta=meta)


@dataclass(frozen=True, eq=False)
class SchrodingerGroupElement:
    """Rotation/boost/translation blocks with a unimodular clock action.

    The blocks assemble into the square matrix that acts projectively on
    (spatial, clock) coordinates; ``center`` shifts the vertical
    coordinate and never enters that action.
    """

    rotation: np.ndarray
    boost: np.ndarray
    translation: np.ndarray
    clock: np.ndarray
    center: float = 0.0

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=float)
        if rot.ndim != 2 or rot.shape[0] != rot.shape[1]:
            raise MapError("rotation block must be a square matrix")
        n = rot.shape[0]
        boost = np.array(self.boost, dtype=float).reshape(-1)
        trans = np.array(self.translation, dtype=float).reshape(-1)
        clock = np.array(self.clock, dtype=float)
        if boost.shape != (n,) or trans.shape != (n,):
            raise MapError("boost and translation must be %d-vectors" % n)
        if clock.shape != (2, 2):
            raise MapError("clock block must be a 2x2 matrix")
        if np.max(np.abs(rot.T @ rot - np.eye(n))) > 1e-12:
            raise MapError("rotation block must be orthogonal")
        det = clock[0, 0] * clock[1, 1] - clock[0, 1] * clock[1, 0]
        if abs(det - 1.0) > 1e-12:
            raise MapError("clock block must have unit determinant, got %r" % det)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "boost", boost)
        object.__setattr__(self, "translation", trans)
        object.__setattr__(self, "clock", clock)
        object.__setattr__(self, "center", float(self.center))

    @property
    def dim(self):
        return self.rotation.shape[0]

    @property
    def matrix(self):
        n = self.dim
        m = np.zeros((n + 2, n + 2))
        m[:n, :n] = self.rotation
        m[:n, n] = self.boost
        m[:n, n + 1] = self.translation
        m[n:, n:] = self.clock
        return m

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n), np.zeros(n), np.zeros(n), np.eye(2))

    @classmethod
    def from_matrix(cls, m, center=0.0):
        m = np.asarray(m, dtype=float)
        n = m.shape[0] - 2
        if m.ndim != 2 or m.shape[0] != m.shape[1] or n < 1:
            raise MapError("element matrix must be square with at least 3 rows")
        if np.max(np.abs(m[n:, :n])) > 1e-12:
            raise MapError("element matrix must have a zero lower-left block")
        return cls(m[:n, :n], m[:n, n], m[:n, n + 1], m[n:, n:], center)

    def compose(self, other):
        """The element acting as self after other; centers add."""
        return SchrodingerGroupElement.from_matrix(
            self.matrix @ other.matrix, center=self.center + other.center
        )


def projective_matrix_action(element, q, u):
    """Apply the element's matrix projectively to (q, u)."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if q.shape != (element.dim,):
        raise MapError("point has %d spatial components, element wants %d" % (q.size, element.dim))
    f_, g_ = float(element.clock[1, 0]), float(element.clock[1, 1])
    den = f_ * float(u) + g_
    if abs(den) < 1e-14 * max(1.0, abs(float(u))):
        raise DomainError("projective horizon: clock denominator vanishes at u=%r" % (u,))
    qbar = (element.rotation @ q + element.boost * float(u) + element.translation) / den
    ubar = (float(element.clock[0, 0]) * float(u) + float(element.clock[0, 1])) / den
    return qbar, float(ubar)


def _schrodinger_map(params):
    el = params.pop("element", None)
    if el is None:
        el = SchrodingerGroupElement(
            rotation=params.pop("rotation"),
            boost=params.pop("boost"),
            translation=params.pop("translation"),
            clock=params.pop("clock"),
            center=params.pop("center", 0.0),
        )
    if not isinstance(el, SchrodingerGroupElement):
        raise MapError("element must be a SchrodingerGroupElement")
    _reject_extras(params, "schrodinger_group")
    n = el.dim
    N = n + 2
    u = ScalarField.coordinate(n, N, "u")
    v = ScalarField.coordinate(N - 1, N, "v")
    d_, e_ = float(el.clock[0, 0]), float(el.clock[0, 1])
    f_, g_ = float(el.clock[1, 0]), float(el.clock[1, 1])
    den = f_ * u + g_

    def linear_part(i):
        terms = [float(el.rotation[i, j]) * ScalarField.coordinate(j, N) for j in range(n)]
        terms.append(float(el.boost[i]) * u)
        terms.append(ScalarField.constant(float(el.translation[i]), N))
        return _fsum(terms, N)

    lin = [linear_part(i) for i in range(n)]
    s2 = _fsum([w * w for w in lin], N)
    boost_rot = el.boost @ el.rotation  # row vector b^T A
    b_dot_aq = _fsum(
        [float(boost_rot[j]) * ScalarField.coordinate(j, N) for j in range(n)], N
    )
    bsq = float(el.boost @ el.boost)
    forward = tuple(w / den for w in lin) + (
        (d_ * u + e_) / den,
        v + 0.5 * f_ * (s2 / den) - b_dot_aq - 0.5 * bsq * u + float(el.center),
    )
    # closed inverse through det(clock) = 1: f u + g = 1/(d - f ubar)
    ubb = ScalarField.coordinate(n, N, "u")
    vbb = ScalarField.coordinate(N - 1, N, "v")
    dbar = d_ - f_ * ubb
    u_inv = (g_ * ubb - e_) / dbar
    rec = [
        ScalarField.coordinate(i, N) / dbar
        - float(el.boost[i]) * u_inv
        - float(el.translation[i])
        for i in range(n)
    ]
    q_inv = [
        _fsum([float(el.rotation[i, j]) * rec[i] for i in range(n)], N) for j in range(n)
    ]
    qb_sq = _coordinate_squares(n, N)
    b_dot_qb = _fsum(
        [float(el.boost[i]) * ScalarField.coordinate(i, N) for i in range(n)], N
    )
    v_inv = (
        vbb
        - 0.5 * f_ * (qb_sq / dbar)
        + b_dot_qb / dbar
        - 0.5 * bsq * u_inv
        - float(el.boost @ el.translation)
        - float(el.center)
    )
    inverse = tuple(q_inv) + (u_inv, v_inv)
    uu = ScalarField.coordinate(0, 1, "u")
    den1 = f_ * uu + g_
    meta = {
        "n": n,
        "element": el,
        "omega2": 1.0 / (den * den),
        "clock": (d_ * uu + e_) / den1,
    }
    return DualityMap(forward, inverse=inverse, nu=1.0, name="schrodinger_group", meta=meta)


def build_named_map(name, **params):
    """Construct a catalog transformation by name.

    dark_energy: phi (clock expression or 1-field), n, optional
    phi_inverse and u_probe.  em_field: phi, h (constant spatial matrix),
    optional phi_inverse/u_probe.  dirac_gravity: a, b, c, d, n.
    schrodinger_group: element (or rotation/boost/translation/clock/center
    blocks).
    """
    try:
        if name == "dark_energy":
            return _clock_reparameterization_map("dark_energy", params, None)
        if name == "em_field":
            h = _constant_matrix(params.pop("h"), "spatial metric")
            return _clock_reparameterization_map("em_field", params, h)
        if name == "dirac_gravity":
            return _dirac_gravity_map(params)
        if name == "schrodinger_group":
            return _schrodinger_map(params)
    except KeyError as err:
        raise MapError("missing parameter %s for %r" % (err, name)) from None
    raise MapError("unknown catalog map %r (have %s)" % (name, sorted(CATALOG)))


def _require_flat_spatial(system, name):
    for i in range(system.n):
        for j in range(system.n):
            c = system.h_inv.entry(i, j).constant_value
            if c is None or abs(c - (1.0 if i == j else 0.0)) > 1e-12:
                raise MapError("%s needs a flat unit spatial block" % name)


def _require_spatial_matrix(system, hmat, name):
    n = system.n
    vals = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            c = system.h_inv.entry(i, j).constant_value
            if c is None:
                raise MapError("%s needs a constant spatial block" % name)
            vals[i, j] = c
    if np.max(np.abs(vals @ hmat - np.eye(n))) > 1e-10:
        raise MapError("system spatial metric does not match the map's h for %s" % name)


def _require_scalar_only(system, name):
    if any(not a.is_identically_zero for a in system.A):
        raise MapError("%s maps scalar-potential systems only" % name)


def predicted_dual_fields(name, params, barred):
    """Closed-form dual data for a catalog map applied to the given system.

    `barred` is the system being transformed (a NaturalSystem, or a lifted
    system whose base is used); the returned fields live on the source
    coordinates of the named map and must agree with extract_ed_form run
    on the same pair.
    """
    system = getattr(barred, "system", barred)
    dmap = build_named_map(name, **dict(params))
    n = dmap.meta["n"]
    N = n + 2
    if system.n != n:
        raise MapError(
            "system has %d spatial dimensions, map %r has %d" % (system.n, name, n)
        )
    e_bar = float(system.e)
    inner = list(dmap.forward[:n]) + [dmap.forward[n] * (-1.0 / e_bar)]
    omega2 = dmap.meta["omega2"]
    if name == "dark_energy":
        _require_flat_spatial(system, name)
        _require_scalar_only(system, name)
        V = omega2 * system.V.compose(inner) + 0.25 * (
            dmap.meta["schwarzian"] * dmap.meta["quadratic_form"]
        )
        return EDExtraction(omega2, MatrixField.identity(n, N), V, (), 0.0)
    if name == "em_field":
        hmat = dmap.meta["h_matrix"]
        _require_spatial_matrix(system, hmat, name)
        sigma = dmap.meta["sigma"]
        rho = dmap.meta["rho"]
        curv = dmap.meta["clock_curvature"]
        coupling = _fsum(
            [
                ScalarField.coordinate(i, N) * a.compose(inner)
                for i, a in enumerate(system.A)
            ],
            N,
        )
        V = (
            omega2 * system.V.compose(inner)
            - (curv / (2.0 * rho)) * coupling
            + 0.25 * (dmap.meta["schwarzian"] * dmap.meta["quadratic_form"])
        )
        A = tuple((sigma * rho) * a.compose(inner) for a in system.A)
        h = MatrixField.from_entries(
            [
                [ScalarField.constant(float(hmat[i, j]), N) for j in range(n)]
                for i in range(n)
            ]
        )
        return EDExtraction(omega2, h, V, A, 0.0)
    if name == "dirac_gravity":
        _require_flat_spatial(system, name)
        _require_scalar_only(system, name)
        V = omega2 * system.V.compose(inner)
        return EDExtraction(omega2, MatrixField.identity(n, N), V, (), 0.0)
    if name == "schrodinger_group":
        _require_flat_spatial(system, name)
        _require_scalar_only(system, name)
        if not system.V.is_identically_zero:
            for k in range(3):
                args = [0.1 + 0.2 * k + 0.05 * i for i in range(n)] + [0.3 * k]
                if abs(float(system.V(*args))) > 1e-13:
                    raise MapError("schrodinger_group needs a free system (zero potential)")
        return EDExtraction(
            omega2, MatrixField.identity(n, N), ScalarField.zero(N), (), 0.0
        )
    raise MapError("unknown catalog map %r" % name)


def map_phase_trajectory(dmap, traj, direction="forward"):
    """Push a trajectory through the map, point by point.

    Momenta ride along contravariantly (solved from J^T), so quadratic
    Hamiltonians keep their values up to the conformal factor of the
    pullback.  The parameter grid is retained, and every dense segment is
    wrapped with the same point transform so sampling and reparameterizing
    the mapped curve still work.  Hamiltonian readouts do not survive.
    """
    from .dynamics import Trajectory

    if direction not in ("forward", "inverse"):
        raise MapError("direction must be 'forward' or 'inverse'")
    states = np.asarray(traj.states, dtype=float)
    momenta = np.asarray(traj.momenta, dtype=float)
    if states.shape[1] != dmap.dim:
        raise MapError(
            "trajectory has %d coordinates, map has %d" % (states.shape[1], dmap.dim)
        )
    out_y = np.empty_like(states)
    out_p = np.empty_like(momenta)
    guess = None
    for k in range(states.shape[0]):
        if direction == "forward":
            y = states[k]
            out_y[k] = dmap.map_point(y)
            J = dmap.jacobian(y)
            try:
                out_p[k] = np.linalg.solve(J.T, momenta[k])
            except np.linalg.LinAlgError:
                raise MapError("map is not invertible at sample %d" % k) from None
        else:
            y = dmap.invert_point(states[k], guess=guess)
            guess = y
            out_y[k] = y
            out_p[k] = dmap.jacobian(y).T @ momenta[k]
    dense = None
    if traj.dense is not None:
        N = states.shape[1]
        lams = np.asarray(traj.lambdas, dtype=float)
        dense = []
        for left, right, fn in traj.dense:
            # Newton warm start for the inverse branch: the already-inverted
            # accepted node nearest the segment's left edge.
            k0 = int(np.clip(np.searchsorted(lams, left), 0, len(lams) - 1))
            dense.append(
                (left, right, _mapped_segment(dmap, fn, N, direction, out_y[k0]))
            )
    return Trajectory(
        lambdas=np.array(traj.lambdas, dtype=float),
        states=out_y,
        momenta=out_p,
        ham_values=None,
        max_abs_hamiltonian=float("nan"),
        n_steps=traj.n_steps,
        n_projections=traj.n_projections,
        dense=dense,
        quadrature_error=traj.quadrature_error,
    )


def _mapped_segment(dmap, fn, N, direction, inverse_guess):
    if direction == "forward":

        def wrapped(lam):
            z = np.asarray(fn(lam), dtype=float)
            y = z[:N]
            yb = dmap.map_point(y)
            pb = np.linalg.solve(dmap.jacobian(y).T, z[N:])
            return np.concatenate([yb, pb])

    else:

        def wrapped(lam):
            z = np.asarray(fn(lam), dtype=float)
            y = dmap.invert_point(z[:N], guess=inverse_guess)
            return np.concatenate([y, dmap.jacobian(y).T @ z[N:]])

    return wrapped
