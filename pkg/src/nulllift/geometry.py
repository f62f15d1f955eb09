"""Metrics, Weyl connections, curvature, and Schwarzian machinery.

Conventions, fixed once for the whole package:

* Christoffel symbols are indexed ``gamma[a, b, c] = Gamma^a_{bc}``.
* The curvature tensor is ``R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
  + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}`` and the Ricci
  tensor is the (a, c) trace, ``R_{bd} = R^a_{bad}``; the round unit
  2-sphere then has scalar curvature +2.

All pointwise quantities are assembled from exact jet derivatives of the
metric entry fields; nothing here uses finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularMetricError
from .fields import MatrixField, ScalarField, derivative

_INVERSE_CHECK_TOL = 1e-10


@dataclass
class Metric:
    """A pseudo-Riemannian metric given by a symmetric field of components.

    ``g_inv`` may carry a closed-form inverse (lift constructors provide
    one); when absent it is derived on demand by a jet-aware Gauss-Jordan
    pass so that derivatives still flow through it.
    """

    dim: int
    g: MatrixField
    g_inv: MatrixField | None = None

    def __post_init__(self):
        if self.g.dim != self.dim:
            raise DomainError("metric dim %d != component dim %d" % (self.dim, self.g.dim))
        if self.g_inv is not None and self.g_inv.dim != self.dim:
            raise DomainError("inverse components have wrong dimension")

    @property
    def arity(self):
        return self.g.arity

    def inverse_field(self):
        if self.g_inv is None:
            self.g_inv = self.g.inverse()
        return self.g_inv

    def value(self, y):
        m = self.g(y)
        if not np.all(np.isfinite(m)):
            raise SingularMetricError("metric has non-finite entries at %r" % (list(y),))
        return m

    def inverse_value(self, y):
        m = self.value(y)
        try:
            inv = np.linalg.inv(m)
        except np.linalg.LinAlgError as err:
            raise SingularMetricError("metric is singular at %r" % (list(y),)) from err
        if np.max(np.abs(m @ inv - np.eye(self.dim))) > _INVERSE_CHECK_TOL:
            raise SingularMetricError(
                "metric too ill-conditioned at %r (inverse check failed)" % (list(y),)
            )
        return inv

    def first_derivs(self, y):
        """dg[a, b, c] = d_a g_bc, exact."""
        n = self.dim
        dg = np.empty((n, n, n))
        for b in range(n):
            for c in range(b, n):
                f = self.g.entry(b, c)
                for a in range(n):
                    v = derivative(f, y, (a,))
                    dg[a, b, c] = v
                    dg[a, c, b] = v
        return dg

    def second_derivs(self, y):
        """ddg[a, b, c, d] = d_a d_b g_cd, exact."""
        n = self.dim
        ddg = np.empty((n, n, n, n))
        for c in range(n):
            for d in range(c, n):
                f = self.g.entry(c, d)
                for a in range(n):
                    for b in range(a, n):
                        v = derivative(f, y, (a, b))
                        ddg[a, b, c, d] = v
                        ddg[b, a, c, d] = v
                        ddg[a, b, d, c] = v
                        ddg[b, a, d, c] = v
        return ddg


def conformal_rescale(metric, omega):
    """The metric Omega^2 g, with the inverse carried along."""
    omega2 = omega * omega
    return rescale_by_factor(metric, omega2)


def rescale_by_factor(metric, omega2):
    g = metric.g.scale(omega2)
    g_inv = None
    if metric.g_inv is not None:
        g_inv = metric.g_inv.scale(1.0 / omega2)
    return Metric(metric.dim, g, g_inv)


@dataclass
class WeylGauge:
    """A metric plus the one-form of an (exact or not) Weyl structure."""

    metric: Metric
    phi: tuple

    def __post_init__(self):
        self.phi = tuple(self.phi)
        if len(self.phi) != self.metric.dim:
            raise DomainError("Weyl one-form needs %d components" % self.metric.dim)

    @staticmethod
    def fiducial(metric):
        """The gauge with vanishing one-form."""
        zero = ScalarField.zero(metric.arity)
        return WeylGauge(metric, (zero,) * metric.dim)

    def phi_values(self, y):
        args = [float(v) for v in y]
        return np.array([float(p(*args)) for p in self.phi])


def christoffel_lc(metric, y):
    """Levi-Civita symbols gamma[a, b, c] = Gamma^a_{bc} at a point."""
    ginv = metric.inverse_value(y)
    dg = metric.first_derivs(y)
    term = np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg
    return 0.5 * np.einsum("ad,dbc->abc", ginv, term)


def christoffel_weyl(gauge, y):
    """Connection symbols of the Weyl structure (gauge-invariant)."""
    m = gauge.metric
    g = m.value(y)
    ginv = m.inverse_value(y)
    phi = gauge.phi_values(y)
    phi_up = ginv @ phi
    n = m.dim
    gamma = christoffel_lc(m, y)
    eye = np.eye(n)
    gamma = gamma + np.einsum("ab,c->cab", g, phi_up)
    gamma = gamma - np.einsum("ca,b->cab", eye, phi)
    gamma = gamma - np.einsum("cb,a->cab", eye, phi)
    return gamma


def gauge_transform(gauge, omega):
    """Move along the gauge orbit: (g, phi) -> (Omega^2 g, phi + d log Omega)."""
    if omega.arity != gauge.metric.arity:
        raise DomainError("gauge factor arity mismatch")
    new_metric = conformal_rescale(gauge.metric, omega)
    new_phi = tuple(
        gauge.phi[a] + omega.partial(a) / omega for a in range(gauge.metric.dim)
    )
    return WeylGauge(new_metric, new_phi)


@dataclass
class CurvaturePack:
    """Curvature of a metric at a point, in the package's sign convention."""

    point: np.ndarray
    riemann: np.ndarray  # R^a_{bcd}
    ricci: np.ndarray
    scalar: float
    trace_free: np.ndarray


def curvature(metric, y):
    n = metric.dim
    g = metric.value(y)
    ginv = metric.inverse_value(y)
    dg = metric.first_derivs(y)
    ddg = metric.second_derivs(y)

    # T_dbc = d_b g_dc + d_c g_db - d_d g_bc ; Gamma^a_bc = 1/2 g^{ad} T_dbc
    T = np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg
    gamma = 0.5 * np.einsum("ad,dbc->abc", ginv, T)

    dginv = -np.einsum("am,emn,nd->ead", ginv, dg, ginv)
    dT = (
        np.einsum("ebdc->edbc", ddg)
        + np.einsum("ecdb->edbc", ddg)
        - np.einsum("edbc->edbc", ddg)
    )
    dgamma = 0.5 * np.einsum("ead,dbc->eabc", dginv, T) + 0.5 * np.einsum(
        "ad,edbc->eabc", ginv, dT
    )

    riem = (
        np.einsum("cadb->abcd", dgamma)
        - np.einsum("dacb->abcd", dgamma)
        + np.einsum("ace,edb->abcd", gamma, gamma)
        - np.einsum("ade,ecb->abcd", gamma, gamma)
    )
    ricci = np.einsum("abad->bd", riem)
    scalar = float(np.einsum("bd,bd->", ginv, ricci))
    trace_free = ricci - (scalar / n) * g
    return CurvaturePack(np.asarray(y, dtype=float), riem, ricci, scalar, trace_free)


def schwarzian_tensor(metric, varphi, y):
    """The trace-free Hessian-type tensor of a scalar.

    B_mn = Hess(phi)_mn - d_m phi d_n phi - (1/N)(lap phi - |d phi|^2) g_mn,
    with the Levi-Civita connection of `metric`. Traceless by construction.
    """
    n = metric.dim
    g = metric.value(y)
    ginv = metric.inverse_value(y)
    gamma = christoffel_lc(metric, y)
    dphi = np.array([derivative(varphi, y, (a,)) for a in range(n)])
    hess = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            v = derivative(varphi, y, (a, b)) - float(np.dot(gamma[:, a, b], dphi))
            hess[a, b] = v
            hess[b, a] = v
    grad_sq = float(dphi @ ginv @ dphi)
    lap = float(np.einsum("ab,ab->", ginv, hess))
    return hess - np.outer(dphi, dphi) - ((lap - grad_sq) / n) * g


def schwarzian_derivative(varphi, u):
    """S(phi) = phi'''/phi' - (3/2)(phi''/phi')^2 for a one-variable map."""
    if varphi.arity != 1:
        raise DomainError("schwarzian_derivative needs a one-variable field")
    d1 = derivative(varphi, [u], (0,))
    if d1 == 0.0:
        raise DomainError("degenerate reparameterization: phi'(%r) = 0" % (u,))
    d2 = derivative(varphi, [u], (0, 0))
    d3 = derivative(varphi, [u], (0, 0, 0))
    r = d2 / d1
    return d3 / d1 - 1.5 * r * r


def is_mobius(varphi, sample, tol=1e-10):
    """Whether S(phi) vanishes on the sample; returns (verdict, max |S|)."""
    worst = 0.0
    for u in sample:
        worst = max(worst, abs(schwarzian_derivative(varphi, float(u))))
    return worst <= tol, worst


@dataclass
class TensorField:
    """A totally covariant tensor with scalar-field components."""

    dim: int
    rank: int
    components: np.ndarray = field(repr=False)  # object array of ScalarField

    @staticmethod
    def from_components(nested, dim, rank):
        comps = np.empty((dim,) * rank, dtype=object)
        if rank == 0:
            comps[()] = nested
        else:
            it = np.nditer(comps, flags=["multi_index", "refs_ok"], op_flags=["writeonly"])
            for _ in it:
                idx = it.multi_index
                v = nested
                for k in idx:
                    v = v[k]
                comps[idx] = v
        return TensorField(dim, rank, comps)

    @staticmethod
    def from_metric(metric):
        comps = np.empty((metric.dim, metric.dim), dtype=object)
        for i in range(metric.dim):
            for j in range(metric.dim):
                comps[i, j] = metric.g.entry(i, j)
        return TensorField(metric.dim, 2, comps)

    def values(self, y):
        args = [float(v) for v in y]
        out = np.empty((self.dim,) * self.rank)
        for idx in np.ndindex(*out.shape):
            out[idx] = float(self.components[idx](*args))
        return out


def scale_covariant_derivative(gauge, tensor, weight, y):
    """Weight-adjusted Weyl derivative D = nabla^W - weight * phi (x) .

    Returns an array with the derivative index first. For the metric itself
    at weight 2 this vanishes identically.
    """
    n = gauge.metric.dim
    gamma = christoffel_weyl(gauge, y)
    phi = gauge.phi_values(y)
    rank = tensor.rank
    vals = tensor.values(y)
    shape = (n,) + (n,) * rank
    out = np.empty(shape)
    for m in range(n):
        for idx in np.ndindex(*(n,) * rank):
            d = derivative_component(tensor, idx, y, m)
            for k in range(rank):
                # subtract Gamma^c_{m b_k} F[... c ...]
                for c in range(n):
                    jdx = idx[:k] + (c,) + idx[k + 1 :]
                    d -= gamma[c, m, idx[k]] * vals[jdx]
            out[(m,) + idx] = d - weight * phi[m] * vals[idx]
    return out


def derivative_component(tensor, idx, y, direction):
    return derivative(tensor.components[idx], y, (direction,))


def trace_free_ricci_change(metric, varphi, sample):
    """Max residual of the conformal-change law for the trace-free Ricci.

    For gbar = e^{2 phi} g the identity reads
        R0(g) = R0(gbar) + (N - 2) B_g(phi),
    with all three terms evaluated at the same coordinates.
    """
    n = metric.dim
    exp2phi = (2.0 * varphi).apply("exp")
    barred = rescale_by_factor(metric, exp2phi)
    worst = 0.0
    for y in sample:
        r0 = curvature(metric, y).trace_free
        r0_bar = curvature(barred, y).trace_free
        b = schwarzian_tensor(metric, varphi, y)
        resid = r0 - (r0_bar + (n - 2) * b)
        worst = max(worst, float(np.max(np.abs(resid))))
    return worst
