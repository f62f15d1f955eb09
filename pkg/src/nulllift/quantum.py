"""Pointwise conformal-Laplacian machinery for null lifts.

The operator implemented here is the curvature-coupled Laplacian

    L = div grad - (N-2)/(4(N-1)) R,

whose kernel is stable under conformal rescaling of the metric once
wavefunctions are rescaled with the weight (N-2)/2. All checks are
pointwise operator identities; nothing is solved on a grid.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fields import ScalarField
from .geometry import Metric, christoffel_lc, conformal_rescale, curvature


@dataclass
class YamabeContext:
    """A metric plus the physical constants of the potential readout."""

    metric: Metric
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if self.metric.dim < 3:
            raise DomainError(
                "curvature coupling degenerates below dimension 3 (got %d)"
                % self.metric.dim
            )
        self.hbar = float(self.hbar)
        self.mass = float(self.mass)
        if self.hbar <= 0.0 or self.mass <= 0.0:
            raise DomainError("hbar and mass must be positive")

    @property
    def dim(self):
        return self.metric.dim

    @property
    def curvature_coupling(self):
        N = self.dim
        return (N - 2.0) / (4.0 * (N - 1.0))

    @property
    def left_weight(self):
        """Rescaling exponent on the operator's output side.

        Calibrated by the constant-factor test: a constant rescaling c
        must scale the whole operator by c^-2, which pins the exponent
        to (N+2)/2. The symmetric-looking choice (N-2)/2 fails that
        check and is deliberately not the default.
        """
        return (self.dim + 2.0) / 2.0

    @property
    def right_weight(self):
        return (self.dim - 2.0) / 2.0


def laplace_beltrami(metric, psi):
    """Prepared evaluator for the scalar Laplacian of one field."""
    N = metric.dim
    if psi.arity != N:
        raise DomainError("field arity %d != metric dimension %d" % (psi.arity, N))
    grads = [psi.partial(a) for a in range(N)]
    hess = [(a, b, grads[a].partial(b)) for a in range(N) for b in range(a, N)]

    def apply(y):
        y = np.asarray(y, dtype=float)
        args = [float(t) for t in y]
        ginv = (
            metric.g_inv(y) if metric.g_inv is not None else metric.inverse_value(y)
        )
        total = 0.0
        for a, b, f in hess:
            w = ginv[a, b] * (1.0 if a == b else 2.0)
            if w != 0.0:
                total += w * float(f(*args))
        contracted = np.einsum("ab,cab->c", ginv, christoffel_lc(metric, y))
        for c in range(N):
            if contracted[c] != 0.0:
                total -= contracted[c] * float(grads[c](*args))
        return float(total)

    return apply


def yamabe_operator(ctx, psi):
    """Prepared evaluator for the curvature-coupled Laplacian of one field."""
    lap = laplace_beltrami(ctx.metric, psi)
    coupling = ctx.curvature_coupling

    def apply(y):
        args = [float(t) for t in np.asarray(y, dtype=float)]
        R = curvature(ctx.metric, y).scalar
        return lap(y) - coupling * R * float(psi(*args))

    return apply


def yamabe_apply(ctx, psi, y):
    """Curvature-coupled Laplacian of psi at a single point."""
    return yamabe_operator(ctx, psi)(y)


def _field_power(omega, w):
    """omega**w as a field; integer exponents avoid the log branch."""
    if float(w) == int(w):
        k = int(w)
        if k == 0:
            return ScalarField.constant(1.0, omega.arity)
        out = omega
        for _ in range(abs(k) - 1):
            out = out * omega
        return out if k > 0 else 1.0 / out
    return (omega.apply("log") * float(w)).apply("exp")


def _as_rescaling(omega_or_map, arity):
    """Accept a conformal factor directly, as a constant, or off a map."""
    meta = getattr(omega_or_map, "meta", None)
    if isinstance(meta, dict) and "omega2" in meta:
        omega_or_map = meta["omega2"].apply("sqrt")
    if isinstance(omega_or_map, (int, float)):
        omega_or_map = ScalarField.constant(float(omega_or_map), arity)
    if not isinstance(omega_or_map, ScalarField):
        raise DomainError("rescaling must be a scalar field, a number, or a map")
    if omega_or_map.arity != arity:
        raise DomainError(
            "rescaling arity %d != metric dimension %d" % (omega_or_map.arity, arity)
        )
    return omega_or_map


def yamabe_covariance_residual(ctx, omega, psi, sample, w_left=None):
    """Worst mismatch of the operator's rescaling law over the sample.

    Compares the operator of the rescaled metric applied to psi against
    omega**(-w_left) times the original operator applied to
    omega**((N-2)/2) * psi, with both sides computed independently.
    """
    omega = _as_rescaling(omega, ctx.dim)
    if w_left is None:
        w_left = ctx.left_weight
    barred = YamabeContext(conformal_rescale(ctx.metric, omega), ctx.hbar, ctx.mass)
    lhs = yamabe_operator(barred, psi)
    rhs = yamabe_operator(ctx, _field_power(omega, ctx.right_weight) * psi)
    worst = 0.0
    for y in sample:
        args = [float(t) for t in np.asarray(y, dtype=float)]
        w = float(omega(*args))
        if not w > 0.0:
            raise DomainError("conformal factor %r is not positive at %r" % (w, args))
        worst = max(worst, abs(lhs(y) - w ** (-float(w_left)) * rhs(y)))
    return worst


def corrected_potential(ctx, U, y):
    """Scalar potential with the curvature correction folded in."""
    args = [float(t) for t in np.asarray(y, dtype=float)]
    N = ctx.dim
    R = curvature(ctx.metric, y).scalar
    return float(U(*args)) + (ctx.hbar**2 / ctx.mass) * ((N - 2.0) / (8.0 * (N - 1.0))) * R


def kernel_transport_check(ctx, omega_or_map, psi, sample):
    """Residual of a kernel element after transport to the rescaled metric.

    psi is rescaled with the weight -(N-2)/2 and fed to the operator of
    the rescaled metric; for an exact kernel element the result vanishes
    identically, so the returned maximum is pure transport error.
    """
    omega = _as_rescaling(omega_or_map, ctx.dim)
    barred = YamabeContext(conformal_rescale(ctx.metric, omega), ctx.hbar, ctx.mass)
    moved = _field_power(omega, -ctx.right_weight) * psi
    op = yamabe_operator(barred, moved)
    worst = 0.0
    for y in sample:
        worst = max(worst, abs(op(y)))
    return worst
