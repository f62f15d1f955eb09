"""Conformal Killing tensors, conserved contractions, and weight bookkeeping.

A rank-p symmetric tensor K with upper indices is conformal Killing when the
totally symmetrized covariant derivative of its lowered form lies in the
subspace spanned by sym(g x T) for some symmetric rank-(p-1) tensor T. The
residual computed here subtracts the best such T pointwise by least squares,
so no explicit trace formula for T is ever committed to. Full contraction
with the momenta is then constant along null geodesics, and since both the
upper components and the canonical momenta are untouched by a conformal
rescaling, the conserved value is invariant under change of scale.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .fields import ScalarField
from .geometry import christoffel_lc


def _canonical(idx):
    return tuple(sorted(idx))


@dataclass
class KillingTensorField:
    """Totally symmetric upper-index tensor of scalar fields.

    Components are stored once per sorted multi-index. `weight` records the
    conformal weight acquired by the lowered-index form under rescalings;
    the stored upper components never change.
    """

    dim: int
    rank: int
    store: dict = field(repr=False)
    weight: float = 0.0

    def __post_init__(self):
        if self.rank < 1:
            raise DomainError("tensor rank must be at least 1")
        for idx, f in self.store.items():
            if idx != _canonical(idx) or len(idx) != self.rank:
                raise DomainError("component index %r is not canonical" % (idx,))
            if f.arity != self.dim:
                raise DomainError("component fields must have arity %d" % self.dim)

    @classmethod
    def from_vector(cls, components, weight=0.0):
        components = list(components)
        dim = len(components)
        store = {
            (i,): f for i, f in enumerate(components) if not f.is_identically_zero
        }
        return cls(dim, 1, store, weight)

    @classmethod
    def from_matrix(cls, mf, weight=0.0):
        """Rank-2 tensor from a symmetric MatrixField."""
        store = {}
        for i in range(mf.dim):
            for j in range(i, mf.dim):
                f = mf.entry(i, j)
                if not f.is_identically_zero:
                    store[(i, j)] = f
        return cls(mf.dim, 2, store, weight)

    def component(self, idx):
        f = self.store.get(_canonical(idx))
        return f if f is not None else ScalarField.zero(self.dim)

    def values(self, y):
        args = [float(v) for v in y]
        out = np.zeros((self.dim,) * self.rank)
        for idx, f in self.store.items():
            v = float(f(*args))
            for perm in set(itertools.permutations(idx)):
                out[perm] = v
        return out

    def partial_values(self, y):
        """d[a, i1..ip] = (d/dy^a) K^{i1..ip}, by exact differentiation."""
        args = [float(v) for v in y]
        out = np.zeros((self.dim,) * (self.rank + 1))
        for idx, f in self.store.items():
            for a in range(self.dim):
                df = f.partial(a)
                if df.constant_value == 0.0:
                    continue
                v = float(df(*args))
                for perm in set(itertools.permutations(idx)):
                    out[(a,) + perm] = v
        return out


def translation_killing(dim, index):
    """The coordinate-translation vector d/dy^index as a rank-1 tensor."""
    if not 0 <= index < dim:
        raise DomainError("index out of range")
    return KillingTensorField(dim, 1, {(index,): ScalarField.constant(1.0, dim)})


def rotation_killing(dim, i, j):
    """The rotation generator y^i d_j - y^j d_i."""
    if i == j or not (0 <= i < dim and 0 <= j < dim):
        raise DomainError("need two distinct coordinate indices")
    store = {
        _canonical((j,)): ScalarField.coordinate(i, dim),
        _canonical((i,)): -1.0 * ScalarField.coordinate(j, dim),
    }
    return KillingTensorField(dim, 1, store)


def inverse_metric_killing(metric):
    """g^{-1} as a rank-2 tensor; conformal Killing for its own metric."""
    g_inv = metric.g_inv if metric.g_inv is not None else metric.inverse_field()
    return KillingTensorField.from_matrix(g_inv)


def _symmetrize(T):
    n = T.ndim
    if n == 1:
        return T
    acc = np.zeros_like(T)
    perms = list(itertools.permutations(range(n)))
    for perm in perms:
        acc += np.transpose(T, perm)
    return acc / float(len(perms))


def killing_residual(metric, K, y):
    """Distance of sym(grad K) from the conformal-Killing subspace at y.

    Returns the Frobenius norm of sym(nabla K_lowered) minus its least-squares
    projection onto {sym(g x T)}; values at roundoff level certify K as a
    conformal Killing tensor at the point.
    """
    y = np.asarray(y, dtype=float)
    N = metric.dim
    if K.dim != N:
        raise DomainError("tensor dimension %d != metric dimension %d" % (K.dim, N))
    gamma = christoffel_lc(metric, y)
    Kv = K.values(y)
    cov = K.partial_values(y)
    for slot in range(K.rank):
        # cov[a, ..i_k..] += Gamma^{i_k}_{a c} K^{..c..}
        T = np.tensordot(gamma, Kv, axes=([2], [slot]))
        T = np.moveaxis(T, 1, 0)  # (a, b, rest)
        cov = cov + np.moveaxis(T, 1, slot + 1)
    g = metric.value(y)
    low = cov
    for slot in range(1, K.rank + 1):
        low = np.moveaxis(np.tensordot(g, low, axes=([1], [slot])), 0, slot)
    S = _symmetrize(low)

    basis = []
    for t_idx in itertools.combinations_with_replacement(range(N), K.rank - 1):
        E = np.zeros((N,) * (K.rank - 1))
        for perm in set(itertools.permutations(t_idx)):
            E[perm] = 1.0
        basis.append(_symmetrize(np.multiply.outer(g, E)).ravel())
    A = np.column_stack(basis)
    coef, *_ = np.linalg.lstsq(A, S.ravel(), rcond=None)
    return float(np.linalg.norm(S.ravel() - A @ coef))


def conserved_value(K, pt):
    """Full contraction C = K^{M1..Mp} p_{M1} ... p_{Mp}."""
    y = np.asarray(pt.y, dtype=float)
    p = np.asarray(pt.p, dtype=float)
    out = K.values(y)
    for _ in range(K.rank):
        out = out @ p
    return float(out)


@dataclass
class ConservedQuantity:
    source: KillingTensorField
    name: str = ""

    def __call__(self, pt):
        return conserved_value(self.source, pt)


def values_along(traj, K):
    args_rows = traj.states
    out = np.empty(len(args_rows))
    for k in range(len(args_rows)):
        v = K.values(traj.states[k])
        for _ in range(K.rank):
            v = v @ traj.momenta[k]
        out[k] = v
    return out


def drift_along(traj, K):
    """max_k |C(point_k) - C(point_0)| over the stored samples."""
    vals = values_along(traj, K)
    return float(np.max(np.abs(vals - vals[0])))


def rescale_killing(K, omega, p):
    """Bookkeeping for the change of scale g -> Omega^2 g.

    The upper-index components are scale-invariant, so the returned tensor
    shares them bit for bit; only the recorded weight of the lowered form
    moves, by 2p. Conformal Killing tensors stay conformal Killing under
    the rescaled metric, which callers can re-check with killing_residual.
    """
    p = int(p)
    if p != K.rank:
        raise DomainError("weight argument p must equal the tensor rank %d" % K.rank)
    if not isinstance(omega, ScalarField) or omega.arity != K.dim:
        raise DomainError("omega must be a scalar field over the lift coordinates")
    return KillingTensorField(K.dim, K.rank, K.store, K.weight + 2.0 * p)


def lowered_values(metric, K, y):
    """Lowered-index components g...g K at a point (for weight checks)."""
    g = metric.value(np.asarray(y, dtype=float))
    out = K.values(y)
    for slot in range(K.rank):
        out = np.moveaxis(np.tensordot(g, out, axes=([1], [slot])), 0, slot)
    return out
