"""Scalar and matrix fields with exact forward-mode derivatives.

A :class:`ScalarField` wraps an evaluator of a fixed arity that accepts
floats or jets in any mix. Fields parsed from expression text keep their
syntax tree, so :meth:`ScalarField.partial` can differentiate symbolically;
fields backed by opaque callables are differentiated by seeding one of the
three jet generators instead. Either way the result is again a field, and
pointwise derivative queries go through :func:`derivative`.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import expressions as ex
from . import jets as jm
from .errors import DomainError, SingularMetricError


def _free_slot(args):
    used = 0
    for a in args:
        if isinstance(a, jm.Jet):
            used |= a.generator_mask()
    for slot in range(jm.MAX_GENERATORS):
        if not used & (1 << slot):
            return slot
    raise DomainError(
        "derivative order exceeds the supported jet order (%d generators in use)"
        % jm.MAX_GENERATORS
    )


def _layer_extract(value, slot):
    """Coefficient layer of generator `slot`, as a jet over the others."""
    if not isinstance(value, jm.Jet):
        return 0.0
    bit = 1 << slot
    out = {}
    for mask, c in value.coeffs.items():
        if mask & bit:
            out[mask & ~bit] = c
    if all(k == 0 for k in out):
        return out.get(0, 0.0)
    out.setdefault(0, 0.0)
    return jm.Jet(out)


def _substitute(node, replacements):
    if isinstance(node, ex.Var):
        return replacements[node.index]
    if isinstance(node, ex.Num):
        return node
    if isinstance(node, ex.Neg):
        return ex.Neg(_substitute(node.operand, replacements))
    if isinstance(node, ex.Call):
        return ex.Call(node.name, _substitute(node.argument, replacements))
    if isinstance(node, ex._AbsDeriv):
        return ex._AbsDeriv(_substitute(node.argument, replacements))
    if isinstance(node, ex._SignDeriv):
        return ex._SignDeriv(_substitute(node.argument, replacements))
    return type(node)(
        _substitute(node.left, replacements), _substitute(node.right, replacements)
    )


class ScalarField:
    """A smooth scalar function of `arity` coordinates.

    Parameters
    ----------
    arity : int
        Number of arguments the evaluator takes.
    evaluator : callable
        Maps `arity` floats-or-jets to a float-or-jet.
    provenance : str
        Human-readable origin (expression text, builtin name, or a
        description of how the field was assembled).
    ast : expressions.Node, optional
        Retained syntax tree for symbolic derivatives.
    constant_value : float, optional
        Set when the field is known to be a constant.
    """

    __slots__ = ("arity", "evaluator", "provenance", "ast", "constant_value")

    def __init__(self, arity, evaluator, provenance="<field>", ast=None, constant_value=None):
        self.arity = arity
        self.evaluator = evaluator
        self.provenance = provenance
        self.ast = ast
        self.constant_value = constant_value

    # -- constructors -------------------------------------------------------

    @staticmethod
    def from_expression(text, var_names):
        node = ex.parse(text, var_names)
        return ScalarField(
            len(var_names),
            lambda *args: node.eval(args),
            provenance=text,
            ast=node,
            constant_value=node.value if isinstance(node, ex.Num) else None,
        )

    @staticmethod
    def constant(value, arity):
        node = ex.Num(value)
        return ScalarField(
            arity,
            lambda *args: node.value,
            provenance=repr(float(value)),
            ast=node,
            constant_value=float(value),
        )

    @staticmethod
    def zero(arity):
        return ScalarField.constant(0.0, arity)

    @staticmethod
    def coordinate(index, arity, name=None):
        name = name or ("x%d" % index)
        node = ex.Var(index, name)
        return ScalarField(arity, lambda *args: args[index], provenance=name, ast=node)

    @staticmethod
    def from_function(fn, arity, name="<function>"):
        return ScalarField(arity, fn, provenance=name)

    # -- basic protocol ------------------------------------------------------

    @property
    def is_identically_zero(self):
        return self.constant_value == 0.0

    def __call__(self, *args):
        if len(args) != self.arity:
            raise DomainError(
                "field %r takes %d arguments, got %d"
                % (self.provenance, self.arity, len(args))
            )
        return self.evaluator(*args)

    def __repr__(self):
        return "ScalarField(%d, %r)" % (self.arity, self.provenance)

    def to_text(self):
        if self.ast is None:
            raise DomainError("field %r has no expression form" % self.provenance)
        return self.ast.text()

    # -- calculus ------------------------------------------------------------

    def partial(self, index):
        """The field d(self)/d(coordinate index), exact."""
        if not 0 <= index < self.arity:
            raise DomainError("partial index %d out of range" % index)
        if self.ast is not None:
            node = self.ast.deriv(index)
            return ScalarField(
                self.arity,
                lambda *args: node.eval(args),
                provenance="d%d(%s)" % (index, self.provenance),
                ast=node,
                constant_value=node.value if isinstance(node, ex.Num) else None,
            )
        base = self.evaluator

        def ev(*args):
            slot = _free_slot(args)
            seed = jm.Jet({1 << slot: 1.0})
            jargs = list(args)
            jargs[index] = seed + jargs[index]
            return _layer_extract(base(*jargs), slot)

        return ScalarField(self.arity, ev, provenance="d%d(%s)" % (index, self.provenance))

    def compose(self, inner):
        """self(g_1(x), ..., g_arity(x)) as a field over the inner arity."""
        inner = list(inner)
        if len(inner) != self.arity:
            raise DomainError(
                "composition needs %d inner fields, got %d" % (self.arity, len(inner))
            )
        arity = inner[0].arity
        if any(g.arity != arity for g in inner):
            raise DomainError("inner fields must share one arity")
        if self.ast is not None and all(g.ast is not None for g in inner):
            node = _substitute(self.ast, [g.ast for g in inner])
            return ScalarField(
                arity,
                lambda *args: node.eval(args),
                provenance="compose(%s)" % self.provenance,
                ast=node,
                constant_value=node.value if isinstance(node, ex.Num) else None,
            )
        evs = [g.evaluator for g in inner]
        outer = self.evaluator

        def ev(*args):
            return outer(*[e(*args) for e in evs])

        return ScalarField(arity, ev, provenance="compose(%s)" % self.provenance)

    def apply(self, fn_name):
        """Apply a named unary function (sin, exp, sqrt, ...) pointwise."""
        fn = ex.FUNCTIONS[fn_name]
        if self.ast is not None:
            node = ex.Call(fn_name, self.ast)
            return ScalarField(
                self.arity,
                lambda *args: node.eval(args),
                provenance="%s(%s)" % (fn_name, self.provenance),
                ast=node,
            )
        base = self.evaluator
        return ScalarField(
            self.arity,
            lambda *args: fn(base(*args)),
            provenance="%s(%s)" % (fn_name, self.provenance),
        )

    # -- algebra -------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, ScalarField):
            if other.arity != self.arity:
                raise DomainError("field arity mismatch (%d vs %d)" % (self.arity, other.arity))
            return other
        return ScalarField.constant(float(other), self.arity)

    def _binary(self, other, op, astop, label):
        other = self._coerce(other)
        prov = "(%s %s %s)" % (self.provenance, label, other.provenance)
        if self.ast is not None and other.ast is not None:
            node = astop(self.ast, other.ast)
            return ScalarField(
                self.arity,
                lambda *args: node.eval(args),
                provenance=prov,
                ast=node,
                constant_value=node.value if isinstance(node, ex.Num) else None,
            )
        f, g = self.evaluator, other.evaluator
        return ScalarField(self.arity, lambda *args: op(f(*args), g(*args)), provenance=prov)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b, ex.add, "+")

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b, ex.sub, "-")

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b, ex.mul, "*")

    __rmul__ = __mul__

    def __truediv__(self, other):
        def op(a, b):
            if jm.real_part(b) == 0.0:
                raise DomainError("division by zero in field %r" % self.provenance)
            return a / b

        return self._binary(other, op, ex.div, "/")

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def __pow__(self, exponent):
        e = float(exponent)
        return self._binary(
            ScalarField.constant(e, self.arity),
            lambda a, b: _pow_value(a, e),
            lambda a, b: ex.pow_(a, b),
            "^",
        )

    def __neg__(self):
        return self._binary(
            ScalarField.zero(self.arity), lambda a, b: -a, lambda a, b: ex.neg(a), "neg"
        )

    def extend(self, new_arity, arg_indices):
        """View this field as a function of more coordinates.

        arg_indices[k] names which new coordinate feeds old argument k.
        """
        arg_indices = tuple(arg_indices)
        if len(arg_indices) != self.arity:
            raise DomainError("need %d argument indices" % self.arity)
        if self.ast is not None:
            repl = [ex.Var(j, "y%d" % j) for j in arg_indices]
            node = _substitute(self.ast, repl)
            return ScalarField(
                new_arity,
                lambda *args: node.eval(args),
                provenance=self.provenance,
                ast=node,
                constant_value=self.constant_value,
            )
        base = self.evaluator
        return ScalarField(
            new_arity,
            lambda *args: base(*[args[j] for j in arg_indices]),
            provenance=self.provenance,
            constant_value=self.constant_value,
        )


def _pow_value(a, e):
    if isinstance(a, jm.Jet):
        return a ** e
    if e == int(e):
        return a ** e
    if a < 0.0:
        raise DomainError("negative base %r with non-integer exponent" % a)
    return a ** e


def parse_scalar_field(text, var_names):
    """Parse expression text into a ScalarField over the named variables."""
    return ScalarField.from_expression(text, list(var_names))


def eval_field(f, y):
    """Evaluate a field at a coordinate tuple."""
    return float(f(*[float(v) for v in y]))


def derivative(f, y, index):
    """Exact mixed partial of `f` at `y` for a multi-index of coordinates.

    `index` lists coordinate positions, one per derivative, up to order 3;
    repeated entries request repeated differentiation. Symmetric in the
    order of entries.
    """
    index = tuple(index)
    order = len(index)
    if order == 0:
        return eval_field(f, y)
    if order > jm.MAX_GENERATORS:
        raise DomainError("derivative order %d exceeds supported order %d" % (order, jm.MAX_GENERATORS))
    for i in index:
        if not 0 <= i < f.arity:
            raise DomainError("coordinate index %d out of range for arity %d" % (i, f.arity))
    args = [jm.Jet.constant(float(v)) for v in y]
    for slot, coord in enumerate(index):
        args[coord] = args[coord] + jm.Jet({1 << slot: 1.0})
    out = f(*args)
    if not isinstance(out, jm.Jet):
        return 0.0
    return out.coeff((1 << order) - 1)


# -- symmetric matrix fields -------------------------------------------------


class MatrixField:
    """A symmetric matrix of scalar fields with shared off-diagonal storage."""

    __slots__ = ("dim", "arity", "_store")

    def __init__(self, dim, arity, store):
        self.dim = dim
        self.arity = arity
        self._store = store  # dict[(i, j) with i <= j] -> ScalarField

    @staticmethod
    def from_entries(entries):
        """Build from a full nested list (upper triangle wins) of fields."""
        dim = len(entries)
        store = {}
        arity = None
        for i in range(dim):
            for j in range(i, dim):
                f = entries[i][j]
                store[(i, j)] = f
                arity = f.arity if arity is None else arity
                if f.arity != arity:
                    raise DomainError("matrix entries must share one arity")
        return MatrixField(dim, arity, store)

    @staticmethod
    def diagonal(fields):
        dim = len(fields)
        arity = fields[0].arity
        store = {}
        for i in range(dim):
            for j in range(i, dim):
                store[(i, j)] = fields[i] if i == j else ScalarField.zero(arity)
        return MatrixField(dim, arity, store)

    @staticmethod
    def identity(dim, arity):
        return MatrixField.diagonal([ScalarField.constant(1.0, arity)] * dim)

    def entry(self, i, j):
        return self._store[(i, j) if i <= j else (j, i)]

    def set_entry(self, i, j, field):
        self._store[(i, j) if i <= j else (j, i)] = field

    def __call__(self, y):
        args = [float(v) for v in y]
        out = np.empty((self.dim, self.dim), dtype=float)
        for (i, j), f in self._store.items():
            v = float(f(*args))
            out[i, j] = v
            out[j, i] = v
        return out

    def values_at(self, args):
        """Entries evaluated at float-or-jet args, as a nested list."""
        rows = [[None] * self.dim for _ in range(self.dim)]
        for (i, j), f in self._store.items():
            v = f(*args)
            rows[i][j] = v
            rows[j][i] = v
        return rows

    def scale(self, factor):
        """Entrywise product with a scalar field."""
        store = {k: factor * f for k, f in self._store.items()}
        return MatrixField(self.dim, self.arity, store)

    def extend(self, new_arity, arg_indices):
        store = {k: f.extend(new_arity, arg_indices) for k, f in self._store.items()}
        return MatrixField(self.dim, new_arity, store)

    def compose(self, inner):
        """Entrywise composition with a common tuple of inner fields."""
        inner = list(inner)
        store = {k: f.compose(inner) for k, f in self._store.items()}
        return MatrixField(self.dim, inner[0].arity, store)

    def inverse(self):
        """The inverse matrix as a field; derivatives flow through it."""
        parent = self
        if self.dim == 1:
            return MatrixField(1, self.arity, {(0, 0): 1.0 / self.entry(0, 0)})
        consts = [
            [self.entry(i, j).constant_value for j in range(self.dim)]
            for i in range(self.dim)
        ]
        if all(v is not None for row in consts for v in row):
            try:
                inv = np.linalg.inv(np.array(consts))
            except np.linalg.LinAlgError:
                raise SingularMetricError("constant matrix is singular") from None
            store = {
                (i, j): ScalarField.constant(float(inv[i, j]), self.arity)
                for i in range(self.dim)
                for j in range(i, self.dim)
            }
            return MatrixField(self.dim, self.arity, store)
        store = {}

        def make(i, j):
            def ev(*args):
                rows = parent.values_at(args)
                inv = gauss_jordan_inverse(rows)
                return inv[i][j]

            return ScalarField(
                parent.arity, ev, provenance="inv[%d,%d]" % (i, j)
            )

        for i in range(parent.dim):
            for j in range(i, parent.dim):
                store[(i, j)] = make(i, j)
        return MatrixField(parent.dim, parent.arity, store)


def gauss_jordan_inverse(rows):
    """Invert a small matrix of floats or jets by Gauss-Jordan elimination.

    Pivots on the entry with the largest real part in magnitude; raises
    SingularMetricError when no usable pivot remains.
    """
    n = len(rows)
    a = [list(r) for r in rows]
    inv = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    scale = max((abs(jm.real_part(a[i][j])) for i in range(n) for j in range(n)), default=0.0)
    tol = 1e-13 * max(scale, 1.0)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(jm.real_part(a[r][col])))
        if abs(jm.real_part(a[piv][col])) <= tol:
            raise SingularMetricError("matrix is singular or near-singular")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            inv[col], inv[piv] = inv[piv], inv[col]
        pivot = a[col][col]
        a[col] = [v / pivot for v in a[col]]
        inv[col] = [v / pivot for v in inv[col]]
        for r in range(n):
            if r == col:
                continue
            factor = a[r][col]
            if isinstance(factor, float) and factor == 0.0:
                continue
            a[r] = [av - factor * cv for av, cv in zip(a[r], a[col])]
            inv[r] = [av - factor * cv for av, cv in zip(inv[r], inv[col])]
    return inv


def symmetrize_index_pairs(dim, rank):
    """All index tuples of given rank over `dim`, grouped by sorted key."""
    groups = {}
    for idx in itertools.product(range(dim), repeat=rank):
        groups.setdefault(tuple(sorted(idx)), []).append(idx)
    return groups
