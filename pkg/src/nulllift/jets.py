"""Truncated-Taylor (jet) numbers for forward-mode differentiation.

A :class:`Jet` is a number of the form

    a + sum_S c_S eps_S,    eps_S = prod_{i in S} eps_i,   eps_i^2 = 0,

with up to ``MAX_GENERATORS`` nilpotent generators eps_i. Seeding distinct
generators along (possibly repeated) coordinate directions and reading the
coefficient of their product yields exact mixed partial derivatives up to
third order. All arithmetic and the math functions below accept plain floats
and Jets interchangeably, so any evaluator written against them can be
differentiated by seeding its inputs.
"""

from __future__ import annotations

import math

from .errors import DomainError

MAX_GENERATORS = 3
_FULL_MASK = (1 << MAX_GENERATORS) - 1


class Jet:
    """A truncated Taylor number over at most three nilpotent generators."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        # coeffs maps a generator bitmask to its coefficient; mask 0 is the
        # real part. Zero coefficients are allowed but dropped by arithmetic.
        self.coeffs = coeffs

    @staticmethod
    def constant(value):
        return Jet({0: float(value)})

    @staticmethod
    def variable(value, slot):
        if not 0 <= slot < MAX_GENERATORS:
            raise DomainError(
                "jet generator slot %d out of range (max %d)" % (slot, MAX_GENERATORS)
            )
        return Jet({0: float(value), 1 << slot: 1.0})

    @property
    def real(self):
        return self.coeffs.get(0, 0.0)

    def coeff(self, mask):
        return self.coeffs.get(mask, 0.0)

    def generator_mask(self):
        m = 0
        for s in self.coeffs:
            m |= s
        return m

    def nilpotent(self):
        return Jet({s: c for s, c in self.coeffs.items() if s != 0})

    def is_pure_real(self):
        return all(s == 0 or c == 0.0 for s, c in self.coeffs.items())

    def __repr__(self):
        parts = ["%r:%r" % (s, c) for s, c in sorted(self.coeffs.items())]
        return "Jet({%s})" % ", ".join(parts)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            out = dict(self.coeffs)
            for s, c in other.coeffs.items():
                v = out.get(s, 0.0) + c
                if v == 0.0 and s != 0:
                    out.pop(s, None)
                else:
                    out[s] = v
            if 0 not in out:
                out[0] = 0.0
            return Jet(out)
        out = dict(self.coeffs)
        out[0] = out.get(0, 0.0) + other
        return Jet(out)

    __radd__ = __add__

    def __neg__(self):
        return Jet({s: -c for s, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            out = {}
            for s, a in self.coeffs.items():
                if a == 0.0:
                    continue
                for t, b in other.coeffs.items():
                    if b == 0.0 or (s & t):
                        continue  # eps_i^2 = 0
                    m = s | t
                    out[m] = out.get(m, 0.0) + a * b
            if 0 not in out:
                out[0] = 0.0
            return Jet(out)
        return Jet({s: c * other for s, c in self.coeffs.items()})

    __rmul__ = __mul__

    def _reciprocal(self):
        a = self.real
        if a == 0.0:
            raise DomainError("division by a jet with zero real part")
        m = self.nilpotent() * (-1.0 / a)
        # 1/(a + n) = (1/a) (1 + m + m^2 + m^3), m = -n/a
        m2 = m * m
        acc = 1.0 + m + m2 + m2 * m
        return acc * (1.0 / a)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other._reciprocal()
        if other == 0.0:
            raise DomainError("division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def __pow__(self, exponent):
        if isinstance(exponent, Jet):
            if exponent.is_pure_real():
                exponent = exponent.real
            else:
                return exp(exponent * log(self))
        if isinstance(exponent, float) and exponent.is_integer():
            exponent = int(exponent)
        if isinstance(exponent, int):
            if exponent == 0:
                return Jet({0: 1.0})
            base = self if exponent > 0 else self._reciprocal()
            n = abs(exponent)
            acc = base
            for _ in range(n - 1):
                acc = acc * base
            return acc
        return exp(log(self) * float(exponent))

    def __rpow__(self, base):
        return exp(self * math.log(_require_positive(base, "power base")))


def _require_positive(value, what):
    if value <= 0.0:
        raise DomainError("%s must be positive, got %r" % (what, value))
    return value


def taylor(u, d0, d1, d2, d3):
    """Apply a scalar function with given derivatives at u.real to a jet."""
    n = u.nilpotent()
    n2 = n * n
    return d0 + d1 * n + (0.5 * d2) * n2 + (d3 / 6.0) * (n2 * n)


# -- math functions on floats or jets --------------------------------------


def sin(u):
    if not isinstance(u, Jet):
        return math.sin(u)
    s, c = math.sin(u.real), math.cos(u.real)
    return taylor(u, s, c, -s, -c)


def cos(u):
    if not isinstance(u, Jet):
        return math.cos(u)
    s, c = math.sin(u.real), math.cos(u.real)
    return taylor(u, c, -s, -c, s)


def tan(u):
    if not isinstance(u, Jet):
        return math.tan(u)
    t = math.tan(u.real)
    d1 = 1.0 + t * t
    return taylor(u, t, d1, 2.0 * t * d1, 2.0 * d1 * (1.0 + 3.0 * t * t))


def exp(u):
    if not isinstance(u, Jet):
        return math.exp(u)
    e = math.exp(u.real)
    return taylor(u, e, e, e, e)


def log(u):
    if not isinstance(u, Jet):
        if u <= 0.0:
            raise DomainError("log of non-positive value %r" % (u,))
        return math.log(u)
    a = u.real
    if a <= 0.0:
        raise DomainError("log of non-positive value %r" % (a,))
    ia = 1.0 / a
    return taylor(u, math.log(a), ia, -ia * ia, 2.0 * ia * ia * ia)


def sqrt(u):
    if not isinstance(u, Jet):
        if u < 0.0:
            raise DomainError("sqrt of negative value %r" % (u,))
        return math.sqrt(u)
    a = u.real
    if a < 0.0:
        raise DomainError("sqrt of negative value %r" % (a,))
    if a == 0.0:
        if u.is_pure_real():
            return 0.0
        raise DomainError("derivative of sqrt at zero")
    r = math.sqrt(a)
    ia = 1.0 / a
    return taylor(u, r, 0.5 * r * ia, -0.25 * r * ia * ia, 0.375 * r * ia * ia * ia)


def sign(u):
    if not isinstance(u, Jet):
        return 0.0 if u == 0.0 else math.copysign(1.0, u)
    a = u.real
    if a == 0.0 and not u.is_pure_real():
        raise DomainError("derivative of sign at its kink (argument 0)")
    return taylor(u, sign(a), 0.0, 0.0, 0.0)


def absolute(u):
    if not isinstance(u, Jet):
        return abs(u)
    a = u.real
    if a == 0.0 and not u.is_pure_real():
        raise DomainError("derivative of abs at its kink (argument 0)")
    return taylor(u, abs(a), sign(a), 0.0, 0.0)


def real_part(u):
    return u.real if isinstance(u, Jet) else float(u)
