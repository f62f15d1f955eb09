"""Expression parsing, evaluation, symbolic derivatives, pretty-printing.

Grammar (binary operators + - * / ^, parentheses, numeric literals, declared
variable names, and the unary functions sin cos tan exp log sqrt abs sign):

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := ('-' | '+') factor | power
    power   := atom ('^' factor)?
    atom    := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

'^' is right-associative and binds tighter than unary minus, so -x^2 parses
as -(x^2) and 2^-3 works. The AST is retained on parsed fields so that
derivatives can be formed symbolically; evaluation works on plain floats or
on :class:`~nulllift.jets.Jet` values alike.
"""

from __future__ import annotations

import re

from . import jets as jm
from .errors import DomainError, ExpressionError

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)

FUNCTIONS = {
    "sin": jm.sin,
    "cos": jm.cos,
    "tan": jm.tan,
    "exp": jm.exp,
    "log": jm.log,
    "sqrt": jm.sqrt,
    "abs": jm.absolute,
    "sign": jm.sign,
}


def _tokenize(text):
    # U+2212 (minus sign) is accepted as a synonym for '-'
    text = text.replace("−", "-")
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == m.start():
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ExpressionError(
                "unexpected character %r at position %d" % (text[at], at), text, at
            )
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


# -- AST nodes --------------------------------------------------------------


class Node:
    __slots__ = ()

    def eval(self, env):
        raise NotImplementedError

    def deriv(self, var):
        raise NotImplementedError

    def text(self):
        raise NotImplementedError

    precedence = 9


class Num(Node):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = float(value)

    def eval(self, env):
        return self.value

    def deriv(self, var):
        return Num(0.0)

    def text(self):
        r = repr(self.value)
        return "(%s)" % r if self.value < 0 else r


class Var(Node):
    __slots__ = ("index", "name")

    def __init__(self, index, name):
        self.index = index
        self.name = name

    def eval(self, env):
        return env[self.index]

    def deriv(self, var):
        return Num(1.0 if var == self.index else 0.0)

    def text(self):
        return self.name


def _is_const(node, value=None):
    return isinstance(node, Num) and (value is None or node.value == value)


def add(a, b):
    if _is_const(a) and _is_const(b):
        return Num(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def sub(a, b):
    if _is_const(a) and _is_const(b):
        return Num(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Sub(a, b)


def neg(a):
    if _is_const(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def mul(a, b):
    if _is_const(a) and _is_const(b):
        return Num(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Num(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Mul(a, b)


def div(a, b):
    if _is_const(a, 0.0):
        return Num(0.0)
    if _is_const(b, 1.0):
        return a
    return Div(a, b)


def pow_(a, b):
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return Num(1.0)
    return Pow(a, b)


class _Binary(Node):
    __slots__ = ("left", "right")
    op = "?"

    def __init__(self, left, right):
        self.left = left
        self.right = right

    def text(self):
        lt = self.left.text()
        rt = self.right.text()
        if self.left.precedence < self.precedence or (
            isinstance(self, Pow) and self.left.precedence == self.precedence
        ):
            lt = "(%s)" % lt
        if self.right.precedence < self.precedence or (
            self.right.precedence == self.precedence and not isinstance(self, Pow)
        ):
            rt = "(%s)" % rt
        return "%s %s %s" % (lt, self.op, rt)


class Add(_Binary):
    __slots__ = ()
    op = "+"
    precedence = 1

    def eval(self, env):
        return self.left.eval(env) + self.right.eval(env)

    def deriv(self, var):
        return add(self.left.deriv(var), self.right.deriv(var))


class Sub(_Binary):
    __slots__ = ()
    op = "-"
    precedence = 1

    def eval(self, env):
        return self.left.eval(env) - self.right.eval(env)

    def deriv(self, var):
        return sub(self.left.deriv(var), self.right.deriv(var))


class Mul(_Binary):
    __slots__ = ()
    op = "*"
    precedence = 2

    def eval(self, env):
        return self.left.eval(env) * self.right.eval(env)

    def deriv(self, var):
        return add(
            mul(self.left.deriv(var), self.right),
            mul(self.left, self.right.deriv(var)),
        )


class Div(_Binary):
    __slots__ = ()
    op = "/"
    precedence = 2

    def eval(self, env):
        denominator = self.right.eval(env)
        if jm.real_part(denominator) == 0.0:
            raise DomainError("division by zero in %r" % self.text())
        return self.left.eval(env) / denominator

    def deriv(self, var):
        # (u/v)' = u'/v - u v'/v^2
        du = self.left.deriv(var)
        dv = self.right.deriv(var)
        return sub(div(du, self.right), div(mul(self.left, dv), pow_(self.right, Num(2.0))))


class Pow(_Binary):
    __slots__ = ()
    op = "^"
    precedence = 3

    def eval(self, env):
        base = self.left.eval(env)
        expo = self.right.eval(env)
        if isinstance(base, jm.Jet) or isinstance(expo, jm.Jet):
            if not isinstance(base, jm.Jet):
                base = jm.Jet.constant(base)
            return base ** expo
        if isinstance(self.right, Num) and float(expo).is_integer():
            if base == 0.0 and expo < 0:
                raise DomainError("zero raised to negative power")
            return base ** expo
        if base < 0.0:
            raise DomainError("negative base %r with non-integer exponent" % base)
        return base ** expo

    def deriv(self, var):
        u, w = self.left, self.right
        du = u.deriv(var)
        dw = w.deriv(var)
        if isinstance(w, Num):
            return mul(mul(w, pow_(u, Num(w.value - 1.0))), du)
        # u^w (w' log u + w u'/u)
        return mul(
            self,
            add(mul(dw, Call("log", u)), div(mul(w, du), u)),
        )


class Neg(Node):
    __slots__ = ("operand",)
    precedence = 1

    def __init__(self, operand):
        self.operand = operand

    def eval(self, env):
        return -self.operand.eval(env)

    def deriv(self, var):
        return neg(self.operand.deriv(var))

    def text(self):
        t = self.operand.text()
        if self.operand.precedence <= self.precedence:
            t = "(%s)" % t
        return "-%s" % t


class Call(Node):
    __slots__ = ("name", "argument")
    precedence = 9

    def __init__(self, name, argument):
        self.name = name
        self.argument = argument

    def eval(self, env):
        return FUNCTIONS[self.name](self.argument.eval(env))

    def deriv(self, var):
        u = self.argument
        du = u.deriv(var)
        if self.name == "sin":
            outer = Call("cos", u)
        elif self.name == "cos":
            outer = neg(Call("sin", u))
        elif self.name == "tan":
            outer = add(Num(1.0), pow_(Call("tan", u), Num(2.0)))
        elif self.name == "exp":
            outer = Call("exp", u)
        elif self.name == "log":
            outer = div(Num(1.0), u)
        elif self.name == "sqrt":
            outer = div(Num(0.5), Call("sqrt", u))
        elif self.name == "abs":
            outer = _AbsDeriv(u)
        elif self.name == "sign":
            outer = _SignDeriv(u)
        else:  # pragma: no cover - parser admits only known functions
            raise ExpressionError("no derivative rule for %r" % self.name)
        return mul(outer, du)

    def text(self):
        return "%s(%s)" % (self.name, self.argument.text())


class _AbsDeriv(Node):
    """Derivative of abs: sign of the argument, undefined at the kink."""

    __slots__ = ("argument",)
    precedence = 9

    def __init__(self, argument):
        self.argument = argument

    def eval(self, env):
        value = self.argument.eval(env)
        if jm.real_part(value) == 0.0:
            raise DomainError("derivative of abs at its kink (argument 0)")
        return jm.sign(value)

    def deriv(self, var):
        return mul(_SignDeriv(self.argument), self.argument.deriv(var))

    def text(self):
        return "sign(%s)" % self.argument.text()


class _SignDeriv(Node):
    """Derivative of sign: zero away from the kink, undefined at it."""

    __slots__ = ("argument",)
    precedence = 9

    def __init__(self, argument):
        self.argument = argument

    def eval(self, env):
        value = self.argument.eval(env)
        if jm.real_part(value) == 0.0:
            raise DomainError("derivative of sign at its kink (argument 0)")
        return 0.0

    def deriv(self, var):
        return mul(_SignDeriv(self.argument), self.argument.deriv(var))

    def text(self):
        return "(0 * %s)" % self.argument.text()


# -- parser -----------------------------------------------------------------


class _Parser:
    def __init__(self, text, var_names):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.vars = {name: i for i, name in enumerate(var_names)}

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, value, at = self.peek()
        if kind != "op" or value != op:
            raise ExpressionError(
                "expected %r at position %d, found %r" % (op, at, value or "end of input"),
                self.text,
                at,
            )
        self.advance()

    def parse(self):
        node = self.expr()
        kind, value, at = self.peek()
        if kind != "end":
            raise ExpressionError(
                "unexpected %r at position %d" % (value, at), self.text, at
            )
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                rhs = self.term()
                node = add(node, rhs) if value == "+" else sub(node, rhs)
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                rhs = self.factor()
                node = mul(node, rhs) if value == "*" else div(node, rhs)
            else:
                return node

    def factor(self):
        kind, value, _ = self.peek()
        if kind == "op" and value in "+-":
            self.advance()
            operand = self.factor()
            return operand if value == "+" else neg(operand)
        return self.power()

    def power(self):
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return pow_(base, self.factor())
        return base

    def atom(self):
        kind, value, at = self.advance()
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            nk, nv, _ = self.peek()
            if nk == "op" and nv == "(":
                if value not in FUNCTIONS:
                    raise ExpressionError(
                        "unknown function %r at position %d" % (value, at),
                        self.text,
                        at,
                    )
                self.advance()
                args = [self.expr()]
                while True:
                    k2, v2, _ = self.peek()
                    if k2 == "op" and v2 == ",":
                        self.advance()
                        args.append(self.expr())
                    else:
                        break
                self.expect_op(")")
                if len(args) != 1:
                    raise ExpressionError(
                        "function %r takes 1 argument, got %d (at position %d)"
                        % (value, len(args), at),
                        self.text,
                        at,
                    )
                return Call(value, args[0])
            if value in self.vars:
                return Var(self.vars[value], value)
            raise ExpressionError(
                "unknown identifier %r at position %d" % (value, at), self.text, at
            )
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionError(
            "unexpected %r at position %d" % (value or "end of input", at),
            self.text,
            at,
        )


def parse(text, var_names):
    """Parse an expression over the named variables into an AST."""
    return _Parser(text, var_names).parse()
