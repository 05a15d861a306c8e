"""Small symbolic expression engine for coefficient functions.

Expressions are immutable trees.  The engine supports exactly what the rest of
the package needs: parsing, evaluation (scalar or numpy arrays), exact
differentiation, substitution, a canonicalising ``simplify`` and the
classification of diffusivity laws into the special patterns of the nonlinear
heat equation group classification.

Grammar accepted by :func:`parse`::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom (('^' | '**') unary)?      # exponent must fold to a number
    atom   := number | symbol | func '(' expr ')' | '(' expr ')'
    func   := exp | ln | log | erf | erfc | sqrt

Symbols are ``t x u v T xi omega y tau`` (``ξ ω τ`` accepted as aliases) plus
the jet coordinates used by prolongation (``u_t u_x u_xx ... S_t S_x V``).
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Union

import numpy as np
from scipy import special

BASE_SYMBOLS = frozenset({"t", "x", "u", "v", "T", "xi", "omega", "y", "tau"})
JET_SYMBOLS = frozenset({
    "u_t", "u_x", "u_xx", "u_xt", "v_t", "v_x", "v_xx", "v_xt",
    "S_t", "S_x", "V",
})
SYMBOLS = BASE_SYMBOLS | JET_SYMBOLS
ALIASES = {"ξ": "xi", "ω": "omega", "τ": "tau"}

Number = Union[Fraction, float]


class ExprError(Exception):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnboundSymbolError(ExprError, KeyError):
    def __init__(self, name: str):
        super().__init__(f"unbound symbol {name!r}")
        self.symbol = name

    def __str__(self):
        return self.args[0]


class DomainError(ExprError, ValueError):
    pass


class ValidationError(ValueError):
    """Input violates a declared invariant (positivity, ordering, ...)."""


# ---------------------------------------------------------------------------
# numbers

def _num(value) -> Number:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    return float(value)


def _is_int(n: Number) -> bool:
    if isinstance(n, Fraction):
        return n.denominator == 1
    return float(n).is_integer()


def _fmt_num(n: Number) -> str:
    if isinstance(n, Fraction):
        return str(n.numerator) if n.denominator == 1 else f"{n.numerator}/{n.denominator}"
    return repr(float(n))


def _npow(base: Number, exponent: Number) -> Optional[Number]:
    """Fold base**exponent, keeping rationals exact; None if not real."""
    if isinstance(base, Fraction) and isinstance(exponent, Fraction) and exponent.denominator == 1:
        if base == 0 and exponent < 0:
            return None
        return base ** int(exponent)
    b, e = float(base), float(exponent)
    if b < 0 and not e.is_integer():
        return None
    if b == 0 and e < 0:
        return None
    return b ** e


# ---------------------------------------------------------------------------
# nodes

class Expr:
    """Base expression node.  Instances are immutable and hashable."""

    __slots__ = ("_key", "_str")

    def _make_key(self):
        raise NotImplementedError

    @property
    def key(self):
        try:
            return self._key
        except AttributeError:
            k = self._make_key()
            object.__setattr__(self, "_key", k)
            return k

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    def __eq__(self, other):
        return isinstance(other, Expr) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __str__(self):
        try:
            return self._str
        except AttributeError:
            s = self._format()
            object.__setattr__(self, "_str", s)
            return s

    def __repr__(self):
        return f"Expr({str(self)!r})"

    # arithmetic builds raw (unsimplified) trees
    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Add((self, Neg(as_expr(other))))

    def __rsub__(self, other):
        return Add((as_expr(other), Neg(self)))

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __truediv__(self, other):
        return Mul((self, Pow(as_expr(other), Fraction(-1))))

    def __rtruediv__(self, other):
        return Mul((as_expr(other), Pow(self, Fraction(-1))))

    def __neg__(self):
        return Neg(self)

    def __pow__(self, exponent):
        if isinstance(exponent, Expr):
            exponent = simplify(exponent)
            if not isinstance(exponent, Const):
                raise ExprError("exponent must be a constant")
            exponent = exponent.value
        return Pow(self, _num(exponent))

    @property
    def children(self) -> tuple:
        return ()

    @property
    def free_symbols(self) -> frozenset:
        out = set()
        for c in self.children:
            out |= c.free_symbols
        return frozenset(out)

    def is_zero(self) -> bool:
        s = simplify(self)
        return isinstance(s, Const) and s.value == 0

    def eval(self, bindings: Mapping[str, object]):
        return evaluate(self, bindings)

    def diff(self, symbol: str) -> "Expr":
        return diff(self, symbol)

    def subs(self, mapping: Mapping[str, object]) -> "Expr":
        return substitute(self, mapping)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        object.__setattr__(self, "value", _num(value))

    def _make_key(self):
        return ("c", self.value)

    def _format(self):
        return _fmt_num(self.value)


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        name = ALIASES.get(name, name)
        if name not in SYMBOLS:
            raise ExprError(f"unknown symbol {name!r}")
        object.__setattr__(self, "name", name)

    def _make_key(self):
        return ("s", self.name)

    def _format(self):
        return self.name

    @property
    def free_symbols(self):
        return frozenset({self.name})


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Expr]):
        object.__setattr__(self, "terms", tuple(terms))

    @property
    def children(self):
        return self.terms

    def _make_key(self):
        return ("+",) + tuple(t.key for t in self.terms)

    def _format(self):
        out = ""
        for i, term in enumerate(self.terms):
            s = str(term)
            if i == 0:
                out = s
            elif s.startswith("-"):
                out += " - " + s[1:]
            else:
                out += " + " + s
        return out


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: Iterable[Expr]):
        object.__setattr__(self, "factors", tuple(factors))

    @property
    def children(self):
        return self.factors

    def _make_key(self):
        return ("*",) + tuple(f.key for f in self.factors)

    def _format(self):
        parts = []
        for f in self.factors:
            s = str(f)
            if isinstance(f, Add) or (isinstance(f, Const) and "/" in s and len(self.factors) > 1):
                s = f"({s})"
            parts.append(s)
        if len(parts) > 1 and parts[0] == "-1":
            return "-" + "*".join(parts[1:])
        return "*".join(parts)


class Pow(Expr):
    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", _num(exponent))

    @property
    def children(self):
        return (self.base,)

    def _make_key(self):
        return ("^", self.base.key, self.exponent)

    def _format(self):
        b = str(self.base)
        if not isinstance(self.base, (Sym, Exp, Ln, Erf, Func)) and not (
                isinstance(self.base, Const) and self.base.value >= 0 and "/" not in b):
            b = f"({b})"
        e = _fmt_num(self.exponent)
        if not (_is_int(self.exponent) and self.exponent >= 0):
            e = f"({e})"
        return f"{b}^{e}"


class _Unary(Expr):
    __slots__ = ("arg",)
    fname = ""

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", arg)

    @property
    def children(self):
        return (self.arg,)

    def _make_key(self):
        return (self.fname, self.arg.key)

    def _format(self):
        return f"{self.fname}({self.arg})"


class Exp(_Unary):
    __slots__ = ()
    fname = "exp"


class Ln(_Unary):
    __slots__ = ()
    fname = "ln"


class Erf(_Unary):
    __slots__ = ()
    fname = "erf"


class Neg(_Unary):
    __slots__ = ()
    fname = "neg"

    def _format(self):
        s = str(self.arg)
        return f"-({s})" if isinstance(self.arg, Add) else f"-{s}"


class Func(_Unary):
    """Opaque numeric unary function applied to an expression.

    Used for compositions that leave the grammar, e.g. the inverse of a
    quadrature.  ``derivative`` maps the argument expression to the
    derivative expression f'(arg); when omitted a central difference is used.
    """

    __slots__ = ("name", "fn", "derivative")

    def __init__(self, name: str, fn: Callable[[float], float], arg: Expr,
                 derivative: Optional[Callable[[Expr], Expr]] = None):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "derivative", derivative)
        object.__setattr__(self, "arg", arg)

    def _make_key(self):
        return ("f", self.name, id(self.fn), self.arg.key)

    def _format(self):
        return f"{self.name}({self.arg})"

    def apply(self, x):
        if np.ndim(x) == 0:
            return float(self.fn(float(x)))
        arr = np.asarray(x, dtype=float)
        return np.vectorize(lambda z: float(self.fn(z)), otypes=[float])(arr)

    def with_arg(self, arg: Expr) -> "Func":
        return Func(self.name, self.fn, arg, self.derivative)


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse(value)
    return Const(value)


def sym(name: str) -> Sym:
    return Sym(name)


def exp(e) -> Expr:
    return Exp(as_expr(e))


def ln(e) -> Expr:
    return Ln(as_expr(e))


def erf(e) -> Expr:
    return Erf(as_expr(e))


def sqrt(e) -> Expr:
    return Pow(as_expr(e), Fraction(1, 2))


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|(?P<name>[A-Za-z_ξωτ][A-Za-z0-9_]*)"
                    r"|(?P<op>\*\*|[-+*/^()]))")

_FUNCS = {"exp", "ln", "log", "erf", "erfc", "sqrt"}


def _tokenize(text: str):
    pos = 0
    tokens = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return e

    def expr(self):
        terms = [self.term()]
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else Neg(t))
        return terms[0] if len(terms) == 1 else Add(terms)

    def term(self):
        factors = [self.unary()]
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            f = self.unary()
            factors.append(f if op == "*" else Pow(f, Fraction(-1)))
        return factors[0] if len(factors) == 1 else Mul(factors)

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            pos = self.take()[2]
            exponent = simplify(self.unary())
            if not isinstance(exponent, Const):
                raise ParseError("exponent must be a numeric constant", pos)
            return Pow(base, exponent.value)
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(Fraction(val))
        if kind == "name":
            if val in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                if val == "exp":
                    return Exp(arg)
                if val in ("ln", "log"):
                    return Ln(arg)
                if val == "erf":
                    return Erf(arg)
                if val == "erfc":
                    return Add((ONE, Neg(Erf(arg))))
                return Pow(arg, Fraction(1, 2))
            name = ALIASES.get(val, val)
            if name not in SYMBOLS:
                raise ParseError(f"unknown symbol {val!r}", pos)
            return Sym(name)
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected token {val or 'end of input'!r}", pos)


def parse(text: str) -> Expr:
    """Parse an expression string; errors carry the offending position."""
    return _Parser(str(text)).parse()


# ---------------------------------------------------------------------------
# evaluation

def _is_array(x):
    return isinstance(x, np.ndarray) and x.ndim > 0


def _eval(e: Expr, b: Mapping, strict: bool):
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return b[e.name]
        except KeyError:
            raise UnboundSymbolError(e.name) from None
    if isinstance(e, Add):
        total = 0.0
        for term in e.terms:
            total = total + _eval(term, b, strict)
        return total
    if isinstance(e, Mul):
        prod = 1.0
        for f in e.factors:
            prod = prod * _eval(f, b, strict)
        return prod
    if isinstance(e, Neg):
        return -_eval(e.arg, b, strict)
    if isinstance(e, Pow):
        base = _eval(e.base, b, strict)
        n = float(e.exponent)
        integral = _is_int(e.exponent)
        if strict:
            arr = np.asarray(base, dtype=float)
            if not integral and np.any(arr < 0):
                raise DomainError(f"negative base in {e}")
            if n < 0 and np.any(arr == 0):
                raise DomainError(f"zero base with negative exponent in {e}")
        if _is_array(base) or isinstance(base, np.floating):
            with np.errstate(all="ignore"):
                return np.power(np.asarray(base, dtype=float), n)
        base = float(base)
        if integral:
            if base == 0 and n < 0:
                return math.nan
            return base ** int(n) if abs(n) < 64 else base ** n
        if base < 0 or (base == 0 and n < 0):
            return math.nan
        return base ** n
    if isinstance(e, Exp):
        a = _eval(e.arg, b, strict)
        if _is_array(a):
            with np.errstate(over="ignore"):
                return np.exp(a)
        try:
            return math.exp(a)
        except OverflowError:
            return math.inf
    if isinstance(e, Ln):
        a = _eval(e.arg, b, strict)
        if strict and np.any(np.asarray(a) <= 0):
            raise DomainError(f"ln of non-positive value in {e}")
        if _is_array(a):
            with np.errstate(all="ignore"):
                return np.log(a)
        return math.log(a) if a > 0 else math.nan
    if isinstance(e, Erf):
        a = _eval(e.arg, b, strict)
        return special.erf(a) if _is_array(a) else math.erf(a)
    if isinstance(e, Func):
        return e.apply(_eval(e.arg, b, strict))
    raise ExprError(f"cannot evaluate node {type(e).__name__}")


def evaluate(e: Expr, bindings: Mapping[str, object]):
    """Evaluate ``e`` with symbol bindings (floats or numpy arrays).

    Raises :class:`UnboundSymbolError` for a missing symbol and
    :class:`DomainError` for ln of a non-positive value, a fractional power
    of a negative number or division by zero.
    """
    out = _eval(e, bindings, True)
    if isinstance(out, np.ndarray) and out.ndim == 0:
        return float(out)
    if isinstance(out, (np.floating, int)):
        return float(out)
    return out


def evaluate_lenient(e: Expr, bindings: Mapping[str, object]):
    """Like :func:`evaluate` but domain violations produce nan."""
    with np.errstate(all="ignore"):
        out = _eval(e, bindings, False)
    if isinstance(out, np.ndarray) and out.ndim == 0:
        return float(out)
    if isinstance(out, (np.floating, int)):
        return float(out)
    return out


def _safe_pow(base, n):
    if base < 0 and not float(n).is_integer():
        raise DomainError("negative base with fractional exponent")
    if base == 0 and n < 0:
        raise DomainError("division by zero")
    return base ** n


def _safe_log(a):
    if a <= 0:
        raise DomainError("ln of non-positive value")
    return math.log(a)


def _source(e: Expr, funcs: dict, vectorized: bool) -> str:
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Add):
        return "(" + " + ".join(_source(t, funcs, vectorized) for t in e.terms) + ")"
    if isinstance(e, Mul):
        return "(" + " * ".join(_source(f, funcs, vectorized) for f in e.factors) + ")"
    if isinstance(e, Neg):
        return "(-" + _source(e.arg, funcs, vectorized) + ")"
    if isinstance(e, Pow):
        b = _source(e.base, funcs, vectorized)
        if _is_int(e.exponent) and e.exponent > 0:
            return f"({b} ** {int(e.exponent)})"
        if vectorized:
            return f"_np.power({b}, {float(e.exponent)!r})"
        if _is_int(e.exponent):
            return f"(1.0 / {b} ** {-int(e.exponent)})" if e.exponent != 0 else "1.0"
        return f"_pow({b}, {float(e.exponent)!r})"
    if isinstance(e, Func):
        name = f"_f{len(funcs)}"
        funcs[name] = e.apply
        return f"{name}({_source(e.arg, funcs, vectorized)})"
    fn = {Exp: ("_math.exp", "_np.exp"), Ln: ("_log", "_np.log"),
          Erf: ("_math.erf", "_erf")}[type(e)]
    return f"{fn[1] if vectorized else fn[0]}({_source(e.arg, funcs, vectorized)})"


def to_callable(e: Expr, symbols: Iterable[str], vectorized: bool = False) -> Callable:
    """Compile ``e`` into a Python function of the given positional symbols.

    The scalar version uses ``math`` and is what the ODE integrators call in
    their inner loops.
    """
    symbols = tuple(ALIASES.get(s, s) for s in symbols)
    missing = e.free_symbols - set(symbols)
    if missing:
        raise UnboundSymbolError(sorted(missing)[0])
    funcs: dict = {}
    body = _source(e, funcs, vectorized)
    ns = {"_math": math, "_np": np, "_erf": special.erf, "_pow": _safe_pow,
          "_log": _safe_log, **funcs}
    code = f"def _compiled({', '.join(symbols)}):\n    return {body}\n"
    exec(code, ns)  # noqa: S102 - source generated from a validated tree
    fn = ns["_compiled"]
    fn.expr = e
    return fn


# ---------------------------------------------------------------------------
# substitution and differentiation

def _rebuild(e: Expr, children) -> Expr:
    if isinstance(e, Add):
        return Add(children)
    if isinstance(e, Mul):
        return Mul(children)
    if isinstance(e, Pow):
        return Pow(children[0], e.exponent)
    if isinstance(e, Func):
        return e.with_arg(children[0])
    return type(e)(children[0])


def substitute(e: Expr, mapping: Mapping[str, object]) -> Expr:
    """Replace symbols by expressions (or numbers); no simplification."""
    repl = {ALIASES.get(k, k): as_expr(v) for k, v in mapping.items()}

    def go(node):
        if isinstance(node, Sym):
            return repl.get(node.name, node)
        if not node.children:
            return node
        return _rebuild(node, [go(c) for c in node.children])

    return go(e)


_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


def _numeric_derivative(f: Func) -> Callable[[Expr], Expr]:
    def dfn(z):
        h = 1e-6 * max(1.0, abs(z))
        return (f.fn(z + h) - f.fn(z - h)) / (2 * h)

    def deriv(arg):
        return Func(f"d{f.name}", dfn, arg)

    return deriv


def _diff(e: Expr, s: str) -> Expr:
    if s not in e.free_symbols:
        return ZERO
    if isinstance(e, Sym):
        return ONE
    if isinstance(e, Add):
        return Add([_diff(t, s) for t in e.terms])
    if isinstance(e, Neg):
        return Neg(_diff(e.arg, s))
    if isinstance(e, Mul):
        terms = []
        for i, f in enumerate(e.factors):
            df = _diff(f, s)
            if df == ZERO:
                continue
            terms.append(Mul(e.factors[:i] + (df,) + e.factors[i + 1:]))
        return Add(terms) if terms else ZERO
    if isinstance(e, Pow):
        n = e.exponent
        return Mul((Const(n), Pow(e.base, n - 1), _diff(e.base, s)))
    if isinstance(e, Exp):
        return Mul((e, _diff(e.arg, s)))
    if isinstance(e, Ln):
        return Mul((_diff(e.arg, s), Pow(e.arg, Fraction(-1))))
    if isinstance(e, Erf):
        return Mul((Const(_TWO_OVER_SQRT_PI), Exp(Neg(Pow(e.arg, Fraction(2)))),
                    _diff(e.arg, s)))
    if isinstance(e, Func):
        deriv = e.derivative or _numeric_derivative(e)
        return Mul((deriv(e.arg), _diff(e.arg, s)))
    raise ExprError(f"cannot differentiate node {type(e).__name__}")


def diff(e: Expr, symbol: str) -> Expr:
    """Exact symbolic derivative of ``e`` with respect to ``symbol``."""
    symbol = ALIASES.get(symbol, symbol)
    if symbol not in SYMBOLS:
        raise ExprError(f"unknown symbol {symbol!r}")
    return simplify(_diff(e, symbol))


# ---------------------------------------------------------------------------
# simplification

_MAX_EXPAND_POWER = 4


def _split_coeff(e: Expr):
    """Return (numeric coefficient, rest) for a simplified term."""
    if isinstance(e, Const):
        return e.value, ONE
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        rest = e.factors[1:]
        return e.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), e


def _sorted(nodes):
    return sorted(nodes, key=lambda n: (str(n), n.key.__repr__()))


def _make_mul(coeff: Number, factors) -> Expr:
    if coeff == 0:
        return ZERO
    factors = _sorted(factors)
    if not factors:
        return Const(coeff)
    if coeff == 1:
        return factors[0] if len(factors) == 1 else Mul(factors)
    return Mul([Const(coeff)] + factors)


def _simp_add(terms) -> Expr:
    flat = []
    for t in terms:
        if isinstance(t, Add):
            flat.extend(t.terms)
        else:
            flat.append(t)
    const: Number = Fraction(0)
    groups: dict = {}
    order = []
    for t in flat:
        c, rest = _split_coeff(t)
        if rest == ONE:
            const = const + c
            continue
        if rest.key not in groups:
            groups[rest.key] = [Fraction(0), rest]
            order.append(rest.key)
        groups[rest.key][0] = groups[rest.key][0] + c
    out = []
    for k in order:
        c, rest = groups[k]
        if c == 0:
            continue
        factors = list(rest.factors) if isinstance(rest, Mul) else [rest]
        out.append(_make_mul(c, factors))
    out = _sorted(out)
    if const != 0:
        out.append(Const(const))
    if not out:
        return ZERO
    return out[0] if len(out) == 1 else Add(out)


def _expand_product(factors) -> Expr:
    """Distribute a product over any sums among its factors."""
    sums = [f for f in factors if isinstance(f, Add)]
    others = [f for f in factors if not isinstance(f, Add)]
    products = [others]
    for s in sums:
        products = [p + [t] for p in products for t in s.terms]
    return _simp_add([_simp_mul(p) for p in products])


def _simp_mul(factors) -> Expr:
    flat = []
    for f in factors:
        if isinstance(f, Mul):
            flat.extend(f.factors)
        else:
            flat.append(f)
    coeff: Number = Fraction(1)
    powers: dict = {}
    order = []
    exp_args = []
    for f in flat:
        if isinstance(f, Const):
            coeff = coeff * f.value
            continue
        if isinstance(f, Exp):
            exp_args.append(f.arg)
            continue
        base, n = (f.base, f.exponent) if isinstance(f, Pow) else (f, Fraction(1))
        if base.key not in powers:
            powers[base.key] = [base, Fraction(0)]
            order.append(base.key)
        powers[base.key][1] = powers[base.key][1] + n
    if coeff == 0:
        return ZERO
    out = []
    for k in order:
        base, n = powers[k]
        if n == 0:
            continue
        p = _simp_pow(base, n)
        if isinstance(p, Const):
            coeff = coeff * p.value
        elif isinstance(p, Mul):
            for g in p.factors:
                if isinstance(g, Const):
                    coeff = coeff * g.value
                else:
                    out.append(g)
        else:
            out.append(p)
    if exp_args:
        arg = _simp_add(exp_args)
        e = _simp_exp(arg)
        if isinstance(e, Const):
            coeff = coeff * e.value
        else:
            out.append(e)
    if any(isinstance(f, Add) for f in out):
        return _expand_product([Const(coeff)] + out)
    return _make_mul(coeff, out)


def _simp_pow(base: Expr, n: Number) -> Expr:
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const):
        folded = _npow(base.value, n)
        return Pow(base, n) if folded is None else Const(folded)
    if isinstance(base, Pow) and _is_int(n):
        return _simp_pow(base.base, base.exponent * n)
    if isinstance(base, Exp):
        return _simp_exp(_simp_mul([Const(n), base.arg]))
    if isinstance(base, Mul) and _is_int(n):
        return _simp_mul([_simp_pow(f, n) for f in base.factors])
    if isinstance(base, Mul) and isinstance(base.factors[0], Const) and base.factors[0].value > 0:
        # (c*w)^n = c^n * w^n for c > 0
        rest = base.factors[1:]
        rest = rest[0] if len(rest) == 1 else Mul(rest)
        return _simp_mul([Const(_npow(base.factors[0].value, n)), _simp_pow(rest, n)])
    if isinstance(base, Add) and _is_int(n) and 0 < n <= _MAX_EXPAND_POWER:
        return _expand_product([base] * int(n))
    if isinstance(base, Add) and _is_int(n) and n < 0 and len(base.terms) == 1:
        return _simp_pow(base.terms[0], n)
    return Pow(base, n)


def _simp_exp(arg: Expr) -> Expr:
    if isinstance(arg, Const):
        if arg.value == 0:
            return ONE
        return Const(math.exp(float(arg.value)))
    if isinstance(arg, Ln):
        return arg.arg
    return Exp(arg)


def _simp(e: Expr) -> Expr:
    if isinstance(e, (Const, Sym)):
        return e
    if isinstance(e, Add):
        return _simp_add([_simp(t) for t in e.terms])
    if isinstance(e, Mul):
        return _simp_mul([_simp(f) for f in e.factors])
    if isinstance(e, Neg):
        return _simp_mul([MINUS_ONE, _simp(e.arg)])
    if isinstance(e, Pow):
        return _simp_pow(_simp(e.base), e.exponent)
    if isinstance(e, Exp):
        return _simp_exp(_simp(e.arg))
    if isinstance(e, Ln):
        a = _simp(e.arg)
        if isinstance(a, Const) and a.value > 0:
            return ZERO if a.value == 1 else Const(math.log(float(a.value)))
        if isinstance(a, Exp):
            return a.arg
        return Ln(a)
    if isinstance(e, Erf):
        a = _simp(e.arg)
        if isinstance(a, Const):
            return ZERO if a.value == 0 else Const(math.erf(float(a.value)))
        return Erf(a)
    if isinstance(e, Func):
        a = _simp(e.arg)
        if isinstance(a, Const):
            return Const(float(e.fn(float(a.value))))
        return e.with_arg(a)
    raise ExprError(f"cannot simplify node {type(e).__name__}")


def simplify(e: Expr) -> Expr:
    """Canonicalise ``e``: fold constants, flatten, expand products over sums,
    collect like terms and powers.  ``simplify(simplify(e)) == simplify(e)``."""
    current = as_expr(e)
    for _ in range(8):
        nxt = _simp(current)
        if nxt == current:
            return nxt
        current = nxt
    return current


def coefficient_of(e: Expr, symbol: str) -> tuple[Expr, Expr]:
    """Split ``e`` that is affine in ``symbol`` as (a, b) with e = a*symbol + b."""
    a = diff(e, symbol)
    if symbol in a.free_symbols:
        raise ExprError(f"expression is not affine in {symbol}")
    b = simplify(substitute(e, {symbol: 0}))
    return a, b


# ---------------------------------------------------------------------------
# diffusivity classification

class DiffusivityTag(enum.Enum):
    ARBITRARY = "Arbitrary"
    CONSTANT = "Constant"
    EXPONENTIAL = "Exponential"
    POWER = "Power"
    POWER_MINUS_4_3 = "PowerMinus4Thirds"


MINUS_FOUR_THIRDS = Fraction(-4, 3)


@dataclass(frozen=True)
class DiffusivityClass:
    """Pattern of a diffusivity law modulo scalings and shifts.

    The input equals ``scale * f(variable - shift)`` where ``f`` is ``1``,
    ``exp(rate * s)`` or ``s**exponent``.
    """

    tag: DiffusivityTag
    symbol: str = "u"
    exponent: Optional[Number] = None
    rate: Optional[float] = None
    scale: float = 1.0
    shift: float = 0.0
    structural: bool = True

    @property
    def is_power(self) -> bool:
        return self.tag in (DiffusivityTag.POWER, DiffusivityTag.POWER_MINUS_4_3)

    def same_pattern(self, other: "DiffusivityClass") -> bool:
        if self.tag != other.tag:
            return False
        if self.tag == DiffusivityTag.POWER:
            return abs(float(self.exponent) - float(other.exponent)) < 1e-9
        return True

    def __str__(self):
        if self.tag == DiffusivityTag.POWER:
            return f"Power({_fmt_num(self.exponent)})"
        return self.tag.value


def _is_minus_four_thirds(n: Number) -> bool:
    if isinstance(n, Fraction):
        return n == MINUS_FOUR_THIRDS
    return abs(float(n) + 4.0 / 3.0) < 1e-12


def _power_class(s, n, scale, shift, structural=True):
    tag = DiffusivityTag.POWER_MINUS_4_3 if _is_minus_four_thirds(n) else DiffusivityTag.POWER
    return DiffusivityClass(tag, s, exponent=n, scale=scale, shift=shift, structural=structural)


def _linear_in(e: Expr, s: str):
    """(k, c) if e == k*s + c with constant k != 0, else None."""
    try:
        k, c = coefficient_of(e, s)
    except ExprError:
        return None
    if isinstance(k, Const) and isinstance(c, Const) and k.value != 0:
        return float(k.value), float(c.value)
    return None


def _structural_class(e: Expr, s: str) -> Optional[DiffusivityClass]:
    if isinstance(e, Const):
        return DiffusivityClass(DiffusivityTag.CONSTANT, s, scale=float(e.value))
    coeff, rest = _split_coeff(e)
    coeff = float(coeff)
    if isinstance(rest, Exp):
        lin = _linear_in(rest.arg, s)
        if lin:
            k, c = lin
            return DiffusivityClass(DiffusivityTag.EXPONENTIAL, s, rate=k,
                                    scale=coeff * math.exp(c))
    base, n = (rest.base, rest.exponent) if isinstance(rest, Pow) else (rest, Fraction(1))
    if isinstance(rest, Add) and len(rest.terms) >= 1:
        base, n = rest, Fraction(1)
    lin = _linear_in(base, s)
    if lin:
        k, c = lin
        return _power_class(s, n, coeff * abs(k) ** float(n), -c / k)
    if isinstance(e, Add):
        # a*(k*s + c) after expansion
        lin = _linear_in(e, s)
        if lin:
            k, c = lin
            return _power_class(s, Fraction(1), abs(k), -c / k)
    return None


def classify_diffusivity(e, s: str = "u", domain: tuple = (0.5, 2.0),
                         n_samples: int = 32) -> DiffusivityClass:
    """Classify a diffusivity law d(s) into the group-classification patterns.

    Structural matching is tried first; if it fails the logarithmic
    derivative ``d'/d`` is sampled and log-linear / log-log models are fitted
    at ``n_samples`` points of ``domain``; a model is accepted when the max
    residual of ``log d`` is below 1e-9.

    Raises :class:`ValidationError` when ``d`` is not strictly positive on
    the sampled domain.
    """
    s = ALIASES.get(s, s)
    e = simplify(as_expr(e))
    extra = e.free_symbols - {s}
    if extra:
        raise ValidationError(f"diffusivity depends on {sorted(extra)} besides {s}")
    grid = np.linspace(domain[0], domain[1], n_samples + 2)[1:-1]
    values = np.asarray(evaluate_lenient(e, {s: grid}), dtype=float) * np.ones_like(grid)
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise ValidationError(f"diffusivity {e} is not strictly positive on {domain}")

    found = _structural_class(e, s)
    if found is not None:
        return found

    log_d = np.log(values)
    dlog = np.asarray(evaluate_lenient(simplify(diff(e, s) / e), {s: grid}), dtype=float)
    dlog = dlog * np.ones_like(grid)
    if not np.all(np.isfinite(dlog)):
        return DiffusivityClass(DiffusivityTag.ARBITRARY, s, structural=False)
    tol = 1e-9

    if np.max(np.abs(log_d - log_d.mean())) < tol:
        return DiffusivityClass(DiffusivityTag.CONSTANT, s, scale=float(np.exp(log_d.mean())),
                                structural=False)
    # log-linear: log d = log a + b s
    A = np.vstack([np.ones_like(grid), grid]).T
    coef, *_ = np.linalg.lstsq(A, log_d, rcond=None)
    if np.max(np.abs(A @ coef - log_d)) < tol:
        return DiffusivityClass(DiffusivityTag.EXPONENTIAL, s, rate=float(coef[1]),
                                scale=float(np.exp(coef[0])), structural=False)
    # log-log: 1/(log d)' is linear in s for d = a (s - c)^n
    if np.all(np.abs(dlog) > 1e-14):
        inv = 1.0 / dlog
        lin, *_ = np.linalg.lstsq(A, inv, rcond=None)
        if abs(lin[1]) > 1e-14:
            n = 1.0 / lin[1]
            c = -lin[0] * n
            shifted = grid - c
            if np.all(shifted > 0) or np.all(shifted < 0):
                L = np.log(np.abs(shifted))
                B = np.vstack([np.ones_like(grid), L]).T
                fit, *_ = np.linalg.lstsq(B, log_d, rcond=None)
                if np.max(np.abs(B @ fit - log_d)) < tol:
                    return _power_class(s, float(fit[1]), float(np.exp(fit[0])), float(c),
                                        structural=False)
    return DiffusivityClass(DiffusivityTag.ARBITRARY, s, structural=False)
