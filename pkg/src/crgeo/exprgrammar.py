"""A small expression grammar for declarative structure files.

Structures can be described in JSON: chart bounds, the holomorphic
dimension, and strings for the contact-form components and the matrix
entries of J and h.  The strings are parsed here into plain Python
closures that evaluate on whatever scalar type the caller passes in,
so the same compiled expression works on floats and on forward-mode
dual numbers.

Grammar (classical precedence, ``^`` binds tightest and to the right)::

    expr   := term  (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 'pi' | 'e' | 'x'<k> | FUNC '(' expr ')' | '(' expr ')'

with FUNC one of ``exp``, ``log``, ``sin``, ``cos`` and coordinates
named ``x1 .. xN`` (one-based).  Anything else is a parse error that
reports the offending column.
"""

import json
import math
import re

import numpy as np

from .calculus import Chart, box_chart
from .dual import conj, cos, exp, log, ovec, sin
from .errors import SpecParseError
from .structures import PseudoHermitianStructure

_FUNCS = {"exp": exp, "log": log, "sin": sin, "cos": cos}
_CONSTS = {"pi": math.pi, "e": math.e}

_TOKEN = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r"|(?P<ws>\s+)"
)


def tokenize(text, where=None):
    """Split an expression into (kind, value, column) triples."""
    out = []
    pos = 0
    while pos < len(text):
        mo = _TOKEN.match(text, pos)
        if mo is None:
            raise SpecParseError(
                f"unexpected character {text[pos]!r}", _col(where, pos)
            )
        if mo.lastgroup == "num":
            out.append(("num", float(mo.group()), pos))
        elif mo.lastgroup == "name":
            out.append(("name", mo.group(), pos))
        elif mo.lastgroup == "op":
            out.append(("op", mo.group(), pos))
        pos = mo.end()
    return out


def _col(where, pos):
    loc = f"column {pos + 1}"
    return loc if where is None else f"{where}, {loc}"


class _Parser:
    """Recursive descent over the token list; emits evaluator closures.

    Each parse method returns ``(fn, const)`` where ``const`` is the
    value when the subtree contains no coordinates and None otherwise;
    constant exponents keep ``^`` on the native power operator instead
    of the exp/log rewrite needed for variable ones.
    """

    def __init__(self, tokens, text, n, where):
        self.toks = tokens
        self.text = text
        self.n = n
        self.where = where
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise SpecParseError(f"expected {op!r}", _col(self.where, pos))
        self.i += 1

    def parse(self):
        fn, const = self.expr()
        kind, val, pos = self.peek()
        if kind is not None:
            raise SpecParseError(f"trailing input {val!r}", _col(self.where, pos))
        if const is not None:
            c = const
            return (lambda q: c), const
        return fn, None

    def expr(self):
        fn, const = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind != "op" or val not in "+-":
                return fn, const
            self.i += 1
            rfn, rconst = self.term()
            if const is not None and rconst is not None:
                const = const + rconst if val == "+" else const - rconst
                fn = _const_fn(const)
            else:
                const = None
                lf, rf = fn, rfn
                if val == "+":
                    fn = lambda q, lf=lf, rf=rf: lf(q) + rf(q)
                else:
                    fn = lambda q, lf=lf, rf=rf: lf(q) - rf(q)

    def term(self):
        fn, const = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind != "op" or val not in "*/":
                return fn, const
            self.i += 1
            rfn, rconst = self.unary()
            if const is not None and rconst is not None:
                const = const * rconst if val == "*" else const / rconst
                fn = _const_fn(const)
            else:
                const = None
                lf, rf = fn, rfn
                if val == "*":
                    fn = lambda q, lf=lf, rf=rf: lf(q) * rf(q)
                else:
                    fn = lambda q, lf=lf, rf=rf: lf(q) / rf(q)

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.i += 1
            fn, const = self.unary()
            if const is not None:
                return _const_fn(-const), -const
            return (lambda q, fn=fn: -fn(q)), None
        return self.power()

    def power(self):
        fn, const = self.atom()
        kind, val, _ = self.peek()
        if kind != "op" or val != "^":
            return fn, const
        self.i += 1
        efn, econst = self.unary()
        if const is not None and econst is not None:
            c = const ** econst
            return _const_fn(c), c
        if econst is not None:
            k = econst
            return (lambda q, fn=fn: fn(q) ** k), None
        # variable exponent: route through exp/log so duals stay exact
        return (lambda q, fn=fn, efn=efn: exp(efn(q) * log(fn(q)))), None

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return _const_fn(val), val
        if kind == "op" and val == "(":
            fn, const = self.expr()
            self.expect_op(")")
            return fn, const
        if kind == "name":
            if val in _CONSTS:
                c = _CONSTS[val]
                return _const_fn(c), c
            if val in _FUNCS:
                f = _FUNCS[val]
                self.expect_op("(")
                fn, const = self.expr()
                self.expect_op(")")
                if const is not None:
                    c = f(const)
                    return _const_fn(c), c
                return (lambda q, fn=fn, f=f: f(fn(q))), None
            mo = re.fullmatch(r"x([1-9]\d*)", val)
            if mo:
                k = int(mo.group(1)) - 1
                if k >= self.n:
                    raise SpecParseError(
                        f"coordinate {val} exceeds dimension {self.n}",
                        _col(self.where, pos),
                    )
                return (lambda q, k=k: q[k]), None
            raise SpecParseError(f"unknown name {val!r}", _col(self.where, pos))
        raise SpecParseError("expected a value", _col(self.where, pos))


def _const_fn(c):
    return lambda q: c


def compile_expression(text, n, where=None):
    """Parse ``text`` into a callable ``q -> scalar`` over n coordinates."""
    if not isinstance(text, str):
        raise SpecParseError(f"expected an expression string, got {type(text).__name__}", where)
    fn, _ = _Parser(tokenize(text, where), text, n, where).parse()
    return fn


def evaluate(text, coords):
    """One-shot convenience: compile and evaluate at a coordinate tuple."""
    return compile_expression(text, len(coords))(list(coords))


# -- structure files ---------------------------------------------------------


def _spec_matrix(entries, n, key):
    if (not isinstance(entries, list) or len(entries) != n
            or any(not isinstance(r, list) or len(r) != n for r in entries)):
        raise SpecParseError(f"expected an {n} x {n} matrix of expressions", key)
    return [[compile_expression(entries[i][j], n, f"{key}[{i}][{j}]")
             for j in range(n)] for i in range(n)]


def _spec_chart(data, n, name):
    raw = data.get("chart", 1.0)
    if isinstance(raw, (int, float)):
        return box_chart(float(raw), n, name=name)
    if (isinstance(raw, list) and len(raw) == n
            and all(isinstance(b, list) and len(b) == 2 for b in raw)):
        bounds = np.asarray(raw, dtype=float)
        if np.any(bounds[:, 0] >= bounds[:, 1]):
            raise SpecParseError("chart bounds must satisfy lo < hi", "chart")
        return Chart(n, bounds, name=name)
    raise SpecParseError(
        "chart must be a half-width number or a list of [lo, hi] pairs", "chart"
    )


def structure_from_spec(data) -> PseudoHermitianStructure:
    """Build a structure from a parsed spec dictionary.

    Required keys: ``m`` (positive integer), ``theta`` (2m+1 component
    expressions), ``J`` ((2m+1) x (2m+1) expression matrix).  Optional:
    ``h`` (``"levi"`` or an expression matrix giving the Hermitian
    pairing coefficients H with h(Z, W) = sum Z_i H_ij conj(W_j)),
    ``chart`` (half-width or explicit bounds), ``name``.
    """
    if not isinstance(data, dict):
        raise SpecParseError("structure spec must be a JSON object")
    m = data.get("m")
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise SpecParseError("m must be a positive integer", "m")
    n = 2 * m + 1
    name = data.get("name", "spec")
    if not isinstance(name, str):
        raise SpecParseError("name must be a string", "name")

    raw_theta = data.get("theta")
    if not isinstance(raw_theta, list) or len(raw_theta) != n:
        raise SpecParseError(f"theta must list {n} component expressions", "theta")
    theta_fns = [compile_expression(raw_theta[j], n, f"theta[{j}]") for j in range(n)]

    if "J" not in data:
        raise SpecParseError("J matrix is required", "J")
    J_fns = _spec_matrix(data["J"], n, "J")

    raw_h = data.get("h", "levi")
    if raw_h == "levi":
        h = "levi"
    else:
        h_fns = _spec_matrix(raw_h, n, "h")

        def h(q, Z, W):
            Wc = conj(ovec(list(W)))
            tot = 0.0
            for i in range(n):
                for j in range(n):
                    tot = tot + Z[i] * h_fns[i][j](q) * Wc[j]
            return tot

    chart = _spec_chart(data, n, name)

    def theta(q):
        return ovec([f(q) for f in theta_fns])

    def J(q):
        M = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                M[i, j] = J_fns[i][j](q)
        return M

    known = {"m", "name", "theta", "J", "h", "chart"}
    extra = sorted(set(data) - known)
    if extra:
        raise SpecParseError(f"unknown keys {extra}")

    return PseudoHermitianStructure(chart=chart, m=m, theta=theta, J=J, h=h, name=name)


def load_structure(path) -> PseudoHermitianStructure:
    """Read a JSON structure file and build the structure it describes."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as err:
            raise SpecParseError(f"invalid JSON: {err.msg}", f"line {err.lineno}") from err
    return structure_from_spec(data)
