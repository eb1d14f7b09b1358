"""Forward-mode automatic differentiation on tagged dual numbers.

Every scalar flowing through crgeo is either an ordinary number (float,
complex, or a numpy array of those for batched evaluation) or a ``Dual``.
A ``Dual`` carries a primal part and a derivative part; derivative parts may
themselves be Duals, so differentiation nests to any depth.  Each call to
``jvp``/``jacfwd`` mints a fresh integer tag, and binary operations align on
the highest tag present, treating lower-tagged operands as constants of the
outer algebra.  This is what keeps nested derivatives from contaminating each
other.

Derivative seeds are always real directions.  Directional derivatives along
complex vectors are assembled as linear combinations of real-direction passes
(see ``jvp_vec``), which keeps ``conj`` inside evaluators honest: for a real
direction, d/dt conj(f) = conj(d/dt f).

Multi-direction passes seed the derivative part with a leading axis of length
k (one slot per direction), so a single evaluation yields a full Jacobian.
"""

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

_TAGS = itertools.count(1)


def new_tag():
    return next(_TAGS)


@dataclass(frozen=True)
class DiffConfig:
    """How crgeo computes derivatives.

    mode "ad" uses dual numbers (exact to rounding).  mode "fd" uses central
    differences with ``step`` for first-order and ``step2`` for outer passes
    of second-order pipelines; tolerances should be relaxed by ~1e3 in fd
    mode.  ``nesting`` records the supported nesting depth of the public
    derivative API (first and second directional derivatives).
    """

    mode: str = "ad"
    step: float = 1e-5
    step2: float = 1e-4
    nesting: int = 2

    def __post_init__(self):
        if self.mode not in ("ad", "fd"):
            raise ValueError(f"unknown diff mode {self.mode!r}")


AD = DiffConfig(mode="ad")
FD = DiffConfig(mode="fd")


class Dual:
    __slots__ = ("tag", "re", "eps")

    # keep numpy from broadcasting over a Dual: arrays must live inside the
    # parts (innermost), or nested derivative axes get entangled
    __array_ufunc__ = None

    def __init__(self, tag, re, eps):
        self.tag = tag
        self.re = re
        self.eps = eps

    # -- helpers ----------------------------------------------------------

    def _parts(self, other):
        """Primal/eps of self and other relative to the dominating tag."""
        if isinstance(other, Dual):
            if other.tag == self.tag:
                return self.tag, self.re, self.eps, other.re, other.eps
            if other.tag > self.tag:
                return other.tag, self, None, other.re, other.eps
        return self.tag, self.re, self.eps, other, None

    def __repr__(self):
        return f"Dual[{self.tag}]({self.re!r}, {self.eps!r})"

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        tag, ar, ae, br, be = self._parts(other)
        if ae is None:
            return Dual(tag, ar + br, be)
        if be is None:
            return Dual(tag, ar + br, ae)
        return Dual(tag, ar + br, ae + be)

    __radd__ = __add__

    def __neg__(self):
        return Dual(self.tag, -self.re, -self.eps)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        tag, ar, ae, br, be = self._parts(other)
        if ae is None:
            return Dual(tag, ar * br, ar * be)
        if be is None:
            return Dual(tag, ar * br, ae * br)
        return Dual(tag, ar * br, ae * br + ar * be)

    __rmul__ = __mul__

    def __truediv__(self, other):
        tag, ar, ae, br, be = self._parts(other)
        q = ar / br
        if be is None:
            return Dual(tag, q, ae / br)
        if ae is None:
            return Dual(tag, q, -q * be / br)
        return Dual(tag, q, (ae - q * be) / br)

    def __rtruediv__(self, other):
        tag, ar, ae, br, be = self._parts(other)
        # here roles are swapped: other / self
        q = br / ar
        if be is None:
            return Dual(tag, q, -q * ae / ar)
        if ae is None:
            return Dual(tag, q, be / ar)
        return Dual(tag, q, (be - q * ae) / ar)

    def __pow__(self, n):
        if isinstance(n, Dual) or not isinstance(n, (int, float)):
            return exp(log(self) * n)
        if n == 0:
            return Dual(self.tag, self.re * 0 + 1.0, self.eps * 0)
        return Dual(self.tag, self.re ** n, self.eps * n * self.re ** (n - 1))

    def __rpow__(self, base):
        return exp(self * math.log(base) if isinstance(base, (int, float)) else self * log(base))

    # -- structure ---------------------------------------------------------

    def conjugate(self):
        return Dual(self.tag, _conj(self.re), _conj(self.eps))

    def sqrt(self):
        r = sqrt(self.re)
        return Dual(self.tag, r, self.eps * 0.5 / r)

    def exp(self):
        r = exp(self.re)
        return Dual(self.tag, r, self.eps * r)

    def log(self):
        return Dual(self.tag, log(self.re), self.eps / self.re)

    def sin(self):
        return Dual(self.tag, sin(self.re), self.eps * cos(self.re))

    def cos(self):
        return Dual(self.tag, cos(self.re), -self.eps * sin(self.re))

    def __eq__(self, other):
        return primal(self) == primal(other)

    def __ne__(self, other):
        return primal(self) != primal(other)

    def __hash__(self):
        return hash(("Dual", id(self)))


# -- scalar math that dispatches on type -----------------------------------


def _conj(x):
    if isinstance(x, Dual):
        return x.conjugate()
    if isinstance(x, np.ndarray) and x.dtype == object:
        out = np.empty(x.shape, dtype=object)
        for idx in np.ndindex(x.shape):
            out[idx] = _conj(x[idx])
        return out
    return np.conjugate(x)


conj = _conj


def exp(x):
    return x.exp() if isinstance(x, Dual) else np.exp(x)


def log(x):
    return x.log() if isinstance(x, Dual) else np.log(x)


def sin(x):
    return x.sin() if isinstance(x, Dual) else np.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Dual) else np.cos(x)


def sqrt(x):
    return x.sqrt() if isinstance(x, Dual) else np.sqrt(x)


def primal(x):
    """Strip all dual layers."""
    while isinstance(x, Dual):
        x = x.re
    return x


def primal_vec(x):
    """Primal parts of a component container, as a numeric numpy array."""
    flat = [primal(e) for e in np.asarray(x, dtype=object).ravel()]
    arr = np.array(flat)
    return arr.reshape(np.shape(x))


def pmag(x):
    """Magnitude of the primal part, reduced over any batch axes (for pivoting)."""
    p = primal(x)
    return float(np.max(np.abs(p)))


# -- containers --------------------------------------------------------------


def ovec(items):
    """1-d object array whose elements are taken verbatim (no array coercion)."""
    out = np.empty(len(items), dtype=object)
    for i, it in enumerate(items):
        out[i] = it
    return out


def omat(rows):
    rows = list(rows)
    out = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, row in enumerate(rows):
        for j, it in enumerate(row):
            out[i, j] = it
    return out


def zeros_like_scalar(x):
    return primal(x) * 0 if isinstance(x, Dual) else x * 0


# -- derivative drivers -------------------------------------------------------


def _tree_map2(f, a, b):
    if isinstance(a, tuple):
        return tuple(_tree_map2(f, x, y) for x, y in zip(a, b))
    if isinstance(a, list):
        return [_tree_map2(f, x, y) for x, y in zip(a, b)]
    if isinstance(a, dict):
        return {k: _tree_map2(f, a[k], b[k]) for k in a}
    if isinstance(a, np.ndarray) and a.dtype == object:
        out = np.empty(a.shape, dtype=object)
        for idx in np.ndindex(a.shape):
            out[idx] = f(a[idx], b[idx])
        return out
    return f(a, b)


def _tree_map(f, a):
    return _tree_map2(lambda x, _: f(x), a, a)


def _split_scalar(y, tag):
    if isinstance(y, Dual) and y.tag == tag:
        eps = y.eps if y.eps is not None else zeros_like_scalar(y.re)
        return y.re, eps
    return y, zeros_like_scalar(y)


def split_tree(y, tag):
    val = _tree_map(lambda e: _split_scalar(e, tag)[0], y)
    der = _tree_map(lambda e: _split_scalar(e, tag)[1], y)
    return val, der


def _seed(x, v, tag):
    n = len(x)
    xd = np.empty(n, dtype=object)
    for i in range(n):
        xd[i] = Dual(tag, x[i], v[i])
    return xd


def jvp(f, x, v, cfg=AD):
    """(f(x), directional derivative of f at x along real direction v).

    f maps a component container (object array of scalars) to any tree of
    scalars / object arrays.  v has real entries (floats or batch arrays).
    """
    if cfg.mode == "fd":
        h = cfg.step
        xp = ovec([x[i] + h * v[i] for i in range(len(x))])
        xm = ovec([x[i] - h * v[i] for i in range(len(x))])
        x0 = ovec(list(x))
        der = _tree_map2(lambda a, b: (a - b) / (2 * h), f(xp), f(xm))
        return f(x0), der
    tag = new_tag()
    y = f(_seed(x, v, tag))
    return split_tree(y, tag)


def jvp_vec(f, x, v, cfg=AD):
    """Directional derivative along a possibly complex direction v.

    Returns (value, derivative), the complex bilinear extension of X(f):
    real/imaginary parts of v act as separate real directions.  When v itself
    carries dual parts (directions produced under an outer differentiation),
    the full Jacobian is contracted with v instead, so the outer pass sees
    v's variation too.
    """
    if any(isinstance(c, Dual) for c in v):
        # v varies under an enclosing derivative: per-coordinate passes are
        # combined with v's entries so the outer pass sees v's variation too
        n = len(x)
        val = f(ovec(list(x)))
        der = None
        for i in range(n):
            e = [1.0 if j == i else 0.0 for j in range(n)]
            _, di = jvp(f, x, e, cfg)
            term = _tree_map(lambda s, c=v[i]: c * s, di)
            der = term if der is None else _tree_map2(lambda a, b: a + b, der, term)
        return val, der
    vr = [np.real(c) for c in v]
    vi = [np.imag(c) for c in v]
    if all(np.all(np.asarray(c) == 0) for c in vi):
        return jvp(f, x, vr, cfg)
    val, dr = jvp(f, x, vr, cfg)
    _, di = jvp(f, x, vi, cfg)
    der = _tree_map2(lambda a, b: a + 1j * b, dr, di)
    return val, der


def _has_dual(x):
    if isinstance(x, Dual):
        return True
    if isinstance(x, np.ndarray) and x.dtype == object:
        return any(_has_dual(e) for e in x.ravel())
    return False


def jacfwd(f, x, cfg=AD):
    """(f(x), coordinate Jacobian of f at x).

    The derivative tree mirrors f's output; each scalar slot holds the
    partials along a *leading* axis of length len(x): slot [i] is the partial
    along coordinate i.  When the inputs already carry Duals (an enclosing
    derivative is in progress), the Jacobian is built from one scalar-seeded
    pass per coordinate instead of one array-seeded pass, because a second
    array axis would collide with the outer one; the slots are then object
    vectors.  In fd mode the same layout is produced from central
    differences.
    """
    n = len(x)
    if cfg.mode == "ad" and any(_has_dual(x[i]) for i in range(n)):
        cols = []
        for i in range(n):
            v = [1.0 if j == i else 0.0 for j in range(n)]
            _, d = jvp(f, x, v, cfg)
            cols.append(d)
        val = f(ovec(list(x)))
        return val, _stack_trees(lambda *slots: ovec(list(slots)), cols)
    if cfg.mode == "fd":
        h = cfg.step
        val = f(ovec(list(x)))
        cols = []
        for i in range(n):
            xp = ovec([x[j] + (h if j == i else 0.0) for j in range(n)])
            xm = ovec([x[j] - (h if j == i else 0.0) for j in range(n)])
            cols.append(_tree_map2(lambda a, b: (a - b) / (2 * h), f(xp), f(xm)))

        def stack(*slots):
            if any(isinstance(s, Dual) for s in slots):
                return ovec(list(slots))
            return np.stack([np.asarray(s) for s in slots])

        return val, _stack_trees(stack, cols)
    tag = new_tag()
    xd = np.empty(n, dtype=object)
    for i in range(n):
        b = np.ndim(primal(x[i]))
        e = np.zeros((n,) + (1,) * b)
        e[i] = 1.0
        xd[i] = Dual(tag, x[i], e)
    y = f(xd)
    return split_tree(y, tag)


def _stack_trees(stack, trees):
    first = trees[0]
    if isinstance(first, tuple):
        return tuple(_stack_trees(stack, [t[i] for t in trees]) for i in range(len(first)))
    if isinstance(first, list):
        return [_stack_trees(stack, [t[i] for t in trees]) for i in range(len(first))]
    if isinstance(first, dict):
        return {k: _stack_trees(stack, [t[k] for t in trees]) for k in first}
    if isinstance(first, np.ndarray) and first.dtype == object:
        out = np.empty(first.shape, dtype=object)
        for idx in np.ndindex(first.shape):
            out[idx] = stack(*[t[idx] for t in trees])
        return out
    return stack(*trees)


def slot_component(slot, i):
    """Component i of a derivative slot's leading direction axis.

    The axis may sit inside the parts of a Dual (arrays are innermost), and a
    scalar slot is a collapsed zero with no axis to index.
    """
    if isinstance(slot, Dual):
        return Dual(slot.tag, slot_component(slot.re, i), slot_component(slot.eps, i))
    if isinstance(slot, np.ndarray) and slot.ndim > 0:
        return slot[i]
    return slot * 0


def dir_contract(slot, v):
    """Contract a leading-direction-axis derivative slot with direction v.

    v may be complex or carry Duals; the contraction is linear (no
    conjugation).
    """
    if slot is None:
        return 0.0
    if (
        isinstance(slot, np.ndarray)
        and slot.dtype != object
        and slot.ndim == 1
        and not any(isinstance(c, (Dual, np.ndarray)) for c in v)
    ):
        return np.tensordot(np.asarray(v), slot, axes=(0, 0))
    return sum(v[i] * slot_component(slot, i) for i in range(len(v)))


def directional_derivative(f, p, v, cfg=AD):
    """v(f) for a scalar field f; v may be complex."""
    _, d = jvp_vec(lambda x: f(x), list(p), list(v), cfg)
    return d
