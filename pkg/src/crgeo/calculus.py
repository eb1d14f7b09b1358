"""Charts, vector fields, Lie brackets, and exterior calculus.

Conventions used throughout the package (values depend on them, so they are
fixed here once):

* a vector field is a callable ``q -> object array of n coordinate
  components``; components may be complex, and constant numpy vectors are
  accepted wherever a field is (they denote the coordinate-constant field);
* a 1-form is a callable ``q -> object array of n covariant components``,
  pairing with a vector is the plain (bilinear, no conjugation) dot product;
* a 2-form is a callable ``(q, u, w) -> scalar``;
* wedge and d use the alternation convention without factorial weights:
  ``(a ^ b)(X, Y) = (a(X) b(Y) - a(Y) b(X)) / 2`` and
  ``d a (X, Y) = (X a(Y) - Y a(X) - a([X, Y])) / 2`` for a 1-form,
  ``d w (X, Y, Z)`` carries ``1/3`` for a 2-form.
"""

from dataclasses import dataclass

import numpy as np

from .dual import AD, jvp_vec, ovec
from .errors import ChartDomainError


@dataclass(frozen=True)
class Chart:
    """An open coordinate box where a structure's data is trusted.

    ``bounds`` is an (n, 2) array of [low, high] per coordinate.  Evaluations
    outside the box raise, rather than silently extrapolating.
    """

    dim: int
    bounds: np.ndarray
    name: str = "chart"

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.shape != (self.dim, 2) or not np.all(b[:, 0] < b[:, 1]):
            raise ChartDomainError(f"bad bounds for {self.dim}-dim chart")
        object.__setattr__(self, "bounds", b)

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.bounds[:, 0]) and np.all(p <= self.bounds[:, 1]))

    def require_inside(self, p):
        if not self.contains(p):
            raise ChartDomainError(
                f"point {np.asarray(p, dtype=float)} left chart {self.name!r}"
            )

    def center(self) -> np.ndarray:
        return self.bounds.mean(axis=1)

    def random_points(self, k: int, rng, margin: float = 0.1) -> np.ndarray:
        """k interior points, uniform in the box shrunk by ``margin`` per side."""
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        pad = margin * (hi - lo)
        return rng.uniform(lo + pad, hi - pad, size=(k, self.dim))


def box_chart(half_width, dim, name="chart"):
    b = np.stack([-half_width * np.ones(dim), half_width * np.ones(dim)], axis=1)
    return Chart(dim, b, name)


# -- fields -------------------------------------------------------------------


def as_field(X):
    """Accept a field or a constant component vector; return a field."""
    if callable(X):
        return X
    vec = ovec(list(X))
    return lambda q: vec


def odot(a, b):
    """Bilinear contraction of two component containers (no conjugation)."""
    return sum(a[i] * b[i] for i in range(len(a)))


def lie_bracket(X, Y, p, cfg=AD):
    """[X, Y] at p, as coordinate components.  Complex coefficients allowed."""
    Xf, Yf = as_field(X), as_field(Y)
    Xp = Xf(ovec(list(p)))
    Yp = Yf(ovec(list(p)))
    _, dY = jvp_vec(Yf, list(p), list(Xp), cfg)
    _, dX = jvp_vec(Xf, list(p), list(Yp), cfg)
    return ovec([dY[i] - dX[i] for i in range(len(dY))])


# -- exterior calculus ---------------------------------------------------------


def form_value(alpha, q, v):
    return odot(alpha(q), v)


def d_oneform(alpha, p, X, Y, cfg=AD):
    """(d alpha)(X, Y) at p, with the 1/2 alternation normalization."""
    Xf, Yf = as_field(X), as_field(Y)
    p = list(p)
    q0 = ovec(p)
    Xp, Yp = Xf(q0), Yf(q0)
    _, t1 = jvp_vec(lambda q: odot(alpha(q), Yf(q)), p, list(Xp), cfg)
    _, t2 = jvp_vec(lambda q: odot(alpha(q), Xf(q)), p, list(Yp), cfg)
    br = lie_bracket(Xf, Yf, p, cfg)
    return 0.5 * (t1 - t2 - odot(alpha(q0), br))


def d_twoform(omega, p, X, Y, Z, cfg=AD):
    """(d omega)(X, Y, Z) at p for a 2-form given as (q, u, w) -> scalar."""
    Xf, Yf, Zf = as_field(X), as_field(Y), as_field(Z)
    p = list(p)
    q0 = ovec(p)
    Xp, Yp, Zp = Xf(q0), Yf(q0), Zf(q0)
    _, tX = jvp_vec(lambda q: omega(q, Yf(q), Zf(q)), p, list(Xp), cfg)
    _, tY = jvp_vec(lambda q: omega(q, Xf(q), Zf(q)), p, list(Yp), cfg)
    _, tZ = jvp_vec(lambda q: omega(q, Xf(q), Yf(q)), p, list(Zp), cfg)
    bXY = lie_bracket(Xf, Yf, p, cfg)
    bXZ = lie_bracket(Xf, Zf, p, cfg)
    bYZ = lie_bracket(Yf, Zf, p, cfg)
    circ = tX - tY + tZ
    corr = -omega(q0, bXY, Zp) + omega(q0, bXZ, Yp) - omega(q0, bYZ, Xp)
    return (circ + corr) / 3.0


def wedge11(alpha, beta):
    """Wedge of two 1-forms as a 2-form callable."""

    def w(q, u, v):
        a, b = alpha(q), beta(q)
        return 0.5 * (odot(a, u) * odot(b, v) - odot(a, v) * odot(b, u))

    return w
