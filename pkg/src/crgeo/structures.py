"""The pseudo-Hermitian structure container and its derived pointwise data.

A structure on a chart is a triple of evaluators:

* ``theta``: contact form, ``q -> n covariant components``;
* ``J``: almost complex structure of the contact distribution (extended by
  zero on the Reeb direction), ``q -> (n, n) matrix``;
* ``h``: positive Hermitian pairing of holomorphic tangent vectors,
  ``(q, Z, W) -> scalar``, linear in Z and conjugate-linear in W, or the
  string ``"levi"`` to use the pairing induced by d(theta) and J.

From these the structure derives the Reeb field, the eigenprojections of J,
a local holomorphic frame (user-supplied or built by pivoted Gram-Schmidt
with the pivot order frozen at the chart center, which keeps the frame a
smooth function of the point), the associated Riemannian metric, and the
fundamental 2-form.

All evaluators must be written against crgeo.dual scalars: use ``conj`` and
the arithmetic operators freely, but never ``abs``, ``.real`` or ``.imag``
on intermediate values.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import linalg
from .calculus import Chart, odot
from .dual import AD, DiffConfig, conj, jacfwd, ovec, pmag, slot_component, sqrt
from .errors import DegenerateStructureError


def matvec(M, v):
    return ovec([odot(M[i], v) for i in range(M.shape[0])])


def _as_ovec(x):
    if isinstance(x, np.ndarray) and x.dtype == object:
        return x
    return ovec(list(x))


def _as_omat(x):
    if isinstance(x, np.ndarray) and x.dtype == object and x.ndim == 2:
        return x
    rows = [list(r) for r in x]
    out = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, r in enumerate(rows):
        for j, c in enumerate(r):
            out[i, j] = c
    return out


@dataclass(eq=False)
class PseudoHermitianStructure:
    """A contact form, a compatible almost complex structure, and a metric.

    ``m`` is the holomorphic dimension; the chart has ``n = 2 m + 1``
    coordinates.  ``reeb``, ``frame``, and ``dtheta_matrix`` are optional
    closed forms of data the structure can otherwise compute generically:
    the Reeb field as ``q -> n components``, a holomorphic frame as
    ``q -> list of m component vectors``, and the exterior derivative of
    the contact form as ``q -> (n, n) pairing matrix on coordinate
    directions``.  ``extras`` carries model-specific constants.
    """

    chart: Chart
    m: int
    theta: Callable
    J: Callable
    h: Union[str, Callable] = "levi"
    reeb: Optional[Callable] = None
    frame: Optional[Callable] = None
    dtheta_matrix: Optional[Callable] = None
    cfg: DiffConfig = AD
    name: str = "structure"
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.chart.dim != 2 * self.m + 1:
            raise DegenerateStructureError(
                f"chart dimension {self.chart.dim} != 2*{self.m}+1"
            )
        self._germ = None
        self._ring = []

    def _memo(self, kind, q, build):
        # identity-keyed ring: evaluators are repeatedly called at the same
        # point object while one table is assembled; recomputing the theta
        # jet per pairing would dominate the run time otherwise
        for key, store in self._ring:
            if key is q:
                val = store.get(kind)
                if val is None:
                    val = build()
                    store[kind] = val
                return val
        val = build()
        self._ring.append((q, {kind: val}))
        if len(self._ring) > 8:
            self._ring.pop(0)
        return val

    # -- raw evaluators ------------------------------------------------------

    @property
    def n(self) -> int:
        return 2 * self.m + 1

    def theta_at(self, q):
        return self._memo("theta", q, lambda: _as_ovec(self.theta(q)))

    def J_at(self, q):
        return self._memo("J", q, lambda: _as_omat(self.J(q)))

    def dtheta_mat(self, q):
        """Matrix D with D[j, k] = d(theta)(e_j, e_k), from one Jacobian pass."""
        return self._memo("dtheta", q, lambda: self._dtheta_mat(q))

    def _dtheta_mat(self, q):
        if self.dtheta_matrix is not None:
            return _as_omat(self.dtheta_matrix(q))
        _, jac = jacfwd(lambda x: self.theta_at(x), list(q), self.cfg)
        n = self.n
        out = np.empty((n, n), dtype=object)
        for j in range(n):
            for k in range(n):
                out[j, k] = 0.5 * (slot_component(jac[k], j) - slot_component(jac[j], k))
        return out

    def dtheta(self, q, u, w):
        D = self.dtheta_mat(q)
        return odot(u, matvec(D, w))

    # -- Reeb field and projections -------------------------------------------

    def reeb_at(self, q):
        """The unique vector with theta = 1 on it and zero d(theta) pairing."""
        q = _as_ovec(q)
        return self._memo("reeb", q, lambda: self._reeb_at(q))

    def _reeb_at(self, q):
        if self.reeb is not None:
            return _as_ovec(self.reeb(q))
        th = self.theta_at(q)
        D = self.dtheta_mat(q)
        n = self.n
        A = np.empty((n, n), dtype=object)
        for j in range(n):
            for k in range(n):
                A[j, k] = D[j, k] + th[j] * th[k]
        return linalg.solve(A, th)

    def pi0(self, q, v):
        xi = self.reeb_at(q)
        c = odot(self.theta_at(q), v)
        return ovec([c * xi[i] for i in range(self.n)])

    def piH(self, q, v):
        p0 = self.pi0(q, v)
        return ovec([v[i] - p0[i] for i in range(self.n)])

    def pi_plus(self, q, v):
        vh = self.piH(q, v)
        Jv = matvec(self.J_at(q), vh)
        return ovec([0.5 * (vh[i] - 1j * Jv[i]) for i in range(self.n)])

    def pi_minus(self, q, v):
        vh = self.piH(q, v)
        Jv = matvec(self.J_at(q), vh)
        return ovec([0.5 * (vh[i] + 1j * Jv[i]) for i in range(self.n)])

    # -- pairings --------------------------------------------------------------

    def levi(self, q, u, w):
        """d(theta)(u, J w), the Levi pairing as a bilinear form."""
        Jw = matvec(self.J_at(q), w)
        return self.dtheta(q, u, Jw)

    def h_pair(self, q, Z, W):
        """Hermitian product of two holomorphic vectors (conjugate-linear in W)."""
        if self.h == "levi":
            return self.levi(q, Z, conj(_as_ovec(W)))
        return self.h(q, Z, W)

    def h_bilinear(self, q, Z, V):
        """Bilinear pairing of a holomorphic Z with an antiholomorphic V."""
        return self.h_pair(q, Z, conj(_as_ovec(V)))

    def metric(self, q, X, Y):
        """The Riemannian metric, extended complex-bilinearly."""
        Xp, Yp = self.pi_plus(q, X), self.pi_plus(q, Y)
        Xm, Ym = self.pi_minus(q, X), self.pi_minus(q, Y)
        th = self.theta_at(q)
        return (
            self.h_bilinear(q, Xp, Ym)
            + self.h_bilinear(q, Yp, Xm)
            + odot(th, X) * odot(th, Y)
        )

    def kahler_form(self, q, X, Y):
        """The fundamental 2-form: metric(J X, Y)."""
        JX = matvec(self.J_at(q), self.piH(q, X))
        return self.metric(q, JX, Y)

    # -- frames ------------------------------------------------------------------

    def frame_vectors(self, q):
        """The m holomorphic frame vectors at q (analytic or germ-built)."""
        return self._memo("frame", q, lambda: self._frame_vectors(q))

    def _frame_vectors(self, q):
        if self.frame is not None:
            return [_as_ovec(v) for v in self.frame(_as_ovec(q))]
        if self._germ is None:
            self._germ = FrameGerm(self, self.chart.center())
        return self._germ(q)

    def adapted_frame(self, q):
        """Full complex frame matrix: columns are the m holomorphic vectors,
        their conjugates, then the Reeb field."""
        q = _as_ovec(q)
        return self._memo("adapted_frame", q, lambda: self._adapted_frame(q))

    def _adapted_frame(self, q):
        eta = self.frame_vectors(q)
        xi = self.reeb_at(q)
        n = self.n
        B = np.empty((n, n), dtype=object)
        for a in range(self.m):
            for i in range(n):
                B[i, a] = eta[a][i]
                B[i, self.m + a] = conj(eta[a][i])
        for i in range(n):
            B[i, 2 * self.m] = xi[i]
        return B

    def coframe(self, q):
        """Rows dual to adapted_frame's columns; the last row is theta."""
        return self._memo("coframe", q, lambda: linalg.inv(self.adapted_frame(q)))

    def gram(self, q, eta=None):
        """Hermitian Gram matrix of the holomorphic frame."""
        q = _as_ovec(q)
        if eta is None:
            eta = self.frame_vectors(q)
        m = self.m
        G = np.empty((m, m), dtype=object)
        for a in range(m):
            for b in range(m):
                G[a, b] = self.h_pair(q, eta[a], eta[b])
        return G


class FrameGerm:
    """Holomorphic frame built by Gram-Schmidt with pivots frozen at a base.

    Candidates are the holomorphic projections of the coordinate basis.  The
    greedy pivot order is chosen once, at the base point, on primal residual
    norms; evaluation at any nearby point (including dual or batched points)
    replays that fixed order, so the frame is smooth and deterministic.
    """

    def __init__(self, S: PseudoHermitianStructure, base):
        self.S = S
        self.base = np.asarray(base, dtype=float)
        q0 = ovec(list(self.base))
        n = S.n
        cands = [S.pi_plus(q0, ovec([1.0 if i == k else 0.0 for i in range(n)]))
                 for k in range(n)]
        order = []
        frame = []
        for _ in range(S.m):
            best_k, best_norm, best_res = -1, 0.0, None
            for k in range(n):
                if k in order:
                    continue
                r = self._reduce(q0, cands[k], frame)
                nn = pmag(S.h_pair(q0, r, r))
                if nn > best_norm:
                    best_k, best_norm, best_res = k, nn, r
            if best_k < 0 or best_norm < 1e-10:
                raise DegenerateStructureError(
                    "holomorphic distribution degenerate at germ base"
                )
            order.append(best_k)
            frame.append(self._normalize(q0, best_res))
        self.order = order

    def _reduce(self, q, v, frame):
        out = v
        for u in frame:
            c = self.S.h_pair(q, out, u)
            out = ovec([out[i] - c * u[i] for i in range(len(out))])
        return out

    def _normalize(self, q, v):
        nn = sqrt(self.S.h_pair(q, v, v))
        return ovec([v[i] / nn for i in range(len(v))])

    def __call__(self, q):
        S = self.S
        q = _as_ovec(q)
        n = S.n
        frame = []
        for k in self.order:
            e = ovec([1.0 if i == k else 0.0 for i in range(n)])
            r = self._reduce(q, S.pi_plus(q, e), frame)
            frame.append(self._normalize(q, r))
        return frame
