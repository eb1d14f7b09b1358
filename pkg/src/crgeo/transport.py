"""Geodesics of the canonical connection, transport, and candidate isometries.

The geodesic system x' = v, v'^k = -Gamma^k_ij v^i v^j is integrated with a
fixed-step fourth-order scheme, 200 steps per unit parameter by default.
Parallel transport rides along the same stages, so the frame matrices and
the trajectory see identical connection evaluations.  The logarithm inverts
the time-one flow with a damped Newton iteration whose Jacobian comes from
centered differences of the flow itself.  All drivers accept a trailing
batch axis on velocities and targets; the connection tables broadcast over
it, which is what makes the Newton pencils affordable.

A candidate isometry is a linear frame transfer rho between tangent spaces
that preserves the pairing, the rotation, and the vertical direction.  The
induced map exp o rho o log is assembled here together with its diagnostic
report: pullback residuals of the metric, the rotation, and the contact
form, plus transfer residuals of curvature and torsion through the
transported frame, which are the obstructions the structure theory says
must vanish for the map to be an isometry.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .connection import coordinate_christoffels
from .curvature import curvature_components
from .dual import ovec
from .errors import (
    ChartDomainError,
    ContractViolation,
    IntegrationDomainError,
    NormalNeighborhoodError,
)
from .structures import PseudoHermitianStructure

__all__ = [
    "GeodesicPath",
    "TransportOperator",
    "IsometryCandidate",
    "PairedTransport",
    "JacobiField",
    "integrate_geodesic",
    "speed_drift",
    "geodesic_residual",
    "exp_map",
    "log_map",
    "parallel_transport",
    "jacobi_field",
    "metric_matrix",
    "real_orthonormal_frame",
    "frame_isometry",
    "nearest_frame_isometry",
    "cartan_map",
    "paired_transport",
    "isometry_report",
]


# -- pointwise tables as plain arrays -----------------------------------------


def _christoffels_num(S, x):
    """Connection coefficients at x as a real float array.

    x may be (n,) or (n, B); the result is (n, n, n) or (n, n, n, B).
    """
    n = S.n
    q = [x[i] for i in range(n)]
    G = coordinate_christoffels(S, q)
    if x.ndim == 1:
        out = np.empty((n, n, n))
        for idx in np.ndindex(G.shape):
            out[idx] = float(np.real(G[idx]))
        return out
    B = x.shape[1]
    out = np.empty((n, n, n, B))
    for idx in np.ndindex(G.shape):
        out[idx] = np.broadcast_to(np.real(G[idx]), (B,))
    return out


def metric_matrix(S, q):
    """Coordinate metric as a float matrix, (n, n) or (n, n, B) on a batch."""
    q = np.asarray(q, dtype=float)
    n = S.n
    ql = [q[i] for i in range(n)]
    basis = []
    for i in range(n):
        e = [0.0] * n
        e[i] = 1.0
        basis.append(ovec(e))
    shape = (n, n) if q.ndim == 1 else (n, n, q.shape[1])
    out = np.zeros(shape)
    for i in range(n):
        for j in range(i, n):
            val = np.real(S.metric(ql, basis[i], basis[j]))
            out[i, j] = val
            out[j, i] = val
    return out


def _reeb_num(S, q):
    q = np.asarray(q, dtype=float)
    xi = S.reeb_at([q[i] for i in range(S.n)])
    if q.ndim == 1:
        return np.array([float(np.real(xi[i])) for i in range(S.n)])
    return np.stack([np.broadcast_to(np.real(xi[i]), q.shape[1]) for i in range(S.n)])


def _J_num(S, q):
    q = np.asarray(q, dtype=float)
    J = S.J_at([q[i] for i in range(S.n)])
    n = S.n
    if q.ndim == 1:
        return np.array([[float(np.real(J[i, j])) for j in range(n)] for i in range(n)])
    B = q.shape[1]
    out = np.empty((n, n, B))
    for i in range(n):
        for j in range(n):
            out[i, j] = np.broadcast_to(np.real(J[i, j]), (B,))
    return out


def _theta_num(S, q):
    q = np.asarray(q, dtype=float)
    th = S.theta_at([q[i] for i in range(S.n)])
    if q.ndim == 1:
        return np.array([float(np.real(th[i])) for i in range(S.n)])
    return np.stack([np.broadcast_to(np.real(th[i]), q.shape[1]) for i in range(S.n)])


def real_orthonormal_frame(S, q):
    """Orthonormal real tangent basis at q: rotated plane pairs, then Reeb."""
    q = np.asarray(q, dtype=float)
    F = S.adapted_frame([q[i] for i in range(S.n)])
    n, m = S.n, S.m
    Fc = np.array([[complex(F[i, j]) for j in range(n)] for i in range(n)])
    E = np.empty((n, n))
    s = 1.0 / math.sqrt(2.0)
    for a in range(m):
        E[:, a] = (s * (Fc[:, a] + Fc[:, m + a])).real
        E[:, m + a] = (1j * s * (Fc[:, a] - Fc[:, m + a])).real
    E[:, 2 * m] = Fc[:, 2 * m].real
    return E


def _gnorms(S, q, v):
    """Metric norms of velocity columns at a base point (or batch)."""
    G = metric_matrix(S, q)
    if v.ndim == 1:
        return float(np.sqrt(max(v @ G @ v, 0.0)))
    if G.ndim == 2:
        G = G[:, :, None]
    vals = np.einsum("ib,ijb,jb->b", v, G, v)
    return np.sqrt(np.maximum(vals, 0.0))


# -- geodesic flow -------------------------------------------------------------


@dataclass
class GeodesicPath:
    """Discrete solution of the geodesic system on a uniform time grid."""

    base: np.ndarray
    initial_velocity: np.ndarray
    times: np.ndarray
    points: np.ndarray      # (N+1, n)
    velocities: np.ndarray  # (N+1, n)
    truncated: bool = False


@dataclass
class TransportOperator:
    """Parallel transport matrices along a path, one per grid node."""

    times: np.ndarray
    matrices: np.ndarray    # (N+1, n, n)

    def transport(self, v, k=-1):
        return self.matrices[k] @ np.asarray(v, dtype=float)


@dataclass
class _Span:
    times: np.ndarray
    points: np.ndarray      # (N+1, n) or (N+1, n, B)
    velocities: np.ndarray
    transports: np.ndarray  # (N+1, n, n) or (N+1, n, n, B); None if not tracked
    truncated: bool
    frozen: np.ndarray      # (B,) bool in batch mode


def _span(S, x0, v0, t_end, steps, transport=False):
    """Integrate the joint (point, velocity, transport) system.

    Scalar mode stops at the first step that would leave the chart and
    flags truncation.  Batch mode freezes exited columns in place and
    reports them in ``frozen``.
    """
    n = S.n
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    batch = v.ndim == 2
    if batch and x.ndim == 1:
        x = np.repeat(x[:, None], v.shape[1], axis=1)
    lo, hi = S.chart.bounds[:, 0], S.chart.bounds[:, 1]

    def inside(pt):
        if batch:
            return np.all((pt >= lo[:, None]) & (pt <= hi[:, None]), axis=0)
        return bool(np.all(pt >= lo) and np.all(pt <= hi))

    if not np.all(inside(x)):
        raise IntegrationDomainError("base point is outside the chart")

    P = None
    if transport:
        P = np.eye(n) if not batch else np.repeat(np.eye(n)[:, :, None], v.shape[1], axis=2)

    def rhs(px, pv, pP):
        G = _christoffels_num(S, px)
        if batch:
            a = -np.einsum("kijb,ib,jb->kb", G, pv, pv)
            dP = None if pP is None else -np.einsum("kijb,ib,jcb->kcb", G, pv, pP)
        else:
            a = -np.einsum("kij,i,j->k", G, pv, pv)
            dP = None if pP is None else -np.einsum("kij,i,jc->kc", G, pv, pP)
        return a, dP

    dt = t_end / steps
    xs, vs, Ps = [x.copy()], [v.copy()], [None if P is None else P.copy()]
    frozen = np.zeros(v.shape[1], dtype=bool) if batch else False
    truncated = False
    kept = steps
    for k in range(steps):
        a1, q1 = rhs(x, v, P)
        x2 = x + 0.5 * dt * v
        v2 = v + 0.5 * dt * a1
        P2 = None if P is None else P + 0.5 * dt * q1
        a2, q2 = rhs(x2, v2, P2)
        x3 = x + 0.5 * dt * v2
        v3 = v + 0.5 * dt * a2
        P3 = None if P is None else P + 0.5 * dt * q2
        a3, q3 = rhs(x3, v3, P3)
        x4 = x + dt * v3
        v4 = v + dt * a3
        P4 = None if P is None else P + dt * q3
        a4, q4 = rhs(x4, v4, P4)
        xn = x + (dt / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4)
        vn = v + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        Pn = None if P is None else P + (dt / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4)
        ok = inside(xn)
        if batch:
            good = np.isfinite(xn).all(axis=0) & np.isfinite(vn).all(axis=0)
            ok = ok & good
            stop = frozen | ~ok
            xn = np.where(stop[None, :], x, xn)
            vn = np.where(stop[None, :], v, vn)
            if Pn is not None:
                Pn = np.where(stop[None, None, :], P, Pn)
            frozen = stop
        elif not ok:
            truncated = True
            kept = k
            break
        x, v, P = xn, vn, Pn
        xs.append(x.copy())
        vs.append(v.copy())
        Ps.append(None if P is None else P.copy())

    times = np.arange(kept + 1) * dt
    pts = np.stack(xs)
    vels = np.stack(vs)
    trans = None if not transport else np.stack(Ps)
    return _Span(times, pts, vels, trans, truncated, frozen)


def _default_steps(t_end):
    return max(16, int(math.ceil(200.0 * abs(t_end))))


def integrate_geodesic(S: PseudoHermitianStructure, p, u, t_end=1.0, steps=None
                       ) -> GeodesicPath:
    """Geodesic through p with initial velocity u on a uniform grid.

    If the trajectory leaves the chart the path is cut at the last interior
    node and flagged as truncated.
    """
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    if steps is None:
        steps = _default_steps(t_end)
    sp = _span(S, p, u, t_end, steps, transport=False)
    return GeodesicPath(p, u, sp.times, sp.points, sp.velocities, sp.truncated)


def speed_drift(S: PseudoHermitianStructure, path: GeodesicPath) -> float:
    """Largest change of the metric speed along the path."""
    pts = path.points.T
    G = metric_matrix(S, pts)
    v = path.velocities.T
    speed = np.sqrt(np.einsum("ib,ijb,jb->b", v, G, v))
    return float(np.abs(speed - speed[0]).max())


def geodesic_residual(S: PseudoHermitianStructure, path: GeodesicPath) -> float:
    """Covariant acceleration residual at interior nodes.

    The time derivative of the velocity is taken with a five-point stencil,
    so the residual measures the integrator against the connection tables
    at fourth order.
    """
    v = path.velocities
    if len(path.times) < 5:
        return 0.0
    dt = path.times[1] - path.times[0]
    inner = slice(2, len(path.times) - 2)
    vdot = (-v[4:] + 8.0 * v[3:-1] - 8.0 * v[1:-3] + v[:-4]) / (12.0 * dt)
    pts = path.points[inner].T
    G = _christoffels_num(S, pts)
    acc = -np.einsum("kijb,bi,bj->bk", G, v[inner], v[inner])
    return float(np.abs(vdot - acc).max())


# -- exponential and logarithm -------------------------------------------------


def _arc_steps(S, p, u):
    s = _gnorms(S, p, u)
    s = float(np.max(s)) if np.ndim(s) else float(s)
    return max(32, int(math.ceil(200.0 * s)))


def _exp_final(S, p, U, steps):
    """Endpoints of unit-time geodesics; frozen mask marks chart exits."""
    sp = _span(S, p, U, 1.0, steps, transport=False)
    return sp.points[-1], sp.frozen


def exp_map(S: PseudoHermitianStructure, p, u, steps=None):
    """Point reached at time one along the geodesic with velocity u.

    u may be a single vector or a matrix of column velocities.  The step
    count scales with the metric arc length, so short arcs stay cheap.
    """
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    if steps is None:
        steps = _arc_steps(S, p, u)
    if u.ndim == 1:
        sp = _span(S, p, u, 1.0, steps, transport=False)
        if sp.truncated:
            raise IntegrationDomainError("geodesic left the chart before time one")
        return sp.points[-1]
    ends, frozen = _exp_final(S, p, u, steps)
    if np.any(frozen):
        raise IntegrationDomainError(
            f"{int(frozen.sum())} geodesics left the chart before time one")
    return ends


def log_map(S: PseudoHermitianStructure, p, q, max_iter=50, tol=1e-12,
            fd_step=1e-5, steps=None):
    """Initial velocity whose unit-time geodesic reaches q.

    Damped Newton iteration on the time-one flow: the first guess is the
    coordinate difference, the Jacobian is a centered difference of the
    flow, and a step is halved while it increases the residual.  Failure to
    converge raises NormalNeighborhoodError.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    scalar = q.ndim == 1
    Q = q[:, None] if scalar else q.copy()
    n, B = Q.shape
    lo, hi = S.chart.bounds[:, 0], S.chart.bounds[:, 1]
    if not np.all((Q >= lo[:, None]) & (Q <= hi[:, None])):
        raise ChartDomainError("log target lies outside the chart")
    U = Q - p[:, None]
    if steps is None:
        steps = _arc_steps(S, p, U)

    E, frozen = _exp_final(S, p, U, steps)
    res = np.where(frozen, np.inf, np.linalg.norm(E - Q, axis=0))
    for _ in range(max_iter):
        if res.max() <= tol:
            break
        # centered-difference Jacobian of the flow at the current velocities
        pencil = np.empty((n, 2 * n * B))
        for i in range(n):
            Up = U.copy()
            Up[i] += fd_step
            Um = U.copy()
            Um[i] -= fd_step
            pencil[:, 2 * i * B:(2 * i + 1) * B] = Up
            pencil[:, (2 * i + 1) * B:(2 * i + 2) * B] = Um
        ends, pfrozen = _exp_final(S, p, pencil, steps)
        Jac = np.empty((B, n, n))
        for i in range(n):
            hi = ends[:, 2 * i * B:(2 * i + 1) * B]
            lo = ends[:, (2 * i + 1) * B:(2 * i + 2) * B]
            Jac[:, :, i] = ((hi - lo) / (2.0 * fd_step)).T
        bad = pfrozen.reshape(2 * n, B).any(axis=0)
        Jac[bad] = np.eye(n)

        rhs = (E - Q).T.copy()
        rhs[~np.isfinite(rhs)] = 0.0
        try:
            delta = np.linalg.solve(Jac, rhs[:, :, None])[:, :, 0].T
        except np.linalg.LinAlgError:
            delta = np.stack(
                [np.linalg.lstsq(Jac[b], rhs[b], rcond=None)[0] for b in range(B)],
                axis=1)
        delta[:, bad] = 0.5 * U[:, bad]

        for _halving in range(5):
            Un = U - delta
            En, nfrozen = _exp_final(S, p, Un, steps)
            nres = np.where(nfrozen, np.inf, np.linalg.norm(En - Q, axis=0))
            worse = nres > res
            if not np.any(worse & (res < np.inf)):
                break
            delta[:, worse] *= 0.5
        improved = nres <= res
        U = np.where(improved[None, :], Un, U)
        E = np.where(improved[None, :], En, E)
        res = np.where(improved, nres, res)

    if res.max() > 1e-9:
        raise NormalNeighborhoodError(
            f"flow inversion stalled at residual {res.max():.3e}; "
            "target outside the working normal neighborhood")
    return U[:, 0] if scalar else U


def parallel_transport(S: PseudoHermitianStructure, path: GeodesicPath
                       ) -> TransportOperator:
    """Parallel frames along a geodesic path, integrated with its own grid."""
    steps = len(path.times) - 1
    t_end = float(path.times[-1])
    sp = _span(S, path.points[0], path.velocities[0], t_end, steps, transport=True)
    return TransportOperator(sp.times, sp.transports)


# -- variation fields ----------------------------------------------------------


@dataclass
class JacobiField:
    """Solution of the geodesic variation equation along a path."""

    times: np.ndarray
    components: np.ndarray             # (N+1, n) in the transported frame
    derivative_components: np.ndarray  # (N+1, n)
    vectors: np.ndarray                # (N+1, n) coordinate components


def _tab_num(table, B):
    """Object table with scalar or (B,) entries -> complex array (..., B)."""
    out = np.empty(table.shape + (B,), dtype=complex)
    for idx in np.ndindex(table.shape):
        out[idx] = np.broadcast_to(table[idx], (B,))
    return out


def jacobi_field(S: PseudoHermitianStructure, path: GeodesicPath, V0, V0prime
                 ) -> JacobiField:
    """Variation field with value V0 and covariant rate V0prime at the base.

    The field equation is solved componentwise in a parallel orthonormal
    frame: the curvature, torsion, and torsion-derivative coefficients are
    evaluated on the whole grid in one batched pass, interpolated, and the
    resulting linear system is integrated with the same stepper as the path.
    """
    V0 = np.asarray(V0, dtype=float)
    V0p = np.asarray(V0prime, dtype=float)
    n = S.n
    N = len(path.times) - 1
    op = parallel_transport(S, path)
    E0 = real_orthonormal_frame(S, path.points[0])
    frames = np.einsum("krs,sj->krj", op.matrices, E0)  # (N+1, n, n)

    pts = path.points.T
    data = curvature_components(S, [pts[i] for i in range(n)])
    B = N + 1
    CF = _tab_num(data.cd.coframe, B)
    FR = _tab_num(data.cd.frame_mat, B)
    Tn = _tab_num(data.T, B)
    Rn = _tab_num(data.R, B)
    nTn = _tab_num(data.nablaT, B)
    Gb = metric_matrix(S, pts)

    vel = path.velocities.T.astype(complex)
    EB = np.moveaxis(frames, 0, -1)                      # (n, n, B)
    gp = np.einsum("Aib,ib->Ab", CF, vel)
    EC = np.einsum("Aib,ijb->Ajb", CF, EB.astype(complex))

    TA = np.einsum("ABCb,Bb,Cjb->Ajb", Tn, gp, EC)
    tvec = np.einsum("iAb,Ajb->ijb", FR, TA).real
    RA = np.einsum("ABCDb,Bb,Cb,Djb->Ajb", Rn, gp, gp, EC)
    nTA = np.einsum("ABDCb,Bb,Djb,Cb->Ajb", nTn, gp, EC, gp)
    rvec = np.einsum("iAb,Ajb->ijb", FR, RA + nTA).real

    A1 = np.einsum("rib,rsb,sjb->jib", tvec, Gb, EB)
    A0 = np.einsum("rib,rsb,sjb->jib", rvec, Gb, EB)

    y = np.linalg.solve(frames[0], V0)
    yp = np.linalg.solve(frames[0], V0p)
    ys, yps = [y.copy()], [yp.copy()]
    if N > 0:
        t = path.times
        sA1 = CubicSpline(t, A1, axis=2)
        sA0 = CubicSpline(t, A0, axis=2)
        dt = t[1] - t[0]

        def acc(tk, yk, ypk):
            return sA0(tk) @ yk + sA1(tk) @ ypk

        for k in range(N):
            tk = t[k]
            a1 = acc(tk, y, yp)
            y2 = y + 0.5 * dt * yp
            yp2 = yp + 0.5 * dt * a1
            a2 = acc(tk + 0.5 * dt, y2, yp2)
            y3 = y + 0.5 * dt * yp2
            yp3 = yp + 0.5 * dt * a2
            a3 = acc(tk + 0.5 * dt, y3, yp3)
            y4 = y + dt * yp3
            yp4 = yp + dt * a3
            a4 = acc(tk + dt, y4, yp4)
            y = y + (dt / 6.0) * (yp + 2.0 * yp2 + 2.0 * yp3 + yp4)
            yp = yp + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            ys.append(y.copy())
            yps.append(yp.copy())
    comps = np.stack(ys)
    dcomps = np.stack(yps)
    vectors = np.einsum("krj,kj->kr", frames, comps)
    return JacobiField(path.times, comps, dcomps, vectors)


# -- candidate isometries ------------------------------------------------------


def _frame_complex(S, q):
    F = S.adapted_frame([float(c) for c in np.asarray(q, dtype=float)])
    n = S.n
    return np.array([[complex(F[i, j]) for j in range(n)] for i in range(n)])


def _block_unitary(m, n, unitary):
    U = np.eye(m, dtype=complex) if unitary is None else np.asarray(unitary, complex)
    W = np.zeros((n, n), dtype=complex)
    W[:m, :m] = U
    W[m:2 * m, m:2 * m] = U.conj()
    W[n - 1, n - 1] = 1.0
    return W


def frame_isometry(source: PseudoHermitianStructure, p,
                   target: PseudoHermitianStructure, p_image, unitary=None):
    """Linear tangent map carrying one adapted frame to another.

    The optional ``unitary`` block rotates the holomorphic frame legs before
    the transfer; any choice yields a pairing-, rotation-, and Reeb-
    preserving map.
    """
    F = _frame_complex(source, p)
    Ft = _frame_complex(target, p_image)
    W = _block_unitary(source.m, source.n, unitary)
    rho = Ft @ W @ np.linalg.inv(F)
    if np.abs(rho.imag).max() > 1e-9:
        raise ContractViolation("frame transfer is not a real matrix")
    return rho.real


def nearest_frame_isometry(source, p, target, p_image, rho_approx):
    """Project an approximate tangent map onto the admissible transfers.

    The candidate is expressed in the adapted frames, its holomorphic block
    is replaced by the nearest unitary factor, and the transfer is rebuilt.
    """
    F = _frame_complex(source, p)
    Ft = _frame_complex(target, p_image)
    W = np.linalg.inv(Ft) @ np.asarray(rho_approx, dtype=float) @ F
    m = source.m
    u, _, vt = np.linalg.svd(W[:m, :m])
    return frame_isometry(source, p, target, p_image, unitary=u @ vt)


@dataclass
class IsometryCandidate:
    """Base points plus a tangent transfer that respects the structure."""

    source: PseudoHermitianStructure
    target: PseudoHermitianStructure
    p: np.ndarray
    p_image: np.ndarray
    rho: np.ndarray
    radius: float = 0.3

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.p_image = np.asarray(self.p_image, dtype=float)
        self.rho = np.asarray(self.rho, dtype=float)
        G = metric_matrix(self.source, self.p)
        Gt = metric_matrix(self.target, self.p_image)
        if np.abs(self.rho.T @ Gt @ self.rho - G).max() > 1e-8:
            raise ContractViolation("tangent transfer does not preserve the metric")
        J = _J_num(self.source, self.p)
        Jt = _J_num(self.target, self.p_image)
        if np.abs(Jt @ self.rho - self.rho @ J).max() > 1e-8:
            raise ContractViolation("tangent transfer does not commute with J")
        xi = _reeb_num(self.source, self.p)
        xit = _reeb_num(self.target, self.p_image)
        if np.abs(self.rho @ xi - xit).max() > 1e-8:
            raise ContractViolation("tangent transfer moves the Reeb direction")


def cartan_map(cand: IsometryCandidate, q):
    """Distance-matching map: pull back to velocities, transfer, flow out."""
    q = np.asarray(q, dtype=float)
    U = log_map(cand.source, cand.p, q)
    if q.ndim == 1:
        return exp_map(cand.target, cand.p_image, cand.rho @ U)
    return exp_map(cand.target, cand.p_image, cand.rho @ U)


@dataclass
class PairedTransport:
    """Frame transfer propagated along matched geodesics."""

    source_path: GeodesicPath
    target_path: GeodesicPath
    source_matrices: np.ndarray
    target_matrices: np.ndarray
    matrices: np.ndarray    # (N+1, n, n): transport o rho o inverse transport


def paired_transport(cand: IsometryCandidate, u, t_end=1.0, steps=None
                     ) -> PairedTransport:
    """Propagate the tangent transfer along the geodesics that u generates."""
    u = np.asarray(u, dtype=float)
    if steps is None:
        steps = _default_steps(t_end)
    sp = _span(cand.source, cand.p, u, t_end, steps, transport=True)
    tp = _span(cand.target, cand.p_image, cand.rho @ u, t_end, steps, transport=True)
    if sp.truncated or tp.truncated:
        raise IntegrationDomainError("matched geodesics left the chart")
    inv = np.linalg.inv(sp.transports)
    phi = np.einsum("krs,st,ktu->kru", tp.transports, cand.rho, inv)
    return PairedTransport(
        GeodesicPath(cand.p, u, sp.times, sp.points, sp.velocities, False),
        GeodesicPath(cand.p_image, cand.rho @ u, tp.times, tp.points,
                     tp.velocities, False),
        sp.transports, tp.transports, phi)


def _coordinate_curvature(S, pts):
    """Lowered curvature tensor in coordinates at a batch of points."""
    n = S.n
    data = curvature_components(S, [pts[i] for i in range(n)])
    B = pts.shape[1]
    CF = _tab_num(data.cd.coframe, B)
    RL = _tab_num(data.Rlow, B)
    Rc = np.einsum("ABCDq,Aiq,Bjq,Ckq,Dlq->ijklq", RL, CF, CF, CF, CF).real
    Tn = _tab_num(data.T, B)
    FR = _tab_num(data.cd.frame_mat, B)
    tau = np.einsum("iAq,ACq,Cjq->ijq", FR, Tn[:, 2 * S.m, :, :], CF).real
    return Rc, tau


def isometry_report(cand: IsometryCandidate, samples=20, seed=0, fd_step=1e-4,
                    node_fractions=(0.5, 1.0)):
    """Residual diagnostics for the candidate's distance-matching map.

    Pullback residuals of the metric, rotation, and contact form are taken
    at sample points in a coordinate ball around the base; the differential
    comes from centered differences of the map.  Curvature and torsion are
    transferred through the propagated frame along each sample geodesic and
    compared against the target values, which checks the hypotheses under
    which the map is an isometry.
    """
    S, T = cand.source, cand.target
    n = S.n
    p, pt = cand.p, cand.p_image
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n, samples))
    dirs /= np.linalg.norm(dirs, axis=0)
    radii = cand.radius * rng.uniform(size=samples) ** (1.0 / n)
    Q = p[:, None] + dirs * radii

    # one stacked call: centers, coordinate pencils, and the base pencil
    blocks = [Q]
    for i in range(n):
        e = np.zeros((n, 1))
        e[i] = fd_step
        blocks.append(Q + e)
        blocks.append(Q - e)
    basep = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = fd_step
        basep.append(p + e)
        basep.append(p - e)
    blocks.append(np.stack(basep, axis=1))
    allpts = np.concatenate(blocks, axis=1)

    U = log_map(S, p, allpts)
    F = exp_map(T, pt, cand.rho @ U)
    centers = F[:, :samples]
    df = np.empty((samples, n, n))
    for i in range(n):
        hi = F[:, (1 + 2 * i) * samples:(2 + 2 * i) * samples]
        lo = F[:, (2 + 2 * i) * samples:(3 + 2 * i) * samples]
        df[:, :, i] = ((hi - lo) / (2.0 * fd_step)).T
    tail = F[:, (1 + 2 * n) * samples:]
    dfp = np.empty((n, n))
    for i in range(n):
        dfp[:, i] = (tail[:, 2 * i] - tail[:, 2 * i + 1]) / (2.0 * fd_step)

    G = metric_matrix(S, Q)
    Gt = metric_matrix(T, centers)
    met = np.einsum("qri,rsq,qsj->ijq", df, Gt, df) - G
    J = _J_num(S, Q)
    Jt = _J_num(T, centers)
    jres = np.einsum("rsq,qsj->rjq", Jt, df) - np.einsum("qrj,jsq->rsq", df, J)
    th = _theta_num(S, Q)
    tht = _theta_num(T, centers)
    thres = np.einsum("rq,qri->iq", tht, df) - th

    # hypothesis transfer along the sample geodesics
    steps = _arc_steps(S, p, U[:, :samples])
    sp = _span(S, p, U[:, :samples], 1.0, steps, transport=True)
    tp = _span(T, pt, cand.rho @ U[:, :samples], 1.0, steps, transport=True)
    curv_res = 0.0
    tors_res = 0.0
    for frac in node_fractions:
        k = int(round(frac * steps))
        phi = np.einsum(
            "rsq,st,qtu->ruq", tp.transports[k], cand.rho,
            np.linalg.inv(np.moveaxis(sp.transports[k], -1, 0)))
        Rs, taus = _coordinate_curvature(S, sp.points[k])
        Rt, taut = _coordinate_curvature(T, tp.points[k])
        pulled = np.einsum("abcdq,aiq,bjq,ckq,dlq->ijklq", Rt, phi, phi, phi, phi)
        curv_res = max(curv_res, float(np.abs(pulled - Rs).max()))
        moved = np.einsum("ijq,jkq->ikq", phi, taus)
        want = np.einsum("ijq,jkq->ikq", taut, phi)
        tors_res = max(tors_res, float(np.abs(moved - want).max()))

    report = {
        "samples": int(samples),
        "radius": float(cand.radius),
        "seed": int(seed),
        "metric_residual": float(np.abs(met).max()),
        "J_residual": float(np.abs(jres).max()),
        "theta_residual": float(np.abs(thres).max()),
        "df_p_vs_rho": float(np.abs(dfp - cand.rho).max()),
        "curvature_transfer": curv_res,
        "torsion_transfer": tors_res,
        "per_sample_metric": [float(np.abs(met[:, :, q]).max()) for q in range(samples)],
    }
    report["hypothesis_ok"] = bool(curv_res <= 1e-4 and tors_res <= 1e-4)
    return report
