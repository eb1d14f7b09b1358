"""Geodesic, transport, and isometry-map oracles.

Closed-form checks come from the flat model, where the adapted frame is
invariant under the group translations: geodesics through the origin are
one-parameter subgroups, and the distance-matching map built from a frame
transfer must coincide with the translation itself.  The remaining checks
are exact invariants (speed, transported pairings, affine rescaling) and
cross-validations between independently computed quantities (variation
fields against the second-order field equation, finite differences of the
flow map against its predicted differential).
"""

import numpy as np
import pytest

from crgeo.curvature import curvature_components, torsion_vector
from crgeo.errors import ChartDomainError, ContractViolation, NormalNeighborhoodError
from crgeo.models import bergman_cylinder, cr_sphere, heisenberg
from crgeo.transport import (
    IsometryCandidate,
    cartan_map,
    exp_map,
    frame_isometry,
    geodesic_residual,
    integrate_geodesic,
    isometry_report,
    jacobi_field,
    log_map,
    metric_matrix,
    nearest_frame_isometry,
    paired_transport,
    parallel_transport,
    real_orthonormal_frame,
    speed_drift,
)

HEIS1 = heisenberg(1)
SPH1 = cr_sphere(1)
BERG1 = bergman_cylinder(1)
HEIS2 = heisenberg(2)

MODELS = [("heis", HEIS1), ("sphere", SPH1), ("bergman", BERG1), ("heis2", HEIS2)]
IDS = [name for name, _ in MODELS]


def base_point(S, seed=0, scale=0.15):
    rng = np.random.default_rng(seed)
    return rng.uniform(-scale, scale, S.n)


def gnorm(S, p, v):
    G = metric_matrix(S, p)
    return float(np.sqrt(v @ G @ v))


def rand_vec(S, p, seed, size=0.4):
    # random direction rescaled to a prescribed metric norm
    rng = np.random.default_rng(seed)
    v = rng.normal(size=S.n)
    return v * (size / gnorm(S, p, v))


class TestGeodesicIntegration:
    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_zero_velocity_gives_constant_path(self, name, S):
        p = base_point(S, 1)
        path = integrate_geodesic(S, p, np.zeros(S.n), 1.0)
        assert not path.truncated
        assert np.abs(path.points - p).max() < 1e-14
        assert np.abs(path.velocities).max() < 1e-14

    def test_flat_horizontal_axis_is_straight(self):
        path = integrate_geodesic(HEIS1, np.zeros(3), np.array([1.0, 0, 0]), 1.0)
        want = np.zeros_like(path.points)
        want[:, 0] = path.times
        assert np.abs(path.points - want).max() < 1e-12
        assert np.abs(path.velocities - np.array([1.0, 0, 0])).max() < 1e-12

    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_reeb_flow_is_a_geodesic(self, name, S):
        # the vertical field is parallel, so its integral curves are geodesics
        p = base_point(S, 2)
        xi = np.array([float(np.real(c)) for c in S.reeb_at(list(p))])
        path = integrate_geodesic(S, p, 0.5 * xi, 1.0)
        for k in [0, len(path.times) // 2, -1]:
            q = list(path.points[k])
            xi_q = np.array([float(np.real(c)) for c in S.reeb_at(q)])
            assert np.abs(path.velocities[k] - 0.5 * xi_q).max() < 1e-9

    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_affine_rescaling_of_velocity(self, name, S):
        p = base_point(S, 3)
        u = rand_vec(S, p, 30, 0.4)
        a = integrate_geodesic(S, p, u, 1.0, steps=100)
        b = integrate_geodesic(S, p, 2.0 * u, 0.5, steps=50)
        assert np.abs(a.points[-1] - b.points[-1]).max() < 1e-10
        assert np.abs(a.points[::2] - b.points).max() < 1e-10

    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_speed_is_conserved(self, name, S):
        p = base_point(S, 4)
        u = rand_vec(S, p, 40, 0.5)
        path = integrate_geodesic(S, p, u, 1.0)
        assert speed_drift(S, path) < 1e-8

    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_covariant_acceleration_vanishes(self, name, S):
        p = base_point(S, 5)
        u = rand_vec(S, p, 50, 0.5)
        path = integrate_geodesic(S, p, u, 1.0)
        assert geodesic_residual(S, path) < 5e-7

    def test_leaving_the_chart_truncates(self):
        path = integrate_geodesic(HEIS1, np.array([1.2, 0.0, 0.0]),
                                  np.array([1.0, 0.0, 0.0]), 1.0)
        assert path.truncated
        assert path.times[-1] < 1.0
        assert path.points[-1][0] <= 1.5
        assert len(path.times) == len(path.points) == len(path.velocities)

    def test_batched_integration_matches_loop(self):
        S = SPH1
        p = base_point(S, 6)
        rng = np.random.default_rng(7)
        U = rng.normal(size=(S.n, 5)) * 0.3
        ends = exp_map(S, p, U)
        for b in range(5):
            one = exp_map(S, p, U[:, b])
            assert np.abs(ends[:, b] - one).max() < 1e-11


class TestExpLog:
    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_exp_of_zero_is_base(self, name, S):
        p = base_point(S, 8)
        assert np.abs(exp_map(S, p, np.zeros(S.n)) - p).max() < 1e-14

    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_log_at_base_is_zero(self, name, S):
        p = base_point(S, 9)
        assert np.abs(log_map(S, p, p)).max() < 1e-12

    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_log_inverts_exp(self, name, S):
        p = base_point(S, 10)
        size = 0.2 if S.m > 1 else 0.3
        U = np.stack([rand_vec(S, p, 100 + seed, size) for seed in range(3)], axis=1)
        Q = exp_map(S, p, U)
        V = log_map(S, p, Q)
        assert np.abs(V - U).max() < 1e-7

    @pytest.mark.parametrize("name,S", [m for m in MODELS[:3]], ids=IDS[:3])
    def test_exp_inverts_log(self, name, S):
        p = base_point(S, 11)
        rng = np.random.default_rng(12)
        q = p + rng.uniform(-0.15, 0.15, S.n)
        u = log_map(S, p, q)
        assert np.abs(exp_map(S, p, u) - q).max() < 1e-9

    def test_flat_exponential_is_linear_at_origin(self):
        # one-parameter subgroups through the identity are coordinate rays
        rng = np.random.default_rng(44)
        u = rng.uniform(-0.5, 0.5, 3)
        assert np.abs(exp_map(HEIS1, np.zeros(3), u) - u).max() < 1e-12
        assert np.abs(log_map(HEIS1, np.zeros(3), u) - u).max() < 1e-11

    def test_target_outside_chart_raises(self):
        with pytest.raises(ChartDomainError):
            log_map(HEIS1, np.zeros(3), np.array([1.7, 0.0, 0.0]))

    def test_starved_inversion_raises(self):
        S = SPH1
        p = np.zeros(3)
        q = np.array([0.25, -0.2, 0.15])
        with pytest.raises(NormalNeighborhoodError):
            log_map(S, p, q, max_iter=1)


class TestParallelTransport:
    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_reeb_goes_to_reeb(self, name, S):
        p = base_point(S, 13)
        u = rand_vec(S, p, 130, 0.4)
        path = integrate_geodesic(S, p, u, 1.0, steps=100)
        op = parallel_transport(S, path)
        xi_p = np.array([float(np.real(c)) for c in S.reeb_at(list(p))])
        for k in [25, 50, 100]:
            xi_q = np.array(
                [float(np.real(c)) for c in S.reeb_at(list(path.points[k]))])
            assert np.abs(op.matrices[k] @ xi_p - xi_q).max() < 1e-8

    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_metric_pairing_is_preserved(self, name, S):
        p = base_point(S, 14)
        u = rand_vec(S, p, 140, 0.4)
        path = integrate_geodesic(S, p, u, 1.0, steps=100)
        op = parallel_transport(S, path)
        G0 = metric_matrix(S, p)
        for k in [33, 100]:
            Gk = metric_matrix(S, path.points[k])
            P = op.matrices[k]
            assert np.abs(P.T @ Gk @ P - G0).max() < 1e-8

    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_rotation_commutes_with_transport(self, name, S):
        p = base_point(S, 15)
        u = rand_vec(S, p, 150, 0.4)
        path = integrate_geodesic(S, p, u, 1.0, steps=100)
        op = parallel_transport(S, path)
        J0 = np.array([[complex(c) for c in row] for row in S.J_at(list(p))]).real
        for k in [50, 100]:
            Jk = np.array([[complex(c) for c in row]
                           for row in S.J_at(list(path.points[k]))]).real
            P = op.matrices[k]
            assert np.abs(Jk @ P - P @ J0).max() < 1e-8

    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_velocity_is_self_transported(self, name, S):
        p = base_point(S, 16)
        u = rand_vec(S, p, 160, 0.4)
        path = integrate_geodesic(S, p, u, 1.0, steps=100)
        op = parallel_transport(S, path)
        for k in [37, 100]:
            assert np.abs(op.matrices[k] @ u - path.velocities[k]).max() < 1e-9

    def test_orthonormal_frame_stays_orthonormal(self):
        S = SPH1
        p = base_point(S, 17)
        E = real_orthonormal_frame(S, p)
        G = metric_matrix(S, p)
        assert np.abs(E.T @ G @ E - np.eye(S.n)).max() < 1e-10
        xi = np.array([float(np.real(c)) for c in S.reeb_at(list(p))])
        assert np.abs(E[:, -1] - xi).max() < 1e-12


class TestJacobiFields:
    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_zero_data_gives_zero_field(self, name, S):
        p = base_point(S, 18)
        u = rand_vec(S, p, 180, 0.4)
        path = integrate_geodesic(S, p, u, 1.0, steps=100)
        fld = jacobi_field(S, path, np.zeros(S.n), np.zeros(S.n))
        assert np.abs(fld.vectors).max() < 1e-12

    @pytest.mark.parametrize("name,S", [m for m in MODELS[:3]], ids=IDS[:3])
    def test_velocity_and_its_stretch_solve_the_field_equation(self, name, S):
        # V = gamma' and V = t gamma' are variation fields of reparametrizations
        p = base_point(S, 19)
        u = rand_vec(S, p, 190, 0.4)
        path = integrate_geodesic(S, p, u, 1.0, steps=100)
        fld = jacobi_field(S, path, u, np.zeros(S.n))
        assert np.abs(fld.vectors - path.velocities).max() < 1e-8
        fld2 = jacobi_field(S, path, np.zeros(S.n), u)
        want = path.velocities * path.times[:, None]
        assert np.abs(fld2.vectors - want).max() < 1e-8

    @pytest.mark.parametrize("name,S", MODELS, ids=IDS)
    def test_field_matches_flow_map_differential(self, name, S):
        # d/ds exp_p(t(u + s v)) solves the field equation with V(0)=0,
        # (nabla V)(0)=v; compare against a centered difference of the flow
        p = base_point(S, 20)
        size = 0.3 if S.m > 1 else 0.5
        u = rand_vec(S, p, 200, size)
        v = rand_vec(S, p, 201, size)
        path = integrate_geodesic(S, p, u, 1.0, steps=100)
        fld = jacobi_field(S, path, np.zeros(S.n), v)
        h = 1e-5
        plus = integrate_geodesic(S, p, u + h * v, 1.0, steps=100)
        minus = integrate_geodesic(S, p, u - h * v, 1.0, steps=100)
        fd = (plus.points - minus.points) / (2.0 * h)
        scale = max(1.0, np.abs(fd).max())
        assert np.abs(fld.vectors - fd).max() < 1e-5 * scale

    @pytest.mark.parametrize("name,S", [m for m in MODELS[:3]], ids=IDS[:3])
    def test_field_matches_general_variation(self, name, S):
        # geodesic variation with moving base: the s-rate at s=0 must solve
        # the field equation with data V(0)=c'(0), (nabla V)(0) given by the
        # transported velocity correction that includes the torsion term
        p = base_point(S, 21)
        u = rand_vec(S, p, 210, 0.45)
        V0 = rand_vec(S, p, 211, 0.3)
        V0p = rand_vec(S, p, 212, 0.35)
        path = integrate_geodesic(S, p, u, 1.0, steps=100)
        fld = jacobi_field(S, path, V0, V0p)

        tv = torsion_vector(S, list(p), list(u), list(V0))
        tv = np.array([float(np.real(complex(c))) for c in tv])
        h = 1e-4
        sides = []
        for sgn in (1.0, -1.0):
            c = integrate_geodesic(S, p, sgn * V0, h, steps=8)
            P = parallel_transport(S, c).matrices[-1]
            w = P @ (u + sgn * h * (V0p - tv))
            sides.append(integrate_geodesic(S, list(c.points[-1]), w, 1.0,
                                            steps=100))
        fd = (sides[0].points - sides[1].points) / (2.0 * h)
        scale = max(1.0, np.abs(fd).max())
        assert np.abs(fld.vectors - fd).max() < 1e-5 * scale


class TestFrameIsometry:
    def test_frame_transfer_is_an_isometry(self):
        for S, T in [(HEIS1, HEIS1), (SPH1, SPH1), (HEIS1, SPH1)]:
            p = base_point(S, 22)
            q = base_point(T, 23)
            rho = frame_isometry(S, p, T, q)
            G = metric_matrix(S, p)
            Gt = metric_matrix(T, q)
            assert np.abs(rho.T @ Gt @ rho - G).max() < 1e-10
            J = np.array([[complex(c) for c in row] for row in S.J_at(list(p))]).real
            Jt = np.array([[complex(c) for c in row] for row in T.J_at(list(q))]).real
            assert np.abs(Jt @ rho - rho @ J).max() < 1e-10
            xi = np.array([float(np.real(c)) for c in S.reeb_at(list(p))])
            xit = np.array([float(np.real(c)) for c in T.reeb_at(list(q))])
            assert np.abs(rho @ xi - xit).max() < 1e-10

    def test_unitary_parameter_rotates_the_transfer(self):
        S = SPH1
        p = base_point(S, 24)
        q = base_point(S, 25)
        th = 0.7
        U = np.array([[np.exp(1j * th)]])
        rho = frame_isometry(S, p, S, q, unitary=U)
        cand = IsometryCandidate(S, S, p, q, rho)
        assert cand.radius > 0

    def test_candidate_rejects_non_isometry(self):
        p = base_point(HEIS1, 26)
        q = base_point(HEIS1, 27)
        rho = frame_isometry(HEIS1, p, HEIS1, q)
        bad = rho.copy()
        bad[0, 0] += 0.05
        with pytest.raises(ContractViolation):
            IsometryCandidate(HEIS1, HEIS1, p, q, bad)

    def test_projection_recovers_perturbed_transfer(self):
        S = SPH1
        p = base_point(S, 28)
        q = base_point(S, 29)
        rho = frame_isometry(S, p, S, q)
        noisy = rho + 1e-6 * np.arange(9).reshape(3, 3)
        fixed = nearest_frame_isometry(S, p, S, q, noisy)
        assert np.abs(fixed - rho).max() < 1e-5
        IsometryCandidate(S, S, p, q, fixed)


class TestCartanMap:
    def test_flat_translation_oracle(self):
        # with the origin frame moved by a frame transfer, the distance
        # matching map must equal the group translation
        S = HEIS1
        p = np.zeros(3)
        pt = np.array([0.5, -0.3, 0.2])
        rho = frame_isometry(S, p, S, pt)
        dL = np.array([[1.0, 0, 0], [0, 1.0, 0], [2 * pt[1], -2 * pt[0], 1.0]])
        assert np.abs(rho - dL).max() < 1e-12
        cand = IsometryCandidate(S, S, p, pt, rho)
        rng = np.random.default_rng(31)
        Q = rng.uniform(-0.3, 0.3, size=(3, 6))
        F = cartan_map(cand, Q)
        want = np.stack([
            pt[0] + Q[0], pt[1] + Q[1],
            pt[2] + Q[2] + 2 * pt[1] * Q[0] - 2 * pt[0] * Q[1]])
        assert np.abs(F - want).max() < 1e-7
        one = cartan_map(cand, Q[:, 2])
        assert np.abs(one - want[:, 2]).max() < 1e-7

    def test_base_maps_to_image_base(self):
        S = SPH1
        p = base_point(S, 32)
        pt = base_point(S, 33)
        cand = IsometryCandidate(S, S, p, pt, frame_isometry(S, p, S, pt))
        assert np.abs(cartan_map(cand, p) - pt).max() < 1e-10

    def test_two_base_points_give_the_same_map(self):
        # rebuilding the map from a nearby base point with the transported
        # frame data must reproduce it on the shared domain
        S = SPH1
        p1 = np.array([0.05, -0.04, 0.03])
        pt1 = np.array([-0.12, 0.1, -0.06])
        cand1 = IsometryCandidate(S, S, p1, pt1, frame_isometry(S, p1, S, pt1))
        p2 = p1 + np.array([0.08, 0.05, -0.06])
        pt2 = cartan_map(cand1, p2)
        h = 1e-4
        cols = []
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            pair = np.stack([p2 + e, p2 - e], axis=1)
            im = cartan_map(cand1, pair)
            cols.append((im[:, 0] - im[:, 1]) / (2 * h))
        rho2 = nearest_frame_isometry(S, p2, S, pt2, np.stack(cols, axis=1))
        cand2 = IsometryCandidate(S, S, p2, pt2, rho2)
        rng = np.random.default_rng(34)
        Q = p2[:, None] + rng.uniform(-0.12, 0.12, size=(3, 4))
        F1 = cartan_map(cand1, Q)
        F2 = cartan_map(cand2, Q)
        assert np.abs(F1 - F2).max() < 1e-5


class TestIsometryReport:
    @pytest.mark.parametrize("name,S", [m for m in MODELS[:3]], ids=IDS[:3])
    def test_matched_pair_passes(self, name, S):
        p = base_point(S, 35, 0.1)
        pt = base_point(S, 36, 0.1)
        cand = IsometryCandidate(S, S, p, pt, frame_isometry(S, p, S, pt))
        rep = isometry_report(cand, samples=6, seed=5)
        assert rep["metric_residual"] < 1e-5
        assert rep["J_residual"] < 1e-5
        assert rep["theta_residual"] < 1e-5
        assert rep["df_p_vs_rho"] < 1e-6
        assert rep["hypothesis_ok"]

    def test_mismatched_pair_is_flagged(self):
        S, T = HEIS1, SPH1
        p = base_point(S, 37, 0.1)
        pt = base_point(T, 38, 0.1)
        cand = IsometryCandidate(S, T, p, pt, frame_isometry(S, p, T, pt))
        rep = isometry_report(cand, samples=6, seed=6)
        assert not rep["hypothesis_ok"]
        assert rep["curvature_transfer"] > 1e-2
        assert rep["metric_residual"] > 1e-4

    def test_transfer_frames_match_invariants(self):
        # the frame transfer propagated along paired geodesics stays an
        # isometry, fixes the vertical fields, and carries torsion to torsion
        S = SPH1
        p = base_point(S, 39, 0.1)
        pt = base_point(S, 40, 0.1)
        cand = IsometryCandidate(S, S, p, pt, frame_isometry(S, p, S, pt))
        u = rand_vec(S, p, 41, 0.35)
        tr = paired_transport(cand, u, steps=100)
        assert np.abs(tr.matrices[0] - cand.rho).max() < 1e-12
        for k in [50, 100]:
            q = tr.source_path.points[k]
            qt = tr.target_path.points[k]
            phi = tr.matrices[k]
            G = metric_matrix(S, q)
            Gt = metric_matrix(S, qt)
            assert np.abs(phi.T @ Gt @ phi - G).max() < 1e-7
            xi = np.array([float(np.real(c)) for c in S.reeb_at(list(q))])
            xit = np.array([float(np.real(c)) for c in S.reeb_at(list(qt))])
            assert np.abs(phi @ xi - xit).max() < 1e-7
            rng = np.random.default_rng(42 + k)
            for _ in range(3):
                x, y = rng.normal(size=(2, 3))
                tq = torsion_vector(S, list(q), list(x), list(y))
                tq = np.array([float(np.real(complex(c))) for c in tq])
                tqt = torsion_vector(S, list(qt), list(phi @ x), list(phi @ y))
                tqt = np.array([float(np.real(complex(c))) for c in tqt])
                assert np.abs(phi @ tq - tqt).max() < 1e-5
