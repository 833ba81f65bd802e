"""The difference tensor, its direction fields, and the Bers jet machinery."""

import numpy as np
import pytest

from caplab.domains import Domain
from caplab.errors import SignatureError, SingularPointError
from caplab.families import FamilyKind
from caplab.geometry import fundamental_forms
from caplab.sigma import (
    angle_distance_mod_pi,
    angle_in_frame,
    asymptotic_directions,
    boundary_angle_audit,
    difference_function,
    direction_fields,
    hess_re_alpha_zn,
    leading_harmonic_jet,
    principal_directions,
    sigma_at,
    sigma_grid,
    sigma_model_consistency,
    sigma_singularities,
)
from caplab.surfaces import (
    GraphFuncs,
    critical_catenoid,
    graph_bundle,
    graph_monkey,
    graph_saddle,
    harmonic_graph,
    sphere_patch,
)

from helpers import implicit_ii_oracle


def _uv_graph(c=1.0):
    return graph_bundle(GraphFuncs(
        h=lambda u, v: c * u * v,
        hu=lambda u, v: c * np.asarray(v, float) * np.ones_like(np.asarray(u, float)),
        hv=lambda u, v: c * np.asarray(u, float) * np.ones_like(np.asarray(v, float)),
        huu=lambda u, v: np.zeros(np.broadcast_shapes(np.shape(u), np.shape(v))),
        huv=lambda u, v: c * np.ones(np.broadcast_shapes(np.shape(u), np.shape(v))),
        hvv=lambda u, v: np.zeros(np.broadcast_shapes(np.shape(u), np.shape(v))),
    ), "uv_graph")


class TestSigmaAt:
    def test_cap_against_matching_family_vanishes(self, euclidean):
        cap = sphere_patch(np.array([0, 0, 0.5]), 1 / 1.5, orient=1)
        s, _ = sigma_at(euclidean, cap.parametric, FamilyKind.cmc_spheres(1.5), 0.8, 0.3)
        assert np.linalg.norm(s) < 1e-10

    def test_saddle_vs_planes(self, euclidean):
        sb = graph_saddle(0.5)
        s, _ = sigma_at(euclidean, sb.parametric, FamilyKind.planes(), 0.0, 0.0)
        assert np.allclose(s, np.diag([1.0, -1.0]))

    def test_uv_graph_vs_planes(self, euclidean):
        s, _ = sigma_at(euclidean, _uv_graph().parametric, FamilyKind.planes(), 0.0, 0.0)
        assert np.allclose(s, [[0.0, 1.0], [1.0, 0.0]])

    def test_member_route_matches_shape_operator_oracle(self, euclidean, rng):
        # II of the member via its implicit Hessian, entirely off the
        # member_graph code path
        sb = graph_saddle(0.4)
        kind = FamilyKind.cmc_spheres(0.8)
        u, v = rng.uniform(-0.5, 0.5, size=2)
        sig, ff = sigma_at(euclidean, sb.parametric, kind, u, v)
        from caplab.families import member

        q = np.asarray(sb.parametric.X(u, v))
        xu = np.asarray(sb.parametric.Xu(u, v))
        xv = np.asarray(sb.parametric.Xv(u, v))
        m = member(kind, q, ff.N)
        ii_m = implicit_ii_oracle(m.implicit, q, (xu, xv), ff.N)
        assert np.max(np.abs((ff.II - ii_m) - sig)) < 1e-10

    def test_frame_covariance(self, euclidean, rng):
        sb = graph_saddle(0.5)
        u, v = rng.uniform(-0.8, 0.8, size=2)
        s1, _ = sigma_at(euclidean, sb.parametric, FamilyKind.planes(), u, v)
        s2, _ = sigma_at(euclidean, sb.parametric, FamilyKind.planes(), u, v,
                         frame_angle=rng.uniform(0, np.pi))
        assert np.max(np.abs(s1 - s2)) < 1e-8

    def test_lorentzian_away_from_zeros(self, euclidean):
        bundle, s0, a = critical_catenoid()
        ss = np.linspace(-0.9 * s0, 0.9 * s0, 12)
        pp = np.linspace(0, 2 * np.pi, 12, endpoint=False)
        UU, VV = np.meshgrid(ss, pp, indexing="ij")
        grid = sigma_grid(euclidean, bundle.parametric, FamilyKind.planes(), UU, VV)
        assert np.all(grid["det_ratio"] < 0)

    def test_sphere3_chart_rejected(self, sphere3):
        sb = graph_saddle(0.5)
        from caplab.errors import CaplabError

        with pytest.raises(CaplabError):
            sigma_at(sphere3, sb.parametric, FamilyKind.planes(), 0.0, 0.0)


class TestDirections:
    def test_asymptotic_diag(self):
        th1, th2 = asymptotic_directions(np.diag([1.0, -1.0]))
        assert (th1, th2) == (pytest.approx(np.pi / 4), pytest.approx(3 * np.pi / 4))

    def test_asymptotic_offdiag(self):
        th1, th2 = asymptotic_directions(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert th1 == pytest.approx(0.0, abs=1e-12)
        assert th2 == pytest.approx(np.pi / 2)

    def test_positive_definite_signature_error(self):
        with pytest.raises(SignatureError):
            asymptotic_directions(np.eye(2))

    def test_singular_point_error(self):
        with pytest.raises(SingularPointError):
            asymptotic_directions(np.zeros((2, 2)))

    def test_principal_diag_and_offdiag(self):
        tb, ts = principal_directions(np.diag([1.0, -1.0]))
        assert {round(float(tb), 9), round(float(ts), 9)} == {0.0, round(np.pi / 2, 9)}
        tb, ts = principal_directions(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert sorted([float(tb), float(ts)]) == [pytest.approx(np.pi / 4),
                                                  pytest.approx(3 * np.pi / 4)]

    def test_null_direction_identity(self, rng):
        # sigma(d_i, d_i) < 1e-10 * |sigma| for both asymptotic directions
        for _ in range(20):
            A = rng.normal(size=(2, 2))
            sig = A + A.T
            sig -= np.trace(sig) / 2 * np.eye(2)  # Lorentzian trace-free
            if abs(np.linalg.det(sig)) < 1e-3:
                continue
            th1, th2 = asymptotic_directions(sig)
            for th in (th1, th2):
                d = np.array([np.cos(th), np.sin(th)])
                assert abs(d @ sig @ d) < 1e-10 * np.linalg.norm(sig)

    def test_principal_bisect_asymptotic_random(self, rng):
        # random Lorentzian sigma with I = id: principal axes bisect the
        # asymptotic pair
        for _ in range(20):
            A = rng.normal(size=(2, 2))
            sig = A + A.T
            if np.linalg.det(sig) > -1e-3:
                continue
            a1, a2 = asymptotic_directions(sig)
            p1, p2 = principal_directions(sig)
            for p in (p1, p2):
                d1 = float(angle_distance_mod_pi(p - a1, a2 - p))
                d2 = float(angle_distance_mod_pi(p - a2, a1 - p))
                assert min(d1, d2) < 1e-10

    def test_asymptotic_bisect_principal_tracefree(self, euclidean, rng):
        # for the lab's trace-free sigmas the bisection goes both ways
        sb = graph_saddle(0.5)
        u, v = rng.uniform(-0.5, 0.5, size=2)
        sig, ff = sigma_at(euclidean, sb.parametric, FamilyKind.planes(), u, v)
        I = ff.I
        a1, a2 = asymptotic_directions(sig, I)
        p1, p2 = principal_directions(sig, I)
        fa1 = angle_in_frame(np.array([np.cos(a1), np.sin(a1)]), I)
        fa2 = angle_in_frame(np.array([np.cos(a2), np.sin(a2)]), I)
        fp1 = angle_in_frame(np.array([np.cos(p1), np.sin(p1)]), I)
        d1 = float(angle_distance_mod_pi(fp1 - fa1, fa2 - fp1))
        d2 = float(angle_distance_mod_pi(fp1 - fa2, fa1 - fp1))
        assert min(d1, d2) < 1e-10


class TestLeadingHarmonicJet:
    def test_exact_mode(self):
        alpha = 1.0 + 2.0j

        def d(u, v):
            z = np.asarray(u) + 1j * np.asarray(v)
            return np.real(alpha * z**4)

        res = leading_harmonic_jet(d)
        assert res.status == "ok" and res.jet.n == 4
        assert abs(res.jet.alpha - alpha) < 1e-10

    def test_perturbed_cubic(self):
        def d(u, v):
            z = np.asarray(u) + 1j * np.asarray(v)
            return np.real(z**3) + 0.01 * np.real(z**5)

        res = leading_harmonic_jet(d)
        assert res.status == "ok" and res.jet.n == 3
        assert abs(res.jet.alpha - 1.0) < 1e-8

    def test_zero_function(self):
        res = leading_harmonic_jet(lambda u, v: 0.0 * np.asarray(u))
        assert res.status == "zero"

    def test_zero_to_order_n(self):
        # nonzero only beyond the max order
        def d(u, v):
            z = np.asarray(u) + 1j * np.asarray(v)
            return np.real(z**12)

        res = leading_harmonic_jet(d, max_order=8)
        assert res.status == "zero"

    def test_model_mismatch_detected(self):
        # frequency-3 content scaling like r^2: not a harmonic leading term
        def d(u, v):
            u, v = np.asarray(u, float), np.asarray(v, float)
            r = np.hypot(u, v)
            z = u + 1j * v
            with np.errstate(invalid="ignore", divide="ignore"):
                out = np.where(r > 0, np.real(z**3) / r, 0.0)
            return out

        res = leading_harmonic_jet(d)
        assert res.status == "mismatch"


class TestModelConsistency:
    def test_synthetic_cubic_pair(self, euclidean):
        # h = htilde + Re(z^3) with htilde = 0 (plane member)
        hb = harmonic_graph(3)
        kind = FamilyKind.planes()

        def sigma_func(uu, vv):
            s, _ = sigma_at(euclidean, hb.parametric, kind, uu, vv)
            return s

        from caplab.sigma import HarmonicJet

        rep = sigma_model_consistency(sigma_func, HarmonicJet(3, 1.0 + 0j, 0.0),
                                      c_factor=1.0, rho0=2e-2)
        assert rep["decreasing"]
        assert rep["residuals"][1] / max(rep["residuals"][0], 1e-300) < 0.5

    def test_flipped_sign_detected(self, euclidean):
        hb = harmonic_graph(3)

        def sigma_func(uu, vv):
            s, _ = sigma_at(euclidean, hb.parametric, FamilyKind.planes(), uu, vv)
            return s

        from caplab.sigma import HarmonicJet

        rep = sigma_model_consistency(sigma_func, HarmonicJet(3, 1.0 + 0j, 0.0),
                                      c_factor=-1.0, rho0=2e-2)
        assert not rep["decreasing"] or rep["residuals"][-1] > 1.0

    def test_hess_model_matches_paper_formulas(self, rng):
        # w_uu = n(n-1) r^{n-2} cos((n-2)theta), w_uv = -n(n-1) r^{n-2} sin(...)
        n = 5
        r, th = rng.uniform(0.1, 1.0), rng.uniform(0, 2 * np.pi)
        u, v = r * np.cos(th), r * np.sin(th)
        H = hess_re_alpha_zn(1.0, n, u, v)
        assert H[0, 0] == pytest.approx(n * (n - 1) * r ** (n - 2) * np.cos((n - 2) * th))
        assert H[0, 1] == pytest.approx(-n * (n - 1) * r ** (n - 2) * np.sin((n - 2) * th))
        assert H[1, 1] == pytest.approx(-H[0, 0])


class TestSingularities:
    def test_monkey_saddle_one_singularity_order_3(self, euclidean):
        mb = graph_monkey(3)
        t = np.linspace(-0.8, 0.8, 41)
        UU, VV = np.meshgrid(t, t, indexing="ij")
        grid = sigma_grid(euclidean, mb.parametric, FamilyKind.planes(), UU, VV)

        def diff_factory(u0, v0):
            q = np.asarray(mb.parametric.X(u0, v0))
            ffq = fundamental_forms(euclidean, mb.parametric, u0, v0)
            d, _, _ = difference_function(mb.implicit, FamilyKind.planes(), q, ffq.N)
            return d

        rep = sigma_singularities(grid, UU, VV, difference_factory=diff_factory)
        assert rep["status"] == "ok"
        assert len(rep["singularities"]) == 1
        s = rep["singularities"][0]
        assert (s["u"], s["v"]) == (0.0, 0.0)
        assert s["n"] == 3

    def test_member_coincidence_non_isolated(self, euclidean):
        cap = sphere_patch(np.array([0, 0, 0.5]), 1 / 1.5, orient=1)
        th = np.linspace(0.2, 1.2, 21)
        ph = np.linspace(0, 2 * np.pi, 21, endpoint=False)
        UU, VV = np.meshgrid(th, ph, indexing="ij")
        grid = sigma_grid(euclidean, cap.parametric, FamilyKind.cmc_spheres(1.5), UU, VV)
        rep = sigma_singularities(grid, UU, VV)
        assert rep["status"] == "non-isolated"

    def test_saddle_n2_empty(self, euclidean):
        sb = harmonic_graph(2, amp=0.5)
        t = np.linspace(-0.6, 0.6, 31)
        UU, VV = np.meshgrid(t, t, indexing="ij")
        grid = sigma_grid(euclidean, sb.parametric, FamilyKind.planes(), UU, VV)
        rep = sigma_singularities(grid, UU, VV)
        assert rep["status"] == "empty"

    def test_direction_fields_masks(self, euclidean):
        mb = graph_monkey(3)
        t = np.linspace(-0.5, 0.5, 21)
        UU, VV = np.meshgrid(t, t, indexing="ij")
        grid = sigma_grid(euclidean, mb.parametric, FamilyKind.planes(), UU, VV)
        L1, L2 = direction_fields(grid)
        assert L1.singular_mask[10, 10]
        assert np.isnan(L1.theta[10, 10])
        ok = ~L1.singular_mask
        assert np.all(np.isfinite(L1.theta[ok]))
        assert np.all((L1.theta[ok] >= 0) & (L1.theta[ok] < np.pi))


class TestBoundaryAngleAudit:
    def test_free_boundary_catenoid(self):
        bundle, s0, a = critical_catenoid()
        dom = Domain.unit_ball()
        for ph in np.linspace(0, 2 * np.pi, 4, endpoint=False):
            rep = boundary_angle_audit(dom, bundle, FamilyKind.planes(), (s0, ph))
            assert rep["status"] == "ok"
            assert abs(rep["mixed_derivative"]) < 1e-7
            assert rep["principal_misalignment"] < 1e-4

    def test_member_point_vacuous(self):
        from caplab.capillary import nitsche_cap

        cap, info = nitsche_cap(1.5, np.pi / 3)
        dom = Domain.unit_ball()
        rep = boundary_angle_audit(dom, cap, FamilyKind.cmc_spheres(1.5),
                                   (info["theta_b"], 0.4))
        assert rep["status"] == "member point"

    def test_synthetic_violation_detected(self):
        # capillary-violating pair in the half-space: mixed term c != 0
        dom = Domain.half_space()
        for c_mix, should_pass in ((0.0, True), (0.4, False)):
            bundle = _tilted_graph_over_wall(a_slope=0.4, c_mix=c_mix, b_quad=0.6)
            rep = boundary_angle_audit(dom, bundle, FamilyKind.planes(), (0.0, 0.0),
                                       fit_radius=0.08)
            assert rep["status"] == "ok"
            assert rep["mixed_pass"] == should_pass


def _tilted_graph_over_wall(a_slope, c_mix, b_quad):
    """Surface x1 = g(x2, x3) over the wall {x3 = 0}, parametrized by (u, v) =
    (x2, x3); boundary point at the origin.  g = a v + c u v + b u^2 v ...
    chosen so sigma(0) != 0 via an added curvature term."""
    import numpy as np

    from caplab.geometry import ParametricSurface
    from caplab.implicit import ImplicitSurface
    from caplab.surfaces import SurfaceBundle

    a, c, b = a_slope, c_mix, b_quad

    def g(u, v):
        return a * v + c * u * v + b * (u**2 - v**2) / 2

    def gu(u, v):
        return c * v + b * u

    def gv(u, v):
        return a + c * u - b * v

    def X(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.stack([g(u, v), u, v], axis=-1)

    def Xu(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.stack([gu(u, v), np.ones_like(u), np.zeros_like(u)], axis=-1)

    def Xv(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.stack([gv(u, v), np.zeros_like(u), np.ones_like(u)], axis=-1)

    def Xuu(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.stack([b * np.ones_like(u), np.zeros_like(u), np.zeros_like(u)], axis=-1)

    def Xuv(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.stack([c * np.ones_like(u), np.zeros_like(u), np.zeros_like(u)], axis=-1)

    def Xvv(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.stack([-b * np.ones_like(u), np.zeros_like(u), np.zeros_like(u)], axis=-1)

    surf = ParametricSurface.from_jets(X, Xu, Xv, Xuu, Xuv, Xvv, name="tilted_graph")

    imp = ImplicitSurface(
        psi=lambda x: np.asarray(x)[..., 0] - g(np.asarray(x)[..., 1], np.asarray(x)[..., 2]),
        grad=lambda x: np.stack([
            np.ones(np.shape(x)[:-1]),
            -gu(np.asarray(x)[..., 1], np.asarray(x)[..., 2]),
            -gv(np.asarray(x)[..., 1], np.asarray(x)[..., 2]),
        ], axis=-1),
        hess=lambda x: _tilted_hess(x, b, c),
        name="tilted_graph",
    )
    return SurfaceBundle("tilted_graph", surf, imp, ((-1, 1), (-1, 1)))


def _tilted_hess(x, b, c):
    import numpy as np

    H = np.zeros(np.shape(x)[:-1] + (3, 3))
    H[..., 1, 1] = -b
    H[..., 2, 2] = b
    H[..., 1, 2] = H[..., 2, 1] = -c
    return H
