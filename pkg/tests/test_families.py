"""Transitive families: members, uniqueness, angles, topology, ellipticity."""

import numpy as np
import pytest

from caplab.domains import Domain
from caplab.errors import CaplabError, DegenerateIntersectionError
from caplab.families import (
    FamilyKind,
    FamilyMember,
    constant_angle_audit,
    descriptor_close,
    graph_operator_partials,
    intersection_topology,
    invert_gauss_map,
    member,
    member_graph,
    pde_ellipticity_audit,
    profile_dumbbell,
    profile_from_table,
    profile_prolate,
    profile_round_sphere,
    transitivity_audit,
)
from caplab.geometry import fundamental_forms, mean_and_principal_curvatures, s3_lift
from caplab.implicit import adapted_affine_chart
from caplab.surfaces import equator as equator_bundle

from helpers import cap_angle_closed_form


class TestMembers:
    def test_plane_member(self):
        m = member(FamilyKind.planes(), np.zeros(3), np.array([0.0, 0.0, 1.0]))
        assert np.allclose(m.descriptor["normal"], [0, 0, 1])
        assert abs(m.descriptor["offset"]) < 1e-15
        assert abs(float(m.implicit.psi(np.array([0.3, -0.4, 0.0])))) < 1e-15

    def test_cmc_sphere_member_curvature_oracle(self, euclidean):
        m = member(FamilyKind.cmc_spheres(1.0), np.zeros(3), np.array([0.0, 0.0, 1.0]))
        assert np.allclose(m.descriptor["center"], [0, 0, 1])
        assert m.descriptor["radius"] == pytest.approx(1.0)
        ff = fundamental_forms(euclidean, m.bundle.parametric, 0.9, 0.7)
        H, _, _ = mean_and_principal_curvatures(ff)
        assert H == pytest.approx(1.0, abs=1e-12)

    def test_cmc_members_constant_H_invariant(self, euclidean, rng):
        # 100 sampled points, |H - H0| < 1e-9 (oracle: geometry module)
        for H0 in (2.0, -0.7):
            m = member(FamilyKind.cmc_spheres(H0), rng.normal(size=3),
                       _unit(rng.normal(size=3)))
            th = rng.uniform(0.2, 2.6, size=100)
            ph = rng.uniform(0, 2 * np.pi, size=100)
            ff = fundamental_forms(euclidean, m.bundle.parametric, th, ph)
            Hval, _, _ = mean_and_principal_curvatures(ff)
            assert np.max(np.abs(Hval - H0)) < 1e-9

    def test_equator_through_origin(self):
        m = member(FamilyKind.equators_s3(), np.zeros(3), np.array([0.0, 0.0, 1.0]))
        assert np.allclose(m.descriptor["pole"], [0, 0, 1, 0], atol=1e-15)
        # the member is the chart plane {x3 = 0}
        x = np.array([0.4, -0.2, 0.0])
        assert abs(float(m.implicit.psi(x))) < 1e-15

    def test_equator_lifted_membership(self, rng):
        # oracle: lifted sample points satisfy <X, a> = 0
        p = rng.normal(size=3) * 0.7
        nu = _unit(rng.normal(size=3))
        m = member(FamilyKind.equators_s3(), p, nu)
        a = m.descriptor["pole"]
        th = rng.uniform(0.3, 2.6, size=20)
        ph = rng.uniform(0, 2 * np.pi, size=20)
        pts = np.asarray(m.bundle.parametric.X(th, ph))
        P, _ = s3_lift(pts)
        assert np.max(np.abs(P @ a)) < 1e-10

    def test_equator_antipodal_symmetry(self, rng):
        # Psi(-x/|x|^2) = -Psi(x): the lift of the chart antipode is -P
        p = rng.normal(size=3) * 0.5
        nu = _unit(rng.normal(size=3))
        m = member(FamilyKind.equators_s3(), p, nu)
        x = rng.normal(size=(10, 3))
        anti = -x / np.einsum("ij,ij->i", x, x)[:, None]
        assert np.max(np.abs(np.asarray(m.implicit.psi(anti))
                             + np.asarray(m.implicit.psi(x)))) < 1e-12

    def test_ovaloid_member_through_point(self, rng):
        kind = FamilyKind.translated_ovaloid(profile_prolate(1.0, 1.5))
        p = rng.normal(size=3)
        nu = _unit(rng.normal(size=3))
        m = member(kind, p, nu)
        assert abs(float(m.implicit.psi(p))) < 1e-10
        g = _unit(np.asarray(m.implicit.grad(p)))
        assert np.arctan2(np.linalg.norm(np.cross(g, nu)), np.dot(g, nu)) < 1e-8

    def test_member_determinism(self, rng):
        p, nu = rng.normal(size=3), _unit(rng.normal(size=3))
        for kind in (FamilyKind.planes(), FamilyKind.cmc_spheres(1.3)):
            d1 = member(kind, p, nu).descriptor
            d2 = member(kind, p, nu).descriptor
            for k in d1:
                assert np.array_equal(np.asarray(d1[k]), np.asarray(d2[k]))


class TestMemberGraph:
    def test_plane_graph_zero(self):
        m = member(FamilyKind.planes(), np.zeros(3), np.array([0.0, 0.0, 1.0]))
        ch = adapted_affine_chart(np.zeros(3), np.array([0.0, 0.0, 1.0]))
        jet = member_graph(m, ch, radius=0.5)
        assert np.allclose(jet.grad, 0) and np.allclose(jet.hess, 0) and np.allclose(jet.third, 0)

    def test_cmc_sphere_graph_hessian(self):
        m = member(FamilyKind.cmc_spheres(1.0), np.zeros(3), np.array([0.0, 0.0, 1.0]))
        ch = adapted_affine_chart(np.zeros(3), np.array([0.0, 0.0, 1.0]))
        jet = member_graph(m, ch, radius=0.4)
        assert np.allclose(jet.grad, 0.0, atol=1e-14)
        assert np.allclose(jet.hess, np.eye(2), atol=1e-12)

    def test_equator_plane_graph(self):
        m = member(FamilyKind.equators_s3(), np.zeros(3), np.array([0.0, 0.0, 1.0]))
        ch = adapted_affine_chart(np.zeros(3), np.array([0.0, 0.0, 1.0]))
        jet = member_graph(m, ch, radius=0.3)
        assert abs(float(jet.value(0.1, -0.05))) < 1e-12


class TestTransitivity:
    @pytest.mark.parametrize("kind_factory,label", [
        (FamilyKind.planes, "planes"),
        (lambda: FamilyKind.cmc_spheres(2.0), "cmc"),
        (FamilyKind.equators_s3, "equators"),
    ])
    def test_audit_100(self, kind_factory, label):
        rep = transitivity_audit(kind_factory(), n_samples=100, seed=7)
        assert rep["passed"] == 100, rep["failures"][:3]

    def test_audit_ovaloid(self):
        kind = FamilyKind.translated_ovaloid(profile_prolate(1.0, 1.4))
        rep = transitivity_audit(kind, n_samples=30, seed=5)
        assert rep["passed"] == 30, rep["failures"][:3]

    def test_descriptor_close_negative(self):
        assert not descriptor_close({"a": np.zeros(3)}, {"a": np.ones(3)})


class TestGaussInversion:
    def test_round_sphere_identity(self):
        prof = profile_round_sphere(1.0)
        for g in (0.3, 1.2, 2.9):
            assert invert_gauss_map(prof, g) == pytest.approx(g, abs=1e-10)

    def test_prolate_roundtrip(self, rng):
        prof = profile_prolate(1.0, 1.7)
        for _ in range(10):
            th = rng.uniform(0.05, np.pi - 0.05)
            g = float(prof.gauss_angle(th))
            assert invert_gauss_map(prof, g) == pytest.approx(th, abs=1e-9)

    def test_table_profile_matches_closed_form(self):
        th = np.linspace(0, np.pi, 200)
        prof_cf = profile_prolate(1.0, 1.5)
        prof_tab = profile_from_table(th, prof_cf.rho(th))
        t = np.linspace(0.1, np.pi - 0.1, 50)
        assert np.max(np.abs(prof_tab.rho(t) - prof_cf.rho(t))) < 1e-7


class TestConstantAngle:
    def test_plane_through_center_vs_ball(self):
        m = member(FamilyKind.planes(), np.zeros(3), np.array([0.0, 0.0, 1.0]))
        rep = constant_angle_audit(m, Domain.unit_ball(), m_samples=16)
        assert rep["status"] == "ok" and rep["is_transversal"]
        assert rep["spread"] < 1e-10
        assert rep["mean"] == pytest.approx(np.pi / 2, abs=1e-12)

    def test_cmc_sphere_vs_ball_closed_form(self):
        # sphere center (0,0,0.5), radius 0.8: outward-oriented member
        H = -1.0 / 0.8
        p = np.array([0.0, 0.0, 0.5 - 0.8])
        m = member(FamilyKind.cmc_spheres(H), p, np.array([0.0, 0.0, -1.0]))
        assert np.allclose(m.descriptor["center"], [0, 0, 0.5])
        rep = constant_angle_audit(m, Domain.unit_ball(), m_samples=20)
        assert rep["spread"] < 1e-9
        expected = cap_angle_closed_form(0.5, 0.8, orient=-1)
        assert rep["mean"] == pytest.approx(expected, abs=1e-9)

    def test_equator_vs_caps(self, rng):
        dom = Domain.s3_two_caps(0.7)
        for _ in range(4):
            a = _unit(rng.normal(size=4))
            if np.arcsin(abs(a[3])) >= dom.r - 0.05:
                continue
            bundle = equator_bundle(a)
            m = FamilyMember(FamilyKind.equators_s3(), bundle.implicit,
                             {"pole": np.asarray(bundle.meta["pole"])}, bundle)
            rep = constant_angle_audit(m, dom, m_samples=16)
            assert rep["status"] == "ok"
            assert rep["spread"] < 1e-8

    def test_no_intersection_reported(self):
        m = member(FamilyKind.planes(), np.array([0.0, 0.0, 2.0]), np.array([0.0, 0.0, 1.0]))
        rep = constant_angle_audit(m, Domain.unit_ball(), m_samples=8)
        assert rep["status"] == "no intersection"


class TestIntersectionTopology:
    def _member_from_pole(self, a):
        bundle = equator_bundle(np.asarray(a, dtype=float))
        return FamilyMember(FamilyKind.equators_s3(), bundle.implicit,
                            {"pole": np.asarray(bundle.meta["pole"])}, bundle)

    def test_pole_orthogonal_gives_annulus(self):
        m = self._member_from_pole([1.0, 0.0, 0.0, 0.0])  # d = 0 < r
        assert intersection_topology(m, Domain.s3_two_caps(0.6)) == "annulus"

    def test_pole_parallel_gives_sphere(self):
        m = self._member_from_pole([0.0, 0.0, 0.0, 1.0])  # d = pi/2 > r
        assert intersection_topology(m, Domain.s3_two_caps(0.6)) == "sphere"

    def test_degenerate_tangency_raises(self):
        r = 0.6
        a4 = np.sin(r)
        a = np.array([np.sqrt(1 - a4**2), 0.0, 0.0, a4])
        with pytest.raises(DegenerateIntersectionError):
            intersection_topology(self._member_from_pole(a), Domain.s3_two_caps(r))

    def test_matches_monte_carlo_oracle(self, rng):
        from caplab.capillary import mc_topology_oracle

        dom = Domain.s3_two_caps(0.6)
        for _ in range(12):
            a = _unit(rng.normal(size=4))
            try:
                topo = intersection_topology(self._member_from_pole(a), dom)
            except DegenerateIntersectionError:
                continue
            assert topo == mc_topology_oracle(a, 0.6, n_points=10000, seed=1)


class TestEllipticity:
    def test_minimal_graph_zero_jet(self):
        phi_r, phi_s, phi_t = graph_operator_partials("minimal_graph", np.zeros((1, 5)))
        assert 4 * phi_r * phi_t - phi_s**2 == pytest.approx(4.0)

    def test_symbolic_oracle(self):
        # sympy differentiates the divergence-form minimal operator directly
        import sympy as sp

        p, q, r, s, t = sp.symbols("p q r s t")
        Phi = (1 + q**2) * r - 2 * p * q * s + (1 + p**2) * t
        dr, ds, dt = Phi.diff(r), Phi.diff(s), Phi.diff(t)
        rng = np.random.default_rng(0)
        jets = rng.normal(size=(50, 5))
        phi_r, phi_s, phi_t = graph_operator_partials("minimal_graph", jets)
        for i in range(50):
            subs = {p: jets[i, 0], q: jets[i, 1], r: jets[i, 2], s: jets[i, 3], t: jets[i, 4]}
            assert float(dr.subs(subs)) == pytest.approx(phi_r[i])
            assert float(ds.subs(subs)) == pytest.approx(phi_s[i])
            assert float(dt.subs(subs)) == pytest.approx(phi_t[i])

    def test_cmc_graph_positivity(self, rng):
        jets = rng.normal(scale=3.0, size=(200, 5))
        rep = pde_ellipticity_audit("cmc_graph", jets, H=1.0)
        assert rep["all_pass"]

    def test_weingarten_sum_product_one(self, rng):
        rep = pde_ellipticity_audit("weingarten", rng.uniform(0.1, 3.0, size=(100, 2)),
                                    phi=lambda x, y: x + y - 2.0)
        assert rep["all_pass"]
        assert rep["min_product"] == pytest.approx(1.0, abs=1e-6)

    def test_dumbbell_profile_not_convex(self):
        prof = profile_dumbbell(0.5)
        th = np.linspace(0.05, np.pi - 0.05, 60)
        _, km = prof.curvatures(th)
        assert np.min(km) < 0  # fails convexity, audit rejects upstream


def _unit(v):
    return v / np.linalg.norm(v)
