"""Domains, boundary charts, and graph extraction."""

import numpy as np
import pytest

from caplab.domains import (
    Domain,
    boundary_adapted_chart,
    boundary_graph_curve,
    boundary_isothermal,
    classify_point,
    graph_in_chart,
)
from caplab.errors import CaplabError, NotAGraphError
from caplab.implicit import AffineChart, adapted_affine_chart
from caplab.surfaces import plane, sphere_patch

from helpers import geodesic_distance_s3


class TestClassify:
    def test_ball_center_interior(self):
        assert classify_point(Domain.unit_ball(), np.zeros(3)) == "interior"

    def test_ball_pole_boundary(self):
        assert classify_point(Domain.unit_ball(), np.array([0.0, 0.0, 1.0])) == "boundary"

    def test_ball_outside(self):
        assert classify_point(Domain.unit_ball(), np.array([0.0, 0.0, 1.5])) == "exterior"

    def test_half_space(self):
        dom = Domain.half_space()
        assert classify_point(dom, np.array([3.0, 0.0, 0.2])) == "interior"
        assert classify_point(dom, np.array([3.0, 0.0, 0.0])) == "boundary"
        assert classify_point(dom, np.array([3.0, 0.0, -0.1])) == "exterior"

    def test_two_caps_boundary_radius(self):
        # geodesic-distance oracle: the inner boundary sphere lies at cap
        # distance exactly r from the north pole of the lift
        r = 1.2
        dom = Domain.s3_two_caps(r)
        x = np.array([np.tan(r / 2), 0.0, 0.0])
        assert classify_point(dom, x) == "boundary"
        assert abs(geodesic_distance_s3(x, np.zeros(3)) - r) < 1e-10

    def test_two_caps_radii_invariant(self, rng):
        r = 0.8
        dom = Domain.s3_two_caps(r)
        comps = dom.boundary_components()
        assert comps[0]["radius"] < comps[1]["radius"]
        for comp, pole in ((comps[0], np.zeros(3)),):
            for _ in range(10):
                d = rng.normal(size=3)
                x = comp["radius"] * d / np.linalg.norm(d)
                assert abs(geodesic_distance_s3(x, pole) - r) < 1e-10

    def test_invalid_radius_rejected(self):
        with pytest.raises(CaplabError):
            Domain.s3_two_caps(2.0)


class TestBoundaryIsothermal:
    def test_half_space_affine(self):
        dom = Domain.half_space()
        p = np.zeros(3)
        Y, lam_b, t1, t2 = boundary_isothermal(dom, p)
        pts = np.real(Y(np.array([0.4]), np.array([-0.2])))
        assert np.allclose(pts[..., 2], 0.0)
        assert np.allclose(lam_b(0.4, -0.2), 1.0)

    def test_ball_isothermality_residual(self):
        dom = Domain.unit_ball()
        p = np.array([0.0, 0.0, -1.0])
        Y, lam_b, t1, t2 = boundary_isothermal(dom, p)
        vv, zz = np.meshgrid(np.linspace(-0.5, 0.5, 9), np.linspace(-0.5, 0.5, 9))
        cs = 1e-20
        Yv = np.imag(Y(vv + 1j * cs, zz)) / cs
        Yz = np.imag(Y(vv, zz + 1j * cs)) / cs
        lb2 = np.asarray(lam_b(vv, zz)) ** 2
        assert np.max(np.abs(np.einsum("...i,...i->...", Yv, Yv) - lb2)) < 1e-10
        assert np.max(np.abs(np.einsum("...i,...i->...", Yz, Yz) - lb2)) < 1e-10
        assert np.max(np.abs(np.einsum("...i,...i->...", Yv, Yz))) < 1e-10

    def test_caps_isothermality_residual(self, sphere3, rng):
        dom = Domain.s3_two_caps(1.2)
        rin = dom.boundary_components()[0]["radius"]
        d = rng.normal(size=3)
        p = rin * d / np.linalg.norm(d)
        Y, lam_b, t1, t2 = boundary_isothermal(dom, p)
        vv, zz = np.meshgrid(np.linspace(-0.2, 0.2, 7), np.linspace(-0.2, 0.2, 7))
        cs = 1e-20
        Yv = np.imag(Y(vv + 1j * cs, zz)) / cs
        Yz = np.imag(Y(vv, zz + 1j * cs)) / cs
        pts = np.real(Y(vv, zz))
        lam2 = np.asarray(sphere3.lam(pts)) ** 2
        lb2 = np.asarray(lam_b(vv, zz)) ** 2
        assert np.max(np.abs(lam2 * np.einsum("...i,...i->...", Yv, Yv) - lb2)) < 1e-9
        assert np.max(np.abs(lam2 * np.einsum("...i,...i->...", Yz, Yz) - lb2)) < 1e-9
        assert np.max(np.abs(lam2 * np.einsum("...i,...i->...", Yv, Yz))) < 1e-9

    def test_off_boundary_point_rejected(self):
        with pytest.raises(CaplabError):
            boundary_isothermal(Domain.unit_ball(), np.array([0.0, 0.0, 0.5]))


class TestBoundaryAdaptedChart:
    def test_half_space_straight_lines(self):
        dom = Domain.half_space()
        bc = boundary_adapted_chart(dom, np.zeros(3), np.array([1.0, 0.0, 0.0]))
        x = bc.F(np.array(0.3), np.array(0.0), np.array(0.0))
        assert np.allclose(x, [0.0, 0.0, 0.3])
        # d_v(0) along the requested tangent
        assert np.allclose(bc.t1, [1.0, 0.0, 0.0])

    def test_ball_radial_geodesic(self):
        dom = Domain.unit_ball()
        p = np.array([0.0, 0.0, -1.0])
        bc = boundary_adapted_chart(dom, p, np.array([1.0, 0.0, 0.0]))
        x = bc.F(np.array(0.25), np.array(0.0), np.array(0.0))
        assert np.allclose(x, [0.0, 0.0, -0.75])

    def test_caps_chart_invariants(self, sphere3):
        dom = Domain.s3_two_caps(0.9)
        rin = dom.boundary_components()[0]["radius"]
        p = np.array([rin, 0.0, 0.0])
        _, _, t1, _ = boundary_isothermal(dom, p)
        bc = boundary_adapted_chart(dom, p, t1)
        # orthogonality and isothermality at u=0 from the exact partials
        vv = np.linspace(-0.15, 0.15, 5)
        zz = np.linspace(-0.15, 0.15, 5)
        V, Z = np.meshgrid(vv, zz)
        Fu, Fv, Fz = bc.partials_at_boundary(V, Z)
        y = np.real(bc.Y(V, Z))
        lam2 = np.asarray(sphere3.lam(y)) ** 2
        assert np.max(np.abs(lam2 * np.einsum("...i,...i->...", Fu, Fv))) < 1e-8
        assert np.max(np.abs(lam2 * np.einsum("...i,...i->...", Fu, Fz))) < 1e-8
        lb2 = np.asarray(bc.lambda_b(V, Z)) ** 2
        assert np.max(np.abs(lam2 * np.einsum("...i,...i->...", Fv, Fv) - lb2)) < 1e-8
        # inwardness after RK4 geodesic flow
        xin = bc.F(np.full(V.shape, 0.05), V, Z)
        assert np.all(dom.defining(xin) < 0)

    def test_caps_unit_speed_after_flow(self, sphere3):
        # g(d_u, d_u) = 1 persists along the geodesic (checked via the
        # defining function: flowing 0.05 inward moves distance 0.05)
        dom = Domain.s3_two_caps(0.9)
        rin = dom.boundary_components()[0]["radius"]
        p = np.array([0.0, rin, 0.0])
        _, _, t1, _ = boundary_isothermal(dom, p)
        bc = boundary_adapted_chart(dom, p, t1)
        x = bc.F(np.array(0.07), np.array(0.0), np.array(0.0))
        assert abs(float(dom.defining(x)) + 0.07) < 1e-8


class TestGraphInChart:
    def test_plane_in_own_chart(self):
        pb = plane(np.zeros(3), np.array([0.0, 0.0, 1.0]))
        ch = adapted_affine_chart(np.zeros(3), np.array([0.0, 0.0, 1.0]))
        jet = graph_in_chart(pb.implicit, ch, radius=0.5)
        assert np.allclose(jet.grad, 0) and np.allclose(jet.hess, 0)
        assert abs(float(jet.value(0.2, -0.1))) < 1e-12

    def test_unit_sphere_graph_closed_form(self):
        sp = sphere_patch(np.zeros(3), 1.0, orient=-1)
        ch = adapted_affine_chart(np.array([0.0, 0.0, -1.0]), np.array([0.0, 0.0, 1.0]))
        jet = graph_in_chart(sp.implicit, ch, radius=0.6)
        assert np.allclose(jet.grad, 0.0, atol=1e-12)
        assert np.allclose(jet.hess, np.eye(2), atol=1e-12)
        u, v = 0.3, 0.1
        closed = 1.0 - np.sqrt(1.0 - u * u - v * v)
        assert abs(float(jet.value(u, v)) - closed) < 1e-12

    def test_vertical_tangency_error(self):
        # chart z-axis tangent to the surface
        sp = sphere_patch(np.zeros(3), 1.0, orient=-1)
        ch = adapted_affine_chart(np.array([0.0, 0.0, -1.0]), np.array([1.0, 0.0, 0.0]))
        with pytest.raises(NotAGraphError):
            graph_in_chart(sp.implicit, ch, radius=0.5)

    def test_reembedding_reproduces_surface(self):
        # graph followed by chart evaluation lands back on the surface
        sp = sphere_patch(np.array([0.1, -0.2, 0.3]), 0.8, orient=-1)
        base = np.asarray(sp.parametric.X(1.2, 0.7))
        n = sp.implicit.unit_normal(base)
        ch = adapted_affine_chart(base, n)
        jet = graph_in_chart(sp.implicit, ch, radius=0.3)
        uu = np.linspace(-0.2, 0.2, 5)
        hh = jet.value(uu, uu / 2)
        pts = ch.F(uu, uu / 2, hh)
        assert np.max(np.abs(sp.implicit.psi(pts))) < 1e-9

    def test_mixed_partials_symmetric(self):
        sp = sphere_patch(np.array([0.0, 0.0, 0.5]), 0.9, orient=1)
        base = np.asarray(sp.parametric.X(0.9, 1.3))
        n = sp.implicit.unit_normal(base)
        ch = adapted_affine_chart(base, n)
        jet = graph_in_chart(sp.implicit, ch, radius=0.3, order=3)
        t = jet.third
        assert abs(t[0, 0, 1] - t[0, 1, 0]) < 1e-9
        assert abs(t[1, 0, 1] - t[1, 1, 0]) < 1e-9

    def test_boundary_chart_graph_s3(self, sphere3):
        # an equator graphed in a boundary-adapted chart of the caps domain,
        # then re-embedded: points stay on the equator to 1e-9
        from caplab.families import FamilyKind, member

        dom = Domain.s3_two_caps(0.9)
        rin = dom.boundary_components()[0]["radius"]
        p = np.array([rin, 0.0, 0.0])
        nu = np.array([0.0, 0.3, 1.0])
        nu /= np.linalg.norm(nu)
        fm = member(FamilyKind.equators_s3(), p, nu)
        _, _, t1, _ = boundary_isothermal(dom, p)
        # align d_v with the member's boundary-curve tangent for h_v(0,0)=0
        g = np.asarray(fm.implicit.grad(p))
        Nw = dom.inward_normal(p)
        t_dir = np.cross(g, Nw)
        t_dir /= np.linalg.norm(t_dir)
        bc = boundary_adapted_chart(dom, p, t_dir)
        jet = graph_in_chart(fm.implicit, bc, radius=0.1, order=2)
        assert abs(float(jet.grad[1])) < 1e-8  # h_v(0,0) = 0 by alignment
        uu = np.linspace(-0.03, 0.03, 4)
        hh = jet.value(uu, uu)
        pts = bc.F(uu, uu, hh)
        assert np.max(np.abs(fm.implicit.psi(pts))) < 1e-9


class TestBoundaryGraphCurve:
    def test_exact_first_jets_on_curve(self):
        # cap whose graph over the ball boundary chart has known slopes
        from caplab.capillary import nitsche_cap

        dom = Domain.unit_ball()
        cap, info = nitsche_cap(1.5, np.pi / 3)
        th_b = info["theta_b"]
        p = np.asarray(cap.parametric.X(th_b, 0.0))
        N = cap.implicit.unit_normal(p)
        t_dir = np.cross(N, -p)
        t_dir /= np.linalg.norm(t_dir)
        bc = boundary_adapted_chart(dom, p, t_dir)
        out = boundary_graph_curve(cap.implicit, bc, np.linspace(-0.05, 0.05, 7))
        assert abs(out["h"][3]) < 1e-12  # base point on the curve
        assert abs(out["h_v"][3]) < 1e-12  # aligned tangent
        assert np.max(np.abs(out["h"])) < 0.2
