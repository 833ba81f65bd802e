"""Smooth domains, boundary-adapted charts, and graph extraction.

Supported domains: the Euclidean unit ball, the Euclidean upper half-space
{x3 >= 0}, and the 3-sphere with two antipodal geodesic caps of radius r
removed (stereographic chart: tan(r/2) <= |x| <= cot(r/2)).

Boundary-adapted charts follow the convention used throughout: the chart map
F(u,v,z) flows the inward g-unit boundary normal for time u from an
isothermal parametrization Y(v,z) of the boundary, so g(d_u,d_u) = 1 on the
whole chart, d_u is normal to the boundary at u = 0, and (v,z) are isothermal
there with conformal factor lambda_b.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from caplab.errors import CaplabError, NotAGraphError
from caplab.geometry import EUCLIDEAN, SPHERE3, ConformalChart, geodesic_flow
from caplab.implicit import (
    AffineChart,
    GraphJet,
    ImplicitSurface,
    graph_jet,
    tangent_frame,
)

BOUNDARY_TOL = 1e-9


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """Domain Omega with smooth boundary in a conformal chart."""

    kind: str
    chart: ConformalChart
    r: Optional[float] = None  # geodesic cap radius for s3_two_caps

    @staticmethod
    def unit_ball() -> "Domain":
        return Domain(kind="unit_ball", chart=ConformalChart.euclidean())

    @staticmethod
    def half_space() -> "Domain":
        return Domain(kind="half_space", chart=ConformalChart.euclidean())

    @staticmethod
    def s3_two_caps(r: float) -> "Domain":
        if not (0.0 < r < np.pi / 2):
            raise CaplabError(f"cap radius must lie in (0, pi/2), got {r}")
        return Domain(kind="s3_two_caps", chart=ConformalChart.sphere3_stereographic(), r=float(r))

    # -- defining function (negative inside) --------------------------------

    def defining(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "unit_ball":
            return np.sqrt(np.einsum("...i,...i->...", x, x)) - 1.0
        if self.kind == "half_space":
            return -x[..., 2]
        d = 2.0 * np.arctan(np.sqrt(np.einsum("...i,...i->...", x, x)))
        return self.r - np.minimum(d, np.pi - d)

    def boundary_components(self):
        """Origin-centered sphere radii (or the plane) carrying the boundary."""
        if self.kind == "unit_ball":
            return [{"type": "sphere", "radius": 1.0, "inward_sign": -1.0}]
        if self.kind == "half_space":
            return [{"type": "plane", "inward": np.array([0.0, 0.0, 1.0])}]
        return [
            {"type": "sphere", "radius": float(np.tan(self.r / 2.0)), "inward_sign": +1.0},
            {"type": "sphere", "radius": float(1.0 / np.tan(self.r / 2.0)), "inward_sign": -1.0},
        ]

    def component_of(self, p):
        """Boundary component nearest to the boundary point p."""
        comps = self.boundary_components()
        if len(comps) == 1:
            return comps[0]
        rho = float(np.linalg.norm(p))
        return min(comps, key=lambda c: abs(rho - c["radius"]))

    def inward_normal(self, p):
        """Inward-pointing g-unit normal of the boundary at p (batched)."""
        p = np.asarray(p, dtype=float)
        comp = self.component_of(p.reshape(-1, 3)[0]) if p.ndim > 1 else self.component_of(p)
        if comp["type"] == "plane":
            return np.broadcast_to(comp["inward"], p.shape).copy()
        rho = np.linalg.norm(p, axis=-1, keepdims=True)
        direction = comp["inward_sign"] * p / rho
        lam = np.asarray(self.chart.lam(p))
        return direction / lam[..., None]


def classify_point(domain: Domain, x, tol=BOUNDARY_TOL):
    """'interior' / 'boundary' / 'exterior' by the signed defining function."""
    f = float(domain.defining(np.asarray(x, dtype=float)))
    if abs(f) <= tol:
        return "boundary"
    return "interior" if f < 0 else "exterior"


# ---------------------------------------------------------------------------
# Boundary isothermal parametrizations
# ---------------------------------------------------------------------------

def _sphere_isothermal(p, R0, t1, t2):
    """Stereographic parametrization of the origin-centered sphere |x| = R0
    from the point antipodal to p, with Y(0,0) = p.

    Euclidean conformal factor 4 R0^2 / (4 R0^2 + v^2 + z^2); complex-step
    safe in (v, z).
    """
    p = np.asarray(p, dtype=float)

    def Y(v, z):
        v = np.asarray(v)
        z = np.asarray(z)
        rho2 = v * v + z * z
        den = 4.0 * R0**2 + rho2
        W = v[..., None] * t1 + z[..., None] * t2
        return ((4.0 * R0**2 - rho2) / den)[..., None] * p + (4.0 * R0**2 / den)[..., None] * W

    def mu(v, z):
        v = np.asarray(v)
        z = np.asarray(z)
        return 4.0 * R0**2 / (4.0 * R0**2 + v * v + z * z)

    return Y, mu


def boundary_isothermal(domain: Domain, p, seed_tangent=None):
    """Isothermal parametrization Y(v,z) of the boundary with Y(0,0) = p.

    Returns (Y, lam_b, t1, t2): lam_b(v,z) is the g-conformal factor, and
    (t1, t2) the Euclidean-orthonormal tangent frame at p realized by
    (Y_v, Y_z) at the origin.
    """
    p = np.asarray(p, dtype=float)
    if classify_point(domain, p) != "boundary":
        raise CaplabError("base point is not on the domain boundary")
    comp = domain.component_of(p)
    if comp["type"] == "plane":
        t1, t2 = tangent_frame(comp["inward"], seed_tangent)

        def Y(v, z):
            v = np.asarray(v)
            z = np.asarray(z)
            return p + v[..., None] * t1 + z[..., None] * t2

        lam_b = lambda v, z: np.ones(np.broadcast_shapes(np.shape(v), np.shape(z)))
        return Y, lam_b, t1, t2

    R0 = comp["radius"]
    nhat = p / np.linalg.norm(p)
    t1, t2 = tangent_frame(nhat, seed_tangent)
    Y, mu = _sphere_isothermal(p, R0, t1, t2)

    def lam_b(v, z):
        return np.asarray(domain.chart.lam(np.real(Y(v, z)))) * np.real(mu(v, z))

    return Y, lam_b, t1, t2


# ---------------------------------------------------------------------------
# Boundary-adapted charts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryAdaptedChart:
    """Chart F(u,v,z) with {u=0} on the boundary and d_u the inward normal.

    g(d_u, d_u) == 1 everywhere (geodesic flow at g-unit speed); at u = 0,
    (v,z) are isothermal on the boundary with factor lambda_b(v, z).
    """

    domain: Domain
    base_point: np.ndarray
    Y: Callable = field(repr=False)
    lambda_b: Callable = field(repr=False)
    t1: np.ndarray = None
    t2: np.ndarray = None
    u_range: float = 0.3
    vz_range: float = 0.3
    geodesic_step: float = 1e-3

    def nu_in(self, y):
        return self.domain.inward_normal(y)

    def F(self, u, v, z):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        z = np.asarray(z, dtype=float)
        shape = np.broadcast_shapes(u.shape, v.shape, z.shape)
        u = np.broadcast_to(u, shape)
        y = np.real(self.Y(np.broadcast_to(v, shape), np.broadcast_to(z, shape)))
        nu = self.nu_in(y)
        x, _ = geodesic_flow(self.domain.chart, y, nu, u, max_step=self.geodesic_step)
        return x

    def partials_at_boundary(self, v, z, cstep=1e-20):
        """Exact (F_u, F_v, F_z) on the u = 0 slice.

        F_u is the inward normal (initial geodesic velocity); F_v, F_z come
        from a complex step through the analytic map Y.
        """
        v = np.asarray(v, dtype=float)
        z = np.asarray(z, dtype=float)
        y = np.real(self.Y(v, z))
        Fu = self.nu_in(y)
        Fv = np.imag(self.Y(v + 1j * cstep, z)) / cstep
        Fz = np.imag(self.Y(v, z + 1j * cstep)) / cstep
        return Fu, Fv, Fz


def boundary_adapted_chart(domain: Domain, p, t_dir, u_range=0.3, vz_range=0.3,
                           geodesic_step=1e-3) -> BoundaryAdaptedChart:
    """Boundary-adapted chart at p with d_v(0) along the tangent t_dir."""
    p = np.asarray(p, dtype=float)
    t_dir = np.asarray(t_dir, dtype=float)
    Y0, lam0, t1, t2 = boundary_isothermal(domain, p)
    c1, c2 = float(np.dot(t_dir, t1)), float(np.dot(t_dir, t2))
    if np.hypot(c1, c2) < 1e-12:
        raise CaplabError("t_dir is not tangent to the boundary at p")
    beta = np.arctan2(c2, c1)
    cb, sb = np.cos(beta), np.sin(beta)

    def Y(v, z):
        return Y0(cb * v - sb * z, sb * v + cb * z)

    def lam_b(v, z):
        return lam0(cb * v - sb * z, sb * v + cb * z)

    t1r = cb * t1 + sb * t2
    t2r = -sb * t1 + cb * t2
    return BoundaryAdaptedChart(
        domain=domain, base_point=p, Y=Y, lambda_b=lam_b, t1=t1r, t2=t2r,
        u_range=u_range, vz_range=vz_range, geodesic_step=geodesic_step,
    )


# ---------------------------------------------------------------------------
# Graph extraction
# ---------------------------------------------------------------------------

def graph_in_chart(surface: ImplicitSurface, chart, radius, order=3) -> GraphJet:
    """Local graph z = h(u,v) of the surface in the chart around its origin.

    ``chart`` is an AffineChart (exact implicit-differentiation jets) or a
    BoundaryAdaptedChart / any object with an F(u,v,z) map (fitted jets).
    Raises NotAGraphError at vertical tangency.
    """
    if isinstance(chart, AffineChart):
        return graph_jet(surface, chart, radius, order=order)
    if isinstance(chart, BoundaryAdaptedChart):
        # tangency guard from the exact boundary partials
        z0 = _root_on_boundary(surface, chart, 0.0, radius)
        _, _, Fz = chart.partials_at_boundary(np.array(0.0), np.array(z0))
        g = surface.grad(chart.Y(np.array(0.0), np.array(z0)))
        denom = float(np.dot(np.ravel(g), np.ravel(Fz)))
        if abs(denom) < 1e-6 * np.linalg.norm(g) * np.linalg.norm(Fz):
            raise NotAGraphError("not a graph here (vertical tangency in boundary chart)")
    return graph_jet(surface, chart, radius, order=order)


def _root_on_boundary(surface: ImplicitSurface, chart: BoundaryAdaptedChart, v, window):
    from caplab.implicit import _bisect_scalar

    def f(z):
        return float(surface.psi(np.real(chart.Y(np.asarray(v), np.asarray(z)))))

    if abs(f(0.0)) < 1e-13:
        return 0.0
    return _bisect_scalar(f, window)


def boundary_graph_curve(surface: ImplicitSurface, chart: BoundaryAdaptedChart, v_samples):
    """h, h_u, h_v of the surface graph along the u = 0 boundary line.

    Exact up to root-finding: no geodesic integration enters (F(0,v,z) = Y(v,z)
    and F_u(0,v,z) is the inward normal).
    """
    v_samples = np.asarray(v_samples, dtype=float)
    h = np.empty_like(v_samples)
    for i, v in enumerate(v_samples):
        h[i] = _root_on_boundary(surface, chart, float(v), chart.vz_range)
    Fu, Fv, Fz = chart.partials_at_boundary(v_samples, h)
    y = np.real(chart.Y(v_samples, h))
    g = np.asarray(surface.grad(y))
    pu = np.einsum("...i,...i->...", g, Fu)
    pv = np.einsum("...i,...i->...", g, Fv)
    pz = np.einsum("...i,...i->...", g, Fz)
    if np.any(np.abs(pz) < 1e-10):
        raise NotAGraphError("vertical tangency along the boundary curve")
    return {"v": v_samples, "h": h, "h_u": -pu / pz, "h_v": -pv / pz, "points": y}
