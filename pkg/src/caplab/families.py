"""Transitive capillary families and their audits.

Four instantiated families: totally geodesic planes in R^3, CMC spheres of
mean curvature H != 0, equators of S^3 (seen in the stereographic chart),
and translates of a convex rotational ovaloid.  Each supplies the unique
member through a pointed oriented tangent plane (p, nu), as an implicit
surface plus a closed-form descriptor.

The Legendrian-lift embedding and C^3 dependence of Definition-style
transitive families hold by closed form for these constructions; they are
documented here rather than tested.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from caplab.errors import CaplabError, DegenerateIntersectionError
from caplab.geometry import EUCLIDEAN, SPHERE3, ConformalChart, ParametricSurface, s3_lift, s3_project
from caplab.implicit import ImplicitSurface
from caplab.surfaces import SurfaceBundle, equator as equator_bundle, plane as plane_bundle, sphere_patch

PLANES = "planes"
CMC_SPHERES = "cmc_spheres"
EQUATORS_S3 = "equators_s3"
TRANSLATED_OVALOID = "translated_ovaloid"


# ---------------------------------------------------------------------------
# Rotational profiles for ovaloids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    """Polar meridian rho(theta), theta in [0, pi] from the +z pole."""

    rho: Callable = field(repr=False)
    drho: Callable = field(repr=False)
    ddrho: Callable = field(repr=False)
    name: str = "profile"

    def meridian(self, theta):
        """r, z and their first/second theta-derivatives along the meridian."""
        th = np.asarray(theta, dtype=float)
        p, dp, ddp = self.rho(th), self.drho(th), self.ddrho(th)
        s, c = np.sin(th), np.cos(th)
        r = p * s
        z = p * c
        dr = dp * s + p * c
        dz = dp * c - p * s
        ddr = ddp * s + 2 * dp * c - p * s
        ddz = ddp * c - 2 * dp * s - p * c
        return r, z, dr, dz, ddr, ddz

    def gauss_angle(self, theta):
        """Angle of the outward normal from the +z axis."""
        _, _, dr, dz, _, _ = self.meridian(theta)
        return np.arctan2(-dz, dr)

    def curvatures(self, theta):
        """(kappa_parallel, kappa_meridian), positive for convex profiles."""
        r, _, dr, dz, ddr, ddz = self.meridian(theta)
        speed2 = dr * dr + dz * dz
        kp = -dz / (r * np.sqrt(speed2))
        km = (dz * ddr - dr * ddz) / speed2**1.5
        return kp, km


def profile_round_sphere(R=1.0) -> Profile:
    R = float(R)
    return Profile(
        rho=lambda th: R * np.ones_like(np.asarray(th, float)),
        drho=lambda th: np.zeros_like(np.asarray(th, float)),
        ddrho=lambda th: np.zeros_like(np.asarray(th, float)),
        name=f"round_sphere(R={R})",
    )


def profile_prolate(a=1.0, b=1.6) -> Profile:
    """Ellipsoid of revolution x^2/a^2 + y^2/a^2 + z^2/b^2 = 1 (b > a prolate)."""
    a, b = float(a), float(b)
    ia2, ib2 = 1.0 / a**2, 1.0 / b**2

    def D(th):
        return np.sin(th) ** 2 * ia2 + np.cos(th) ** 2 * ib2

    def dD(th):
        return np.sin(2 * th) * (ia2 - ib2)

    def ddD(th):
        return 2 * np.cos(2 * th) * (ia2 - ib2)

    return Profile(
        rho=lambda th: D(th) ** -0.5,
        drho=lambda th: -0.5 * dD(th) * D(th) ** -1.5,
        ddrho=lambda th: -0.5 * ddD(th) * D(th) ** -1.5 + 0.75 * dD(th) ** 2 * D(th) ** -2.5,
        name=f"prolate(a={a},b={b})",
    )


def profile_dumbbell(eps=0.5) -> Profile:
    """Non-convex control profile rho = 1 + eps*cos(2*theta)."""
    eps = float(eps)
    return Profile(
        rho=lambda th: 1.0 + eps * np.cos(2 * np.asarray(th, float)),
        drho=lambda th: -2 * eps * np.sin(2 * np.asarray(th, float)),
        ddrho=lambda th: -4 * eps * np.cos(2 * np.asarray(th, float)),
        name=f"dumbbell(eps={eps})",
    )


def profile_from_table(theta, rho, name="table") -> Profile:
    """Meridian sample table -> monotone cubic interpolant with derivatives."""
    from scipy.interpolate import CubicSpline

    theta = np.asarray(theta, dtype=float)
    rho = np.asarray(rho, dtype=float)
    spl = CubicSpline(theta, rho, bc_type=((1, 0.0), (1, 0.0)))
    return Profile(rho=spl, drho=spl.derivative(1), ddrho=spl.derivative(2), name=name)


PROFILE_PRESETS = {
    "round_sphere": profile_round_sphere,
    "prolate": profile_prolate,
    "dumbbell": profile_dumbbell,
}


# ---------------------------------------------------------------------------
# Family kinds and members
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FamilyKind:
    tag: str
    H: Optional[float] = None
    profile: Optional[Profile] = None

    @staticmethod
    def planes() -> "FamilyKind":
        return FamilyKind(tag=PLANES)

    @staticmethod
    def cmc_spheres(H: float) -> "FamilyKind":
        if H == 0:
            raise CaplabError("cmc_spheres requires H != 0; use planes for H = 0")
        return FamilyKind(tag=CMC_SPHERES, H=float(H))

    @staticmethod
    def equators_s3() -> "FamilyKind":
        return FamilyKind(tag=EQUATORS_S3)

    @staticmethod
    def translated_ovaloid(profile: Profile) -> "FamilyKind":
        return FamilyKind(tag=TRANSLATED_OVALOID, profile=profile)

    @property
    def chart_kind(self):
        return SPHERE3 if self.tag == EQUATORS_S3 else EUCLIDEAN


@dataclass(frozen=True)
class FamilyMember:
    kind: FamilyKind
    implicit: ImplicitSurface
    descriptor: dict
    bundle: Optional[SurfaceBundle] = None  # parametric realization when available


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _ovaloid_implicit(profile: Profile, translation):
    """Psi(x) = |y| - rho(theta(y)), y = x - T; gradient analytic, Hessian FD."""
    T = np.asarray(translation, dtype=float)

    def psi(x):
        y = np.asarray(x, dtype=float) - T
        s = np.sqrt(np.einsum("...i,...i->...", y, y))
        th = np.arccos(np.clip(y[..., 2] / s, -1.0, 1.0))
        return s - profile.rho(th)

    def grad(x):
        y = np.asarray(x, dtype=float) - T
        s = np.sqrt(np.einsum("...i,...i->...", y, y))
        yhat = y / s[..., None]
        q2 = y[..., 0] ** 2 + y[..., 1] ** 2
        q = np.sqrt(q2)
        th = np.arccos(np.clip(y[..., 2] / s, -1.0, 1.0))
        e3 = np.array([0.0, 0.0, 1.0])
        # grad theta = (y3*y/s^2 - e3)/q, valid off the axis
        gth = (y * (y[..., 2] / s**2)[..., None] - e3) / np.where(q < 1e-12, np.inf, q)[..., None]
        return yhat - profile.drho(th)[..., None] * gth

    def hess(x, h=1e-6):
        x = np.asarray(x, dtype=float)
        H = np.zeros(x.shape[:-1] + (3, 3))
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            H[..., :, i] = (grad(x + e) - grad(x - e)) / (2 * h)
        return 0.5 * (H + np.swapaxes(H, -1, -2))

    return ImplicitSurface(psi=psi, grad=grad, hess=hess, name="ovaloid")


def invert_gauss_map(profile: Profile, gamma_target, tol=1e-10):
    """theta with outward-normal angle gamma_target; monotone bisection + Newton."""
    f = lambda th: float(profile.gauss_angle(th)) - gamma_target
    lo, hi = 1e-9, np.pi - 1e-9
    if f(lo) > 0 or f(hi) < 0:
        raise CaplabError("gauss map inversion failed: angle outside profile range")
    th = brentq(f, lo, hi, xtol=tol)
    # Newton polish using dgamma/dtheta = kappa_m * meridian speed
    for _ in range(4):
        _, _, dr, dz, _, _ = profile.meridian(th)
        _, km = profile.curvatures(th)
        d = km * np.hypot(dr, dz)
        if abs(d) < 1e-14:
            break
        th = th - f(th) / d
        th = min(max(th, 1e-12), np.pi - 1e-12)
    return th


def member(kind: FamilyKind, p, nu) -> FamilyMember:
    """The unique family member through p with oriented unit normal nu."""
    p = np.asarray(p, dtype=float)
    nu = _unit(nu)

    if kind.tag == PLANES:
        bundle = plane_bundle(p, nu)
        desc = {"normal": nu, "offset": float(np.dot(p, nu))}
        return FamilyMember(kind, bundle.implicit, desc, bundle)

    if kind.tag == CMC_SPHERES:
        H = kind.H
        R = 1.0 / abs(H)
        center = p + nu / H
        orient = int(np.sign(H))
        bundle = sphere_patch(center, R, orient=orient,
                              axis=-nu, theta_max=np.pi * 0.95, name="cmc_sphere")
        desc = {"center": center, "radius": R, "orient": orient}
        return FamilyMember(kind, bundle.implicit, desc, bundle)

    if kind.tag == EQUATORS_S3:
        chart = ConformalChart.sphere3_stereographic()
        lam = float(chart.lam(p))
        _, J = s3_lift(p)
        a = J @ (nu / lam)
        a = a / np.linalg.norm(a)
        bundle = equator_bundle(a)
        desc = {"pole": a}
        return FamilyMember(kind, bundle.implicit, desc, bundle)

    if kind.tag == TRANSLATED_OVALOID:
        profile = kind.profile
        gamma = float(np.arccos(np.clip(nu[2], -1.0, 1.0)))
        phi = float(np.arctan2(nu[1], nu[0])) if gamma > 1e-12 and gamma < np.pi - 1e-12 else 0.0
        th = invert_gauss_map(profile, gamma)
        r, z, *_ = profile.meridian(th)
        q_model = np.array([r * np.cos(phi), r * np.sin(phi), z])
        T = p - q_model
        desc = {"translation": T}
        return FamilyMember(kind, _ovaloid_implicit(profile, T), desc, None)

    raise CaplabError(f"unknown family kind {kind.tag!r}")


def local_member_derivatives(kind: FamilyKind, q, nu):
    """(grad, hess) of the member's defining function at its own base point.

    Batched over leading dimensions for the closed-form families; this is
    what the difference-tensor machinery consumes at each grid point.
    """
    q = np.asarray(q, dtype=float)
    nu = np.asarray(nu, dtype=float)
    nu = nu / np.linalg.norm(nu, axis=-1, keepdims=True)
    if kind.tag == PLANES:
        return nu, np.zeros(q.shape + (3,))
    if kind.tag == CMC_SPHERES:
        s = np.sign(kind.H)
        R = 1.0 / abs(kind.H)
        hess = np.broadcast_to(-s * np.eye(3) / R, q.shape + (3,)).copy()
        return nu, hess
    if kind.tag == TRANSLATED_OVALOID:
        flat_q = q.reshape(-1, 3)
        flat_nu = nu.reshape(-1, 3)
        grads = np.empty_like(flat_q)
        hesses = np.empty(flat_q.shape + (3,))
        for i in range(flat_q.shape[0]):
            m = member(kind, flat_q[i], flat_nu[i])
            grads[i] = m.implicit.grad(flat_q[i])
            hesses[i] = m.implicit.hess(flat_q[i])
        return grads.reshape(q.shape), hesses.reshape(q.shape + (3,))
    raise CaplabError(f"no local derivatives for family {kind.tag!r}")


def member_graph(fam_member: FamilyMember, chart, radius=0.3, order=3):
    """GraphJet of the member in an adapted chart (vertical tangency raises)."""
    from caplab.domains import graph_in_chart

    return graph_in_chart(fam_member.implicit, chart, radius, order=order)


def descriptor_close(d1: dict, d2: dict, tol=1e-8) -> bool:
    if d1.keys() != d2.keys():
        return False
    for k in d1:
        a, b = np.asarray(d1[k], dtype=float), np.asarray(d2[k], dtype=float)
        if a.shape != b.shape or np.max(np.abs(a - b), initial=0.0) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# Audits
# ---------------------------------------------------------------------------

def _random_member_point(fam_member: FamilyMember, rng):
    """A second point on the member plus the member's unit normal there."""
    kind = fam_member.kind
    desc = fam_member.descriptor
    if kind.tag == PLANES:
        n = desc["normal"]
        from caplab.implicit import tangent_frame

        t1, t2 = tangent_frame(n)
        q = desc["offset"] * n + rng.normal(size=1)[0] * t1 + rng.normal(size=1)[0] * t2
        return q, n
    if kind.tag == CMC_SPHERES:
        u = _unit(rng.normal(size=3))
        q = desc["center"] + desc["radius"] * u
        return q, -desc["orient"] * u
    if kind.tag == EQUATORS_S3:
        a = desc["pole"]
        basis = _orthonormal_complement(a)
        w = rng.normal(size=3)
        Q = basis @ (w / np.linalg.norm(w))
        if Q[3] < -0.99:
            Q = -Q
        q = s3_project(Q)
        g = fam_member.implicit.grad(q)
        return q, _unit(g)
    if kind.tag == TRANSLATED_OVALOID:
        th = rng.uniform(0.2, np.pi - 0.2)
        ph = rng.uniform(0, 2 * np.pi)
        r, z, *_ = kind.profile.meridian(th)
        q = desc["translation"] + np.array([r * np.cos(ph), r * np.sin(ph), z])
        gamma = kind.profile.gauss_angle(th)
        n = np.array([np.sin(gamma) * np.cos(ph), np.sin(gamma) * np.sin(ph), np.cos(gamma)])
        return q, n
    raise CaplabError(kind.tag)


def _orthonormal_complement(a):
    """Columns: an orthonormal basis of the hyperplane orthogonal to a in R^4."""
    a = _unit(a)
    M = np.eye(4) - np.outer(a, a)
    q, _ = np.linalg.qr(M[:, :4])
    cols = [c for c in q.T if abs(np.dot(c, a)) < 0.5]
    B = np.stack(cols[:3], axis=1)
    # re-orthonormalize against a for safety
    for i in range(3):
        v = B[:, i] - np.dot(B[:, i], a) * a
        for j in range(i):
            v -= np.dot(v, B[:, j]) * B[:, j]
        B[:, i] = v / np.linalg.norm(v)
    return B


def transitivity_audit(kind: FamilyKind, n_samples=100, seed=0, domain=None):
    """Through-point, normal-match, and uniqueness checks on random (p, nu)."""
    rng = np.random.default_rng(seed)
    failures = []
    for i in range(n_samples):
        if kind.tag == EQUATORS_S3:
            p = rng.normal(size=3) * 0.8
        elif domain is not None and domain.kind == "unit_ball":
            p = rng.normal(size=3)
            p = p / np.linalg.norm(p) * rng.uniform(0, 0.95)
        else:
            p = rng.normal(size=3)
            if kind.tag == TRANSLATED_OVALOID:
                p = p * 0.5
        nu = _unit(rng.normal(size=3))
        m = member(kind, p, nu)
        psi_p = float(abs(m.implicit.psi(p)))
        g = _unit(m.implicit.grad(p))
        ang = float(np.arctan2(np.linalg.norm(np.cross(g, nu)), np.dot(g, nu)))
        q, nu_q = _random_member_point(m, rng)
        m2 = member(kind, q, nu_q)
        unique = descriptor_close(m.descriptor, m2.descriptor, tol=1e-8)
        ok = psi_p < 1e-10 and ang < 1e-8 and unique
        if not ok:
            failures.append({"i": i, "psi": psi_p, "angle": ang, "unique": unique})
    return {"n": n_samples, "passed": n_samples - len(failures), "failures": failures}


# ---------------------------------------------------------------------------
# Intersection topology of equators with the two-caps domain
# ---------------------------------------------------------------------------

def intersection_topology(fam_member: FamilyMember, domain) -> str:
    """'sphere' or 'annulus' for an equator member against s3_two_caps(r).

    The geodesic distance from either cap pole (+-e4) to the great sphere
    {<X,a>=0} is arcsin(|a4|); antipodal symmetry makes the two distances
    equal, so a member either misses both caps (sphere) or crosses both
    (annulus).  Tangency within 1e-9 raises DegenerateIntersectionError.
    """
    if fam_member.kind.tag != EQUATORS_S3 or domain.kind != "s3_two_caps":
        raise CaplabError("intersection_topology applies to equators in s3_two_caps")
    a = fam_member.descriptor["pole"]
    d = float(np.arcsin(abs(a[3])))
    if abs(d - domain.r) < 1e-9:
        raise DegenerateIntersectionError(f"tangential equator/cap contact (d = r = {domain.r})")
    return "sphere" if d > domain.r else "annulus"


def constant_angle_audit(fam_member: FamilyMember, domain, m_samples=24):
    """Contact-angle statistics along the member/boundary intersection curve.

    Constancy is the per-connected-component statement of the transitive
    family definition, so the spread is taken within each boundary component
    and the worst one is reported.
    """
    from caplab.capillary import contact_angle

    groups = boundary_intersection_samples(fam_member, domain, m_samples)
    if not any(pts for _, pts in groups):
        return {"status": "no intersection", "angles": []}
    chart = domain.chart
    transversal = True
    per_component = []
    all_angles = []
    for comp_id, pts in groups:
        angles = []
        for x in pts:
            Nw = domain.inward_normal(x)
            Nm = np.asarray(fam_member.implicit.grad(x))
            lam = float(chart.lam(x))
            Nm = Nm / (lam * np.linalg.norm(Nm))  # g-unit
            pairing = abs(chart.g_inner(x, Nm, Nw))
            if pairing >= 1.0 - 1e-8:
                transversal = False
                continue
            angles.append(contact_angle_from_normals(chart, domain, fam_member.implicit, x))
        if angles:
            angles = np.asarray(angles)
            per_component.append({
                "component": comp_id,
                "spread": float(np.max(angles) - np.min(angles)),
                "mean": float(np.mean(angles)),
                "count": int(angles.size),
            })
            all_angles.append(angles)
    angles = np.concatenate(all_angles) if all_angles else np.asarray([])
    return {
        "status": "ok",
        "is_transversal": transversal,
        "angles": angles,
        "per_component": per_component,
        "spread": float(max(c["spread"] for c in per_component)) if per_component else np.nan,
        "mean": float(np.mean(angles)) if angles.size else np.nan,
    }


def contact_angle_from_normals(chart, domain, surface_implicit, x):
    """Dihedral contact angle at x from the implicit surface normal field."""
    from caplab.capillary import dihedral_contact_angle

    N_sigma = np.asarray(surface_implicit.grad(x))
    lam = float(chart.lam(x))
    N_sigma = N_sigma / (lam * np.linalg.norm(N_sigma))
    return dihedral_contact_angle(chart, domain, x, N_sigma)


def boundary_intersection_samples(fam_member: FamilyMember, domain, m_samples):
    """Per-component sample points on member \\cap boundary via root finds.

    Returns [(component_id, [points...]), ...], one entry per boundary
    component that the member actually meets.
    """
    desc = fam_member.descriptor
    psi = fam_member.implicit.psi
    out = []
    for ci, comp in enumerate(domain.boundary_components()):
        if comp["type"] == "sphere":
            Rb = comp["radius"]
            axis = _intersection_axis(fam_member)
            if axis is None:
                continue
            b1, b2 = _frame_of(axis)
            found = []
            for k in range(m_samples):
                psi_k = 2 * np.pi * k / m_samples
                mdir = np.cos(psi_k) * b1 + np.sin(psi_k) * b2

                def f(t):
                    return float(psi(Rb * (np.cos(t) * axis + np.sin(t) * mdir)))

                ts = np.linspace(1e-6, np.pi - 1e-6, 96)
                vals = [f(t) for t in ts]
                for j in range(len(ts) - 1):
                    if np.sign(vals[j]) != np.sign(vals[j + 1]):
                        t0 = brentq(f, ts[j], ts[j + 1], xtol=1e-14)
                        found.append(Rb * (np.cos(t0) * axis + np.sin(t0) * mdir))
                        break
            if found:
                out.append((ci, found))
        else:  # plane z = 0
            center = _plane_curve_center(fam_member)
            if center is None:
                continue
            found = []
            for k in range(m_samples):
                psi_k = 2 * np.pi * k / m_samples
                d = np.array([np.cos(psi_k), np.sin(psi_k), 0.0])

                def f(t):
                    return float(psi(center + t * d))

                ts = np.linspace(1e-6, 6.0, 160)
                vals = [f(t) for t in ts]
                for j in range(len(ts) - 1):
                    if np.sign(vals[j]) != np.sign(vals[j + 1]):
                        t0 = brentq(f, ts[j], ts[j + 1], xtol=1e-14)
                        found.append(center + t0 * d)
                        break
            if found:
                out.append((ci, found))
    return out


def _intersection_axis(fam_member: FamilyMember):
    desc = fam_member.descriptor
    if fam_member.kind.tag == PLANES:
        return _unit(desc["normal"])
    if fam_member.kind.tag == CMC_SPHERES:
        c = desc["center"]
        return _unit(c) if np.linalg.norm(c) > 1e-12 else np.array([0.0, 0.0, 1.0])
    if fam_member.kind.tag == EQUATORS_S3:
        abar = desc["pole"][:3]
        return _unit(abar) if np.linalg.norm(abar) > 1e-12 else None
    if fam_member.kind.tag == TRANSLATED_OVALOID:
        return _unit(desc["translation"]) if np.linalg.norm(desc["translation"]) > 1e-12 else np.array([0.0, 0.0, 1.0])
    return None


def _plane_curve_center(fam_member: FamilyMember):
    desc = fam_member.descriptor
    if fam_member.kind.tag == TRANSLATED_OVALOID:
        T = desc["translation"]
        return np.array([T[0], T[1], 0.0])
    if fam_member.kind.tag == CMC_SPHERES:
        c = desc["center"]
        return np.array([c[0], c[1], 0.0])
    if fam_member.kind.tag == PLANES:
        n = desc["normal"]
        d = desc["offset"]
        nxy2 = n[0] ** 2 + n[1] ** 2
        if nxy2 < 1e-24:
            return None  # member parallel to the wall
        # a point on the line {x . n = d, x3 = 0}
        return np.array([n[0], n[1], 0.0]) * d / nxy2
    return None


def _frame_of(axis):
    from caplab.implicit import tangent_frame

    return tangent_frame(axis)


# ---------------------------------------------------------------------------
# Ellipticity audit of the instantiated graph equations
# ---------------------------------------------------------------------------

def graph_operator_partials(equation, jets, H=None):
    """(Phi_r, Phi_s, Phi_t) of the quasilinear graph operator at the jets.

    minimal_graph / cmc_graph share the principal part
    (1+q^2) r - 2 p q s + (1+p^2) t; the CMC right-hand side does not touch
    the second-order slots.
    """
    jets = np.asarray(jets, dtype=float)
    p, q = jets[..., 0], jets[..., 1]
    phi_r = 1.0 + q * q
    phi_s = -2.0 * p * q
    phi_t = 1.0 + p * p
    return phi_r, phi_s, phi_t


def pde_ellipticity_audit(equation, jet_samples, H=None, phi=None, fd_step=1e-6):
    """Check Phi_r > 0 and 4 Phi_r Phi_t - Phi_s^2 > 0 on the samples.

    equation: 'minimal_graph', 'cmc_graph' (quasilinear graph operators, with
    analytic partials) or 'weingarten' (phi(k1, k2), finite differences,
    checking dPhi/dx * dPhi/dy > 0 instead).
    """
    if equation in ("minimal_graph", "cmc_graph"):
        phi_r, phi_s, phi_t = graph_operator_partials(equation, jet_samples, H=H)
        disc = 4.0 * phi_r * phi_t - phi_s**2
        ok = (phi_r > 0) & (disc > 0)
        return {
            "equation": equation,
            "n": int(np.size(phi_r)),
            "all_pass": bool(np.all(ok)),
            "min_phi_r": float(np.min(phi_r)),
            "min_discriminant": float(np.min(disc)),
        }
    if equation == "weingarten":
        jets = np.asarray(jet_samples, dtype=float)
        k1, k2 = jets[..., 0], jets[..., 1]
        dx = (phi(k1 + fd_step, k2) - phi(k1 - fd_step, k2)) / (2 * fd_step)
        dy = (phi(k1, k2 + fd_step) - phi(k1, k2 - fd_step)) / (2 * fd_step)
        prod = dx * dy
        return {
            "equation": equation,
            "n": int(np.size(prod)),
            "all_pass": bool(np.all(prod > 0)),
            "min_product": float(np.min(prod)),
        }
    raise CaplabError(f"unknown equation {equation!r}")
