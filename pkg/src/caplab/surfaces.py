"""Surface presets: parametric immersions paired with implicit twins.

Every preset carries analytic jets (or documented finite-difference jets for
the perturbed negative controls) plus a signed defining function, so the same
surface can be fed to curvature computations, graph extraction, and
root-finding against domain boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from caplab.geometry import EUCLIDEAN, SPHERE3, ParametricSurface
from caplab.implicit import ImplicitSurface, tangent_frame


@dataclass(frozen=True)
class SurfaceBundle:
    """A preset surface in all the representations the lab needs."""

    name: str
    parametric: ParametricSurface
    implicit: ImplicitSurface
    param_domain: tuple  # ((u_lo, u_hi), (v_lo, v_hi))
    chart_kind: str = EUCLIDEAN
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Planes
# ---------------------------------------------------------------------------

def plane(point, normal) -> SurfaceBundle:
    p = np.asarray(point, dtype=float)
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    e1, e2 = tangent_frame(n)
    # with e2 = n x e1 the parametric cross product X_u x X_v equals n
    e2 = np.cross(n, e1)

    zero = lambda u, v: np.zeros(np.broadcast_shapes(np.shape(u), np.shape(v)) + (3,))
    surf = ParametricSurface.from_jets(
        X=lambda u, v: p + np.asarray(u)[..., None] * e1 + np.asarray(v)[..., None] * e2,
        Xu=lambda u, v: np.broadcast_to(e1, np.broadcast_shapes(np.shape(u), np.shape(v)) + (3,)),
        Xv=lambda u, v: np.broadcast_to(e2, np.broadcast_shapes(np.shape(u), np.shape(v)) + (3,)),
        Xuu=zero, Xuv=zero, Xvv=zero,
        orientation=1, name="plane",
    )
    imp = ImplicitSurface(
        psi=lambda x: np.einsum("...i,i->...", np.asarray(x) - p, n),
        grad=lambda x: np.broadcast_to(n, np.shape(x)).copy(),
        hess=lambda x: np.zeros(np.shape(x) + (3,)),
        third=lambda x: np.zeros(np.shape(x) + (3, 3)),
        name="plane",
    )
    return SurfaceBundle("plane", surf, imp, ((-2.0, 2.0), (-2.0, 2.0)),
                         meta={"point": p, "normal": n})


# ---------------------------------------------------------------------------
# Spheres and spherical caps
# ---------------------------------------------------------------------------

def sphere_patch(center, radius, orient=1, axis=(0.0, 0.0, -1.0), theta_max=np.pi * 0.9,
                 name="sphere_patch") -> SurfaceBundle:
    """Patch of the Euclidean sphere |x - c| = R around the ``axis`` pole.

    orient = +1 gives the normal (c - x)/R (mean curvature +1/R), orient = -1
    the outward normal.
    """
    c = np.asarray(center, dtype=float)
    R = float(radius)
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    b1, b2 = tangent_frame(a)

    def nhat(th, ph):
        th, ph = np.broadcast_arrays(np.asarray(th, float), np.asarray(ph, float))
        return (
            np.cos(th)[..., None] * a
            + np.sin(th)[..., None] * (np.cos(ph)[..., None] * b1 + np.sin(ph)[..., None] * b2)
        )

    def dhat(th, ph):
        th, ph = np.broadcast_arrays(np.asarray(th, float), np.asarray(ph, float))
        return np.cos(ph)[..., None] * b1 + np.sin(ph)[..., None] * b2

    def ehat(th, ph):
        th, ph = np.broadcast_arrays(np.asarray(th, float), np.asarray(ph, float))
        return -np.sin(ph)[..., None] * b1 + np.cos(ph)[..., None] * b2

    X = lambda th, ph: c + R * nhat(th, ph)
    Xu = lambda th, ph: R * (-np.sin(np.asarray(th, float))[..., None] * a
                             + np.cos(np.asarray(th, float))[..., None] * dhat(th, ph))
    Xv = lambda th, ph: R * np.sin(np.asarray(th, float))[..., None] * ehat(th, ph)
    Xuu = lambda th, ph: -R * nhat(th, ph)
    Xuv = lambda th, ph: R * np.cos(np.asarray(th, float))[..., None] * ehat(th, ph)
    Xvv = lambda th, ph: -R * np.sin(np.asarray(th, float))[..., None] * (
        np.cos(np.asarray(ph, float))[..., None] * b1 + np.sin(np.asarray(ph, float))[..., None] * b2
    )

    # parametric cross X_u x X_v points outward; orient=+1 wants (c-x)/R
    surf = ParametricSurface.from_jets(X, Xu, Xv, Xuu, Xuv, Xvv,
                                       orientation=-int(orient), name=name)
    s = float(orient)
    imp = ImplicitSurface(
        psi=lambda x: s * (R**2 - np.einsum("...i,...i->...", np.asarray(x) - c, np.asarray(x) - c)) / (2 * R),
        grad=lambda x: s * (c - np.asarray(x)) / R,
        hess=lambda x: np.broadcast_to(-s * np.eye(3) / R, np.shape(x) + (3,)).copy(),
        third=lambda x: np.zeros(np.shape(x) + (3, 3)),
        name=name,
    )
    return SurfaceBundle(name, surf, imp, ((1e-6, theta_max), (0.0, 2 * np.pi)),
                         meta={"center": c, "radius": R, "orient": int(orient), "axis": a})


# ---------------------------------------------------------------------------
# Catenoid
# ---------------------------------------------------------------------------

def catenoid(a, s_max=2.0) -> SurfaceBundle:
    """X(s, phi) = a (cosh s cos phi, cosh s sin phi, s); conformal coordinates."""
    a = float(a)

    def X(s, ph):
        s, ph = np.broadcast_arrays(np.asarray(s, float), np.asarray(ph, float))
        return a * np.stack([np.cosh(s) * np.cos(ph), np.cosh(s) * np.sin(ph), s], axis=-1)

    def Xu(s, ph):
        s, ph = np.broadcast_arrays(np.asarray(s, float), np.asarray(ph, float))
        return a * np.stack([np.sinh(s) * np.cos(ph), np.sinh(s) * np.sin(ph), np.ones_like(s)], axis=-1)

    def Xv(s, ph):
        s, ph = np.broadcast_arrays(np.asarray(s, float), np.asarray(ph, float))
        return a * np.stack([-np.cosh(s) * np.sin(ph), np.cosh(s) * np.cos(ph), np.zeros_like(s)], axis=-1)

    def Xuu(s, ph):
        s, ph = np.broadcast_arrays(np.asarray(s, float), np.asarray(ph, float))
        return a * np.stack([np.cosh(s) * np.cos(ph), np.cosh(s) * np.sin(ph), np.zeros_like(s)], axis=-1)

    def Xuv(s, ph):
        s, ph = np.broadcast_arrays(np.asarray(s, float), np.asarray(ph, float))
        return a * np.stack([-np.sinh(s) * np.sin(ph), np.sinh(s) * np.cos(ph), np.zeros_like(s)], axis=-1)

    def Xvv(s, ph):
        s, ph = np.broadcast_arrays(np.asarray(s, float), np.asarray(ph, float))
        return a * np.stack([-np.cosh(s) * np.cos(ph), -np.cosh(s) * np.sin(ph), np.zeros_like(s)], axis=-1)

    def psi(x):
        x = np.asarray(x)
        r = np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2)
        return r - a * np.cosh(x[..., 2] / a)

    def grad(x):
        x = np.asarray(x, dtype=float)
        r = np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2)
        return np.stack([x[..., 0] / r, x[..., 1] / r, -np.sinh(x[..., 2] / a)], axis=-1)

    def hess(x):
        x = np.asarray(x, dtype=float)
        X1, X2, X3 = x[..., 0], x[..., 1], x[..., 2]
        r = np.sqrt(X1**2 + X2**2)
        H = np.zeros(x.shape[:-1] + (3, 3))
        H[..., 0, 0] = X2**2 / r**3
        H[..., 1, 1] = X1**2 / r**3
        H[..., 0, 1] = H[..., 1, 0] = -X1 * X2 / r**3
        H[..., 2, 2] = -np.cosh(X3 / a) / a
        return H

    surf = ParametricSurface.from_jets(X, Xu, Xv, Xuu, Xuv, Xvv, orientation=1, name="catenoid")
    imp = ImplicitSurface(psi=psi, grad=grad, hess=hess, name="catenoid")
    return SurfaceBundle("catenoid", surf, imp, ((-s_max, s_max), (0.0, 2 * np.pi)),
                         meta={"a": a})


def critical_catenoid():
    """Rescaled catenoid meeting the unit sphere orthogonally.

    The orthogonality condition along the cosh profile reduces to
    s*tanh(s) = 1; Newton from the neck-radius-0.5 initial guess.  Returns
    (bundle, s0, a).
    """
    # neck radius a*1 = 0.5 corresponds to s0 with a*sqrt(cosh^2+s^2)=1
    s = 1.0
    for _ in range(60):
        f = s * np.tanh(s) - 1.0
        df = np.tanh(s) + s / np.cosh(s) ** 2
        step = f / df
        s -= step
        if abs(step) < 1e-15:
            break
    a = 1.0 / np.sqrt(np.cosh(s) ** 2 + s**2)
    bundle = catenoid(a, s_max=1.05 * s)
    return bundle, s, a


# ---------------------------------------------------------------------------
# Graphs z = h(u, v)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphFuncs:
    h: Callable
    hu: Callable
    hv: Callable
    huu: Callable
    huv: Callable
    hvv: Callable
    third: Optional[Callable] = None  # (u,v) -> (2,2,2) tensor


def graph_bundle(funcs: GraphFuncs, name, radius=2.0) -> SurfaceBundle:
    def X(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.stack([u, v, funcs.h(u, v)], axis=-1)

    def Xu(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.stack([np.ones_like(u), np.zeros_like(u), funcs.hu(u, v)], axis=-1)

    def Xv(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.stack([np.zeros_like(u), np.ones_like(u), funcs.hv(u, v)], axis=-1)

    def second(f):
        def jet(u, v):
            u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
            return np.stack([np.zeros_like(u), np.zeros_like(u), f(u, v)], axis=-1)
        return jet

    surf = ParametricSurface.from_jets(
        X, Xu, Xv, second(funcs.huu), second(funcs.huv), second(funcs.hvv),
        orientation=1, name=name,
    )

    def psi(x):
        x = np.asarray(x)
        return x[..., 2] - funcs.h(x[..., 0], x[..., 1])

    def grad(x):
        x = np.asarray(x, dtype=float)
        u, v = x[..., 0], x[..., 1]
        return np.stack([-funcs.hu(u, v), -funcs.hv(u, v), np.ones_like(u)], axis=-1)

    def hess(x):
        x = np.asarray(x, dtype=float)
        u, v = x[..., 0], x[..., 1]
        H = np.zeros(x.shape[:-1] + (3, 3))
        H[..., 0, 0] = -funcs.huu(u, v)
        H[..., 1, 1] = -funcs.hvv(u, v)
        H[..., 0, 1] = H[..., 1, 0] = -funcs.huv(u, v)
        return H

    third = None
    if funcs.third is not None:
        def third(x):
            x = np.asarray(x, dtype=float)
            u, v = x[..., 0], x[..., 1]
            t2 = np.asarray(funcs.third(u, v))  # (...,2,2,2) of h
            T = np.zeros(x.shape[:-1] + (3, 3, 3))
            T[..., :2, :2, :2] = -t2
            return T

    imp = ImplicitSurface(psi=psi, grad=grad, hess=hess, third=third, name=name)
    return SurfaceBundle(name, surf, imp, ((-radius, radius), (-radius, radius)),
                         meta={})


def graph_saddle(scale=0.5) -> SurfaceBundle:
    c = float(scale)
    f = GraphFuncs(
        h=lambda u, v: c * (u**2 - v**2),
        hu=lambda u, v: 2 * c * u * np.ones_like(np.asarray(v, float)),
        hv=lambda u, v: -2 * c * v * np.ones_like(np.asarray(u, float)),
        huu=lambda u, v: 2 * c * np.ones(np.broadcast_shapes(np.shape(u), np.shape(v))),
        huv=lambda u, v: np.zeros(np.broadcast_shapes(np.shape(u), np.shape(v))),
        hvv=lambda u, v: -2 * c * np.ones(np.broadcast_shapes(np.shape(u), np.shape(v))),
        third=lambda u, v: np.zeros(np.broadcast_shapes(np.shape(u), np.shape(v)) + (2, 2, 2)),
    )
    return graph_bundle(f, "graph_saddle")


def harmonic_graph(n, amp=1.0, name=None) -> SurfaceBundle:
    """Graph of amp * Re((u+iv)^n): the model singularity generator."""
    n = int(n)
    amp = float(amp)

    def zpow(u, v, k):
        z = np.asarray(u, float) + 1j * np.asarray(v, float)
        return z**k if k >= 0 else np.zeros_like(z)

    f = GraphFuncs(
        h=lambda u, v: amp * np.real(zpow(u, v, n)),
        hu=lambda u, v: amp * n * np.real(zpow(u, v, n - 1)),
        hv=lambda u, v: -amp * n * np.imag(zpow(u, v, n - 1)),
        huu=lambda u, v: amp * n * (n - 1) * np.real(zpow(u, v, n - 2)),
        huv=lambda u, v: -amp * n * (n - 1) * np.imag(zpow(u, v, n - 2)),
        hvv=lambda u, v: -amp * n * (n - 1) * np.real(zpow(u, v, n - 2)),
    )

    def third(u, v):
        w = amp * n * (n - 1) * (n - 2) * zpow(u, v, n - 3)
        re, im = np.real(w), np.imag(w)
        T = np.empty(np.shape(re) + (2, 2, 2))
        # d^3/du^a dv^b Re(z^n): alternating real/imag pattern
        T[..., 0, 0, 0] = re
        T[..., 0, 0, 1] = T[..., 0, 1, 0] = T[..., 1, 0, 0] = -im
        T[..., 0, 1, 1] = T[..., 1, 0, 1] = T[..., 1, 1, 0] = -re
        T[..., 1, 1, 1] = im
        return T

    f = GraphFuncs(h=f.h, hu=f.hu, hv=f.hv, huu=f.huu, huv=f.huv, hvv=f.hvv, third=third)
    return graph_bundle(f, name or f"graph_monkey_{n}")


def graph_monkey(n=3, amp=1.0) -> SurfaceBundle:
    return harmonic_graph(n, amp, name=f"graph_monkey_{n}")


# ---------------------------------------------------------------------------
# Equators of the 3-sphere (stereographic chart)
# ---------------------------------------------------------------------------

def equator(pole) -> SurfaceBundle:
    """Chart image of the great sphere {X in S^3 : <X, a> = 0}.

    The defining function is Psi(x) = <lift(x), a>, which is rational on the
    chart; the zero set is a Euclidean plane through the origin (a4 = 0) or a
    sphere of center abar/a4 and radius sqrt(1 + |center|^2).
    """
    a = np.asarray(pole, dtype=float)
    a = a / np.linalg.norm(a)
    abar, a4 = a[:3], a[3]

    def psi(x):
        x = np.asarray(x)
        r2 = np.einsum("...i,...i->...", x, x)
        return (2.0 * np.einsum("...i,i->...", x, abar) + a4 * (1.0 - r2)) / (1.0 + r2)

    def grad(x):
        x = np.asarray(x, dtype=float)
        r2 = np.einsum("...i,...i->...", x, x)
        m = 1.0 + r2
        Nval = 2.0 * np.einsum("...i,i->...", x, abar) + a4 * (1.0 - r2)
        gN = 2.0 * abar - 2.0 * a4 * x
        return gN / m[..., None] - (Nval / m**2)[..., None] * (2.0 * x)

    def hess(x):
        x = np.asarray(x, dtype=float)
        r2 = np.einsum("...i,...i->...", x, x)
        m = 1.0 + r2
        Nval = 2.0 * np.einsum("...i,i->...", x, abar) + a4 * (1.0 - r2)
        gN = np.broadcast_to(2.0 * abar, x.shape) - 2.0 * a4 * x
        gm = 2.0 * x
        eye = np.eye(3)
        H = (
            (-2.0 * a4 / m)[..., None, None] * eye
            - (np.einsum("...i,...j->...ij", gN, gm) + np.einsum("...i,...j->...ij", gm, gN))
            / (m**2)[..., None, None]
            - (2.0 * Nval / m**2)[..., None, None] * eye
            + (2.0 * Nval / m**3)[..., None, None] * np.einsum("...i,...j->...ij", gm, gm)
        )
        return H

    imp = ImplicitSurface(psi=psi, grad=grad, hess=hess, name="equator")

    if abs(a4) < 1e-12:
        base = plane(np.zeros(3), abar)
        parametric = base.parametric
        domain = base.param_domain
        meta = {"pole": a, "shape": "plane", "normal": abar}
    else:
        c = abar / a4
        R = float(np.sqrt(1.0 + np.dot(c, c)))
        # grad psi on the surface points along -sign(a4) * (x - c)
        base = sphere_patch(c, R, orient=int(np.sign(a4)), axis=(0, 0, -1),
                            theta_max=np.pi * 0.95, name="equator")
        parametric = base.parametric
        domain = base.param_domain
        meta = {"pole": a, "shape": "sphere", "center": c, "radius": R}
    return SurfaceBundle("equator", parametric, imp, domain, chart_kind=SPHERE3, meta=meta)


# ---------------------------------------------------------------------------
# Perturbed cap (negative control)
# ---------------------------------------------------------------------------

def perturbed_cap(center, radius, orient=1, eps=1e-3, k_theta=3, k_phi=2,
                  axis=(0.0, 0.0, -1.0)) -> SurfaceBundle:
    """Radial bump eps*cos(k_theta*theta)*cos(k_phi*phi) on a sphere patch.

    Jets are finite differences (the control only needs ~1e-3 accuracy).
    """
    c = np.asarray(center, dtype=float)
    R = float(radius)
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    b1, b2 = tangent_frame(a)

    def X(th, ph):
        th, ph = np.broadcast_arrays(np.asarray(th, float), np.asarray(ph, float))
        nhat = (
            np.cos(th)[..., None] * a
            + np.sin(th)[..., None] * (np.cos(ph)[..., None] * b1 + np.sin(ph)[..., None] * b2)
        )
        bump = 1.0 + eps * np.cos(k_theta * th) * np.cos(k_phi * ph)
        return c + R * bump[..., None] * nhat

    surf = ParametricSurface.from_map(X, orientation=-int(orient), name="perturbed_cap", h_fd=1e-5)

    def psi(x):
        x = np.asarray(x, dtype=float)
        d = x - c
        r = np.sqrt(np.einsum("...i,...i->...", d, d))
        ct = np.clip(np.einsum("...i,i->...", d, a) / r, -1.0, 1.0)
        th = np.arccos(ct)
        ph = np.arctan2(np.einsum("...i,i->...", d, b2), np.einsum("...i,i->...", d, b1))
        bump = 1.0 + eps * np.cos(k_theta * th) * np.cos(k_phi * ph)
        return float(orient) * (R * bump - r)

    def grad_fd(x, h=1e-7):
        x = np.asarray(x, dtype=float)
        g = np.zeros_like(x)
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            g[..., i] = (psi(x + e) - psi(x - e)) / (2 * h)
        return g

    def hess_fd(x, h=1e-5):
        x = np.asarray(x, dtype=float)
        H = np.zeros(x.shape[:-1] + (3, 3))
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            H[..., :, i] = (grad_fd(x + e) - grad_fd(x - e)) / (2 * h)
        return 0.5 * (H + np.swapaxes(H, -1, -2))

    imp = ImplicitSurface(psi=psi, grad=grad_fd, hess=hess_fd, name="perturbed_cap")
    return SurfaceBundle("perturbed_cap", surf, imp, ((1e-2, np.pi * 0.9), (0.0, 2 * np.pi)),
                         meta={"center": c, "radius": R, "eps": eps})


# ---------------------------------------------------------------------------
# Preset catalog
# ---------------------------------------------------------------------------

PRESET_CATALOG = {
    "plane": {
        "params": {"point": {"default": [0.0, 0.0, 0.0]},
                   "normal": {"default": [0.0, 0.0, 1.0]}},
        "doc": "totally geodesic plane through a point",
    },
    "sphere_cap": {
        "params": {"H": {"default": 1.0, "range": [-8.0, 8.0]},
                   "alpha": {"default": 1.5707963267948966, "range": [0.0, 3.141592653589793]}},
        "doc": "spherical cap meeting the unit sphere at contact angle alpha",
    },
    "catenoid": {
        "params": {"critical": {"default": True},
                   "a": {"default": 0.5, "range": [0.05, 1.0]}},
        "doc": "catenoid in conformal (s, phi) coordinates",
    },
    "graph_saddle": {
        "params": {"scale": {"default": 0.5, "range": [0.01, 4.0]}},
        "doc": "graph z = scale*(u^2 - v^2)",
    },
    "graph_monkey": {
        "params": {"n": {"default": 3, "range": [2, 8]},
                   "amp": {"default": 1.0, "range": [0.01, 10.0]}},
        "doc": "graph z = amp*Re((u+iv)^n); singularity of order n at the origin",
    },
    "equator": {
        "params": {"pole": {"default": [0.0, 0.0, 1.0, 0.0]}},
        "doc": "great 2-sphere of S^3 determined by a unit pole in R^4",
    },
}
