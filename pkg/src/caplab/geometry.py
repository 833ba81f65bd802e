"""Conformally flat ambient charts and curvature of immersed surfaces.

The ambient metric is always g = lambda^2 * delta on an open subset of R^3,
with lambda == 1 (Euclidean) or lambda = 2/(1+|x|^2) (round 3-sphere minus a
point, in the stereographic chart).  All operations are pure functions of
immutable inputs and accept batched arrays: points have shape (..., 3),
parameter pairs shape (...,).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from caplab.errors import NotImmersedError

EUCLIDEAN = "euclidean"
SPHERE3 = "sphere3_stereographic"


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _cross(a, b):
    return np.cross(a, b)


def _norm(a):
    return np.sqrt(_dot(a, a))


# ---------------------------------------------------------------------------
# Ambient charts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConformalChart:
    """Ambient 3-manifold presented as a chart on R^3 with metric lambda^2*delta.

    ``lam``, ``grad_log_lam`` and ``hess_log_lam`` are vectorized callables of
    the chart point.  They are written complex-step safe (no abs/conj), so
    callers may differentiate chart-dependent maps with a complex step.
    """

    kind: str
    lam: Callable = field(repr=False)
    grad_log_lam: Callable = field(repr=False)
    hess_log_lam: Callable = field(repr=False)

    @staticmethod
    def euclidean() -> "ConformalChart":
        return ConformalChart(
            kind=EUCLIDEAN,
            lam=lambda x: np.ones(np.shape(x)[:-1]),
            grad_log_lam=lambda x: np.zeros(np.shape(x)),
            hess_log_lam=lambda x: np.zeros(np.shape(x) + (3,)),
        )

    @staticmethod
    def sphere3_stereographic() -> "ConformalChart":
        def lam(x):
            m = 1.0 + np.einsum("...i,...i->...", x, x)
            return 2.0 / m

        def grad_log_lam(x):
            m = 1.0 + np.einsum("...i,...i->...", x, x)
            return -2.0 * x / m[..., None]

        def hess_log_lam(x):
            m = 1.0 + np.einsum("...i,...i->...", x, x)
            eye = np.eye(3)
            return (-2.0 / m[..., None, None]) * eye + (
                4.0 / (m * m)[..., None, None]
            ) * np.einsum("...i,...j->...ij", x, x)

        return ConformalChart(
            kind=SPHERE3, lam=lam, grad_log_lam=grad_log_lam, hess_log_lam=hess_log_lam
        )

    # -- metric helpers -----------------------------------------------------

    def g_inner(self, x, a, b):
        """g-inner product of tangent vectors a, b at x."""
        return self.lam(x) ** 2 * _dot(a, b)

    def g_norm(self, x, a):
        return np.sqrt(self.g_inner(x, a, a))

    def g_unit(self, x, a):
        return a / self.g_norm(x, a)[..., None]


def metric_at(chart: ConformalChart, x) -> np.ndarray:
    """Metric coefficients lambda(x)^2 * identity, shape (..., 3, 3)."""
    lam2 = np.asarray(chart.lam(x)) ** 2
    return lam2[..., None, None] * np.eye(3)


def christoffel(chart: ConformalChart, x) -> np.ndarray:
    """Christoffel symbols of g = lambda^2*delta, shape (..., 3, 3, 3) as Gamma[k,i,j]."""
    w = np.asarray(chart.grad_log_lam(x))
    eye = np.eye(3)
    term1 = np.einsum("ki,...j->...kij", eye, w)
    term2 = np.einsum("kj,...i->...kij", eye, w)
    term3 = np.einsum("ij,...k->...kij", eye, w)
    return term1 + term2 - term3


def christoffel_quadratic(chart: ConformalChart, x, a, b):
    """Gamma(a, b)^k = Gamma^k_ij a^i b^j, batched, without forming the full tensor."""
    w = np.asarray(chart.grad_log_lam(x))
    wa = _dot(w, a)
    wb = _dot(w, b)
    ab = _dot(a, b)
    return a * wb[..., None] + b * wa[..., None] - w * ab[..., None]


def christoffel_derivative(chart: ConformalChart, x) -> np.ndarray:
    """d_m Gamma^k_ij, shape (..., 3, 3, 3, 3) indexed [m, k, i, j]."""
    W = np.asarray(chart.hess_log_lam(x))
    eye = np.eye(3)
    t1 = np.einsum("ki,...jm->...mkij", eye, W)
    t2 = np.einsum("kj,...im->...mkij", eye, W)
    t3 = np.einsum("ij,...km->...mkij", eye, W)
    return t1 + t2 - t3


def sectional_curvature(chart: ConformalChart, x, i: int, j: int) -> float:
    """Sectional curvature of the coordinate 2-plane span{d_i, d_j} at x."""
    x = np.asarray(x, dtype=float)
    gam = christoffel(chart, x)
    dgam = christoffel_derivative(chart, x)
    # R(d_i, d_j) d_k = (d_i Gamma^l_jk - d_j Gamma^l_ik
    #                    + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik) d_l
    R_l = (
        dgam[i, :, j, j]
        - dgam[j, :, i, j]
        + np.einsum("lm,m->l", gam[:, i, :], gam[:, j, j])
        - np.einsum("lm,m->l", gam[:, j, :], gam[:, i, j])
    )
    lam2 = float(chart.lam(x)) ** 2
    num = lam2 * R_l[i]
    den = lam2 * lam2 * (1.0 if i != j else 0.0)
    if i == j:
        raise ValueError("need two distinct coordinate directions")
    return num / den


# ---------------------------------------------------------------------------
# Parametric surfaces
# ---------------------------------------------------------------------------

def _fd_jets_factory(X, h):
    """Second-order central finite differences for the jet callables of X."""

    def Xu(u, v):
        return (X(u + h, v) - X(u - h, v)) / (2 * h)

    def Xv(u, v):
        return (X(u, v + h) - X(u, v - h)) / (2 * h)

    def Xuu(u, v):
        return (X(u + h, v) - 2 * X(u, v) + X(u - h, v)) / h**2

    def Xvv(u, v):
        return (X(u, v + h) - 2 * X(u, v) + X(u, v - h)) / h**2

    def Xuv(u, v):
        return (
            X(u + h, v + h) - X(u + h, v - h) - X(u - h, v + h) + X(u - h, v - h)
        ) / (4 * h**2)

    return Xu, Xv, Xuu, Xuv, Xvv


@dataclass(frozen=True)
class ParametricSurface:
    """Immersion of a parameter rectangle into chart coordinates.

    Jets are analytic callables when available; otherwise they are built from
    central differences with step ``h_fd`` (second order, which the tests
    confirm by Richardson comparison on analytic surfaces).
    """

    X: Callable = field(repr=False)
    Xu: Callable = field(repr=False)
    Xv: Callable = field(repr=False)
    Xuu: Callable = field(repr=False)
    Xuv: Callable = field(repr=False)
    Xvv: Callable = field(repr=False)
    orientation: int = 1
    name: str = "surface"
    h_fd: Optional[float] = None

    @staticmethod
    def from_map(X, orientation=1, name="surface", h_fd=1e-5):
        """Build a surface from the map alone, with finite-difference jets."""
        Xu, Xv, Xuu, Xuv, Xvv = _fd_jets_factory(X, h_fd)
        return ParametricSurface(
            X=X, Xu=Xu, Xv=Xv, Xuu=Xuu, Xuv=Xuv, Xvv=Xvv,
            orientation=orientation, name=name, h_fd=h_fd,
        )

    @staticmethod
    def from_jets(X, Xu, Xv, Xuu, Xuv, Xvv, orientation=1, name="surface"):
        return ParametricSurface(
            X=X, Xu=Xu, Xv=Xv, Xuu=Xuu, Xuv=Xuv, Xvv=Xvv,
            orientation=orientation, name=name,
        )

    def normal(self, chart: ConformalChart, u, v):
        """Oriented g-unit normal at (u, v)."""
        xu = np.asarray(self.Xu(u, v))
        xv = np.asarray(self.Xv(u, v))
        n = _cross(xu, xv)
        nn = _norm(n)
        if np.any(nn <= 1e-14 * _norm(xu) * _norm(xv)):
            raise NotImmersedError(f"{self.name}: X_u, X_v dependent at sampled point")
        lam = np.asarray(chart.lam(np.asarray(self.X(u, v))))
        return self.orientation * n / (lam * nn)[..., None]


@dataclass(frozen=True)
class FundamentalForms:
    """First/second fundamental forms and the oriented g-unit normal."""

    I: np.ndarray
    II: np.ndarray
    N: np.ndarray


def fundamental_forms(chart: ConformalChart, surface: ParametricSurface, u, v) -> FundamentalForms:
    """I_ij = g(X_i, X_j);  II_ij = g(X_ij + Gamma(X_i, X_j), N).  Batched."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    x = np.asarray(surface.X(u, v))
    xu = np.asarray(surface.Xu(u, v))
    xv = np.asarray(surface.Xv(u, v))
    lam = np.asarray(chart.lam(x))
    lam2 = lam**2

    E = lam2 * _dot(xu, xu)
    F = lam2 * _dot(xu, xv)
    G = lam2 * _dot(xv, xv)
    detI = E * G - F * F
    if np.any(detI <= 1e-24 * np.maximum(E * G, 1e-300)):
        raise NotImmersedError(f"{surface.name}: degenerate first fundamental form")

    n = _cross(xu, xv)
    N = surface.orientation * n / (lam * _norm(n))[..., None]

    def second(xij, a, b):
        vec = xij + christoffel_quadratic(chart, x, a, b)
        return lam2 * _dot(vec, N)

    L = second(np.asarray(surface.Xuu(u, v)), xu, xu)
    M = second(np.asarray(surface.Xuv(u, v)), xu, xv)
    P = second(np.asarray(surface.Xvv(u, v)), xv, xv)

    I = np.stack(
        [np.stack([E, F], axis=-1), np.stack([F, G], axis=-1)], axis=-2
    )
    II = np.stack(
        [np.stack([L, M], axis=-1), np.stack([M, P], axis=-1)], axis=-2
    )
    return FundamentalForms(I=I, II=II, N=N)


def mean_and_principal_curvatures(forms: FundamentalForms):
    """(H, kappa1, kappa2) with kappa1 >= kappa2, eigenvalues of I^{-1} II."""
    I, II = np.asarray(forms.I), np.asarray(forms.II)
    det_I = I[..., 0, 0] * I[..., 1, 1] - I[..., 0, 1] ** 2
    if np.any(det_I <= 0):
        raise NotImmersedError("det I <= 0")
    inv_I = np.empty_like(I)
    inv_I[..., 0, 0] = I[..., 1, 1]
    inv_I[..., 1, 1] = I[..., 0, 0]
    inv_I[..., 0, 1] = -I[..., 0, 1]
    inv_I[..., 1, 0] = -I[..., 1, 0]
    inv_I = inv_I / det_I[..., None, None]
    S = np.einsum("...ik,...kj->...ij", inv_I, II)
    tr = S[..., 0, 0] + S[..., 1, 1]
    det = S[..., 0, 0] * S[..., 1, 1] - S[..., 0, 1] * S[..., 1, 0]
    disc = np.maximum(tr * tr - 4.0 * det, 0.0)
    root = np.sqrt(disc)
    k1 = 0.5 * (tr + root)
    k2 = 0.5 * (tr - root)
    return 0.5 * (k1 + k2), k1, k2


# ---------------------------------------------------------------------------
# The round-sphere lift of the stereographic chart
# ---------------------------------------------------------------------------

def s3_lift(x):
    """Inverse stereographic lift P = (2x, 1-|x|^2)/(1+|x|^2) and its Jacobian.

    Returns (P, J) with P of shape (..., 4) on the unit sphere of R^4 and J of
    shape (..., 4, 3); J^T J equals lambda(x)^2 * identity (the lift is an
    isometry between the chart metric and the round metric).
    """
    x = np.asarray(x, dtype=float)
    r2 = _dot(x, x)
    m = 1.0 + r2
    P = np.concatenate([2.0 * x / m[..., None], ((1.0 - r2) / m)[..., None]], axis=-1)
    eye = np.eye(3)
    top = (2.0 / m)[..., None, None] * (
        eye - (2.0 / m)[..., None, None] * np.einsum("...i,...j->...ij", x, x)
    )
    bottom = (-4.0 / (m * m))[..., None, None] * x[..., None, :]
    J = np.concatenate([top, bottom], axis=-2)
    return P, J


def s3_project(P):
    """Stereographic image of a point of the unit sphere in R^4 (P4 != -1)."""
    P = np.asarray(P, dtype=float)
    return P[..., :3] / (1.0 + P[..., 3])[..., None]


# ---------------------------------------------------------------------------
# Geodesics
# ---------------------------------------------------------------------------

def geodesic_flow(chart: ConformalChart, x0, v0, t, max_step=1e-3):
    """Flow the geodesic from x0 with initial velocity v0 for parameter time t.

    Euclidean charts use exact lines.  Otherwise a fixed-step RK4 integration
    of x'' + Gamma(x', x') = 0 with per-trajectory step <= max_step; batched
    over leading dimensions (t may vary per trajectory).
    """
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    t = np.asarray(t, dtype=float)
    if chart.kind == EUCLIDEAN:
        return x0 + t[..., None] * v0, np.broadcast_to(v0, x0.shape).copy()

    tmax = float(np.max(np.abs(t))) if t.size else 0.0
    if tmax == 0.0:
        return x0.copy(), v0.copy()
    n_steps = max(1, int(np.ceil(tmax / max_step)))
    dt = (t / n_steps)[..., None]

    def acc(x, v):
        w = np.asarray(chart.grad_log_lam(x))
        return -(2.0 * v * _dot(w, v)[..., None] - w * _dot(v, v)[..., None])

    x, v = x0.copy(), np.broadcast_to(v0, x0.shape).copy()
    for _ in range(n_steps):
        k1x, k1v = v, acc(x, v)
        k2x, k2v = v + 0.5 * dt * k1v, acc(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v)
        k3x, k3v = v + 0.5 * dt * k2v, acc(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v)
        k4x, k4v = v + dt * k3v, acc(x + dt * k3x, v + dt * k3v)
        x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return x, v


def s3_geodesic_exact(x0, v0, t):
    """Great-circle geodesic of the round metric, mapped through the chart.

    Independent closed form used to cross-check the RK4 integrator: lift the
    initial condition, rotate along the great circle, project back.  v0 need
    not be g-unit; t is g-arclength when it is.
    """
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    t = np.asarray(t, dtype=float)
    P, J = s3_lift(x0)
    V = np.einsum("...ij,...j->...i", J, v0)
    speed = np.sqrt(np.einsum("...i,...i->...", V, V))
    Vhat = V / speed[..., None]
    ang = t * speed
    Q = np.cos(ang)[..., None] * P + np.sin(ang)[..., None] * Vhat
    return s3_project(Q)
