"""Implicit surfaces, adapted charts, and graph-jet extraction.

A surface is Psi = 0 with nonvanishing gradient; the oriented normal is
grad Psi / |grad Psi|.  Graphs z = h(u,v) of such surfaces in a chart
F(u,v,z) are extracted by 1D root finding in z; jets of h come either from
exact implicit differentiation (affine charts, analytic Psi derivatives) or
from a local polynomial fit of root-found samples (general charts).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from caplab.errors import NotAGraphError

_VERTICAL_TOL = 1e-6


@dataclass(frozen=True)
class ImplicitSurface:
    """Signed defining function with analytic gradient and Hessian.

    ``third`` (the symmetric 3-tensor of third partials) is optional; when
    absent it is approximated by Richardson-extrapolated central differences
    of the Hessian, which is accurate enough for the order-3 jet terms.
    """

    psi: Callable = field(repr=False)
    grad: Callable = field(repr=False)
    hess: Callable = field(repr=False)
    third: Optional[Callable] = field(default=None, repr=False)
    name: str = "implicit"

    def third_at(self, x, step=1e-4):
        if self.third is not None:
            return np.asarray(self.third(x))
        return _fd_third(self.hess, x, step)

    def unit_normal(self, x):
        g = np.asarray(self.grad(x))
        return g / np.linalg.norm(g, axis=-1, keepdims=True)


def _fd_third(hess, x, step):
    """T[i,j,k] = d_k H_ij by Richardson-extrapolated central differences."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1] + (3, 3, 3))
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1.0
        for h in (step,):
            d1 = (np.asarray(hess(x + h * e)) - np.asarray(hess(x - h * e))) / (2 * h)
            d2 = (np.asarray(hess(x + 2 * h * e)) - np.asarray(hess(x - 2 * h * e))) / (4 * h)
            out[..., :, :, k] = (4.0 * d1 - d2) / 3.0
    return out


# ---------------------------------------------------------------------------
# Charts in which graphs are taken
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineChart:
    """F(u,v,z) = origin + u e1 + v e2 + z e3 with orthonormal (e1,e2,e3)."""

    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray

    @property
    def frame(self):
        return np.stack([self.e1, self.e2, self.e3], axis=-1)

    def F(self, u, v, z):
        u, v, z = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float), np.asarray(z, float))
        return (
            self.origin
            + u[..., None] * self.e1
            + v[..., None] * self.e2
            + z[..., None] * self.e3
        )


def tangent_frame(normal, seed=None):
    """Orthonormal (e1, e2) spanning the plane orthogonal to ``normal``."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    if seed is None:
        seed = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = seed - np.dot(seed, n) * n
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def adapted_affine_chart(point, normal, seed_tangent=None) -> AffineChart:
    """Affine chart at ``point`` whose z-axis is the given unit normal."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    e1, e2 = tangent_frame(n, seed_tangent)
    return AffineChart(origin=np.asarray(point, dtype=float), e1=e1, e2=e2, e3=n)


# ---------------------------------------------------------------------------
# Graph jets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphJet:
    """Local graph z = h(u,v) with h(0,0) = 0 and jets up to order 3.

    ``value`` resolves h(u,v) by root finding (machine accurate); the stored
    jets are exact for affine charts with analytic surfaces and fitted to the
    documented accuracy otherwise.
    """

    value: Callable = field(repr=False)
    grad: np.ndarray = field(default=None)
    hess: np.ndarray = field(default=None)
    third: np.ndarray = field(default=None)
    domain_radius: float = 1.0
    residual: float = 0.0


def graph_value_solver(psi, chart_F, z_window):
    """Return h(u,v), a vectorized root solver for psi(F(u,v,z)) = 0 in z.

    Newton-secant from z = 0 with a bisection fallback on an expanding
    bracket inside [-z_window, z_window].
    """

    def solve(u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        shape = np.broadcast_shapes(u.shape, v.shape)
        u, v = np.broadcast_to(u, shape), np.broadcast_to(v, shape)
        z = np.zeros(shape)
        dz = 1e-7 * max(z_window, 1e-9)
        ok = np.zeros(shape, dtype=bool)
        for _ in range(60):
            f0 = np.asarray(psi(chart_F(u, v, z)))
            ok = np.abs(f0) < 1e-13
            if np.all(ok):
                break
            f1 = np.asarray(psi(chart_F(u, v, z + dz)))
            deriv = (f1 - f0) / dz
            bad = np.abs(deriv) < 1e-14
            step = np.where(bad, 0.0, -f0 / np.where(bad, 1.0, deriv))
            step = np.clip(step, -0.25 * z_window, 0.25 * z_window)
            z = z + np.where(ok, 0.0, step)
        if not np.all(ok):
            # bisection fallback, pointwise on the failures
            flat_u, flat_v, flat_z = u.ravel(), v.ravel(), z.ravel()
            flat_ok = ok.ravel()
            for idx in np.nonzero(~flat_ok)[0]:
                zi = _bisect_scalar(
                    lambda zz: float(psi(chart_F(flat_u[idx], flat_v[idx], zz))),
                    z_window,
                )
                flat_z[idx] = zi
            z = flat_z.reshape(shape)
        return z

    return solve


def _bisect_scalar(f, window):
    lo, hi = None, None
    for w in np.geomspace(1e-4 * window, window, 24):
        a, b = -w, w
        fa, fb = f(a), f(b)
        if fa == 0.0:
            return a
        if fb == 0.0:
            return b
        if np.sign(fa) != np.sign(fb):
            lo, hi, flo = a, b, fa
            break
    if lo is None:
        raise NotAGraphError("no sign change of the defining function along the z-line")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or (hi - lo) < 1e-16:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def implicit_jets_affine(surface: ImplicitSurface, chart: AffineChart, order=3):
    """Jets of h at the origin by exact implicit differentiation.

    Requires the chart origin to lie on the surface; raises NotAGraphError at
    vertical tangency (|g(N, e3)| below tolerance).
    """
    q = chart.origin
    E = chart.frame  # columns e1, e2, e3
    grad = np.asarray(surface.grad(q))
    n_unit = grad / np.linalg.norm(grad)
    if abs(np.dot(n_unit, chart.e3)) < _VERTICAL_TOL:
        raise NotAGraphError(f"{surface.name}: not a graph here (vertical tangency)")

    p1 = E.T @ grad                                   # Phi_a
    H = np.asarray(surface.hess(q))
    p2 = E.T @ H @ E                                  # Phi_ab
    if order >= 3:
        T = surface.third_at(q)
        p3 = np.einsum("ijk,ia,jb,kc->abc", T, E, E, E)
    else:
        p3 = None
    return _jets_from_phi(p1, p2, p3, order)


def _jets_from_phi(p1, p2, p3, order):
    """Solve Phi(u, v, h(u,v)) = 0 for the jets of h at the origin.

    p1, p2, p3 are the partial derivatives of Phi in the (u, v, z) variables,
    batched over leading dimensions.
    """
    z = 2
    pz = p1[..., z]
    h1 = -p1[..., :2] / pz[..., None]

    def S(a, b):
        return (
            p2[..., a, b]
            + p2[..., a, z] * h1[..., b]
            + p2[..., z, b] * h1[..., a]
            + p2[..., z, z] * h1[..., a] * h1[..., b]
        )

    h2 = np.stack(
        [
            np.stack([-S(0, 0) / pz, -S(0, 1) / pz], axis=-1),
            np.stack([-S(1, 0) / pz, -S(1, 1) / pz], axis=-1),
        ],
        axis=-2,
    )

    if order < 3 or p3 is None:
        return h1, h2, None

    def DS(a, b, c):
        return (
            p3[..., a, b, c]
            + p3[..., a, b, z] * h1[..., c]
            + (p3[..., a, z, c] + p3[..., a, z, z] * h1[..., c]) * h1[..., b]
            + p2[..., a, z] * h2[..., b, c]
            + (p3[..., z, b, c] + p3[..., z, b, z] * h1[..., c]) * h1[..., a]
            + p2[..., z, b] * h2[..., a, c]
            + (p3[..., z, z, c] + p3[..., z, z, z] * h1[..., c]) * h1[..., a] * h1[..., b]
            + p2[..., z, z] * (h2[..., a, c] * h1[..., b] + h1[..., a] * h2[..., b, c])
        )

    h3 = np.empty(np.shape(pz) + (2, 2, 2))
    for a in range(2):
        for b in range(2):
            for c in range(2):
                h3[..., a, b, c] = (
                    -(DS(a, b, c) + h2[..., a, b] * (p2[..., z, c] + p2[..., z, z] * h1[..., c]))
                    / pz
                )
    return h1, h2, h3


# -- local polynomial fit (general charts) ----------------------------------

def _monomial_design(uu, vv, degree):
    cols, expo = [], []
    for total in range(degree + 1):
        for i in range(total + 1):
            j = total - i
            cols.append(uu**i * vv**j)
            expo.append((i, j))
    return np.stack(cols, axis=-1), expo


def fit_jets_from_samples(uu, vv, hh, rho, degree):
    """Taylor jets at 0 from sampled h-values via a scaled polynomial fit.

    Returns (grad, hess, third, fit_residual).  Mixed partials are symmetric
    by construction since they come from a single polynomial.
    """
    A, expo = _monomial_design(uu / rho, vv / rho, degree)
    coef, *_ = np.linalg.lstsq(A, hh, rcond=None)
    resid = float(np.max(np.abs(A @ coef - hh)))

    def deriv(i, j):
        for k, (a, b) in enumerate(expo):
            if (a, b) == (i, j):
                fact = math.factorial(i) * math.factorial(j)
                return coef[k] * fact / rho ** (i + j)
        return 0.0

    grad = np.array([deriv(1, 0), deriv(0, 1)])
    hess = np.array([[deriv(2, 0), deriv(1, 1)], [deriv(1, 1), deriv(0, 2)]])
    third = np.empty((2, 2, 2))
    for a in range(2):
        for b in range(2):
            for c in range(2):
                i = (a == 0) + (b == 0) + (c == 0)
                third[a, b, c] = deriv(i, 3 - i)
    return grad, hess, third, resid


def stencil_nodes(rho, per_axis):
    t = np.linspace(-1.0, 1.0, per_axis)
    uu, vv = np.meshgrid(t * rho, t * rho, indexing="ij")
    return uu.ravel(), vv.ravel()


def graph_jet(surface: ImplicitSurface, chart, radius, order=3, degree=None, per_axis=None) -> GraphJet:
    """GraphJet of the surface in the chart around the chart origin.

    Affine charts with analytic surfaces use exact implicit differentiation;
    general charts sample h on a stencil of radius ~radius/3 and fit a
    polynomial (degree ``order + 3`` by default).
    """
    value = graph_value_solver(surface.psi, chart.F, z_window=radius)
    if isinstance(chart, AffineChart):
        h1, h2, h3 = implicit_jets_affine(surface, chart, order=order)
        return GraphJet(value=value, grad=h1, hess=h2, third=h3, domain_radius=radius)

    # vertical-tangency guard via the exact chart partials at the origin
    z0 = float(value(0.0, 0.0))
    if abs(z0) > 1e-10 * max(1.0, radius):
        raise NotAGraphError("chart origin does not lie on the surface")
    degree = degree or (order + 3)
    per_axis = per_axis or (degree + 3)
    rho = radius / 3.0
    uu, vv = stencil_nodes(rho, per_axis)
    hh = value(uu, vv)
    grad, hess, third, resid = fit_jets_from_samples(uu, vv, hh, rho, degree)
    return GraphJet(
        value=value, grad=grad, hess=hess, third=third if order >= 3 else None,
        domain_radius=radius, residual=resid,
    )
