"""Angular variation, half-integer line-field indices, and double-surface audits.

Line fields are tracked through doubled angles: a direction defined mod pi
becomes an honest angle mod 2*pi after doubling, so continuous lifts, winding
and indices are computed there and halved at the end.  Indices of line-field
singularities are therefore half-integers, stored as twice-index integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from caplab.errors import CaplabError, UnwrapError

UNWRAP_GAP = np.pi / 2  # maximal allowed doubled-angle step


# ---------------------------------------------------------------------------
# Traces and angular variation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosedCurveFieldTrace:
    """Direction angles (mod pi) sampled along a closed curve, t in [0, 1]."""

    t: np.ndarray
    theta: np.ndarray
    closed: bool = True


def _wrap_to_pm_pi(x):
    return (x + np.pi) % (2 * np.pi) - np.pi


def angle_distance_mod_pi(a, b):
    d = np.mod(a - b, np.pi)
    return np.minimum(d, np.pi - d)


def angular_variation(trace: ClosedCurveFieldTrace, closure_tol=1e-9) -> float:
    """Total rotation of the direction along the curve, in radians.

    Continuous lift of the doubled angle; consecutive doubled-angle gaps must
    stay below pi/2 or an UnwrapError reports the required sample count.
    """
    phi = 2.0 * np.asarray(trace.theta, dtype=float)
    steps = _wrap_to_pm_pi(np.diff(phi))
    gap = float(np.max(np.abs(steps))) if steps.size else 0.0
    if gap >= UNWRAP_GAP:
        needed = int(np.ceil(len(phi) * gap / (np.pi / 4)))
        raise UnwrapError(
            f"resolution too coarse: doubled-angle gap {gap:.3f} >= pi/2",
            required_samples=needed,
        )
    if trace.closed:
        closure = float(angle_distance_mod_pi(trace.theta[-1], trace.theta[0]))
        if closure > closure_tol:
            raise CaplabError(f"trace is not closed mod pi (residual {closure:.2e})")
    return float(np.sum(steps)) / 2.0


def angular_variation_quadrature(a_func, b_func, t_grid):
    """Integral of F = a b' - b a' for the unit field (a, b) = (cos, sin)(phi).

    Trapezoid quadrature; used as the independent cross-check of the unwrap
    path on smooth traces.
    """
    t = np.asarray(t_grid, dtype=float)
    a, b = np.asarray(a_func(t)), np.asarray(b_func(t))
    da, db = np.gradient(a, t), np.gradient(b, t)
    return float(np.trapezoid(a * db - b * da, t))


def trace_circle(field, center, radius, n_samples=1440) -> ClosedCurveFieldTrace:
    """Sample a direction field (u, v) -> theta on a circle."""
    t = np.linspace(0.0, 1.0, n_samples + 1)
    ang = 2 * np.pi * t
    uu = center[0] + radius * np.cos(ang)
    vv = center[1] + radius * np.sin(ang)
    theta = np.mod(np.asarray(field(uu, vv), dtype=float), np.pi)
    return ClosedCurveFieldTrace(t=t, theta=theta, closed=True)


# ---------------------------------------------------------------------------
# Half-integer indices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HalfIndex:
    twice_index: int
    residual: float

    @property
    def index(self) -> float:
        return self.twice_index / 2.0


def index_from_trace(trace: ClosedCurveFieldTrace, max_residual=0.05) -> HalfIndex:
    total = angular_variation(trace)
    value = total / (2 * np.pi)
    twice = int(np.rint(2.0 * value))
    residual = float(abs(value - twice / 2.0))
    if residual >= max_residual:
        raise CaplabError(
            f"index rounding residual {residual:.3f} too large; "
            "field discontinuous on the circle or circle hits a singularity"
        )
    return HalfIndex(twice_index=twice, residual=residual)


def index(field, center, radius, n_samples=1440, max_residual=0.05) -> HalfIndex:
    """Index of a line field around an isolated singularity.

    The caller is responsible for the circle staying inside the annulus of
    isolation; unwrap failures and large rounding residuals raise.
    """
    return index_from_trace(trace_circle(field, center, radius, n_samples), max_residual)


# ---------------------------------------------------------------------------
# The analytic model field of Re(z^n)
# ---------------------------------------------------------------------------

def model_slope(n: int, theta, branch="+"):
    """Slope zeta(theta) = -tan((n-2) theta) +- sec((n-2) theta).

    Raises at the sec poles; directions remain well defined there through
    model_angle.
    """
    if n < 2:
        raise CaplabError("model field needs n >= 2")
    m = n - 2
    th = np.asarray(theta, dtype=float)
    c = np.cos(m * th)
    if np.any(np.abs(c) < 1e-12):
        raise CaplabError("pole of sec((n-2) theta); use model_angle")
    s = 1.0 if branch == "+" else -1.0
    return -np.tan(m * th) + s / c


def model_angle(n: int, theta, branch="+"):
    """Direction angle (mod pi) of the model asymptotic field, pole free.

    The two branches are pi/4 - (n-2) theta/2 and 3 pi/4 - (n-2) theta/2.
    """
    m = n - 2
    th = np.asarray(theta, dtype=float)
    base = np.pi / 4 if branch == "+" else 3 * np.pi / 4
    return np.mod(base - 0.5 * m * th, np.pi)


def model_field(n: int, branch="+"):
    """Planar direction field of the asymptotic lines of Hess(Re(z^n))."""

    def field_(u, v):
        th = np.arctan2(np.asarray(v, dtype=float), np.asarray(u, dtype=float))
        return model_angle(n, th, branch)

    return field_


def model_angular_variation(n: int, theta0: float, theta1: float,
                            quadrature=False, branch="+", nodes_per_piece=64):
    """Angular variation of the model field over [theta0, theta1].

    Closed form -(n-2)(theta1-theta0)/2; with quadrature=True the value is
    recomputed by integrating zeta'/(1+zeta^2) on pole-split subintervals
    (raw slope formulas, Gauss-Legendre per piece).
    """
    m = n - 2
    closed_form = -0.5 * m * (theta1 - theta0)
    if not quadrature:
        return closed_form
    if m == 0:
        return 0.0
    # poles of sec at m*theta = pi/2 + k pi
    ks = np.arange(np.floor((m * theta0 - np.pi / 2) / np.pi) - 1,
                   np.ceil((m * theta1 - np.pi / 2) / np.pi) + 2)
    poles = (np.pi / 2 + ks * np.pi) / m
    cuts = np.concatenate([[theta0], poles[(poles > theta0) & (poles < theta1)], [theta1]])
    cuts = np.unique(cuts)
    sgn = 1.0 if branch == "+" else -1.0
    xg, wg = np.polynomial.legendre.leggauss(nodes_per_piece)
    total = 0.0
    eps = 1e-12
    for a, b in zip(cuts[:-1], cuts[1:]):
        aa, bb = a + eps * (b - a), b - eps * (b - a)
        th = 0.5 * (bb - aa) * xg + 0.5 * (aa + bb)
        c, s = np.cos(m * th), np.sin(m * th)
        zeta = (sgn - s) / c
        dzeta = -m * (sgn - s) * sgn / c**2  # d/dth [(sgn - sin)/cos] for sgn = +-1
        total += 0.5 * (bb - aa) * np.sum(wg * dzeta / (1.0 + zeta**2))
    return float(total)


# ---------------------------------------------------------------------------
# Doubling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Seam:
    """One boundary circle of the base surface, with isothermal collar charts.

    ``field1`` / ``field2`` give the collar angle (mod pi, measured in the
    I-orthonormal collar frame (d_theta, d_t)) of the branch assigned to each
    copy, as functions (theta, t) with t >= 0 pointing into the surface.
    """

    name: str
    field1: Callable = field(repr=False)
    field2: Callable = field(repr=False)


@dataclass(frozen=True)
class DoubleSurfaceAtlas:
    """Two copies of a compact base surface glued along their boundary.

    base 'disk' doubles to a sphere (chi = 2), 'annulus' to a torus (chi = 0).
    The attaching map on each seam collar is (theta, t) -> (theta, -t) on the
    second copy, which reverses the collar orientation.
    """

    base: str
    seams: tuple = ()

    @property
    def euler_characteristic(self) -> int:
        if self.base == "disk":
            return 2
        if self.base == "annulus":
            return 0
        raise CaplabError(f"unknown base {self.base!r}")


def seam_audit(seam: Seam, theta_samples, dt=1e-3, tol_seam=1e-4, tol_continuity=1e-6):
    """Reflection continuity and one-sided C^1 matching across a seam.

    On the double, the copy-2 collar is traversed with t -> -t, so the glued
    angle field is theta |-> -psi2; continuity requires psi2 == -psi1 mod pi
    on the seam, and the C^1 surrogate requires equal one-sided t-derivatives
    of the doubled angle.
    """
    th = np.asarray(theta_samples, dtype=float)

    def one_sided(fieldf):
        p0 = np.mod(np.asarray(fieldf(th, np.zeros_like(th)), dtype=float), np.pi)
        p1 = _align_mod_pi(np.asarray(fieldf(th, np.full_like(th, dt)), dtype=float), p0)
        p2 = _align_mod_pi(np.asarray(fieldf(th, np.full_like(th, 2 * dt)), dtype=float), p0)
        deriv = (-3.0 * p0 + 4.0 * p1 - p2) / (2.0 * dt)
        return p0, deriv

    p1_0, d1 = one_sided(seam.field1)
    p2_0, d2 = one_sided(seam.field2)
    continuity = float(np.max(angle_distance_mod_pi(np.mod(-p2_0, np.pi), p1_0)))
    deriv_mismatch = float(np.max(np.abs(d1 - d2)))
    return {
        "continuity_residual": continuity,
        "derivative_mismatch": deriv_mismatch,
        "continuity_pass": continuity <= tol_continuity,
        "c1_pass": deriv_mismatch <= tol_seam,
    }


def _align_mod_pi(values, reference):
    """Shift each value by a multiple of pi to land nearest the reference."""
    k = np.rint((values - reference) / np.pi)
    return values - k * np.pi


def double_field(atlas: DoubleSurfaceAtlas, theta_samples=None, dt=1e-3,
                 tol_seam=1e-4, tol_continuity=1e-6):
    """Assemble the line field on the double after auditing every seam.

    Raises CaplabError('capillary alignment violated') if any seam fails the
    reflection-continuity check; returns the per-seam reports and a field
    evaluator Theta(seam_name, theta, t_signed) in the doubled collar chart.
    """
    if theta_samples is None:
        theta_samples = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
    reports = {}
    for seam in atlas.seams:
        rep = seam_audit(seam, theta_samples, dt=dt, tol_seam=tol_seam,
                         tol_continuity=tol_continuity)
        reports[seam.name] = rep
        if not rep["continuity_pass"]:
            raise CaplabError(
                f"capillary alignment violated on seam {seam.name!r}: "
                f"continuity residual {rep['continuity_residual']:.3e}"
            )
    seam_map = {s.name: s for s in atlas.seams}

    def theta_on_double(seam_name, th, t_signed):
        s = seam_map[seam_name]
        th = np.asarray(th, dtype=float)
        t_signed = np.asarray(t_signed, dtype=float)
        pos = np.asarray(s.field1(th, np.maximum(t_signed, 0.0)), dtype=float)
        neg = -np.asarray(s.field2(th, np.maximum(-t_signed, 0.0)), dtype=float)
        return np.mod(np.where(t_signed >= 0.0, pos, neg), np.pi)

    return theta_on_double, reports


def poincare_hopf_audit(atlas_or_chi, field_on_copies, singularities,
                        n_samples=1440):
    """Sum the indices of the listed singularities against the Euler number.

    field_on_copies(copy_index, u, v) -> theta (mod pi) in the planar chart of
    that copy; singularities are dicts {copy, center, radius}.  Overlapping
    index circles in the same copy are rejected.
    """
    chi = (
        atlas_or_chi.euler_characteristic
        if isinstance(atlas_or_chi, DoubleSurfaceAtlas)
        else int(atlas_or_chi)
    )
    for i, a in enumerate(singularities):
        for b in singularities[i + 1:]:
            if a["copy"] == b["copy"]:
                dist = float(np.hypot(a["center"][0] - b["center"][0],
                                      a["center"][1] - b["center"][1]))
                if dist < a["radius"] + b["radius"]:
                    raise CaplabError("overlapping index circles")
    entries = []
    total_twice = 0
    for s in singularities:
        half = index(lambda u, v: field_on_copies(s["copy"], u, v),
                     s["center"], s["radius"], n_samples=n_samples)
        entries.append({"copy": s["copy"], "center": list(map(float, s["center"])),
                        "radius": float(s["radius"]),
                        "twice_index": half.twice_index, "residual": half.residual})
        total_twice += half.twice_index
    consistent = total_twice == 2 * chi
    return {
        "sum_twice_index": total_twice,
        "sum_index": total_twice / 2.0,
        "chi": chi,
        "verdict": "consistent" if consistent else "inconsistent",
        "singularities": entries,
    }
