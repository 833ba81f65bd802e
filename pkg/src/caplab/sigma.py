"""The difference tensor sigma and its direction fields.

sigma at a surface point q is II of the surface minus II of the unique
family member through (q, T_q Sigma), both as bilinear forms on T_q Sigma in
the parametric basis {X_u, X_v}.  Away from its zeros sigma is Lorentzian,
with two asymptotic (null) line fields; the leading behavior of the graph
difference at a tangency point is a harmonic polynomial Re(alpha z^n), whose
Hessian models sigma near the singularity.

All sigma computations are instantiated for Euclidean charts; the S^3
scenarios in this lab only ever need angles and intersection topology.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from caplab.errors import CaplabError, SignatureError, SingularPointError
from caplab.geometry import EUCLIDEAN, ConformalChart, ParametricSurface, fundamental_forms
from caplab.families import FamilyKind, local_member_derivatives, member
from caplab.implicit import AffineChart, adapted_affine_chart, graph_value_solver, _jets_from_phi


# ---------------------------------------------------------------------------
# sigma
# ---------------------------------------------------------------------------

def sigma_at(chart: ConformalChart, surface: ParametricSurface, kind: FamilyKind,
             u, v, frame_angle=0.0):
    """sigma = II^Sigma - II^member in the {X_u, X_v} basis.  Batched.

    The member contribution is obtained from its graph in an affine chart
    adapted to (q, T_q Sigma) (exact implicit differentiation), then mapped
    into the parametric basis.  ``frame_angle`` rotates the adapted tangent
    frame; the result is frame covariant and used to test exactly that.
    """
    if chart.kind != EUCLIDEAN:
        raise CaplabError("sigma is instantiated for Euclidean charts only")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    ff = fundamental_forms(chart, surface, u, v)
    q = np.asarray(surface.X(u, v))
    xu = np.asarray(surface.Xu(u, v))
    xv = np.asarray(surface.Xv(u, v))
    N = ff.N

    # adapted orthonormal tangent frame (Gram-Schmidt, optionally rotated)
    e1 = xu / np.linalg.norm(xu, axis=-1, keepdims=True)
    e2 = xv - np.einsum("...i,...i->...", xv, e1)[..., None] * e1
    e2 = e2 / np.linalg.norm(e2, axis=-1, keepdims=True)
    if frame_angle:
        c, s = np.cos(frame_angle), np.sin(frame_angle)
        e1, e2 = c * e1 + s * e2, -s * e1 + c * e2

    grad_m, hess_m = local_member_derivatives(kind, q, N)
    E = np.stack([e1, e2, N], axis=-1)  # columns
    p1 = np.einsum("...i,...ia->...a", grad_m, E)
    p2 = np.einsum("...ia,...ij,...jb->...ab", E, hess_m, E)
    _, h2, _ = _jets_from_phi(p1, p2, None, order=2)

    # basis change from the orthonormal frame to {X_u, X_v}
    A = np.einsum("...ka,...kb->...ab", E[..., :, :2], np.stack([xu, xv], axis=-1))
    II_member = np.einsum("...ca,...cd,...db->...ab", A, h2, A)
    return ff.II - II_member, ff


def sigma_grid(chart, surface, kind, UU, VV):
    """sigma over a parameter grid with norms and the Lorentzian check."""
    sigma, ff = sigma_at(chart, surface, kind, UU, VV)
    norms = np.linalg.norm(sigma, axis=(-2, -1))
    det_sigma = sigma[..., 0, 0] * sigma[..., 1, 1] - sigma[..., 0, 1] ** 2
    det_I = ff.I[..., 0, 0] * ff.I[..., 1, 1] - ff.I[..., 0, 1] ** 2
    return {
        "sigma": sigma,
        "I": ff.I,
        "N": ff.N,
        "norm": norms,
        "det_ratio": det_sigma / det_I,
        "ii_scale": float(np.max(np.linalg.norm(ff.II, axis=(-2, -1)))),
    }


# ---------------------------------------------------------------------------
# Direction extraction
# ---------------------------------------------------------------------------

def _wrap_mod_pi(theta):
    return np.mod(theta, np.pi)


def asymptotic_directions(sigma, I=None, tol_sing=1e-12, tol_det=1e-14):
    """The two null directions of sigma, as parameter-basis angles mod pi.

    Requires Lorentzian signature: det(I^{-1} sigma) < -tol_det.
    """
    sigma = np.asarray(sigma, dtype=float)
    if I is None:
        I = np.broadcast_to(np.eye(2), sigma.shape).copy()
    I = np.asarray(I, dtype=float)
    nrm = np.linalg.norm(sigma, axis=(-2, -1))
    if np.any(nrm < tol_sing):
        raise SingularPointError("sigma vanishes at a queried point")
    det_sigma = sigma[..., 0, 0] * sigma[..., 1, 1] - sigma[..., 0, 1] ** 2
    det_I = I[..., 0, 0] * I[..., 1, 1] - I[..., 0, 1] ** 2
    if np.any(det_sigma / det_I >= -tol_det):
        raise SignatureError("sigma is not Lorentzian at a queried point")
    mu, Q = np.linalg.eigh(sigma)  # mu ascending: mu[0] < 0 < mu[1]
    d_pos = np.sqrt(-mu[..., 0])
    d_neg = np.sqrt(mu[..., 1])
    # null directions in the eigenbasis: (sqrt(-mu_minus), +-sqrt(mu_plus))
    # with columns of Q = (v_minus, v_plus)
    dir1 = d_neg[..., None] * Q[..., :, 0] + d_pos[..., None] * Q[..., :, 1]
    dir2 = d_neg[..., None] * Q[..., :, 0] - d_pos[..., None] * Q[..., :, 1]
    th1 = _wrap_mod_pi(np.arctan2(dir1[..., 1], dir1[..., 0]))
    th2 = _wrap_mod_pi(np.arctan2(dir2[..., 1], dir2[..., 0]))
    lo = np.minimum(th1, th2)
    hi = np.maximum(th1, th2)
    return lo, hi


def principal_directions(sigma, I=None, tol_sing=1e-12):
    """Eigen-directions of I^{-1} sigma (parameter-basis angles mod pi).

    The first angle belongs to the larger eigenvalue; the pair is
    I-orthogonal and is bisected by the asymptotic pair in the I-metric.
    """
    sigma = np.asarray(sigma, dtype=float)
    if I is None:
        I = np.broadcast_to(np.eye(2), sigma.shape).copy()
    I = np.asarray(I, dtype=float)
    if np.any(np.linalg.norm(sigma, axis=(-2, -1)) < tol_sing):
        raise SingularPointError("sigma vanishes at a queried point")
    W = _inv_sqrt_2x2(I)
    S = np.einsum("...ik,...kl,...lj->...ij", W, sigma, W)
    mu, Y = np.linalg.eigh(S)
    X = np.einsum("...ij,...jk->...ik", W, Y)  # columns are eigen-directions
    th_small = _wrap_mod_pi(np.arctan2(X[..., 1, 0], X[..., 0, 0]))
    th_big = _wrap_mod_pi(np.arctan2(X[..., 1, 1], X[..., 0, 1]))
    return th_big, th_small


def _sqrt_2x2(I):
    mu, Q = np.linalg.eigh(np.asarray(I, dtype=float))
    return np.einsum("...ik,...k,...jk->...ij", Q, np.sqrt(mu), Q)


def _inv_sqrt_2x2(I):
    mu, Q = np.linalg.eigh(np.asarray(I, dtype=float))
    return np.einsum("...ik,...k,...jk->...ij", Q, 1.0 / np.sqrt(mu), Q)


def angle_in_frame(direction, I):
    """Metric angle (mod pi) of a parameter-basis direction in an
    I-orthonormal frame."""
    d = np.asarray(direction, dtype=float)
    y = np.einsum("...ij,...j->...i", _sqrt_2x2(I), d)
    return _wrap_mod_pi(np.arctan2(y[..., 1], y[..., 0]))


def angle_distance_mod_pi(a, b):
    d = np.mod(a - b, np.pi)
    return np.minimum(d, np.pi - d)


@dataclass(frozen=True)
class DirectionField:
    """Angle field (mod pi) of one asymptotic branch over a parameter grid."""

    theta: np.ndarray
    singular_mask: np.ndarray
    branch: str = "L1"


def direction_fields(grid_result, tol_sing_rel=1e-8):
    """Both asymptotic DirectionFields of a sigma_grid result."""
    sigma = grid_result["sigma"]
    I = grid_result["I"]
    norms = grid_result["norm"]
    tol = tol_sing_rel * float(np.max(norms))
    mask = norms < tol
    th1 = np.full(norms.shape, np.nan)
    th2 = np.full(norms.shape, np.nan)
    ok = ~mask
    if np.any(ok):
        a, b = asymptotic_directions(sigma[ok], I[ok])
        th1[ok], th2[ok] = a, b
    return (
        DirectionField(theta=th1, singular_mask=mask, branch="L1"),
        DirectionField(theta=th2, singular_mask=mask, branch="L2"),
    )


# ---------------------------------------------------------------------------
# Bers-type leading harmonic jet
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarmonicJet:
    n: int
    alpha: complex
    residual: float


@dataclass(frozen=True)
class JetResult:
    status: str  # "ok" | "zero" | "mismatch"
    jet: Optional[HarmonicJet] = None
    diagnostics: dict = field(default_factory=dict)


def circle_fourier_coefficients(d_func, rho, max_order, n_samples=1024):
    """c_n(rho) = (1/pi) * integral of d(rho e^{i theta}) e^{-in theta}."""
    theta = 2 * np.pi * np.arange(n_samples) / n_samples
    vals = np.asarray(d_func(rho * np.cos(theta), rho * np.sin(theta)), dtype=float)
    spec = np.fft.fft(vals) / n_samples
    return 2.0 * spec[: max_order + 1]  # c_n = (2/M) sum d_k e^{-in theta_k}


def leading_harmonic_jet(d_func, max_order=8, rho0=1e-2, n_samples=1024,
                         rel_tol=0.25, zero_tol=1e-9) -> JetResult:
    """Leading harmonic term Re(alpha z^n) of a difference d with d, grad d -> 0.

    Frequency-n Fourier coefficients on circles of radii (2 rho0, rho0,
    rho0/2); the first n whose rescaled coefficient converges to a nonzero
    limit (Richardson over the two smallest radii) wins.  Lower frequencies
    must vanish at order rho^n.
    """
    radii = np.array([2 * rho0, rho0, rho0 / 2])
    C = np.stack([circle_fourier_coefficients(d_func, r, max_order, n_samples) for r in radii])
    scale = float(np.max(np.abs(C) / radii[:, None] ** np.arange(max_order + 1)))
    if scale <= zero_tol:
        return JetResult(status="zero", diagnostics={"scale": scale})

    for n in range(2, max_order + 1):
        A = C[:, n] / radii**n
        a_big, a_mid, a_small = A
        richardson = 2.0 * a_small - a_mid
        mag = abs(richardson)
        if mag < max(zero_tol, 1e-6 * scale):
            continue
        # decay of the scaled coefficient signals a spurious (higher-order) hit
        if abs(a_small) < 0.6 * abs(a_mid):
            continue
        conv_fine = abs(a_small - a_mid)
        conv_coarse = abs(a_mid - a_big)
        converging = conv_fine <= max(rel_tol * mag, 0.75 * conv_coarse + zero_tol)
        lower_ok = all(
            abs(C[1, m]) <= 10.0 * mag * rho0**n + zero_tol for m in range(2, n)
        )
        if converging and lower_ok:
            resid = conv_fine / max(mag, 1e-300)
            return JetResult(status="ok", jet=HarmonicJet(n=n, alpha=complex(richardson), residual=float(resid)))
        if not converging:
            return JetResult(
                status="mismatch",
                diagnostics={"n": n, "values": A.tolist(), "scale": scale},
            )
    return JetResult(status="zero", diagnostics={"scale": scale, "max_order": max_order})


def hess_re_alpha_zn(alpha, n, u, v):
    """Hessian of w = Re(alpha z^n):  [[Re f'', -Im f''], [-Im f'', -Re f'']]."""
    z = np.asarray(u, dtype=float) + 1j * np.asarray(v, dtype=float)
    f2 = alpha * n * (n - 1) * z ** (n - 2)
    re, im = np.real(f2), np.imag(f2)
    H = np.empty(np.shape(re) + (2, 2))
    H[..., 0, 0] = re
    H[..., 0, 1] = H[..., 1, 0] = -im
    H[..., 1, 1] = -re
    return H


def sigma_model_consistency(sigma_func, jet: HarmonicJet, c_factor, rho0=1e-2,
                            n_radii=3, n_samples=720):
    """Ratio test: max |sigma - c*Hess(Re(alpha z^n))| / rho^{n-2} per radius.

    For a genuine same-PDE pair the report values decrease as rho halves.
    """
    theta = 2 * np.pi * np.arange(n_samples) / n_samples
    radii = rho0 / 2.0 ** np.arange(n_radii)
    values = []
    for r in radii:
        uu, vv = r * np.cos(theta), r * np.sin(theta)
        sig = np.asarray(sigma_func(uu, vv))
        model = c_factor * hess_re_alpha_zn(jet.alpha, jet.n, uu, vv)
        err = np.linalg.norm(sig - model, axis=(-2, -1))
        values.append(float(np.max(err) / r ** (jet.n - 2)))
    ratios = [values[i + 1] / values[i] if values[i] > 0 else 0.0 for i in range(len(values) - 1)]
    return {
        "radii": radii.tolist(),
        "residuals": values,
        "ratios": ratios,
        "decreasing": all(v2 < v1 for v1, v2 in zip(values, values[1:])),
    }


# ---------------------------------------------------------------------------
# Graph differences against the tangent member
# ---------------------------------------------------------------------------

def difference_function(surface_implicit, kind: FamilyKind, q, normal, radius=0.2):
    """d(u,v) = h_Sigma - h_member in the affine chart adapted to (q, normal).

    Both graphs are resolved by root finding, so d is machine accurate; this
    is what feeds the Bers jet extraction near a singularity of sigma.
    """
    chart = adapted_affine_chart(q, normal)
    h_sigma = graph_value_solver(surface_implicit.psi, chart.F, z_window=radius)
    m = member(kind, np.asarray(q, dtype=float), np.asarray(normal, dtype=float))
    h_member = graph_value_solver(m.implicit.psi, chart.F, z_window=radius)

    def d(uu, vv):
        return np.asarray(h_sigma(uu, vv)) - np.asarray(h_member(uu, vv))

    return d, chart, m


def sigma_singularities(grid_result, UU, VV, tol_sing_rel=1e-8, isolation_cells=3,
                        difference_factory=None, max_order=8):
    """Clusters of the singular set of sigma on the grid, with local orders.

    Returns {"status": "ok"|"non-isolated"|"empty", "singularities": [...]}.
    A cluster wider than ``isolation_cells`` grid cells reports the whole
    field as non-isolated (the surface locally lies in a member).
    """
    from scipy import ndimage

    norms = grid_result["norm"]
    # coincidence branch: sigma at machine noise relative to the curvature
    # scale means the surface lies in a member over the whole grid
    floor = 1e-12 * max(grid_result.get("ii_scale", 1.0), 1.0)
    if float(np.max(norms)) < floor:
        return {"status": "non-isolated", "singularities": [], "tol": floor,
                "cluster_cells": int(norms.size)}
    tol = tol_sing_rel * float(np.max(norms))
    mask = norms < tol
    if not np.any(mask):
        return {"status": "empty", "singularities": [], "tol": tol}
    labels, n_lab = ndimage.label(mask)
    singular = []
    for lab in range(1, n_lab + 1):
        sel = labels == lab
        ii, jj = np.nonzero(sel)
        diam = max(ii.max() - ii.min(), jj.max() - jj.min()) + 1
        if diam > isolation_cells:
            return {"status": "non-isolated", "singularities": [], "tol": tol,
                    "cluster_cells": int(sel.sum())}
        k = int(np.argmin(norms[sel]))
        u0 = float(UU[sel][k])
        v0 = float(VV[sel][k])
        entry = {"u": u0, "v": v0, "cells": int(sel.sum())}
        if difference_factory is not None:
            d_func = difference_factory(u0, v0)
            res = leading_harmonic_jet(d_func, max_order=max_order)
            entry["jet_status"] = res.status
            if res.jet is not None:
                entry["n"] = res.jet.n
                entry["alpha"] = [res.jet.alpha.real, res.jet.alpha.imag]
        singular.append(entry)
    return {"status": "ok", "singularities": singular, "tol": tol}


# ---------------------------------------------------------------------------
# Boundary alignment audit (free-boundary / capillary mechanism)
# ---------------------------------------------------------------------------

def boundary_angle_audit(domain, surface_bundle, kind: FamilyKind, uv_boundary,
                         tol_mixed=1e-6, tol_angle=1e-4, fit_radius=0.12,
                         sing_tol=1e-10):
    """At a boundary point of Sigma: the mixed derivative of h - h_tilde in the
    boundary-adapted chart vanishes, and the principal directions of sigma
    align with the boundary tangent / conormal.

    uv_boundary: parameter point of the surface lying on the domain boundary.
    Returns a report dict; degenerate cases are reported, not raised.
    """
    from caplab.domains import boundary_adapted_chart, classify_point, graph_in_chart
    from caplab.implicit import fit_jets_from_samples, stencil_nodes

    chart = domain.chart
    surf = surface_bundle.parametric
    u0, v0 = uv_boundary
    p = np.asarray(surf.X(u0, v0), dtype=float)
    if classify_point(domain, p) != "boundary":
        raise CaplabError("surface point is not on the domain boundary")

    sigma_p, ff = sigma_at(chart, surf, kind, np.asarray([u0]), np.asarray([v0]))
    sigma_p, I_p = sigma_p[0], ff.I[0]
    N_p = ff.N[0]
    if np.linalg.norm(sigma_p) < sing_tol:
        return {"status": "member point", "sigma_norm": float(np.linalg.norm(sigma_p))}

    N_wall = domain.inward_normal(p)
    pairing = float(chart.g_inner(p, N_p, N_wall))
    if abs(pairing) >= 1.0 - 1e-8:
        return {"status": "non-transversal"}

    # tangent of the intersection curve (g-orthogonal to both normals)
    t_dir = np.cross(N_p, N_wall)
    t_dir = t_dir / float(chart.g_norm(p, t_dir))

    bchart = boundary_adapted_chart(domain, p, t_dir)
    h_solver = graph_value_solver(surface_bundle.implicit.psi, bchart.F, z_window=fit_radius)
    m = member(kind, p, N_p)
    ht_solver = graph_value_solver(m.implicit.psi, bchart.F, z_window=fit_radius)

    rho = fit_radius / 3.0
    uu, vv = stencil_nodes(rho, 9)
    dvals = np.asarray(h_solver(uu, vv)) - np.asarray(ht_solver(uu, vv))
    grad_d, hess_d, _, fit_resid = fit_jets_from_samples(uu, vv, dvals, rho, degree=6)
    mixed = float(hess_d[0, 1])
    c2_scale = max(float(np.max(np.abs(hess_d))), 1.0)

    # principal alignment in the I-orthonormal frame
    th_p1, th_p2 = principal_directions(sigma_p, I_p)
    xu = np.asarray(surf.Xu(u0, v0))
    xv = np.asarray(surf.Xv(u0, v0))
    B = np.stack([xu, xv], axis=-1)
    beta, *_ = np.linalg.lstsq(B, t_dir, rcond=None)
    th_t = angle_in_frame(beta, I_p)
    mis1 = float(angle_distance_mod_pi(angle_in_frame(_dir(th_p1), I_p), th_t))
    mis2 = float(angle_distance_mod_pi(angle_in_frame(_dir(th_p2), I_p), th_t))
    misalign = min(mis1, mis2)

    return {
        "status": "ok",
        "mixed_derivative": mixed,
        "mixed_pass": abs(mixed) <= tol_mixed * c2_scale,
        "c2_scale": c2_scale,
        "principal_misalignment": misalign,
        "alignment_pass": misalign <= tol_angle,
        "fit_residual": fit_resid,
        "point": p,
    }


def _dir(theta):
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


# ---------------------------------------------------------------------------
# CSV dump
# ---------------------------------------------------------------------------

FIELD_DUMP_HEADER = "u,v,sigma_uu,sigma_uv,sigma_vv,theta_L1,theta_L2,singular_flag"


def field_dump_rows(UU, VV, grid_result, tol_sing_rel=1e-8):
    """Rows (u, v, sigma components, branch angles, singular flag)."""
    L1, L2 = direction_fields(grid_result, tol_sing_rel)
    sigma = grid_result["sigma"]
    rows = []
    for idx in np.ndindex(UU.shape):
        rows.append(
            (
                float(UU[idx]), float(VV[idx]),
                float(sigma[idx][0, 0]), float(sigma[idx][0, 1]), float(sigma[idx][1, 1]),
                float(L1.theta[idx]) if not L1.singular_mask[idx] else np.nan,
                float(L2.theta[idx]) if not L2.singular_mask[idx] else np.nan,
                int(L1.singular_mask[idx]),
            )
        )
    return rows
