"""Independent oracles used across the test suite.

These deliberately avoid the code paths they check: Christoffel symbols from
finite-differenced metric coefficients, second fundamental forms from the
implicit shape operator and from the analytic graph formula, geodesic
distances through the round-sphere lift.
"""

import numpy as np

from caplab.geometry import metric_at


def christoffel_fd_oracle(chart, x, h=1e-5):
    """Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij), FD metric."""
    x = np.asarray(x, dtype=float)
    dg = np.zeros((3, 3, 3))  # dg[m, i, j] = d_m g_ij
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        dg[m] = (metric_at(chart, x + e) - metric_at(chart, x - e)) / (2 * h)
    g_inv = np.linalg.inv(metric_at(chart, x))
    gamma = np.zeros((3, 3, 3))
    for k in range(3):
        for i in range(3):
            for j in range(3):
                gamma[k, i, j] = 0.5 * sum(
                    g_inv[k, l] * (dg[i, j, l] + dg[j, i, l] - dg[l, i, j])
                    for l in range(3)
                )
    return gamma


def graph_ii_oracle(hu, hv, huu, huv, hvv, orientation=1):
    """I and II of a Euclidean graph z = h(u, v) from the closed formulas."""
    denom = np.sqrt(1.0 + hu**2 + hv**2)
    I = np.array([[1.0 + hu**2, hu * hv], [hu * hv, 1.0 + hv**2]])
    II = orientation * np.array([[huu, huv], [huv, hvv]]) / denom
    return I, II


def implicit_ii_oracle(implicit, x, tangents, orientation_normal):
    """II(v, w) = -<H_psi v, w> / |grad psi| for a Euclidean implicit surface.

    Differentiating psi(gamma(t)) = 0 twice gives gamma''.grad = -v' H v, so
    II against the normal grad/|grad| carries the minus sign.  ``tangents``
    is a pair of tangent vectors; the sign is flipped if the requested
    orientation normal opposes the gradient.
    """
    g = np.asarray(implicit.grad(x))
    n = g / np.linalg.norm(g)
    sign = np.sign(np.dot(n, orientation_normal))
    H = np.asarray(implicit.hess(x))
    out = np.empty((2, 2))
    for i, a in enumerate(tangents):
        for j, b in enumerate(tangents):
            out[i, j] = a @ H @ b
    return -sign * out / np.linalg.norm(g)


def geodesic_distance_s3(x, y):
    """Round geodesic distance between two chart points, via the lift."""
    from caplab.geometry import s3_lift

    P, _ = s3_lift(np.asarray(x, dtype=float))
    Q, _ = s3_lift(np.asarray(y, dtype=float))
    return float(np.arccos(np.clip(np.dot(P, Q), -1.0, 1.0)))


def cap_angle_closed_form(d, R, orient):
    """Two-sphere contact angle: cos(alpha) = orient*(1 - d^2 + R^2)/(2R)."""
    return float(np.arccos(np.clip(orient * (1.0 - d * d + R * R) / (2.0 * R), -1.0, 1.0)))
