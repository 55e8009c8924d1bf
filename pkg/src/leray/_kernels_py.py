"""Pure numpy implementation of the hot kernels (fallback backend)."""
from __future__ import annotations

import numpy as np


def bordered_matrix(theta, dtheta, pre, post):
    N, n = theta.shape
    D = dtheta.shape[2]
    a, b = pre.shape[1], post.shape[1]
    M = np.zeros((N, D + 1, D + 1), dtype=complex)
    M[:, :a, :D] = pre
    M[:, a:a + n, :D] = dtheta
    M[:, a:a + n, D] = theta
    M[:, a + n:, :D] = post
    return M


def leray_density(theta, dtheta, pre, post):
    """sum_j (-1)^(j-1) theta_j det[pre; dtheta_{i != j}; post] for every node.

    Expanding the bordered matrix [[pre, 0], [dtheta, theta], [post, 0]]
    along its last column gives the sum up to the sign (-1)^(a + D).
    """
    D = dtheta.shape[2]
    a = pre.shape[1]
    if theta.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    M = bordered_matrix(theta, dtheta, pre, post)
    return (-1) ** (a + D) * np.linalg.det(M)


def cf_density(e, de, w, dz, pre, A, dA, mu0, dmu0, normalize):
    """Leray density of pre ^ omega'_0(theta) ^ dzeta for a Cauchy-Fantappie section.

    theta = A + mu0 * b with b = e / <e . w> (normalize) or b = e, where e is
    eta'(zeta), w = zeta - z and A the Hefer part sum_k mu_k Q^(k).  All
    derivatives are along the D chart parameters.
    """
    if normalize:
        L = np.sum(e * w, axis=1)
        dL = np.sum(de * w[:, :, None] + e[:, :, None] * dz, axis=1)
        b = e / L[:, None]
        db = de / L[:, None, None] - b[:, :, None] * (dL / L[:, None])[:, None, :]
    else:
        b, db = e, de
    if mu0 is None:
        theta, dtheta = b, db
    else:
        theta = mu0[:, None] * b
        dtheta = mu0[:, None, None] * db + b[:, :, None] * dmu0[:, None, :]
    if A is not None:
        theta = theta + A
        dtheta = dtheta + dA
    return leray_density(theta, dtheta, pre, dz)
