"""NumPy fallback for the ARMA recursion kernels.

Mirrors the compiled signatures in ``tsproj._core``. The single-series
recursions loop over time in Python; the batch version loops over time but
vectorises across draws, which keeps it usable for realistic draw counts.
"""

import numpy as np


def simulate_core(c, phi, theta, innovations):
    """Generate y_t = c + sum(phi_i y_{t-i}) + e_t + sum(theta_j e_{t-j})."""
    phi = np.asarray(phi, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    e = np.asarray(innovations, dtype=np.float64)
    n, p, q = e.shape[0], phi.shape[0], theta.shape[0]
    y = np.empty(n)
    for t in range(n):
        acc = c + e[t]
        kp = min(p, t)
        if kp:
            acc += phi[:kp] @ y[t - 1::-1][:kp]
        kq = min(q, t)
        if kq:
            acc += theta[:kq] @ e[t - 1::-1][:kq]
        y[t] = acc
    return y


def residuals_core(y, c, phi, theta):
    """Invert the ARMA recursion: eps_t = y_t - c - AR part - MA feedback."""
    y = np.asarray(y, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    n, p, q = y.shape[0], phi.shape[0], theta.shape[0]
    z = y - c
    for i in range(p):
        z[i + 1:] -= phi[i] * y[: n - 1 - i]
    if q == 0:
        return z
    eps = np.empty(n)
    for t in range(n):
        acc = z[t]
        kq = min(q, t)
        if kq:
            acc -= theta[:kq] @ eps[t - 1::-1][:kq]
        eps[t] = acc
    return eps


def batch_residuals_core(y, cs, phis, thetas):
    """Residual recursion for S parameter draws at once; returns (S, T)."""
    y = np.asarray(y, dtype=np.float64)
    cs = np.asarray(cs, dtype=np.float64)
    phis = np.asarray(phis, dtype=np.float64)
    thetas = np.asarray(thetas, dtype=np.float64)
    n = y.shape[0]
    S, p = phis.shape
    q = thetas.shape[1]
    # AR part has no feedback: one pass over the lags.
    z = np.tile(y, (S, 1))
    z -= cs[:, None]
    for i in range(p):
        z[:, i + 1:] -= phis[:, i, None] * y[: n - 1 - i]
    if q == 0:
        return z
    eps = np.empty((S, n))
    for t in range(n):
        acc = z[:, t].copy()
        kq = min(q, t)
        for j in range(kq):
            acc -= thetas[:, j] * eps[:, t - 1 - j]
        eps[:, t] = acc
    return eps
