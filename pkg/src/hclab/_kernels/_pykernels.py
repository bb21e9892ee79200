"""Pure-Python/NumPy kernels; same signatures as the compiled module."""
import numpy as np


def propagate(step, x0, nsteps):
    """Return ``(nsteps+1, m)`` states with ``states[k] = step^k x0``."""
    step = np.ascontiguousarray(step, dtype=np.complex128)
    x = np.ascontiguousarray(x0, dtype=np.complex128)
    out = np.empty((nsteps + 1, x.shape[0]), dtype=np.complex128)
    out[0] = x
    for k in range(1, nsteps + 1):
        x = step @ x
        out[k] = x
    return out


def ball_mask(states, center, radius):
    """Boolean mask of rows with ``||row - center|| < radius`` and per-row distances."""
    diff = np.asarray(states, dtype=np.complex128) - np.asarray(center, dtype=np.complex128)
    dist = np.sqrt(np.sum(diff.real**2 + diff.imag**2, axis=1))
    return dist < radius, dist


def weight_worst_log_ratio(log_rho, s, log_m, omega):
    """Largest ``log rho(t) - log M - omega|t'| - log rho(t+t')`` over grid pairs.

    Returns ``(value, i, j)`` with ``t = s[i]`` and ``t + t' = s[j]``.
    """
    log_rho = np.asarray(log_rho, dtype=float)
    s = np.asarray(s, dtype=float)
    r = log_rho[:, None] - log_m - omega * np.abs(s[None, :] - s[:, None]) - log_rho[None, :]
    flat = int(np.argmax(r))
    i, j = divmod(flat, r.shape[1])
    return float(r[i, j]), i, j
