"""phi-functions for exponential integrators.

phi_0(z) = e^z and phi_{k+1}(z) = (phi_k(z) - 1/k!) / z, i.e.
phi_k(z) = int_0^1 e^{(1-s)z} s^{k-1} / (k-1)! ds.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

N_PHI = 4


def phi_scalar(z: np.ndarray, kmax: int = N_PHI) -> list[np.ndarray]:
    """Elementwise phi_0..phi_kmax of an array of (real or complex) values."""
    z = np.asarray(z)
    out = [np.exp(z)]
    small = np.abs(z) < 1.0
    zs = np.where(small, z, 0)
    zl = np.where(small, 1, z)
    for k in range(1, kmax + 1):
        # Taylor: sum_n z^n / (n + k)!
        term = np.full_like(zs, 1.0 / math.factorial(k), dtype=np.result_type(z, float))
        acc = term.copy()
        for n in range(1, 30):
            term = term * zs / (n + k)
            acc = acc + term
        rec = (out[k - 1] - 1.0 / math.factorial(k - 1)) / zl
        out.append(np.where(small, acc, rec))
    return out


def phi_matrix(A: np.ndarray, kmax: int = N_PHI) -> list[np.ndarray]:
    """phi_0(A)..phi_kmax(A) from one exponential of an augmented matrix.

    expm([[A, I, 0..], [0, 0, I, ..], ..]) carries phi_k(A) in its first
    block row.
    """
    A = np.asarray(A)
    n = A.shape[0]
    big = np.zeros(((kmax + 1) * n, (kmax + 1) * n), dtype=A.dtype)
    big[:n, :n] = A
    for k in range(kmax):
        big[k * n:(k + 1) * n, (k + 1) * n:(k + 2) * n] = np.eye(n)
    E = expm(big)
    return [E[:n, k * n:(k + 1) * n] for k in range(kmax + 1)]


def hermite_weights(phis, h: float):
    """Weights of the exponential-Hermite step.

    With y' = M y + g(t) and g Hermite-interpolated on [0, h] from g0, g1,
    g0', g1', the exact step is

        y1 = phi_0 y0 + Wg0 g0 + Wg1 g1 + Wd0 g0' + Wd1 g1'.

    ``phis`` may hold arrays (diagonal M) or matrices.
    """
    p0, p1, p2, p3, p4 = phis[:5]
    wg0 = h * (p1 - 6 * p3 + 12 * p4)
    wg1 = h * (6 * p3 - 12 * p4)
    wd0 = h * h * (p2 - 4 * p3 + 6 * p4)
    wd1 = h * h * (-2 * p3 + 6 * p4)
    return p0, wg0, wg1, wd0, wd1
