"""Finite-dimensional shadow of the lifted (head, history) generator.

The delay system is rewritten on pairs (f1, f2) with f1 = y(t) and
f2(theta) = y(t + theta), theta in [-tau, 0]. The generator acts as

    (f1, f2) -> (Lambda f1 + E f2(-tau), f2'),    f2(0) = f1,

and its adjoint as

    (g1, g2) -> (Lambda g1 + g2(0), -g2'),        g2(-tau) = E^T g1.

Both are discretized on M + 1 nodes theta_0 = 0 > theta_1 > ... > theta_M
= -tau, either Chebyshev-Gauss-Lobatto (spectral collocation) or uniform
with second-order one-sided upwind differences.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg

SCHEMES = ("chebyshev", "uniform")


def _check_scheme(scheme):
    if scheme not in SCHEMES:
        raise ValueError(f"unknown node scheme {scheme!r}; expected one of {SCHEMES}")


def cheb_nodes(m: int) -> np.ndarray:
    return np.cos(np.pi * np.arange(m + 1) / m)


def cheb_diff(m: int) -> np.ndarray:
    """Chebyshev differentiation matrix on cos(pi j / m), j = 0..m."""
    x = cheb_nodes(m)
    c = np.ones(m + 1)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** np.arange(m + 1)
    X = np.subtract.outer(x, x)
    D = np.outer(c, 1.0 / c) / (X + np.eye(m + 1))
    D -= np.diag(D.sum(axis=1))
    return D


def clenshaw_curtis_weights(m: int) -> np.ndarray:
    """Clenshaw-Curtis weights on [-1, 1] for the nodes cos(pi j / m)."""
    theta = np.pi * np.arange(m + 1) / m
    w = np.zeros(m + 1)
    v = np.ones(m - 1)
    inner = slice(1, m)
    if m % 2 == 0:
        w[0] = w[m] = 1.0 / (m * m - 1)
        for k in range(1, m // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(m * theta[inner]) / (m * m - 1)
    else:
        w[0] = w[m] = 1.0 / (m * m)
        for k in range(1, (m - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    w[inner] = 2.0 * v / m
    return w


def node_grid(m: int, tau: float, scheme: str = "chebyshev"):
    """Nodes theta_0 = 0 > ... > theta_m = -tau and matching quadrature weights."""
    _check_scheme(scheme)
    if scheme == "chebyshev":
        x = cheb_nodes(m)
        return 0.5 * tau * (x - 1.0), 0.5 * tau * clenshaw_curtis_weights(m)
    h = tau / m
    theta = -h * np.arange(m + 1)
    w = np.full(m + 1, h)
    w[0] = w[-1] = 0.5 * h
    return theta, w


def diff_matrix(m: int, tau: float, scheme: str = "chebyshev", upwind: str = "forward"):
    """d/dtheta on the node grid.

    For the uniform grid ``upwind`` picks the stencil side: ``"forward"``
    looks toward theta = 0 (primal transport), ``"backward"`` toward
    theta = -tau (adjoint transport).
    """
    _check_scheme(scheme)
    if scheme == "chebyshev":
        # x = 1 + 2 theta / tau, so d/dtheta = (2 / tau) d/dx
        return (2.0 / tau) * cheb_diff(m)
    h = tau / m
    D = np.zeros((m + 1, m + 1))
    if upwind == "forward":
        # theta_{i-1} = theta_i + h
        D[0, 0], D[0, 1] = 1.0 / h, -1.0 / h
        D[1, 0], D[1, 1] = 1.0 / h, -1.0 / h
        for i in range(2, m + 1):
            D[i, i] = -3.0 / (2 * h)
            D[i, i - 1] = 4.0 / (2 * h)
            D[i, i - 2] = -1.0 / (2 * h)
    elif upwind == "backward":
        for i in range(m - 1):
            D[i, i] = 3.0 / (2 * h)
            D[i, i + 1] = -4.0 / (2 * h)
            D[i, i + 2] = 1.0 / (2 * h)
        D[m - 1, m - 1], D[m - 1, m] = 1.0 / h, -1.0 / h
        D[m, m - 1], D[m, m] = 1.0 / h, -1.0 / h
    else:
        raise ValueError(f"unknown upwind side {upwind!r}")
    return D


@dataclass(frozen=True)
class LiftedState:
    """Head y(t) and history samples y(t + theta_i) at all m + 1 nodes.

    ``tail[:, 0]`` is the theta = 0 sample and always equals ``head``.
    """

    head: np.ndarray
    tail: np.ndarray
    tau: float
    node_scheme: str = "chebyshev"

    @property
    def m_nodes(self) -> int:
        return self.tail.shape[1] - 1

    @property
    def nodes(self) -> np.ndarray:
        return node_grid(self.m_nodes, self.tau, self.node_scheme)[0]

    def to_vector(self) -> np.ndarray:
        """Layout of the primal generator: head, then theta_1..theta_M node-major."""
        return np.concatenate([self.head, self.tail[:, 1:].T.ravel()])

    def with_tail(self, tail) -> "LiftedState":
        tail = np.array(tail, dtype=complex)
        if tail.shape != self.tail.shape:
            raise ValueError("tail shape mismatch")
        tail[:, 0] = self.head
        return LiftedState(self.head, tail, self.tau, self.node_scheme)


@dataclass(frozen=True)
class LiftedGeneratorMatrix:
    matrix: np.ndarray
    weights: np.ndarray  # quadrature weights on the m + 1 nodes
    nodes: np.ndarray
    n_modes: int
    m_nodes: int
    scheme: str
    kind: str  # "primal" or "adjoint"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def build_lifted_generator(sys, m_nodes: int = 32, scheme: str = "chebyshev"):
    """Discretized generator; unknowns are head and the tail at theta_1..theta_M.

    The theta_0 row of the differentiation matrix is replaced by the head
    equation and the theta_0 column is folded onto the head.
    """
    if m_nodes < 4:
        raise ValueError("m_nodes must be at least 4")
    n, m = sys.n_modes, m_nodes
    theta, w = node_grid(m, sys.tau, scheme)
    D = diff_matrix(m, sys.tau, scheme, "forward")
    E = sys.delay_operator()
    I = np.eye(n)
    A = np.kron(D, I)  # node-major: block (i, j) = D[i, j] I
    A[:n, :] = 0.0
    A[:n, :n] = np.diag(sys.eigenvalues)
    A[:n, m * n:] += E
    return LiftedGeneratorMatrix(A, w, theta, n, m, scheme, "primal")


def adjoint_generator(sys, m_nodes: int = 32, scheme: str = "chebyshev"):
    """Discretized adjoint; unknowns are head and the tail at theta_0..theta_{M-1}.

    The theta_M value is eliminated through g2(-tau) = E^T g1.
    """
    if m_nodes < 4:
        raise ValueError("m_nodes must be at least 4")
    n, m = sys.n_modes, m_nodes
    theta, w = node_grid(m, sys.tau, scheme)
    D = diff_matrix(m, sys.tau, scheme, "backward")
    E = sys.delay_operator()
    # full tail block on nodes 0..m, then fold node m onto the head
    T = -np.kron(D, np.eye(n))  # rows/cols node-major over 0..m
    dim = n * (m + 1)
    A = np.zeros((dim, dim))
    A[:n, :n] = np.diag(sys.eigenvalues)
    A[:n, n:2 * n] = np.eye(n)  # + g2(theta_0)
    rows = T[: m * n]  # equations at theta_0..theta_{m-1}
    A[n:, n:] = rows[:, : m * n]
    A[n:, :n] = rows[:, m * n:] @ E.T
    return LiftedGeneratorMatrix(A, w, theta, n, m, scheme, "adjoint")


def lifted_spectrum(gen: LiftedGeneratorMatrix, count: int) -> list[complex]:
    """The ``count`` eigenvalues of largest real part, in descending order."""
    if count < 1 or count > gen.dim:
        raise ValueError("count must lie in [1, dim]")
    try:
        ev = linalg.eigvals(gen.matrix)
    except linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(ev)):
        raise ArithmeticError("eigensolver returned non-finite values")
    order = np.lexsort((-ev.imag, -ev.real))
    return [complex(v) for v in ev[order[:count]]]


def embed(y0, history, m_nodes: int, tau: float, scheme: str = "chebyshev") -> LiftedState:
    """Lift (y0, phi) onto the node grid.

    ``history`` is a callable theta -> vector, or an array of samples of
    shape (N, m_nodes + 1) at the nodes. The theta = 0 sample is set to y0.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=complex))
    n = y0.size
    theta, _ = node_grid(m_nodes, tau, scheme)
    if callable(history):
        tail = np.column_stack([np.broadcast_to(np.asarray(history(t), dtype=complex), (n,))
                                for t in theta])
    else:
        tail = np.array(history, dtype=complex)
        if tail.ndim == 1 and n == 1:
            tail = tail[None, :]
        if tail.shape != (n, m_nodes + 1):
            raise ValueError(
                f"history samples have shape {tail.shape}, expected {(n, m_nodes + 1)}"
            )
    tail[:, 0] = y0
    return LiftedState(y0.copy(), tail, float(tau), scheme)


def head(state: LiftedState) -> np.ndarray:
    return state.head


def inner_product(weights, a1, a2, b1, b2) -> complex:
    """<(a1, a2), (b1, b2)> = b1^H a1 + sum_i w_i b2_i^H a2_i, tails N x (m+1)."""
    return complex(np.vdot(b1, a1) + np.sum(weights * np.sum(np.conj(b2) * a2, axis=0)))


def duality_residual(
    sys,
    m_nodes: int,
    x: tuple[np.ndarray, Callable],
    y: tuple[np.ndarray, Callable],
    scheme: str = "chebyshev",
) -> float:
    """|<A x, y>_h - <x, A* y>_h| for smooth pairs x = (x1, x2), y = (y1, y2).

    x2 and y2 are callables theta -> vector; they should satisfy
    x2(0) = x1 and y2(-tau) = E^T y1. Derivatives come from the node
    differentiation matrices, integrals from the node quadrature.
    """
    theta, w = node_grid(m_nodes, sys.tau, scheme)
    Df = diff_matrix(m_nodes, sys.tau, scheme, "forward")
    Db = diff_matrix(m_nodes, sys.tau, scheme, "backward")
    E = sys.delay_operator()
    lam = np.diag(sys.eigenvalues)
    x1 = np.asarray(x[0], dtype=complex)
    y1 = np.asarray(y[0], dtype=complex)
    X2 = np.column_stack([np.asarray(x[1](t), dtype=complex) for t in theta])
    Y2 = np.column_stack([np.asarray(y[1](t), dtype=complex) for t in theta])
    ax1 = lam @ x1 + E @ X2[:, -1]
    ax2 = X2 @ Df.T
    ay1 = lam.T @ y1 + Y2[:, 0]
    ay2 = -(Y2 @ Db.T)
    lhs = inner_product(w, ax1, ax2, y1, Y2)
    rhs = inner_product(w, x1, X2, ay1, ay2)
    return abs(lhs - rhs)
