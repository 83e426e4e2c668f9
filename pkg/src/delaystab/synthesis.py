"""Instantaneous-valued feedback for delayed modal systems.

Pipeline for a decay target alpha:

1. shift by gamma: the system for exp(gamma t) y has rates mu_k + gamma and
   delay coupling kappa exp(gamma tau);
2. keep the modes with mu_k + gamma >= -beta, where
   beta = 2 (alpha + |kappa| exp((gamma + alpha) tau)) + margin, so every
   discarded mode already decays at rate alpha in the shifted frame;
3. on the kept block solve a Riccati equation for (A_hat + zeta/2, B_hat),
   zeta = 2 (mu + |kappa| exp((gamma + mu) tau)) + margin, which pushes
   the block spectrum left of -zeta/2 and makes the delayed block decay at
   rate mu;
4. u(t) = G y_P(t) with G = -K. The same gain works unshifted, because
   exp(gamma t) is a common factor of state and control.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .modal import IntervalSet, ModalSystem, ModelError, build_interior_model
from .roots import rightmost_root

DEFAULT_MARGIN = 1.0
RICCATI_TOL = 1e-10
RICCATI_MAXITER = 100
_EXP_LIMIT = 700.0


class SynthesisError(RuntimeError):
    """Feedback design failed."""


class HautusError(SynthesisError):
    """The kept block is not stabilizable with the given control matrix."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class RiccatiError(SynthesisError):
    def __init__(self, message, residual=math.inf):
        super().__init__(message)
        self.residual = residual


class TruncationWarning(UserWarning):
    """Every mode of the truncation was kept."""


@dataclass(frozen=True)
class SynthesisRequest:
    alpha: float
    gamma: float | None = None
    margin: float = DEFAULT_MARGIN
    mu: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError("alpha must be positive")
        if not (np.isfinite(self.margin) and self.margin > 0):
            raise ValueError("margin must be positive")
        if self.gamma is None:
            object.__setattr__(self, "gamma", self.alpha + self.margin)
        if self.mu is None:
            object.__setattr__(self, "mu", self.alpha + self.margin)
        if not self.gamma >= self.alpha:
            raise ValueError("gamma must be at least alpha")
        if not self.mu > 0:
            raise ValueError("mu must be positive")


@dataclass(frozen=True)
class SpectralSplit:
    beta: float
    unstable_modes: tuple[int, ...]
    P_head: np.ndarray  # |P| x N selector

    @property
    def size(self) -> int:
        return len(self.unstable_modes)


@dataclass(frozen=True)
class HautusResult:
    ok: bool
    min_singular_value: float
    eigenvalue: complex | None = None
    vector: np.ndarray | None = None
    mode: int | None = None

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class FeedbackLaw:
    """u(t) = gain @ y(t)[mode_indices]."""

    gain: np.ndarray
    mode_indices: tuple[int, ...]
    n_modes: int
    meta: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)

    @property
    def n_controls(self) -> int:
        return self.gain.shape[0]

    def full_gain(self) -> np.ndarray:
        """The m x N matrix F with u = F y."""
        F = np.zeros((self.gain.shape[0], self.n_modes), dtype=self.gain.dtype)
        if self.mode_indices:
            F[:, list(self.mode_indices)] = self.gain
        return F

    def control(self, head) -> np.ndarray:
        y = np.asarray(head)
        if not self.mode_indices:
            return np.zeros(self.gain.shape[0], dtype=np.result_type(self.gain, y))
        return self.gain @ y[list(self.mode_indices)]

    def control_from_state(self, state) -> np.ndarray:
        """Control for a lifted state; only its head is read."""
        return self.control(state.head)

    @property
    def certified(self) -> bool:
        c = self.certificates
        ok = True
        if "placement_abscissa" in c and "placement_bound" in c:
            ok &= c["placement_abscissa"] <= c["placement_bound"]
        if "residual_abscissa" in c:
            ok &= c["residual_abscissa"] <= -self.meta.get("alpha", 0.0)
        return bool(ok)

    def to_dict(self) -> dict:
        g = np.asarray(self.gain)
        return {
            "beta": self.meta.get("beta"),
            "zeta": self.meta.get("zeta"),
            "alpha": self.meta.get("alpha"),
            "gamma": self.meta.get("gamma"),
            "mu": self.meta.get("mu"),
            "unstable_modes": list(self.mode_indices),
            "gain_shape": list(g.shape),
            "gain": [float(v) for v in np.real(g).ravel()],
            "certificates": {k: float(v) for k, v in self.certificates.items()},
        }


@dataclass(frozen=True)
class TwoPhaseLaw:
    """u(t) = 0 on [0, tau]; afterwards inner(y(t)) + a y(t - tau).

    The indicator of omega_2 is carried by the control matrix of the model
    (``omega2_mask``), so it is not applied a second time here.
    """

    inner: FeedbackLaw
    delay_cancel_coeff: float
    omega2_mask: np.ndarray
    switch_time: float

    def control(self, t: float, head, delayed_head) -> np.ndarray:
        if t <= self.switch_time:
            return np.zeros(self.inner.n_controls)
        return self.inner.control(head) + self.delay_cancel_coeff * np.asarray(delayed_head)


def choose_beta(alpha, gamma, kappa, tau, margin=DEFAULT_MARGIN) -> float:
    if not alpha > 0 or not margin > 0:
        raise ValueError("alpha and margin must be positive")
    if not tau > 0:
        raise ValueError("tau must be positive")
    expo = (gamma + alpha) * tau
    if expo > _EXP_LIMIT:
        raise SynthesisError(
            f"exp((gamma + alpha) tau) overflows (exponent {expo:g}); use a smaller shift"
        )
    return 2.0 * (alpha + abs(kappa) * math.exp(expo)) + margin


def choose_zeta(mu, gamma, kappa, tau, margin=DEFAULT_MARGIN) -> float:
    expo = (gamma + mu) * tau
    if expo > _EXP_LIMIT:
        raise SynthesisError(
            f"exp((gamma + mu) tau) overflows (exponent {expo:g}); use a smaller shift"
        )
    return 2.0 * (mu + abs(kappa) * math.exp(expo)) + margin


def split_spectrum(sys: ModalSystem, gamma: float, beta: float) -> SpectralSplit:
    """Keep the modes with mu_k + gamma >= -beta (ties are kept)."""
    keep = np.flatnonzero(sys.eigenvalues + gamma >= -beta)
    if keep.size == sys.n_modes:
        warnings.warn(
            "all modes kept: the truncation is too small to show a stable complement",
            TruncationWarning,
            stacklevel=2,
        )
    P = np.zeros((keep.size, sys.n_modes))
    P[np.arange(keep.size), keep] = 1.0
    return SpectralSplit(float(beta), tuple(int(k) for k in keep), P)


def hautus_check(A_hat, B_hat, tol: float = 1e-10) -> HautusResult:
    """Stabilizability test: [lam I - A^*; B^*] has full column rank at
    every eigenvalue lam of A_hat.

    ``tol`` is relative to max(1, |A_hat|, |B_hat|). On failure the witness
    carries the eigenvalue, the kernel vector and the coordinate where
    that vector is concentrated.
    """
    A = np.atleast_2d(np.asarray(A_hat))
    B = np.asarray(B_hat)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("A_hat must be square")
    if B.shape[0] != n:
        raise ValueError("B_hat must have as many rows as A_hat")
    if n == 0:
        return HautusResult(True, math.inf)
    scale = max(1.0, np.linalg.norm(A, 2), np.linalg.norm(B, 2) if B.size else 0.0)
    AH = A.conj().T
    BH = B.conj().T
    worst = HautusResult(True, math.inf)
    for lam in linalg.eigvals(A):
        stack = np.vstack([lam * np.eye(n) - AH, BH])
        _, s, vh = np.linalg.svd(stack)
        smin = s[-1] if s.size >= n else 0.0
        if smin < worst.min_singular_value:
            v = vh[-1].conj()
            worst = HautusResult(
                smin > tol * scale, float(smin), complex(lam), v, int(np.argmax(np.abs(v)))
            )
    if worst.min_singular_value > tol * scale:
        return HautusResult(True, worst.min_singular_value, worst.eigenvalue)
    return worst


def _care_residual(A, B, X, Q):
    R = A.conj().T @ X + X @ A - X @ B @ B.conj().T @ X + Q
    scale = max(
        1.0,
        2 * np.linalg.norm(A.conj().T @ X),
        np.linalg.norm(X @ B @ B.conj().T @ X),
        np.linalg.norm(Q),
    )
    return np.linalg.norm(R) / scale


def _abscissa(M) -> float:
    if M.size == 0:
        return -math.inf
    return float(np.max(linalg.eigvals(M).real))


def solve_care(A, B, tol=RICCATI_TOL, maxiter=RICCATI_MAXITER):
    """Stabilizing solution of A^* X + X A - X B B^* X + I = 0.

    Newton-Kleinman iteration. The initial gain is zero when A is already
    stable, otherwise the Bass gain B^* Z^{-1} with
    (A + w I) Z + Z (A + w I)^* = 2 B B^*, w beyond -min Re eig(A).
    Returns (X, K) with K = B^* X.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    Q = np.eye(n)
    if _abscissa(A) < 0:
        K = np.zeros((B.shape[1], n))
    else:
        ev = linalg.eigvals(A)
        w = max(0.0, -float(np.min(ev.real))) + max(1.0, float(np.max(np.abs(ev))))
        As = A + w * np.eye(n)
        Z = linalg.solve_continuous_lyapunov(As, 2.0 * B @ B.T)
        try:
            K = B.T @ np.linalg.inv(Z)
        except np.linalg.LinAlgError as exc:
            raise RiccatiError(f"Bass seed failed: {exc}") from exc
        if _abscissa(A - B @ K) >= 0:
            raise RiccatiError("Bass seed is not stabilizing")
    X = None
    res = math.inf
    for _ in range(maxiter):
        Ac = A - B @ K
        X = linalg.solve_continuous_lyapunov(Ac.T, -(Q + K.T @ K))
        X = 0.5 * (X + X.T)
        K = B.T @ X
        res = _care_residual(A, B, X, Q)
        if res <= tol:
            return X, K
    raise RiccatiError(f"Newton-Kleinman did not converge (residual {res:.3e})", res)


def place_poles(A_hat, B_hat, zeta: float, check: bool = True):
    """Gain K with spectral abscissa of A_hat - B_hat K below -zeta/2.

    Solves the Riccati equation for (A_hat + zeta/2 I, B_hat) with identity
    weights; K = B_hat^T X. Returns (K, abscissa).
    """
    A = np.atleast_2d(np.asarray(A_hat, dtype=float))
    B = np.asarray(B_hat, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    n = A.shape[0]
    if n == 0:
        return np.zeros((B.shape[1], 0)), -math.inf
    As = A + 0.5 * zeta * np.eye(n)
    if check:
        h = hautus_check(As, B)
        if not h.ok:
            raise HautusError(
                f"block is not stabilizable: mode {h.mode} at eigenvalue {h.eigenvalue:.6g}",
                h,
            )
    _, K = solve_care(As, B)
    return K, _abscissa(A - B @ K)


def residual_abscissa(sys: ModalSystem, gamma: float, discarded) -> float:
    """Largest real part over discarded modes of the shifted-frame roots of
    lam = mu_k + gamma + kappa exp(gamma tau) exp(-lam tau)."""
    if not len(discarded):
        return -math.inf
    kap = sys.kappa * math.exp(gamma * sys.tau)
    worst = -math.inf
    for k in discarded:
        r = rightmost_root(sys.eigenvalues[k] + gamma, kap, sys.tau)
        worst = max(worst, r.value.real)
    return float(worst)


def synthesize(sys: ModalSystem, req: SynthesisRequest) -> FeedbackLaw:
    """Instantaneous-valued gain with closed-loop decay rate at least alpha."""
    if not sys.has_scalar_delay:
        raise ModelError("feedback synthesis needs a scalar delay coupling")
    alpha, gamma, mu, margin = req.alpha, req.gamma, req.mu, req.margin
    kappa, tau = sys.kappa, sys.tau
    beta = choose_beta(alpha, gamma, kappa, tau, margin)
    zeta = choose_zeta(mu, gamma, kappa, tau, margin)
    split = split_spectrum(sys, gamma, beta)
    idx = list(split.unstable_modes)
    discarded = [k for k in range(sys.n_modes) if k not in set(idx)]
    meta = dict(alpha=alpha, gamma=gamma, beta=beta, zeta=zeta, mu=mu, margin=margin)
    certs = {"residual_abscissa": residual_abscissa(sys, gamma, discarded)}
    if not idx:
        gain = np.zeros((sys.n_controls, 0))
        certs["placement_abscissa"] = -math.inf
        certs["placement_bound"] = -zeta / 2
        return FeedbackLaw(gain, (), sys.n_modes, meta, certs)
    A_hat = np.diag(sys.eigenvalues[idx] + gamma)
    B_hat = sys.control_matrix[idx, :]
    h = hautus_check(A_hat, B_hat)
    if not h.ok:
        mode = idx[h.mode]
        raise HautusError(
            f"system not rapidly stabilizable with this control truncation: "
            f"mode {mode} (rate {sys.eigenvalues[mode]:g}) is not reached by the control",
            HautusResult(False, h.min_singular_value, h.eigenvalue, h.vector, mode),
        )
    K, absc = place_poles(A_hat, B_hat, zeta, check=False)
    certs["placement_abscissa"] = absc
    certs["placement_bound"] = -zeta / 2
    certs["hautus_margin"] = h.min_singular_value
    return FeedbackLaw(-K, tuple(idx), sys.n_modes, meta, certs)


def check_disjoint_cover(omega1: IntervalSet, omega2: IntervalSet, tol=1e-12):
    if omega1.overlap(omega2) > tol:
        raise ModelError("omega1 and omega2 overlap; a disjoint cover of (0, 1) is required")
    if abs(omega1.length + omega2.length - 1.0) > tol:
        raise ModelError("omega1 and omega2 do not cover (0, 1)")


def synthesize_localized(
    sys_interior: ModalSystem,
    omega1,
    omega2,
    gamma: float,
    margin: float = DEFAULT_MARGIN,
) -> TwoPhaseLaw:
    """Two-phase law for y_t = y_xx + a chi_1 y(t - tau) + chi_2 u.

    After tau the term a chi_2 y(t - tau) turns the localized delay into the
    constant coupling a y(t - tau); the inner gain is designed for that
    constant-coefficient system with control on omega2. ``sys_interior``
    supplies N, a (its ``kappa``) and tau.
    """
    if not isinstance(omega1, IntervalSet):
        omega1 = IntervalSet(omega1)
    if not isinstance(omega2, IntervalSet):
        omega2 = IntervalSet(omega2)
    check_disjoint_cover(omega1, omega2)
    a = sys_interior.kappa
    const = build_interior_model(sys_interior.n_modes, omega2, kappa=a, tau=sys_interior.tau)
    inner = synthesize(const, SynthesisRequest(alpha=gamma, margin=margin))
    return TwoPhaseLaw(inner, float(a), const.control_matrix, sys_interior.tau)
