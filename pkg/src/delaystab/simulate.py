"""Method-of-steps integration of delayed modal systems.

One step of length h solves y' = M y + g(t) exactly for the linear part:
M is diag(mu) in open loop and diag(mu) + B F in closed loop, and the
source g(t) = E y(t - tau) + B u(t) is replaced by its cubic Hermite
interpolant on the step. This is the trapezoid rule plus endpoint
derivative corrections. Source derivatives come from stored derivatives
of the delayed state. The grid satisfies tau = L h, so the delayed values
are grid values. They sit in a ring buffer of L + 1 slots.

Left and right limits are kept apart at grid points because y' jumps at
multiples of tau when phi(0) differs from y0.
"""
from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._expint import hermite_weights, phi_matrix, phi_scalar
from .modal import ModalSystem

DEFAULT_STEPS_PER_DELAY = 200
RATE_TOLERANCE = 0.95


class SimulationError(ArithmeticError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ContractionError(RuntimeError):
    """No admissible Picard step length."""


# --------------------------------------------------------------------------
# histories
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class History:
    """Initial segment phi on theta_j = -tau + j tau / L, j = 0..L.

    ``values`` and ``derivs`` have shape (N, L + 1). At j = 0 they are right
    limits, at j = L left limits (phi(0) may differ from y0).
    """

    tau: float
    values: np.ndarray
    derivs: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(1, -1)
        d = np.array(self.derivs, dtype=float).reshape(v.shape)
        if v.shape[1] < 2:
            raise ValueError("a history needs at least two samples")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(d))):
            raise ValueError("history samples must be finite")
        v.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "derivs", d)

    @property
    def n_modes(self) -> int:
        return self.values.shape[0]

    @property
    def n_intervals(self) -> int:
        return self.values.shape[1] - 1

    @property
    def theta(self) -> np.ndarray:
        return np.linspace(-self.tau, 0.0, self.n_intervals + 1)

    @classmethod
    def from_samples(cls, samples, tau: float, derivs=None) -> "History":
        """Per-mode samples on a uniform grid; derivatives by second-order
        differences when not given."""
        v = np.atleast_2d(np.asarray(samples, dtype=float))
        if derivs is None:
            h = tau / (v.shape[1] - 1)
            derivs = np.gradient(v, h, axis=1, edge_order=2) if v.shape[1] > 2 else (
                np.repeat((v[:, 1:] - v[:, :1]) / h, 2, axis=1)
            )
        return cls(tau, v, derivs)

    @classmethod
    def constant(cls, c, n_modes: int, tau: float, n_intervals: int = 2) -> "History":
        c = np.broadcast_to(np.asarray(c, dtype=float), (n_modes,))
        v = np.repeat(c[:, None], n_intervals + 1, axis=1)
        return cls(tau, v, np.zeros_like(v))

    @classmethod
    def from_function(
        cls, f: Callable, tau: float, n_intervals: int, df: Callable | None = None
    ) -> "History":
        theta = np.linspace(-tau, 0.0, n_intervals + 1)
        v = np.column_stack([np.atleast_1d(np.asarray(f(t), dtype=float)) for t in theta])
        if df is None:
            return cls.from_samples(v, tau)
        d = np.column_stack([np.atleast_1d(np.asarray(df(t), dtype=float)) for t in theta])
        return cls(tau, v, d.reshape(v.shape))

    @classmethod
    def exponential(cls, lam: float, v, tau: float, n_intervals: int = 2) -> "History":
        """phi(theta) = exp(lam theta) v (real lam)."""
        v = np.atleast_1d(np.asarray(v, dtype=float))
        theta = np.linspace(-tau, 0.0, n_intervals + 1)
        e = np.exp(lam * theta)
        vals = np.outer(v, e)
        return cls(tau, vals, lam * vals)

    def sample(self, theta):
        """Cubic Hermite interpolation; returns (values, derivatives) of
        shape (N, len(theta))."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if np.any(theta < -self.tau * (1 + 1e-12)) or np.any(theta > self.tau * 1e-12):
            raise ValueError("theta outside [-tau, 0]")
        n = self.n_intervals
        h = self.tau / n
        x = (theta + self.tau) / h
        j = np.clip(np.floor(x).astype(int), 0, n - 1)
        s = np.clip(x - j, 0.0, 1.0)
        v0, v1 = self.values[:, j], self.values[:, j + 1]
        d0, d1 = self.derivs[:, j], self.derivs[:, j + 1]
        h00 = 1 - 3 * s**2 + 2 * s**3
        h01 = 3 * s**2 - 2 * s**3
        h10 = s - 2 * s**2 + s**3
        h11 = -(s**2) + s**3
        val = h00 * v0 + h01 * v1 + h * (h10 * d0 + h11 * d1)
        g00 = (-6 * s + 6 * s**2) / h
        g10 = 1 - 4 * s + 3 * s**2
        g11 = -2 * s + 3 * s**2
        der = g00 * v0 - g00 * v1 + g10 * d0 + g11 * d1
        return val, der

    def resample(self, n_intervals: int) -> "History":
        if n_intervals == self.n_intervals:
            return self
        theta = np.linspace(-self.tau, 0.0, n_intervals + 1)
        v, d = self.sample(theta)
        # keep the one-sided end values exactly
        v[:, 0], v[:, -1] = self.values[:, 0], self.values[:, -1]
        d[:, 0], d[:, -1] = self.derivs[:, 0], self.derivs[:, -1]
        return History(self.tau, v, d)

    def scaled(self, gamma: float) -> "History":
        """exp(gamma theta) phi(theta) with its exact derivative."""
        e = np.exp(gamma * self.theta)
        return History(self.tau, self.values * e, (gamma * self.values + self.derivs) * e)

    def l2_norm(self) -> float:
        """L2(-tau, 0) norm by the trapezoid rule."""
        sq = np.sum(self.values**2, axis=0)
        h = self.tau / self.n_intervals
        return float(math.sqrt(h * (sq.sum() - 0.5 * (sq[0] + sq[-1]))))


# --------------------------------------------------------------------------
# configuration and results
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """Step, horizon and initial data.

    ``dt`` is adjusted so that tau / dt is an integer. ``history`` may be a
    History, a constant, or None (constant history equal to y0).
    """

    y0: np.ndarray
    history: History | float | None = None
    dt: float | None = None
    horizon: float | None = None

    def __post_init__(self):
        y0 = np.atleast_1d(np.asarray(self.y0, dtype=float))
        if not np.all(np.isfinite(y0)):
            raise ValueError("y0 must be finite")
        object.__setattr__(self, "y0", y0)
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("horizon must be positive")

    def replace(self, **changes) -> "SimConfig":
        data = dict(y0=self.y0, history=self.history, dt=self.dt, horizon=self.horizon)
        data.update(changes)
        return SimConfig(**data)

    def grid(self, tau: float, alpha: float | None = None):
        """(L, h, n_steps) with tau = L h."""
        dt = self.dt if self.dt is not None else tau / DEFAULT_STEPS_PER_DELAY
        lag = max(1, int(round(tau / dt)))
        h = tau / lag
        horizon = self.horizon
        if horizon is None:
            horizon = max(10.0 / alpha, 4 * tau) if alpha else 4 * tau
        n_steps = max(1, int(round(horizon / h)))
        return lag, h, n_steps

    def history_on(self, n_modes: int, tau: float, lag: int) -> History:
        hist = self.history
        if hist is None:
            hist = History.constant(self.y0, n_modes, tau, lag)
        elif not isinstance(hist, History):
            hist = History.constant(hist, n_modes, tau, lag)
        if hist.n_modes != n_modes:
            raise ValueError(f"history has {hist.n_modes} modes, system has {n_modes}")
        if abs(hist.tau - tau) > 1e-12 * tau:
            raise ValueError("history length differs from the delay")
        return hist.resample(lag)


@dataclass
class Trajectory:
    times: np.ndarray
    state_norms: np.ndarray
    control_norms: np.ndarray
    tau: float
    heads: np.ndarray | None = None  # (n_points, N)
    fitted_rate: float | None = None
    end_history: History | None = None
    initial_norm: float = 1.0
    info: dict = field(default_factory=dict)

    @property
    def final_state(self) -> np.ndarray:
        return self.heads[-1]

    def window(self, t_lo: float, t_hi: float) -> np.ndarray:
        return (self.times >= t_lo - 1e-12) & (self.times <= t_hi + 1e-12)


# --------------------------------------------------------------------------
# stepper
# --------------------------------------------------------------------------


class _Propagator:
    """Step weights for y' = M y + g with Hermite-interpolated g."""

    def __init__(self, M, h):
        M = np.asarray(M, dtype=float)
        self.diagonal = M.ndim == 1
        phis = phi_scalar(h * M) if self.diagonal else phi_matrix(h * M)
        self.w = hermite_weights(phis, h)
        self.M = M

    def mul(self, W, x):
        return W * x if self.diagonal else W @ x

    def apply_M(self, y):
        return self.M * y if self.diagonal else self.M @ y

    def step(self, y, g0, g1, d0, d1):
        p0, wg0, wg1, wd0, wd1 = self.w
        m = self.mul
        return m(p0, y) + m(wg0, g0) + m(wg1, g1) + m(wd0, d0) + m(wd1, d1)


def _delay_apply(E):
    if np.ndim(E) == 0:
        k = float(E)
        return lambda x: k * x
    E = np.asarray(E, dtype=float)
    return lambda x: E @ x


def _integrate(
    M,
    E,
    B,
    hist: History,
    y0,
    h: float,
    n_steps: int,
    t0: float = 0.0,
    u: Callable | None = None,
    u_dot: Callable | None = None,
    control_log: Callable | None = None,
):
    """Advance from t0 for n_steps. Returns heads, control norms and the
    end-of-run history window."""
    prop = _Propagator(M, h)
    delay = _delay_apply(E)
    lag = hist.n_intervals
    n = hist.n_modes
    size = lag + 1
    vl = np.empty((size, n))
    vr = np.empty((size, n))
    dl = np.empty((size, n))
    dr = np.empty((size, n))
    for i in range(-lag, 1):
        s = i % size
        vl[s] = vr[s] = hist.values[:, i + lag]
        dl[s] = dr[s] = hist.derivs[:, i + lag]
    y = np.array(y0, dtype=float)
    zero_src = np.zeros(n)

    if u is not None:
        Bm = np.asarray(B, dtype=float)
        if u_dot is None:
            eps = 1e-2 * h

            def u_dot(t):
                return (np.asarray(u(t + eps)) - np.asarray(u(t - eps))) / (2 * eps)

        def src(t):
            return Bm @ np.atleast_1d(u(t))

        def dsrc(t):
            return Bm @ np.atleast_1d(u_dot(t))
    else:

        def src(t):
            return zero_src

        dsrc = src

    s0 = 0
    vr[s0] = y
    dr[s0] = prop.apply_M(y) + delay(vr[(-lag) % size]) + src(t0)
    heads = np.empty((n_steps + 1, n))
    heads[0] = y
    cnorm = np.zeros(n_steps + 1)
    if control_log is not None:
        cnorm[0] = np.linalg.norm(control_log(t0, y, vr[(-lag) % size]))
    elif u is not None:
        cnorm[0] = np.linalg.norm(u(t0))
    for k in range(n_steps):
        t = t0 + k * h
        t1 = t0 + (k + 1) * h
        a = (k - lag) % size
        b = (k + 1 - lag) % size
        g0 = delay(vr[a]) + src(t)
        g1 = delay(vl[b]) + src(t1)
        d0 = delay(dr[a]) + dsrc(t)
        d1 = delay(dl[b]) + dsrc(t1)
        with np.errstate(over="ignore", invalid="ignore"):
            y = prop.step(y, g0, g1, d0, d1)
            my = prop.apply_M(y)
        if not np.all(np.isfinite(y)):
            raise SimulationError(f"non-finite state at t = {t1:.17g}", t1)
        vl[a] = vr[a] = y
        dl[a] = my + g1
        dr[a] = my + delay(vr[b]) + src(t1)
        heads[k + 1] = y
        if control_log is not None:
            cnorm[k + 1] = np.linalg.norm(control_log(t1, y, vr[b]))
        elif u is not None:
            cnorm[k + 1] = np.linalg.norm(u(t1))
    # window [t_end - tau, t_end] in history layout
    idx = [(n_steps - lag + j) % size for j in range(size)]
    vals = vr[idx].T.copy()
    ders = dr[idx].T.copy()
    ders[:, -1] = dl[idx[-1]]
    end_hist = History(hist.tau, vals, ders)
    return heads, cnorm, end_hist


def _trajectory(heads, cnorm, t0, h, tau, end_hist, init_norm, info=None):
    n = heads.shape[0]
    times = t0 + h * np.arange(n)
    return Trajectory(
        times=times,
        state_norms=np.linalg.norm(heads, axis=1),
        control_norms=cnorm,
        tau=tau,
        heads=heads,
        end_history=end_hist,
        initial_norm=init_norm,
        info=dict(info or {}),
    )


def _initial_norm(y0, hist: History) -> float:
    return float(math.sqrt(np.dot(y0, y0) + hist.l2_norm() ** 2))


def simulate_open_loop(
    sys: ModalSystem,
    cfg: SimConfig,
    u: Callable | None = None,
    u_dot: Callable | None = None,
) -> Trajectory:
    """y' = diag(mu) y + E y(t - tau) + B u(t), u defaulting to zero."""
    lag, h, n_steps = cfg.grid(sys.tau)
    hist = cfg.history_on(sys.n_modes, sys.tau, lag)
    E = sys.kappa if sys.has_scalar_delay else sys.delay_matrix
    heads, cn, end = _integrate(
        sys.eigenvalues, E, sys.control_matrix, hist, cfg.y0, h, n_steps, u=u, u_dot=u_dot
    )
    return _trajectory(heads, cn, 0.0, h, sys.tau, end, _initial_norm(cfg.y0, hist),
                       {"dt": h, "lag": lag})


def _closed_generator(sys: ModalSystem, F):
    F = np.asarray(F, dtype=float)
    if not np.any(F):
        return sys.eigenvalues  # same diagonal path as open loop
    return np.diag(sys.eigenvalues) + sys.control_matrix @ F


def simulate_closed_loop(sys: ModalSystem, law, cfg: SimConfig, alpha=None) -> Trajectory:
    """Closed loop with u(t) = F y(t); ``law`` is a FeedbackLaw or an m x N
    matrix F."""
    F = law.full_gain() if hasattr(law, "full_gain") else np.asarray(law, dtype=float)
    if alpha is None and hasattr(law, "meta"):
        alpha = law.meta.get("alpha")
    lag, h, n_steps = cfg.grid(sys.tau, alpha)
    hist = cfg.history_on(sys.n_modes, sys.tau, lag)
    E = sys.kappa if sys.has_scalar_delay else sys.delay_matrix
    heads, cn, end = _integrate(
        _closed_generator(sys, F), E, sys.control_matrix, hist, cfg.y0, h, n_steps,
        control_log=lambda t, y, yd: F @ y,
    )
    return _trajectory(heads, cn, 0.0, h, sys.tau, end, _initial_norm(cfg.y0, hist),
                       {"dt": h, "lag": lag})


def simulate_two_phase(sys_localized: ModalSystem, law, cfg: SimConfig) -> Trajectory:
    """Free evolution on [0, tau], then u = F y(t) + a y(t - tau).

    The second phase starts from the first phase's state and window, so the
    result is the concatenation of the two pieces.
    """
    tau = sys_localized.tau
    alpha = law.inner.meta.get("alpha")
    lag, h, n_steps = cfg.grid(tau, alpha)
    if n_steps < lag:
        raise ValueError("horizon shorter than the free phase")
    first = simulate_open_loop(sys_localized, cfg.replace(dt=h, horizon=tau))
    F = law.inner.full_gain()
    a = law.delay_cancel_coeff
    B = sys_localized.control_matrix
    E2 = sys_localized.delay_operator() + a * B
    M = _closed_generator(sys_localized, F)
    heads2, cn2, end = _integrate(
        M, E2, B, first.end_history, first.final_state, h, n_steps - lag, t0=tau,
        control_log=lambda t, y, yd: F @ y + a * yd,
    )
    heads = np.vstack([first.heads, heads2[1:]])
    cn = np.concatenate([first.control_norms, cn2[1:]])
    hist = cfg.history_on(sys_localized.n_modes, tau, lag)
    return _trajectory(heads, cn, 0.0, h, tau, end, _initial_norm(cfg.y0, hist),
                       {"dt": h, "lag": lag, "switch_index": lag})


# --------------------------------------------------------------------------
# Picard oracle
# --------------------------------------------------------------------------


def admissibility_constant(sys: ModalSystem, T: float) -> float:
    """sum_k |row_k(B)|^2 (exp(2 mu_k T) - 1) / (2 mu_k), i.e.
    int_0^T |B^* exp(s A)|_HS^2 ds for diagonal A."""
    mu = sys.eigenvalues
    rows = np.sum(sys.control_matrix**2, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        fac = np.where(mu == 0, T, np.expm1(2 * mu * T) / (2 * mu))
    return float(np.sum(rows * fac))


@dataclass
class PicardResult:
    times: np.ndarray
    heads: np.ndarray
    iterations: list[int]
    step_length: float
    contraction: float

    @property
    def max_iterations(self) -> int:
        return max(self.iterations)


def picard_solve_step(
    sys: ModalSystem,
    F,
    cfg: SimConfig,
    T: float | None = None,
    tol: float = 1e-13,
    horizon: float | None = None,
    refine: int = 2,
    maxiter: int = 200,
) -> PicardResult:
    """Solve the closed loop by fixed-point iteration of the integral map

        G[y](t) = e^{(t - t0) A} y(t0) + int_{t0}^t e^{(t - s) A}
                  (E y(s - tau) + B F y(s)) ds

    on windows of length T <= tau, chained up to ``horizon`` (default tau).
    T is shrunk to tau / q, q integer, until sqrt((1 + tau) T C(T)) |F| < 1,
    with C the admissibility constant. The integral uses exact exponentials
    and Hermite quadrature on a grid ``refine`` times finer than cfg's.
    The iteration stops once sup |G[y^k] - y^k| <= tol; ``iterations``
    holds k for each window (k = 1 when F = 0).
    """
    F = F.full_gain() if hasattr(F, "full_gain") else np.asarray(F, dtype=float)
    tau = sys.tau
    lag0, h0, _ = cfg.grid(tau)
    lag = lag0 * refine
    h = tau / lag
    fnorm = float(np.linalg.norm(F, 2)) if F.size else 0.0
    T = tau if T is None else min(float(T), tau)
    q_min = max(1, int(math.ceil(tau / T - 1e-9)))
    chosen = None
    for q in range(q_min, lag + 1):
        if lag % q:
            continue
        Tq = tau / q
        c = math.sqrt((1 + tau) * Tq * admissibility_constant(sys, Tq)) * fnorm
        if c < 1:
            chosen = (q, Tq, c)
            break
    if chosen is None:
        raise ContractionError("no step length tau / q gives a contraction")
    q, T, contraction = chosen
    w = lag // q
    horizon = tau if horizon is None else horizon
    n_win = int(round(horizon / T))
    n_tot = n_win * w

    hist = cfg.history_on(sys.n_modes, tau, lag)
    E = sys.delay_operator()
    B = sys.control_matrix
    BF = B @ F
    mu = sys.eigenvalues
    wts = hermite_weights(phi_scalar(h * mu), h)
    p0, wg0, wg1, wd0, wd1 = wts
    n = sys.n_modes

    # full arrays indexed by grid point i = -lag..n_tot (offset by lag)
    vl = np.zeros((n_tot + lag + 1, n))
    vr = np.zeros_like(vl)
    dl = np.zeros_like(vl)
    dr = np.zeros_like(vl)
    vl[: lag + 1] = vr[: lag + 1] = hist.values.T
    dl[: lag + 1] = dr[: lag + 1] = hist.derivs.T
    vr[lag] = cfg.y0
    iterations = []

    for win in range(n_win):
        i0 = win * w  # grid index of window start
        o = lag + i0
        dly_r = vr[o - lag: o - lag + w + 1] @ E.T
        dly_l = vl[o - lag: o - lag + w + 1] @ E.T
        ddl_r = dr[o - lag: o - lag + w + 1] @ E.T
        ddl_l = dl[o - lag: o - lag + w + 1] @ E.T
        y_start = vr[o].copy()
        # y^0: constant continuation of the window start
        Y = np.repeat(y_start[None, :], w + 1, axis=0)
        Yd = np.zeros_like(Y)
        Ydl = np.zeros_like(Y)

        def G(Y, Yd, Ydl):
            fb = Y @ BF.T
            fbd_r = Yd @ BF.T
            fbd_l = Ydl @ BF.T
            out = np.empty_like(Y)
            out[0] = y_start
            for j in range(w):
                g0 = dly_r[j] + fb[j]
                g1 = dly_l[j + 1] + fb[j + 1]
                d0 = ddl_r[j] + fbd_r[j]
                d1 = ddl_l[j + 1] + fbd_l[j + 1]
                out[j + 1] = p0 * out[j] + wg0 * g0 + wg1 * g1 + wd0 * d0 + wd1 * d1
            src_r = dly_r + fb
            src_l = dly_l + fb
            return out, out * mu + src_r, out * mu + src_l

        Y, Yd, Ydl = G(Y, Yd, Ydl)  # y^1
        k = 1
        while True:
            Yn, Ydn, Ydln = G(Y, Yd, Ydl)
            diff = float(np.max(np.abs(Yn - Y)))
            Y, Yd, Ydl = Yn, Ydn, Ydln
            if diff <= tol * max(1.0, float(np.max(np.abs(Y)))):
                break
            k += 1
            if k >= maxiter:
                raise ContractionError(f"Picard iteration stalled in window {win}")
        iterations.append(k)
        vl[o + 1: o + w + 1] = Y[1:]
        vr[o + 1: o + w + 1] = Y[1:]
        dl[o + 1: o + w + 1] = Ydl[1:]
        dr[o: o + w + 1] = Yd
    times = h * np.arange(n_tot + 1)
    return PicardResult(times, vr[lag:].copy(), iterations, T, contraction)


# --------------------------------------------------------------------------
# decay estimation and verification
# --------------------------------------------------------------------------


def estimate_decay_rate(traj: Trajectory, skip: float | None = None) -> float:
    """Least-squares slope of -log |y(t)| over t >= skip (default 2 tau).

    Returns +inf when the norm vanishes on the fit window.
    """
    if skip is None:
        skip = 2 * traj.tau
    if skip < 0:
        raise ValueError("skip must be nonnegative")
    sel = traj.times >= skip - 1e-12
    t = traj.times[sel]
    y = traj.state_norms[sel]
    if t.size < 10:
        raise ValueError(f"need at least 10 samples after skip, have {t.size}")
    if np.any(y <= 0):
        return math.inf
    slope = np.polyfit(t, np.log(y), 1)[0]
    rate = float(-slope)
    traj.fitted_rate = rate
    return rate


def fit_constant(traj: Trajectory, alpha: float, factor: float = RATE_TOLERANCE,
                 t_min: float | None = None) -> float:
    """max over t >= t_min of |y(t)| exp(factor alpha t) / |(y0, phi)|."""
    t_min = 2 * traj.tau if t_min is None else t_min
    sel = traj.times >= t_min - 1e-12
    vals = traj.state_norms[sel] * np.exp(factor * alpha * traj.times[sel])
    denom = traj.initial_norm if traj.initial_norm > 0 else 1.0
    return float(np.max(vals) / denom)


@dataclass
class RapidEntry:
    alpha: float
    passed: bool
    alpha_hat: float | None = None
    C_hat: float | None = None
    runtime: float = 0.0
    error: str | None = None
    witness_mode: int | None = None
    law: object | None = None
    trajectory: Trajectory | None = None

    def to_dict(self) -> dict:
        d = {
            "alpha": self.alpha,
            "alpha_hat": self.alpha_hat,
            "C_hat": self.C_hat,
            "pass": self.passed,
            "runtime": self.runtime,
        }
        if self.error is not None:
            d["error"] = self.error
        if self.witness_mode is not None:
            d["witness_mode"] = self.witness_mode
        if self.law is not None:
            d["law"] = self.law.to_dict()
        return d


@dataclass
class RapidReport:
    entries: list[RapidEntry]

    @property
    def passed(self) -> bool:
        return bool(self.entries) and all(e.passed for e in self.entries)

    def to_dict(self) -> dict:
        return {"pass": self.passed, "results": [e.to_dict() for e in self.entries]}


def verify_rapid(
    sys: ModalSystem,
    alphas: Sequence[float],
    cfg: SimConfig,
    margin: float = 1.0,
    gamma: float | None = None,
    keep_trajectories: bool = False,
) -> RapidReport:
    """synthesize -> simulate_closed_loop -> estimate_decay_rate per alpha;
    pass iff the fitted rate is at least 0.95 alpha."""
    from .synthesis import HautusError, SynthesisError, SynthesisRequest, synthesize

    alphas = list(alphas)
    if not alphas:
        raise ValueError("alphas must be nonempty")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be increasing")
    entries = []
    for alpha in alphas:
        t_start = _time.perf_counter()
        try:
            g = None if gamma is None else max(gamma, alpha)
            law = synthesize(sys, SynthesisRequest(alpha=alpha, gamma=g, margin=margin))
        except HautusError as exc:
            mode = exc.witness.mode if exc.witness is not None else None
            entries.append(RapidEntry(alpha, False, error=str(exc), witness_mode=mode,
                                      runtime=_time.perf_counter() - t_start))
            continue
        except (SynthesisError, ValueError, ArithmeticError) as exc:
            entries.append(RapidEntry(alpha, False, error=str(exc),
                                      runtime=_time.perf_counter() - t_start))
            continue
        try:
            traj = simulate_closed_loop(sys, law, cfg, alpha=alpha)
            rate = estimate_decay_rate(traj)
            c_hat = fit_constant(traj, alpha)
        except (SimulationError, ValueError) as exc:
            entries.append(RapidEntry(alpha, False, error=str(exc), law=law,
                                      runtime=_time.perf_counter() - t_start))
            continue
        entries.append(
            RapidEntry(
                alpha,
                bool(rate >= RATE_TOLERANCE * alpha),
                alpha_hat=rate,
                C_hat=c_hat,
                runtime=_time.perf_counter() - t_start,
                law=law,
                trajectory=traj if keep_trajectories else None,
            )
        )
    return RapidReport(entries)
