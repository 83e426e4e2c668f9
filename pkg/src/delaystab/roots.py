"""Characteristic roots of scalar retarded equations.

Everything here revolves around

    g(lam) = lam - mu - kappa * exp(-lam * tau) = 0,

whose solutions are lam = mu + W_j(kappa tau exp(-mu tau)) / tau over the
branches j of the Lambert W function. The preimage problem
z - kappa exp(-z tau) = eta is the same equation with mu = eta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize, special

DEFAULT_TOL = 1e-12
MAX_NEWTON = 100
MAX_BRANCHES = 64

_INV_E = math.exp(-1.0)
# exp() overflows past ~709; stay clear of it when forming the W argument
_LOG_OVERFLOW = 600.0


class RootError(ArithmeticError):
    """A root could not be certified."""

    def __init__(self, message, best_residual=math.inf, best=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.best = best


class AdvanceBranch(RootError):
    """The requested strip holds no admissible curve intersection."""


@dataclass(frozen=True)
class CharRoot:
    """A root of lam = mu + kappa exp(-lam tau).

    ``flag`` is ``"ok"`` for a certified root, ``"uncertified"`` when Newton
    stalled above tolerance and ``"absent"`` for a requested slot that has
    no root (kappa = 0).
    """

    value: complex
    residual: float
    branch_index: int
    flag: str = "ok"

    @property
    def ok(self) -> bool:
        return self.flag == "ok"

    def to_dict(self) -> dict:
        return {
            "re": float(np.real(self.value)),
            "im": float(np.imag(self.value)),
            "residual": float(self.residual),
            "branch": int(self.branch_index),
            "flag": self.flag,
        }


@dataclass(frozen=True)
class PreimageQuery:
    eta: complex
    kappa: float
    tau: float
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


class Abscissa(NamedTuple):
    value: float
    exact: bool
    mode_index: int


def _scale(*vals) -> float:
    return max(1.0, *(abs(v) for v in vals))


def char_residual(lam, mu, kappa, tau) -> float:
    return float(abs(lam - mu - kappa * np.exp(-lam * tau)))


# --------------------------------------------------------------------------
# Lambert W
# --------------------------------------------------------------------------


def _branch_point_series(z: complex, j: int) -> complex:
    p = np.sqrt(2.0 * (math.e * z + 1.0) + 0j)
    if j == -1:
        p = -p
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3


def lambert_w(j: int, z: complex, tol: float = DEFAULT_TOL) -> complex:
    """Branch ``j`` of the Lambert W function, polished to |w e^w - z| <= tol.

    Branch numbering and cuts follow the usual convention (principal branch
    real on (-1/e, inf)). Near z = -1/e the branches 0 and -1 are seeded
    from the square-root expansion about w = -1. The tolerance is relative
    to max(1, |z|).
    """
    z = complex(z)
    j = int(j)
    if z == 0:
        if j == 0:
            return 0j
        raise ValueError("W_j(0) is only defined on the principal branch")
    near_bp = abs(z + _INV_E) < 1e-6 and j in (0, -1) and abs(z.imag) < 1e-14
    if near_bp:
        if z.real == -_INV_E or abs(z + _INV_E) < 1e-300:
            return -1.0 + 0j
        w = _branch_point_series(z, j)
        if abs(z + _INV_E) < 1e-12:
            return complex(w)
    else:
        w = complex(special.lambertw(z, j))
    if not np.isfinite(w):
        raise RootError(f"Lambert W seed failed for z={z!r}, branch {j}")
    target = tol * max(1.0, abs(z))
    for _ in range(MAX_NEWTON):
        ew = np.exp(w)
        f = w * ew - z
        if abs(f) <= target:
            return complex(w)
        wp1 = w + 1.0
        if wp1 == 0:
            break
        # Halley step
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w = w - step
        if abs(step) <= 1e-16 * max(1.0, abs(w)):
            break
    res = abs(w * np.exp(w) - z)
    if res <= target:
        return complex(w)
    raise RootError(
        f"Lambert W did not converge for z={z!r}, branch {j}", res, complex(w)
    )


def _lambert_w_from_log(j: int, log_z: complex) -> complex:
    """Approximate W_j(exp(log_z)) when exp(log_z) would overflow.

    Solves w + log(w) = log_z + 2 pi i j, valid for large |z|.
    """
    target = log_z + 2j * math.pi * j
    w = target - np.log(target)
    for _ in range(MAX_NEWTON):
        f = w + np.log(w) - target
        step = f / (1.0 + 1.0 / w)
        w = w - step
        if abs(step) <= 1e-15 * abs(w):
            break
    return complex(w)


def _w_seed(j: int, log_x: complex) -> complex:
    if log_x.real < _LOG_OVERFLOW:
        x = np.exp(log_x)
        try:
            return lambert_w(j, x, tol=1e-10)
        except RootError as exc:
            if exc.best is not None and np.isfinite(exc.best):
                return exc.best
            return complex(special.lambertw(x, j))
    return _lambert_w_from_log(j, log_x)


def newton_char(lam0, mu, kappa, tau, tol=DEFAULT_TOL, maxiter=MAX_NEWTON):
    """Newton iteration on lam - mu - kappa exp(-lam tau).

    Returns ``(lam, residual)``; the caller decides whether the residual is
    acceptable.
    """
    lam = complex(lam0)
    best = lam
    best_res = math.inf
    for _ in range(maxiter):
        d = kappa * np.exp(-lam * tau)
        g = lam - mu - d
        res = abs(g)
        if res < best_res:
            best, best_res = lam, res
        if res <= tol * _scale(mu, lam):
            break
        dg = 1.0 + tau * d
        if dg == 0 or not np.isfinite(dg):
            break
        step = g / dg
        lam = lam - step
        if not np.isfinite(lam):
            break
        if abs(step) <= 4e-16 * max(1.0, abs(lam)):
            break
    final = char_residual(lam, mu, kappa, tau) if np.isfinite(lam) else math.inf
    if final < best_res:
        best, best_res = lam, final
    return best, best_res


def _log_w_argument(mu, kappa, tau) -> complex:
    # log(kappa tau exp(-mu tau)) with the principal log of kappa tau
    return complex(np.log(complex(kappa * tau))) - complex(mu) * tau


def _branch_order(n: int):
    yield 0
    for k in range(1, n + 1):
        yield -k
        yield k


def rightmost_roots(
    mu, kappa: float, tau: float, count: int = 1, tol: float = DEFAULT_TOL
) -> list[CharRoot]:
    """The ``count`` roots of lam = mu + kappa exp(-lam tau) with the largest
    real parts, sorted by decreasing real part.

    ``mu`` may be complex. For real ``mu`` a conjugate pair is never split:
    if the cut falls between two partners, the partner is appended, so the
    result can hold ``count + 1`` roots. Roots that miss the tolerance are
    kept with flag ``"uncertified"``. With ``kappa == 0`` the only root is
    ``mu``; the remaining slots are returned with flag ``"absent"``.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if not tau > 0:
        raise ValueError("tau must be positive")
    mu_c = complex(mu)
    if kappa == 0:
        out = [CharRoot(mu_c, 0.0, 0, "ok")]
        out += [CharRoot(complex(np.nan, np.nan), math.inf, 0, "absent")] * (count - 1)
        return out
    log_x = _log_w_argument(mu_c, kappa, tau)
    n_br = count + 2
    found: list[CharRoot] = []
    for j in _branch_order(n_br):
        w = _w_seed(j, log_x)
        lam, res = newton_char(mu_c + w / tau, mu_c, kappa, tau, tol)
        if any(abs(lam - r.value) <= 1e-9 * _scale(lam) for r in found):
            continue
        flag = "ok" if res <= tol * _scale(mu_c, lam) else "uncertified"
        found.append(CharRoot(lam, res, j, flag))
    found.sort(key=lambda r: (-r.value.real, -r.value.imag))
    out = found[:count]
    real_data = mu_c.imag == 0
    if real_data and len(found) > count:
        last = out[-1]
        if abs(last.value.imag) > 1e-12 * _scale(last.value):
            partner = last.value.conjugate()
            has = any(abs(r.value - partner) <= 1e-9 * _scale(partner) for r in out)
            if not has:
                nxt = found[count]
                if abs(nxt.value - partner) <= 1e-6 * _scale(partner):
                    out.append(nxt)
    return out


def rightmost_root(mu, kappa, tau, tol=DEFAULT_TOL) -> CharRoot:
    return rightmost_roots(mu, kappa, tau, 1, tol)[0]


def spectral_abscissa(sys, tol: float = DEFAULT_TOL) -> Abscissa:
    """sup Re of the characteristic roots of a modal system.

    Exact for scalar delay (max over modes of the rightmost root). For a
    matrix delay E the value is an upper bound: any root lam with unit
    eigenvector v obeys lam = v*Av + exp(-lam tau) v*Ev, hence
    Re lam - mu_1 <= |E| exp(-tau Re lam), so Re lam is at most the real
    root of x = mu_1 + |E| exp(-tau x).
    """
    mu = sys.eigenvalues
    if sys.has_scalar_delay:
        if sys.kappa == 0:
            k = int(np.argmax(mu))
            return Abscissa(float(mu[k]), True, k)
        best = -math.inf
        best_k = 0
        for k, m in enumerate(mu):
            r = rightmost_root(m, sys.kappa, sys.tau, tol)
            if not r.ok:
                raise RootError(
                    f"rightmost root of mode {k} not certified", r.residual, r.value
                )
            if r.value.real > best:
                best, best_k = r.value.real, k
        return Abscissa(float(best), True, best_k)
    rho = sys.delay_norm()
    mu1 = float(np.max(mu))
    if rho == 0:
        return Abscissa(mu1, True, int(np.argmax(mu)))
    r = rightmost_root(mu1, rho, sys.tau, tol)
    return Abscissa(float(r.value.real), False, int(np.argmax(mu)))


# --------------------------------------------------------------------------
# Preimage of eta under z -> z - kappa exp(-z tau)
# --------------------------------------------------------------------------


def branch_seed(eta: complex, kappa: float, tau: float, j: int):
    """Curve-intersection seed in the strip labelled ``j``.

    With a = kappa tau exp(-eta_1 tau) the equation z - kappa exp(-z tau) = eta
    becomes a^{-1} xi_1 e^{xi_1} = cos(xi_2 - eta_2 tau),
    a^{-1} xi_2 e^{xi_1} = -sin(xi_2 - eta_2 tau) under
    z = (xi_1/tau + eta_1) + i(eta_2 - xi_2/tau). The returned (xi_1, xi_2)
    is the intersection of xi_1^2 + xi_2^2 = a^2 e^{-2 xi_1} with
    xi_1 sin(s) = -xi_2 cos(s), s = xi_2 - eta_2 tau, inside
    s in (j pi, (j + 1/2) pi), xi_1 < 0, xi_2 > 0.

    The sign conditions single out odd ``j`` for kappa > 0 and even ``j``
    for kappa < 0; other strips, and strips that the curve does not reach,
    raise :class:`AdvanceBranch`.
    """
    if kappa == 0:
        raise ValueError("no delay branch: kappa = 0 leaves z = eta")
    if j < 0:
        raise ValueError("strip index must be non-negative")
    eta = complex(eta)
    e1, e2 = eta.real, eta.imag
    a = kappa * tau * math.exp(-e1 * tau)
    if (j % 2 == 1) != (kappa > 0):
        raise AdvanceBranch(f"strip {j} has the wrong parity for sign(kappa)")
    s_lo, s_hi = j * math.pi, (j + 0.5) * math.pi
    x_lo = max(s_lo + e2 * tau, 0.0)
    x_hi = s_hi + e2 * tau
    if x_hi <= x_lo:
        raise AdvanceBranch(f"strip {j} lies in xi_2 <= 0")
    log_a = math.log(abs(a))

    def xi1_of(x2):
        return -x2 / math.tan(x2 - e2 * tau)

    def h(x2):
        x1 = xi1_of(x2)
        return 0.5 * math.log(x1 * x1 + x2 * x2) - log_a + x1

    right = x_hi - 1e-14 * max(1.0, abs(x_hi))
    if h(right) <= 0:
        raise AdvanceBranch(f"curve does not reach strip {j}")
    width = x_hi - x_lo
    left = None
    for frac in (1e-3, 1e-6, 1e-9, 1e-12):
        cand = x_lo + frac * width
        if cand > x_lo and h(cand) < 0:
            left = cand
            break
    if left is None:
        raise AdvanceBranch(f"no sign change of the curve equation in strip {j}")
    x2 = optimize.brentq(h, left, right, xtol=1e-15, rtol=1e-15, maxiter=200)
    return xi1_of(x2), x2


def seed_to_z(xi1: float, xi2: float, eta: complex, tau: float) -> complex:
    eta = complex(eta)
    return complex(xi1 / tau + eta.real, eta.imag - xi2 / tau)


def solve_preimage(q: PreimageQuery, method: str = "auto") -> complex:
    """A z with z - kappa exp(-z tau) = eta, certified by substitution.

    ``method`` is ``"lambert"`` (Lambert W seeds over up to 64 branch
    indices), ``"curve"`` (curve-intersection seeds over strips) or
    ``"auto"`` (the first, then the second as fallback). Any certified
    solution is accepted; the residual test is relative to
    max(1, |eta|, |z|). Raises :class:`RootError` carrying the best
    residual when nothing certifies.
    """
    eta = complex(q.eta)
    kappa, tau, tol = q.kappa, q.tau, q.tol
    if kappa == 0:
        return eta
    best_res, best = math.inf, None

    def try_seed(z0):
        nonlocal best_res, best
        z, res = newton_char(z0, eta, kappa, tau, tol)
        if res < best_res:
            best_res, best = res, z
        return z if res <= tol * _scale(eta, z) else None

    if method in ("auto", "lambert"):
        log_x = _log_w_argument(eta, kappa, tau)
        tried = 0
        for j in _branch_order(MAX_BRANCHES):
            if tried >= MAX_BRANCHES:
                break
            tried += 1
            try:
                w = _w_seed(j, log_x)
            except RootError:
                continue
            z = try_seed(eta + w / tau)
            if z is not None:
                return z
    if method in ("auto", "curve"):
        # the curve only reaches strips whose right end exceeds |a|
        a = abs(kappa * tau * math.exp(-eta.real * tau))
        j0 = max(0, int((a - eta.imag * tau) / math.pi) - 1)
        for j in range(j0, j0 + 2 * MAX_BRANCHES):
            try:
                xi1, xi2 = branch_seed(eta, kappa, tau, j)
            except AdvanceBranch:
                continue
            z = try_seed(seed_to_z(xi1, xi2, eta, tau))
            if z is not None:
                return z
    if method not in ("auto", "lambert", "curve"):
        raise ValueError(f"unknown method {method!r}")
    raise RootError(
        f"no certified preimage of {eta!r} (best residual {best_res:.3e})",
        best_res,
        best,
    )


def preimage_residual(z, eta, kappa, tau) -> float:
    return float(abs(z - kappa * np.exp(-z * tau) - eta))
