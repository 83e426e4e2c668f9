"""Modal truncations of delayed heat equations on (0, 1).

Every model here is diagonal in an orthonormal eigenbasis of the spatial
operator, so the state is the vector of modal coefficients and

    y'(t) = diag(mu) y(t) + E y(t - tau) + B u(t)

with ``E = kappa * I`` unless a full delay matrix is supplied (the
localized interior model uses ``E = a * Gram(omega_1)``).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

BASIS_TAGS = ("dirichlet_sine", "neumann_cosine", "custom")

DEFAULT_N_MODES = 24


class ModelError(ValueError):
    """Invalid model data."""


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of disjoint open subintervals of (0, 1).

    Overlapping or touching pieces are merged on construction; zero-length
    pieces are rejected.
    """

    intervals: tuple[tuple[float, float], ...]

    def __init__(self, intervals: Iterable[Sequence[float]]):
        pieces = []
        for iv in intervals:
            if len(iv) != 2:
                raise ModelError(f"interval {iv!r} must be a (lo, hi) pair")
            lo, hi = float(iv[0]), float(iv[1])
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ModelError(f"interval {iv!r} has non-finite endpoints")
            if not 0.0 <= lo < hi <= 1.0:
                raise ModelError(
                    f"interval ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1"
                )
            pieces.append((lo, hi))
        if not pieces:
            raise ModelError("interval set is empty")
        pieces.sort()
        merged = [pieces[0]]
        for lo, hi in pieces[1:]:
            plo, phi = merged[-1]
            if lo <= phi:
                merged[-1] = (plo, max(phi, hi))
            else:
                merged.append((lo, hi))
        object.__setattr__(self, "intervals", tuple(merged))

    @property
    def length(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    def overlap(self, other: "IntervalSet") -> float:
        """Lebesgue measure of the intersection with ``other``."""
        total = 0.0
        for a, b in self.intervals:
            for c, d in other.intervals:
                total += max(0.0, min(b, d) - max(a, c))
        return total

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def tolist(self) -> list[list[float]]:
        return [[lo, hi] for lo, hi in self.intervals]


@dataclass(frozen=True)
class ModalSystem:
    """Diagonal modal model of a delayed control system.

    Attributes
    ----------
    eigenvalues : (N,) array
        Modal rates mu_k, strictly decreasing.
    control_matrix : (N, m) array
        Modal coefficients of the control operator.
    kappa : float
        Delay coefficient. For a localized delay this is the amplitude ``a``.
    tau : float
        Delay length, > 0.
    basis_tag : str
        One of ``dirichlet_sine``, ``neumann_cosine``, ``custom``.
    unbounded_control : bool
        True for boundary control.
    delay_matrix : (N, N) array or None
        Full delay coupling; ``None`` means ``kappa * I``.
    """

    eigenvalues: np.ndarray
    control_matrix: np.ndarray
    kappa: float
    tau: float
    basis_tag: str = "custom"
    unbounded_control: bool = False
    delay_matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        mu = np.array(self.eigenvalues, dtype=float).reshape(-1)
        b = np.array(self.control_matrix, dtype=float)
        if b.ndim == 1:
            b = b.reshape(-1, 1)
        if mu.size < 1:
            raise ModelError("a modal system needs at least one mode")
        if b.ndim != 2 or b.shape[0] != mu.size:
            raise ModelError(
                f"control matrix must have {mu.size} rows, got shape {b.shape}"
            )
        if not np.all(np.isfinite(mu)) or not np.all(np.isfinite(b)):
            raise ModelError("eigenvalues and control matrix must be finite")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ModelError("tau must be positive")
        if not np.isfinite(self.kappa):
            raise ModelError("kappa must be finite")
        if self.basis_tag not in BASIS_TAGS:
            raise ModelError(f"unknown basis tag {self.basis_tag!r}")
        e = self.delay_matrix
        if e is not None:
            e = np.array(e, dtype=float)
            if e.shape != (mu.size, mu.size) or not np.all(np.isfinite(e)):
                raise ModelError("delay matrix must be a finite N x N array")
            e.setflags(write=False)
        mu.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "eigenvalues", mu)
        object.__setattr__(self, "control_matrix", b)
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "delay_matrix", e)

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    @property
    def n_controls(self) -> int:
        return self.control_matrix.shape[1]

    @property
    def has_scalar_delay(self) -> bool:
        return self.delay_matrix is None

    def delay_operator(self) -> np.ndarray:
        """The N x N delay coupling matrix E."""
        if self.delay_matrix is None:
            return self.kappa * np.eye(self.n_modes)
        return np.array(self.delay_matrix)

    def delay_norm(self) -> float:
        """Spectral norm of the delay coupling (|kappa| for scalar delay)."""
        if self.delay_matrix is None:
            return abs(self.kappa)
        return float(np.linalg.norm(self.delay_matrix, 2))

    def replace(self, **changes) -> "ModalSystem":
        data = dict(
            eigenvalues=self.eigenvalues,
            control_matrix=self.control_matrix,
            kappa=self.kappa,
            tau=self.tau,
            basis_tag=self.basis_tag,
            unbounded_control=self.unbounded_control,
            delay_matrix=self.delay_matrix,
        )
        data.update(changes)
        return ModalSystem(**data)

    def shifted(self, gamma: float) -> "ModalSystem":
        """System satisfied by ``exp(gamma t) y(t)``.

        The rates move by ``gamma`` and the delay coupling picks up
        ``exp(gamma tau)``.
        """
        scale = np.exp(gamma * self.tau)
        e = None if self.delay_matrix is None else self.delay_matrix * scale
        return self.replace(
            eigenvalues=self.eigenvalues + gamma,
            kappa=self.kappa * scale,
            delay_matrix=e,
        )


def sine_gram(n_modes: int, omega: IntervalSet) -> np.ndarray:
    """Gram matrix of chi_omega in the basis sqrt(2) sin(k pi x), k = 1..N.

    Entries come from the closed-form antiderivative, so a full cover of
    (0, 1) gives the identity up to rounding.
    """
    k = np.arange(1, n_modes + 1, dtype=float)
    j = k[:, None]
    kk = k[None, :]
    diff = j - kk
    summ = j + kk
    gram = np.zeros((n_modes, n_modes))
    off = diff != 0
    for lo, hi in omega.intervals:
        # sin((j-k) pi x)/((j-k) pi) - sin((j+k) pi x)/((j+k) pi), j != k
        # x - sin(2 k pi x)/(2 k pi), j == k
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = np.where(
                off,
                (np.sin(diff * np.pi * hi) - np.sin(diff * np.pi * lo))
                / np.where(off, diff * np.pi, 1.0),
                hi - lo,
            )
        cross -= (np.sin(summ * np.pi * hi) - np.sin(summ * np.pi * lo)) / (
            summ * np.pi
        )
        gram += cross
    return 0.5 * (gram + gram.T)


def build_interior_model(
    n_modes: int = DEFAULT_N_MODES,
    omega: IntervalSet | Sequence = ((0.0, 1.0),),
    kappa: float = 0.0,
    tau: float = 1.0,
) -> ModalSystem:
    """Dirichlet heat equation with distributed control on ``omega``.

    Rates are -k^2 pi^2 and the control matrix is the N x N Gram matrix of
    chi_omega, i.e. the control is expanded in the same sine basis.
    """
    if int(n_modes) != n_modes or n_modes < 1:
        raise ModelError("n_modes must be a positive integer")
    if not isinstance(omega, IntervalSet):
        omega = IntervalSet(omega)
    n_modes = int(n_modes)
    mu = -((np.arange(1, n_modes + 1) * np.pi) ** 2)
    return ModalSystem(
        eigenvalues=mu,
        control_matrix=sine_gram(n_modes, omega),
        kappa=kappa,
        tau=tau,
        basis_tag="dirichlet_sine",
        unbounded_control=False,
    )


def build_localized_model(
    n_modes: int,
    omega1: IntervalSet | Sequence,
    omega2: IntervalSet | Sequence,
    a: float,
    tau: float,
) -> ModalSystem:
    """Interior model with the delay acting on ``omega1`` only.

    y_t = y_xx + a chi_{omega1} y(t - tau) + chi_{omega2} u, Dirichlet ends.
    """
    if not isinstance(omega1, IntervalSet):
        omega1 = IntervalSet(omega1)
    base = build_interior_model(n_modes, omega2, kappa=a, tau=tau)
    return base.replace(delay_matrix=a * sine_gram(base.n_modes, omega1))


def build_neumann_boundary_model(
    n_modes: int = DEFAULT_N_MODES,
    alpha_shift: float = 1.0,
    kappa: float = 0.0,
    tau: float = 1.0,
) -> ModalSystem:
    """Heat equation y_t = y_xx - alpha y + kappa y(t - tau) with Neumann
    boundary control y_x(t, 1) = u(t).

    Modes k = 0..N-1 use the cosine basis (1, sqrt(2) cos(k pi x)); the
    input coefficient of mode k is the trace of its eigenfunction at x = 1.
    """
    if not alpha_shift > 0:
        raise ModelError(
            "alpha_shift must be positive: the Neumann map (solving "
            "(d_xx - alpha) f = 0 with f'(0) = 0, f'(1) = g) only exists "
            "for alpha > 0"
        )
    if int(n_modes) != n_modes or n_modes < 1:
        raise ModelError("n_modes must be a positive integer")
    k = np.arange(int(n_modes))
    mu = -((k * np.pi) ** 2) - alpha_shift
    b = np.where(k == 0, 1.0, np.sqrt(2.0) * (-1.0) ** k).reshape(-1, 1)
    return ModalSystem(
        eigenvalues=mu,
        control_matrix=b,
        kappa=kappa,
        tau=tau,
        basis_tag="neumann_cosine",
        unbounded_control=True,
    )


@dataclass(frozen=True)
class AssumptionReport:
    monotone: bool
    min_gap: float
    compact_rate: float
    admissibility: float
    finite: bool
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def admissibility_surrogate(sys: ModalSystem) -> float:
    """sum_k |row_k(B)|^2 / (1 + |mu_k|)."""
    rows = np.sum(sys.control_matrix**2, axis=1)
    return float(np.sum(rows / (1.0 + np.abs(sys.eigenvalues))))


def check_assumptions(sys: ModalSystem, admissibility_bound: float | None = None):
    """Numeric stand-ins for the standing assumptions on (A, B).

    Reports strict monotonicity of the rates, the average gap
    (mu_1 - mu_N)/(N - 1) used as a compactness surrogate, and the
    admissibility sum. Nothing is raised; violations are listed.
    """
    mu = sys.eigenvalues
    violations = []
    gaps = -np.diff(mu)
    monotone = bool(np.all(gaps > 0))
    if not monotone:
        bad = int(np.argmin(gaps)) if gaps.size else 0
        violations.append(
            f"eigenvalues not strictly decreasing at index {bad} "
            f"(mu[{bad}]={mu[bad]:g}, mu[{bad + 1}]={mu[bad + 1]:g})"
        )
    min_gap = float(gaps.min()) if gaps.size else float("inf")
    compact_rate = float((mu[0] - mu[-1]) / (mu.size - 1)) if mu.size > 1 else float("inf")
    if mu.size > 1 and not compact_rate > 0:
        violations.append("rates do not decrease: no compactness surrogate")
    finite = bool(np.all(np.isfinite(sys.control_matrix)))
    if not finite:
        violations.append("control matrix has non-finite entries")
    adm = admissibility_surrogate(sys)
    if admissibility_bound is not None and adm > admissibility_bound:
        violations.append(
            f"admissibility surrogate {adm:.6g} exceeds bound {admissibility_bound:g}"
        )
    return AssumptionReport(
        monotone=monotone,
        min_gap=min_gap,
        compact_rate=compact_rate,
        admissibility=adm,
        finite=finite,
        violations=tuple(violations),
    )


def zero_control_rows(sys: ModalSystem, modes: Iterable[int]) -> ModalSystem:
    """Copy of ``sys`` with the control rows of ``modes`` (0-based) zeroed."""
    b = np.array(sys.control_matrix)
    idx = list(modes)
    if any(i < 0 or i >= sys.n_modes for i in idx):
        warnings.warn("mode index out of range ignored", stacklevel=2)
        idx = [i for i in idx if 0 <= i < sys.n_modes]
    b[idx, :] = 0.0
    return sys.replace(control_matrix=b)
