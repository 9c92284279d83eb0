"""Single-exponential reduction to a damped wave, and stability of the
one-dimensional wave equation with exponential memory.

Sign conventions for theta_tt - alpha theta_xx -/+ q theta_xx * e^{-gamma t}:
the modal characteristic cubic is s^3 + gamma s^2 + alpha w^2 s + a0 with

    "as_written": a0 = (alpha gamma + q) w^2   (memory term printed with a minus)
    "adopted":    a0 = (alpha gamma - q) w^2   (memory relaxes the elastic term)

Only the adopted convention yields the stability set 0 < q < alpha gamma.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._propagator import LinearPropagator
from .errors import DomainError
from .simulate import ModalTrajectory, sample_forcing, time_grid

CONVENTIONS = ("adopted", "as_written")


@dataclass(frozen=True, eq=False)
class DampedWaveProblem:
    """theta'' + gamma theta' + q omega^2 theta = P(t) for one 1-D mode."""

    q: float
    gamma: float
    omega: float
    theta0: complex = 1.0
    theta1: complex = 0.0
    forcing: object = None
    derivative_order: object = "exact"

    def __post_init__(self):
        if not self.q > 0:
            raise DomainError(f"q must be positive, got {self.q}")
        if self.gamma < 0:
            raise DomainError(f"gamma must be non-negative, got {self.gamma}")
        if not self.omega > 0:
            raise DomainError(f"omega must be positive, got {self.omega}")


def mode_frequency(k: int, length: float = np.pi) -> float:
    return k * np.pi / length


def gp_to_damped_wave(q, gamma, u=None, omega=1.0, theta0=1.0, du=None, times=None) -> DampedWaveProblem:
    """Reduce theta' + q omega^2 (e^{-gamma t} * theta) = u to a damped wave with P = u' + gamma u.

    `u` is None, a callable (derivative from `du` or central differences) or
    an array sampled on `times` (derivative by second-order np.gradient).
    """
    if not (q > 0 and gamma > 0):
        raise DomainError("reduction needs q > 0 and gamma > 0")
    if u is None:
        return DampedWaveProblem(q, gamma, omega, theta0, 0.0, None, "exact")
    if callable(u):
        if du is None:
            order = 2

            def du(t, eps=1e-5):
                if t >= eps:
                    return (u(t + eps) - u(t - eps)) / (2 * eps)
                # one-sided second-order stencil near t = 0
                return (-3 * u(t) + 4 * u(t + eps) - u(t + 2 * eps)) / (2 * eps)
        else:
            order = "exact"

        def P(t):
            return du(t) + gamma * u(t)

        return DampedWaveProblem(q, gamma, omega, theta0, u(0.0), P, order)
    if times is None:
        raise DomainError("sampled u needs its sample times")
    u = np.asarray(u)
    P = np.gradient(u, np.asarray(times, dtype=float), edge_order=2) + gamma * u
    return DampedWaveProblem(q, gamma, omega, theta0, u[0], P, 2)


def simulate_damped_wave(problem: DampedWaveProblem, T: float, h: float) -> ModalTrajectory:
    """Exact 2x2 propagator with piecewise-linear forcing."""
    t = time_grid(T, h)
    A = np.array([[0.0, 1.0], [-problem.q * problem.omega**2, -problem.gamma]])
    B = np.array([[0.0], [1.0]])
    f = sample_forcing(problem.forcing, t)
    y = LinearPropagator(A, B, h).run(np.array([problem.theta0, problem.theta1], dtype=complex), f[:, None])
    return ModalTrajectory(t, y[:, 0], "damped-wave-exact", 0.0)


def memory_wave_cubic(alpha, q, gamma, omega_sq, convention="adopted"):
    """(a2, a1, a0) of s^3 + a2 s^2 + a1 s + a0."""
    if not (alpha > 0 and gamma > 0 and omega_sq > 0):
        raise DomainError("alpha, gamma and omega_sq must be positive")
    sign = _sign(convention)
    return (gamma, alpha * omega_sq, (alpha * gamma + sign * q) * omega_sq)


def _sign(convention):
    if convention == "adopted":
        return -1.0
    if convention == "as_written":
        return 1.0
    raise DomainError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")


def routh_hurwitz_cubic(a2, a1, a0) -> bool:
    """Strict Hurwitz test for s^3 + a2 s^2 + a1 s + a0."""
    return a2 > 0 and a0 > 0 and a2 * a1 > a0


def cubic_roots(a2, a1, a0) -> np.ndarray:
    return np.roots([1.0, a2, a1, a0])


@dataclass(frozen=True)
class StabilityInterval:
    lower: float
    upper: float
    convention: str

    @property
    def strict(self) -> tuple[float, float]:
        return (self.lower, self.upper)

    @property
    def marginal(self) -> tuple[float, float]:
        return (self.lower, self.upper)

    def classify(self, q: float) -> str:
        if self.lower < q < self.upper:
            return "stable"
        if q == self.lower or q == self.upper:
            return "marginal"
        return "unstable"


def stability_interval(alpha: float, gamma: float, convention: str = "adopted") -> StabilityInterval:
    """q-range where the Routh-Hurwitz conditions hold for every omega^2 > 0.

    a0 = w^2 (alpha gamma + sign q) and the Routh margin a2 a1 - a0 = -sign q w^2
    are both linear in q with omega-independent signs, so the set is an
    open interval whose endpoints are marginal.
    """
    if not (alpha > 0 and gamma > 0):
        raise DomainError("alpha and gamma must be positive")
    sign = _sign(convention)
    ag = float(alpha * gamma)
    # margin > 0  <=>  sign * q < 0 ;  a0 > 0  <=>  sign * q > -ag
    lo, hi = (0.0, ag) if sign < 0 else (-ag, 0.0)
    return StabilityInterval(lo, hi, convention)


def stability_map(alpha, gamma, qs, omega_sqs, convention="adopted") -> list[tuple]:
    """Rows (q, omega_sq, max_re_root, verdict) over a grid."""
    interval = stability_interval(alpha, gamma, convention)
    rows = []
    for q in qs:
        for w2 in omega_sqs:
            roots = cubic_roots(*memory_wave_cubic(alpha, q, gamma, w2, convention))
            rows.append((float(q), float(w2), float(np.max(roots.real)), interval.classify(float(q))))
    return rows


def write_stability_map(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q", "omega_sq", "max_re_root", "verdict"])
        for q, w2, re, verdict in rows:
            w.writerow([repr(q), repr(w2), repr(re), verdict])
