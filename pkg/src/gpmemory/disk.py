"""Dirichlet eigenbasis of the Laplacian on a disk of radius R.

Eigenfunctions are J_m(mu r / R) exp(i m alpha) / (sqrt(pi) R J_m'(mu)), with
mu the n-th positive zero of J_m and eigenvalue (mu / R)^2. Only m >= 0 is
stored; the -m modes are complex conjugates of the +m ones, so a real field
is carried by its m >= 0 coefficients with weight 2 on every m >= 1 term.
"""
from __future__ import annotations

import csv
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import jn_zeros, jv, jvp

from .errors import DomainError, RangeError, ResolutionError

M_MAX = 50
N_MAX = 200
X_MAX = 1e4

_zero_tables: dict[int, np.ndarray] = {}
_zero_lock = threading.Lock()


@dataclass(frozen=True)
class DiskGeometry:
    R: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.R) and self.R > 0):
            raise DomainError(f"radius must be positive, got {self.R}")


@dataclass(frozen=True)
class Mode:
    m: int
    n: int
    mu: float
    lambda_sq: float

    @classmethod
    def of(cls, m: int, n: int, geom: DiskGeometry) -> "Mode":
        mu = bessel_zero(m, n)
        return cls(m, n, mu, (mu / geom.R) ** 2)


def mode_set(m_max: int, n_max: int, geom: DiskGeometry) -> list[Mode]:
    """All modes with 0 <= m <= m_max and 1 <= n <= n_max, ordered by (m, n)."""
    return [Mode.of(m, n, geom) for m in range(m_max + 1) for n in range(1, n_max + 1)]


def bessel_j(m: int, x):
    """J_m(x) for integer 0 <= m <= 50 and 0 <= x <= 1e4."""
    if not (0 <= m <= M_MAX) or int(m) != m:
        raise DomainError(f"order m={m} outside supported range [0, {M_MAX}]")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(xa > X_MAX):
        raise DomainError(f"argument outside supported range [0, {X_MAX:g}]")
    out = jv(m, xa)
    return float(out) if out.ndim == 0 else out


def _zero_table(m: int) -> np.ndarray:
    table = _zero_tables.get(m)
    if table is not None:
        return table
    with _zero_lock:
        table = _zero_tables.get(m)
        if table is None:
            z = jn_zeros(m, N_MAX)
            # one Newton pass; J_m' = -J_{m+1} at a zero of J_m
            z = z - jv(m, z) / jvp(m, z)
            z.setflags(write=False)
            _zero_tables[m] = table = z
    return table


def bessel_zero(m: int, n: int) -> float:
    """n-th positive zero of J_m."""
    if not (0 <= m <= M_MAX) or int(m) != m:
        raise RangeError(f"order m={m} outside supported range [0, {M_MAX}]")
    if not (1 <= n <= N_MAX) or int(n) != n:
        raise RangeError(f"index n={n} outside supported range [1, {N_MAX}]")
    return float(_zero_table(int(m))[int(n) - 1])


def _norm_const(mode: Mode, geom: DiskGeometry) -> float:
    return np.sqrt(np.pi) * geom.R * float(jvp(mode.m, mode.mu))


def eigenfunction_value(mode: Mode, geom: DiskGeometry, r, alpha):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > geom.R * (1 + 1e-14)):
        raise DomainError(f"r must lie in [0, {geom.R}]")
    alpha = np.asarray(alpha, dtype=float)
    out = jv(mode.m, mode.mu * r / geom.R) * np.exp(1j * mode.m * alpha) / _norm_const(mode, geom)
    return complex(out) if out.ndim == 0 else out


def boundary_normal_derivative(mode: Mode, geom: DiskGeometry, alpha):
    """Outward normal derivative at r = R; the J_m'(mu) factors cancel."""
    radial = (mode.mu / geom.R) * float(jvp(mode.m, mode.mu))
    ratio = radial / (_norm_const(mode, geom) * mode.mu / (np.sqrt(np.pi) * geom.R**2))
    assert abs(ratio - 1.0) < 1e-12, "J_m' normalization failed to cancel"
    out = mode.mu / (np.sqrt(np.pi) * geom.R**2) * np.exp(1j * mode.m * np.asarray(alpha, dtype=float))
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class PolarField:
    """Samples on the tensor grid r (strictly increasing, in (0, R]) x alpha (uniform)."""

    values: np.ndarray
    r: np.ndarray
    alpha: np.ndarray
    r_weights: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (len(self.r), len(self.alpha)):
            raise DomainError(f"values shape {v.shape} does not match grid ({len(self.r)}, {len(self.alpha)})")
        if np.any(np.diff(self.r) <= 0):
            raise DomainError("r grid must be strictly increasing")
        na = len(self.alpha)
        if not np.allclose(self.alpha, 2 * np.pi * np.arange(na) / na + self.alpha[0], atol=1e-12):
            raise DomainError("alpha grid must be uniform and periodic")
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    def with_values(self, values) -> "PolarField":
        return PolarField(values, self.r, self.alpha, self.r_weights)

    @classmethod
    def sample(cls, func, grid: "PolarField") -> "PolarField":
        rr, aa = np.meshgrid(grid.r, grid.alpha, indexing="ij")
        return grid.with_values(np.asarray(func(rr, aa)))


def polar_grid(geom: DiskGeometry, n_alpha: int = 64, panels: int = 64, order: int = 16) -> PolarField:
    """Zero field on composite Gauss-Legendre radial nodes and a uniform angular grid."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, geom.R, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    r = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wr = (half[:, None] * w[None, :]).ravel()
    alpha = 2 * np.pi * np.arange(n_alpha) / n_alpha
    return PolarField(np.zeros((r.size, n_alpha)), r, alpha, wr)


def _radial_weights(field: PolarField) -> np.ndarray:
    if field.r_weights is not None:
        return np.asarray(field.r_weights)
    r = field.r
    w = np.zeros_like(r)
    w[:-1] += np.diff(r) / 2
    w[1:] += np.diff(r) / 2
    return w


def check_resolution(field: PolarField, modes: list[Mode]) -> None:
    na, nr = len(field.alpha), len(field.r)
    worst = None
    for mode in modes:
        need_a = max(8, 8 * mode.m)
        need_r = int(np.ceil(4 * mode.mu / (2 * np.pi))) + 4
        deficit = max(need_a / na, need_r / nr)
        if deficit > 1 and (worst is None or deficit > worst[0]):
            worst = (deficit, mode, need_a, need_r)
    if worst is not None:
        _, mode, need_a, need_r = worst
        raise ResolutionError(
            f"grid ({nr} radial x {na} angular) under-resolves mode (m={mode.m}, n={mode.n}); "
            f"needs >= {need_r} radial and >= {need_a} angular points",
            mode=mode,
        )


def project(field: PolarField, modes: list[Mode], geom: DiskGeometry) -> np.ndarray:
    """Coefficients <field, phi> with the second argument conjugated."""
    check_resolution(field, modes)
    na = len(field.alpha)
    # angular Fourier coefficient (2 pi / na) sum_k f e^{-i m alpha_k}
    spectrum = np.fft.fft(field.values, axis=1) * (2 * np.pi / na)
    wr = _radial_weights(field) * field.r
    out = np.empty(len(modes), dtype=complex)
    for i, mode in enumerate(modes):
        fm = spectrum[:, mode.m] * np.exp(-1j * mode.m * field.alpha[0])
        radial = jv(mode.m, mode.mu * field.r / geom.R)
        out[i] = np.sum(wr * fm * radial) / _norm_const(mode, geom)
    return out


def reconstruct(coeffs, modes: list[Mode], geom: DiskGeometry, grid: PolarField) -> PolarField:
    """Real field sum over m of c phi, with the -m partners supplied by conjugation."""
    rr, aa = np.meshgrid(grid.r, grid.alpha, indexing="ij")
    out = np.zeros(rr.shape)
    for c, mode in zip(coeffs, modes):
        term = (c * eigenfunction_value(mode, geom, rr, aa)).real
        out += term if mode.m == 0 else 2 * term
    return grid.with_values(out)


def coefficient_norm(coeffs, modes: list[Mode]) -> float:
    """L2 norm of the real field carried by m >= 0 coefficients."""
    w = np.array([1.0 if mode.m == 0 else 2.0 for mode in modes])
    return float(np.sqrt(np.sum(w * np.abs(np.asarray(coeffs)) ** 2)))


def field_norm(field: PolarField) -> float:
    """L2 norm of a sampled field by quadrature."""
    wr = _radial_weights(field) * field.r
    ang = np.sum(np.abs(field.values) ** 2, axis=1) * (2 * np.pi / len(field.alpha))
    return float(np.sqrt(np.sum(wr * ang)))


def write_mode_table(modes: list[Mode], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "n", "mu", "lambda_sq"])
        for mode in modes:
            w.writerow([mode.m, mode.n, repr(mode.mu), repr(mode.lambda_sq)])
