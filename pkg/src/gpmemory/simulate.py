"""Time-domain solvers for the modal Volterra equation

    theta' + lambda_sq * (K * theta)(t) = u(t) - (K * b)(t),   theta(0) = xi,

where u is the projected distributed forcing and b the boundary flux
integral of the mode. Three routes are provided and cross-check each other:
an exact augmented linear ODE (exponential sums only), trapezoidal
convolution quadrature (any kernel), and the Laplace-domain residue sum.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P

from ._propagator import LinearPropagator
from .disk import (
    DiskGeometry,
    Mode,
    PolarField,
    boundary_normal_derivative,
    coefficient_norm,
    eigenfunction_value,
    field_norm,
    project,
    reconstruct,
)
from .errors import DegenerateSpectrumError, DomainError, UnsupportedKernelError
from .kernels import ConstantKernel, ExpSumKernel, MemoryKernel, TabulatedKernel, eval_kernel
from .symbols import CharacteristicSymbol, characteristic_roots


@dataclass(frozen=True, eq=False)
class ModalProblem:
    """One mode of the disk problem.

    Forcings are None, a callable of t, or an array sampled on the solver grid.
    """

    lambda_sq: float
    kernel: MemoryKernel
    xi: complex = 1.0
    distributed_forcing: object = None
    boundary_forcing: object = None
    mode: Mode | None = None

    def __post_init__(self):
        if not self.lambda_sq > 0:
            raise DomainError(f"lambda_sq must be positive, got {self.lambda_sq}")
        if not np.isfinite(self.xi):
            raise DomainError("xi must be finite")

    @classmethod
    def for_mode(cls, mode: Mode, kernel: MemoryKernel, **kw) -> "ModalProblem":
        return cls(mode.lambda_sq, kernel, mode=mode, **kw)


@dataclass(frozen=True, eq=False)
class ModalTrajectory:
    times: np.ndarray
    values: np.ndarray
    solver: str
    error_estimate: float | None = None

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0])

    def sup_distance(self, other: "ModalTrajectory", t_max: float | None = None) -> float:
        n = min(len(self.times), len(other.times))
        if not np.allclose(self.times[:n], other.times[:n], rtol=0, atol=1e-12):
            raise DomainError("trajectories live on different grids")
        sel = slice(None, n) if t_max is None else self.times[:n] <= t_max + 1e-12
        return float(np.max(np.abs(self.values[:n][sel] - other.values[:n][sel])))


def time_grid(T: float, h: float) -> np.ndarray:
    if not h > 0:
        raise DomainError(f"step must be positive, got {h}")
    if not T > 0:
        raise DomainError(f"horizon must be positive, got {T}")
    steps = int(np.ceil(T / h - 1e-9))
    return h * np.arange(steps + 1)


def sample_forcing(f, t: np.ndarray) -> np.ndarray:
    if f is None:
        return np.zeros(t.shape)
    if callable(f):
        out = np.asarray([f(s) for s in t])
        return out.astype(complex) if np.iscomplexobj(out) else out.astype(float)
    f = np.asarray(f)
    if f.shape != t.shape:
        raise DomainError(f"sampled forcing has shape {f.shape}, solver grid has {t.shape}")
    return f


def solve_modal_exact(problem: ModalProblem, T: float, h: float) -> ModalTrajectory:
    """Exact matrix-exponential stepping of the augmented system.

    With z_j = int e^{-g_j (t-s)} theta ds and w_j the same transform of the
    boundary flux b, the modal equation becomes linear with constant
    coefficients; piecewise-linear forcings are integrated exactly.
    """
    kernel = problem.kernel
    if not isinstance(kernel, ExpSumKernel):
        raise UnsupportedKernelError("exact solver needs an exponential-sum kernel")
    t = time_grid(T, h)
    c, g = kernel.amplitudes, kernel.rates
    N = len(c)
    A = np.zeros((1 + 2 * N, 1 + 2 * N))
    A[0, 1:1 + N] = -problem.lambda_sq * c
    A[0, 1 + N:] = -c
    A[1:1 + N, 0] = 1.0
    A[1:1 + N, 1:1 + N] = np.diag(-g)
    A[1 + N:, 1 + N:] = np.diag(-g)
    B = np.zeros((1 + 2 * N, 2))
    B[0, 0] = 1.0
    B[1 + N:, 1] = 1.0
    u = sample_forcing(problem.distributed_forcing, t)
    b = sample_forcing(problem.boundary_forcing, t)
    y0 = np.zeros(1 + 2 * N, dtype=complex)
    y0[0] = problem.xi
    y = LinearPropagator(A, B, h).run(y0, np.stack([u, b], axis=1))
    vals = y[:, 0]
    vals[0] = problem.xi
    return ModalTrajectory(t, vals, "exact-augmented", 0.0)


def _kernel_samples(kernel: MemoryKernel, t: np.ndarray) -> np.ndarray:
    if isinstance(kernel, TabulatedKernel) and t[-1] > kernel.t_max * (1 + 1e-12):
        raise DomainError(f"horizon {t[-1]} exceeds tabulated kernel range {kernel.t_max}")
    return np.asarray(eval_kernel(kernel, t), dtype=float)


def _trapezoid_convolution(kk: np.ndarray, f: np.ndarray, h: float) -> np.ndarray:
    """(K * f)(t_n) by the trapezoidal rule on the grid."""
    n = len(f)
    out = np.zeros(n, dtype=np.result_type(f, float))
    for i in range(1, n):
        s = 0.5 * (kk[i] * f[0] + kk[0] * f[i])
        if i > 1:
            s += np.dot(kk[i - 1:0:-1], f[1:i])
        out[i] = h * s
    return out


def solve_modal_quadrature(
    problem: ModalProblem, T: float, h: float, estimate_error: bool = False
) -> ModalTrajectory:
    """Trapezoidal convolution quadrature with Crank-Nicolson stepping (order 2)."""
    t = time_grid(T, h)
    n = len(t)
    kk = _kernel_samples(problem.kernel, t)
    lam = problem.lambda_sq
    F = sample_forcing(problem.distributed_forcing, t).astype(complex)
    if problem.boundary_forcing is not None:
        F = F - _trapezoid_convolution(kk, sample_forcing(problem.boundary_forcing, t), h)
    th = np.zeros(n, dtype=complex)
    th[0] = problem.xi
    g_prev = F[0]  # memory integral vanishes at t = 0
    denom = 1.0 + 0.25 * h * h * lam * kk[0]
    for i in range(n - 1):
        # history part of the memory integral at t_{i+1}, excluding theta_{i+1}
        s = 0.5 * kk[i + 1] * th[0]
        if i >= 1:
            s += np.dot(kk[i:0:-1], th[1:i + 1])
        s *= h
        th[i + 1] = (th[i] + 0.5 * h * (g_prev - lam * s + F[i + 1])) / denom
        g_prev = -lam * (s + 0.5 * h * kk[0] * th[i + 1]) + F[i + 1]
    err = None
    if estimate_error:
        finer = solve_modal_quadrature(_resampled(problem, t, h / 2), t[-1], h / 2)
        err = float(np.max(np.abs(finer.values[::2] - th)) * 4 / 3)
    return ModalTrajectory(t, th, "convolution-quadrature", err)


def _resampled(problem: ModalProblem, t: np.ndarray, h: float) -> ModalProblem:
    """Problem copy whose sampled forcings are linearly refined onto step h."""
    fine = time_grid(t[-1], h)

    def refine(f):
        if f is None or callable(f):
            return f
        f = np.asarray(f)
        return np.interp(fine, t, f.real) + 1j * np.interp(fine, t, f.imag) if np.iscomplexobj(f) else np.interp(fine, t, f)

    return ModalProblem(
        problem.lambda_sq, problem.kernel, problem.xi,
        refine(problem.distributed_forcing), refine(problem.boundary_forcing), problem.mode,
    )


def residue_weights(kernel: MemoryKernel, lambda_sq: float):
    """Characteristic roots and the partial-fraction weights q(root)/p'(root)."""
    if not isinstance(kernel, (ExpSumKernel, ConstantKernel)):
        raise UnsupportedKernelError("residue formula needs a rational transform")
    sym = CharacteristicSymbol.build(kernel, lambda_sq)
    roots = np.array(characteristic_roots(kernel, lambda_sq))
    scale = max(1.0, float(np.max(np.abs(roots))))
    gaps = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(gaps, np.inf)
    if gaps.min() < 1e-6 * scale:
        raise DegenerateSpectrumError(
            f"characteristic roots nearly coincide (gap {gaps.min():.2e}); use a time-domain solver"
        )
    weights = P.polyval(roots, sym.denominator) / P.polyval(roots, P.polyder(sym.polynomial))
    return roots, weights


def residue_solution(kernel: MemoryKernel, lambda_sq: float, xi: complex, t):
    """Unforced modal solution xi * sum_i q(l_i)/p'(l_i) e^{l_i t}."""
    roots, weights = residue_weights(kernel, lambda_sq)
    tt = np.asarray(t, dtype=float)
    out = xi * (np.exp(np.multiply.outer(tt, roots)) @ weights)
    return complex(out) if out.ndim == 0 else out


def boundary_moment(v_samples, alpha, mode: Mode, geom: DiskGeometry, conjugate: bool = False):
    """b(t) = int_0^{2 pi} v(t, a) (mu / (sqrt(pi) R)) e^{i m a} da by the trapezoidal rule.

    This is the boundary flux integral of the mode (dsigma = R da). With
    conjugate=True the angular factor is e^{-i m a}, which matches
    coefficients taken with the conjugated inner product used by `project`.
    """
    v = np.atleast_2d(np.asarray(v_samples))
    alpha = np.asarray(alpha, dtype=float)
    if v.shape[1] != alpha.size:
        raise DomainError(f"trace has {v.shape[1]} angular samples, grid has {alpha.size}")
    na = alpha.size
    if not np.allclose(alpha, alpha[0] + 2 * np.pi * np.arange(na) / na, atol=1e-12):
        raise DomainError("alpha grid must be uniform and periodic")
    flux = boundary_normal_derivative(mode, geom, alpha) * geom.R
    if conjugate:
        flux = np.conj(flux)
    return v @ flux * (2 * np.pi / na)


def default_step(kernel: MemoryKernel, lambda_sq_max: float) -> float:
    return min(0.01, 0.1 / np.sqrt(lambda_sq_max * kernel.mu))


@dataclass(frozen=True, eq=False)
class FieldSnapshot:
    t: float
    field: PolarField
    coefficients: np.ndarray
    norm: float


@dataclass(frozen=True, eq=False)
class DiskSolution:
    modes: list
    times: np.ndarray
    coefficients: np.ndarray  # (n_modes, n_times)
    norms: np.ndarray
    snapshots: list
    solvers: list
    truncation: dict = field(default_factory=dict)

    def export(self, directory, prefix: str = "snapshot") -> list[Path]:
        """One CSV per snapshot (r, alpha, re_theta) plus a JSON manifest."""
        directory = Path(directory)
        paths = []
        for i, snap in enumerate(self.snapshots):
            path = directory / f"{prefix}_{i:03d}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["r", "alpha", "re_theta"])
                f = snap.field
                for a, r in enumerate(f.r):
                    for b, al in enumerate(f.alpha):
                        w.writerow([repr(float(r)), repr(float(al)), repr(float(np.real(f.values[a, b])))])
            paths.append(path)
        manifest = {
            "times": [float(s.t) for s in self.snapshots],
            "norms": [float(s.norm) for s in self.snapshots],
            "solvers": sorted(set(self.solvers)),
            "truncation": self.truncation,
            "files": [p.name for p in paths],
        }
        mpath = directory / f"{prefix}_manifest.json"
        mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        paths.append(mpath)
        return paths


def _project_forcing(u_field, mask, modes, geom, grid):
    times, values = u_field
    times = np.asarray(times, dtype=float)
    values = np.asarray(values)
    if mask is not None:
        values = values * np.asarray(mask)[None]
    coeffs = np.array([project(grid.with_values(v), modes, geom) for v in values])
    return times, coeffs  # (n_t, n_modes)


def simulate_disk(
    geom: DiskGeometry,
    kernel: MemoryKernel,
    xi_field: PolarField,
    u_field=None,
    modes: list[Mode] | None = None,
    T: float = 10.0,
    h: float | None = None,
    mask=None,
    n_snapshots: int = 11,
    workers: int | None = None,
    solver: str = "auto",
) -> DiskSolution:
    """Project, solve every mode independently and reconstruct snapshots.

    `u_field` is a pair (times, values) with values of shape
    (len(times), n_r, n_alpha) on the grid of `xi_field`; the projected forcing
    is linearly interpolated in time. `mask` restricts its spatial support.
    """
    if not modes:
        raise DomainError("no modes requested")
    if h is None:
        h = default_step(kernel, max(md.lambda_sq for md in modes))
    t = time_grid(T, h)
    xi = project(xi_field, modes, geom)
    forcing = None
    if u_field is not None:
        ut, uc = _project_forcing(u_field, mask, modes, geom, xi_field)
        forcing = np.array([np.interp(t, ut, uc[:, i].real) + 1j * np.interp(t, ut, uc[:, i].imag) for i in range(len(modes))])
    if solver == "auto":
        solver = "exact" if isinstance(kernel, ExpSumKernel) else "quadrature"
    solve = {"exact": solve_modal_exact, "quadrature": solve_modal_quadrature}[solver]

    def one(i):
        prob = ModalProblem.for_mode(
            modes[i], kernel, xi=xi[i], distributed_forcing=None if forcing is None else forcing[i]
        )
        if xi[i] == 0 and forcing is None:
            return ModalTrajectory(t, np.zeros(t.shape, dtype=complex), "trivial", 0.0)
        return solve(prob, T, h)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            trajs = list(ex.map(one, range(len(modes))))
    else:
        trajs = [one(i) for i in range(len(modes))]
    coeffs = np.array([tr.values for tr in trajs])
    w = np.array([1.0 if md.m == 0 else 2.0 for md in modes])
    norms = np.sqrt(np.sum(w[:, None] * np.abs(coeffs) ** 2, axis=0))
    idx = np.unique(np.linspace(0, len(t) - 1, max(n_snapshots, 1)).round().astype(int))
    snaps = []
    for k in idx:
        c = coeffs[:, k]
        snaps.append(FieldSnapshot(float(t[k]), reconstruct(c, modes, geom, xi_field), c, coefficient_norm(c, modes)))
    total = field_norm(xi_field)
    kept = coefficient_norm(xi, modes)
    trunc = {"xi_norm": total, "projected_norm": kept, "tail_l2": float(np.sqrt(max(total**2 - kept**2, 0.0)))}
    return DiskSolution(modes, t, coeffs, norms, snaps, [tr.solver for tr in trajs], trunc)


def trace_on_circle(coefficients, modes: list[Mode], geom: DiskGeometry, radius: float, alpha):
    """Real field on the circle r = radius; coefficients (n_modes, n_t) -> (n_t, n_alpha)."""
    alpha = np.asarray(alpha, dtype=float)
    coefficients = np.asarray(coefficients).reshape(len(modes), -1)
    out = np.zeros((coefficients.shape[1], alpha.size))
    for c, mode in zip(coefficients, modes):
        phi = eigenfunction_value(mode, geom, np.full(alpha.shape, radius), alpha)
        term = np.real(np.multiply.outer(c, phi))
        out += term if mode.m == 0 else 2 * term
    return out
