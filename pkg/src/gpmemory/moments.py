"""Moment problems at characteristic roots and their min-norm diagnostics.

A boundary control reaching rest would need its Laplace transform to take
prescribed values at every characteristic root of every mode. When the roots
of one angular family cluster at a nonzero zero of Khat while the prescribed
values alternate between zero and nonzero, no entire function of exponential
type can interpolate them. On finite truncations this shows up as explosive
growth of the minimum L2(0, T) norm of an interpolating control.

The norm growth is a numerical surrogate for Paley-Wiener membership, which
cannot be checked directly.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import mpmath
import numpy as np

from .disk import DiskGeometry, Mode
from .errors import ConvergenceError, DomainError, NoTargetError
from .kernels import ConstantKernel, MemoryKernel, khat_zeros
from .symbols import characteristic_roots, root_sequence

PW_NOTE = (
    "Paley-Wiener membership is not checked directly; the verdict is based on "
    "growth of the minimum-norm interpolating control over nested constraint sets."
)


def moment_rhs(mode: Mode, xi_nm: complex, lam: complex, geom: DiskGeometry) -> complex:
    """Value -mu xi / (2 pi R^2 lam) the control transform must take at a root lam."""
    lam = complex(lam)
    if lam == 0:
        raise DomainError("moment constraints are only imposed at nonzero roots")
    return -mode.mu * complex(xi_nm) / (2 * np.pi * geom.R**2 * lam)


def lemma1_scenario(n_max: int, m: int = 1) -> dict[tuple[int, int], complex]:
    """Initial coefficients vanishing on odd radial indices and equal to 1 on even ones."""
    if n_max < 2:
        raise DomainError("n_max must be at least 2")
    return {(m, n): (1.0 if n % 2 == 0 else 0.0) for n in range(1, n_max + 1)}


@dataclass(frozen=True, eq=False)
class MomentSystem:
    points: np.ndarray
    rhs: np.ndarray
    horizon: float
    provenance: tuple

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        rhs = np.asarray(self.rhs, dtype=complex)
        if pts.shape != rhs.shape:
            raise DomainError("points and rhs differ in length")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        if pts.size > 1 and self.min_separation_of(pts) == 0:
            raise DomainError("interpolation points must be pairwise distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "rhs", rhs)

    @staticmethod
    def min_separation_of(pts) -> float:
        if len(pts) < 2:
            return float("inf")
        d = np.abs(pts[:, None] - pts[None, :])
        np.fill_diagonal(d, np.inf)
        return float(d.min())

    @property
    def min_separation(self) -> float:
        return self.min_separation_of(self.points)

    def prefix(self, k: int) -> "MomentSystem":
        return MomentSystem(self.points[:k], self.rhs[:k], self.horizon, self.provenance[:k])

    def __len__(self):
        return self.points.size


def build_moment_system(
    kernel: MemoryKernel,
    m: int,
    xi: dict,
    n_range,
    geom: DiskGeometry,
    T: float,
    selection: str = "auto",
    target: complex | None = None,
) -> MomentSystem:
    """Constraints at one characteristic root per radial index n.

    selection="cluster" tracks the root converging to a zero of Khat;
    "oscillatory" takes the root with the smallest positive imaginary part;
    "auto" clusters whenever Khat has a zero.
    """
    ns = list(n_range)
    if selection == "auto":
        has_zero = not isinstance(kernel, ConstantKernel) and bool(khat_zeros(kernel))
        selection = "cluster" if has_zero else "oscillatory"
    if selection == "cluster":
        seq = root_sequence(kernel, m, ns, geom, target)
        points = [e.root for e in seq.entries]
    elif selection == "oscillatory":
        points = []
        for n in ns:
            upper = [z for z in characteristic_roots(kernel, Mode.of(m, n, geom).lambda_sq) if z.imag > 0]
            if not upper:
                raise NoTargetError(f"mode (m={m}, n={n}) has no oscillatory root")
            points.append(min(upper, key=lambda z: z.imag))
    else:
        raise DomainError(f"unknown selection {selection!r}")
    rhs = [moment_rhs(Mode.of(m, n, geom), xi.get((m, n), 0.0), z, geom) for n, z in zip(ns, points)]
    return MomentSystem(np.array(points), np.array(rhs), T, tuple((m, n) for n in ns))


def gram_matrix(points, T: float) -> np.ndarray:
    """G[j, k] = int_0^T exp(-(l_j + conj l_k) t) dt."""
    pts = np.asarray(points, dtype=complex)
    s = pts[:, None] + np.conj(pts)[None, :]
    x = s * T
    # series branch keeps tiny (even subnormal) exponents finite
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, s)
    return np.where(small, T * (1 - x / 2), -np.expm1(-x) / safe)


@dataclass(frozen=True, eq=False)
class MinNormControl:
    """v(t) = sum_k a_k exp(-conj(l_k) t), the smallest L2(0, T) solution."""

    coefficients: np.ndarray
    norm: float
    condition: float
    singular: bool
    residual: float
    dps: int | None = None  # working decimal digits when solved in extended precision

    def evaluate(self, points, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-np.multiply.outer(t, np.conj(points))) @ self.coefficients


def _solve_double(system: MomentSystem) -> MinNormControl:
    G = gram_matrix(system.points, system.horizon)
    G = (G + G.conj().T) / 2
    w, V = np.linalg.eigh(G)
    wmax = w.max()
    keep = w > 1e-14 * wmax
    singular = not keep.all()
    a = V[:, keep] @ ((V[:, keep].conj().T @ system.rhs) / w[keep])
    norm = float(np.sqrt(max((a.conj() @ G @ a).real, 0.0)))
    cond = float(wmax / w.min()) if w.min() > 0 else float("inf")
    scale = max(float(np.max(np.abs(system.rhs))), 1e-300)
    res = float(np.max(np.abs(G @ a - system.rhs)) / scale)
    return MinNormControl(a, norm, cond, singular, res)


def _solve_mp(system: MomentSystem, dps: int, with_condition: bool = True) -> MinNormControl:
    # private context: the global mpmath precision is shared across threads
    ctx = mpmath.MPContext()
    ctx.dps = dps
    n = len(system)
    T = ctx.mpf(system.horizon)
    pts = [ctx.mpc(complex(z)) for z in system.points]
    G = ctx.matrix(n, n)
    for j in range(n):
        for k in range(n):
            s = pts[j] + ctx.conj(pts[k])
            G[j, k] = T if s == 0 else -ctx.expm1(-s * T) / s
    rhs = ctx.matrix([ctx.mpc(complex(z)) for z in system.rhs])
    a = ctx.lu_solve(G, rhs)
    Ga = G * a
    quad = ctx.fsum(ctx.conj(a[j]) * Ga[j] for j in range(n))
    norm = ctx.sqrt(abs(ctx.re(quad)))
    scale = max(abs(z) for z in system.rhs) or 1.0
    res = max(abs(Ga[j] - rhs[j]) for j in range(n)) / scale
    cond = float("nan")
    if with_condition:
        ev = ctx.eighe(G, eigvals_only=True)
        lo = min(ev)
        cond = float(max(ev) / lo) if lo > 0 else float("inf")
    coeffs = np.array([complex(a[j]) for j in range(n)])
    return MinNormControl(coeffs, float(norm), cond, False, float(res), dps)


def min_norm_control(system: MomentSystem, precision="double", max_dps: int = 4000) -> MinNormControl:
    """Minimum-norm control via the Gram system G a = rhs.

    precision="double" regularizes a numerically singular G (spectral cutoff
    1e-14 * max eigenvalue) and sets the singular flag. "auto" re-solves such
    systems in extended precision, doubling the working digits until the norm
    is stable to 1e-10. An integer forces that many digits.
    """
    if len(system) == 0:
        return MinNormControl(np.zeros(0, dtype=complex), 0.0, 1.0, False, 0.0)
    if not np.any(system.rhs):
        base = _solve_double(system) if precision == "double" else None
        cond = base.condition if base else float("nan")
        return MinNormControl(np.zeros(len(system), dtype=complex), 0.0, cond, False, 0.0)
    if isinstance(precision, int):
        return _solve_mp(system, precision)
    result = _solve_double(system)
    if precision == "double" or not result.singular:
        return result
    if precision != "auto":
        raise DomainError(f"unknown precision {precision!r}")
    dps, prev = 25, None
    while dps < max_dps:
        dps *= 2
        try:
            cur = _solve_mp(system, dps, with_condition=False)
        except ZeroDivisionError:  # still singular at this precision
            prev = None
            continue
        if prev is not None and abs(cur.norm - prev.norm) <= 1e-10 * cur.norm:
            return _solve_mp(system, dps)
        prev = cur
    raise ConvergenceError(f"min-norm solve did not stabilize below {max_dps} digits")


@dataclass(frozen=True)
class CertifyThresholds:
    cluster_eps: float = 0.1
    obstruction_growth: float = 1e3
    bounded_growth: float = 10.0


@dataclass(frozen=True, eq=False)
class CertificationReport:
    counts: list
    norms: list
    conditions: list
    singular: list
    dps: list
    residuals: list
    cluster_diameter: float
    min_separation: float
    growth: float
    monotone: bool
    verdict: str
    thresholds: CertifyThresholds
    horizon: float
    kernel: str
    note: str = PW_NOTE
    points: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["points"] = [[z.real, z.imag] for z in self.points]
        return d

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(self.to_dict()), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["count", "min_norm", "condition", "singular", "dps", "residual"])
            for row in zip(self.counts, self.norms, self.conditions, self.singular, self.dps, self.residuals):
                c, nrm, cond, sing, dps, res = row
                w.writerow([c, repr(float(nrm)), repr(float(cond)), int(sing), "" if dps is None else dps, repr(float(res))])


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    if isinstance(x, (np.floating, np.integer)):
        return _jsonable(x.item())
    return x


def _diameter(pts) -> float:
    if len(pts) < 2:
        return 0.0
    return float(np.max(np.abs(pts[:, None] - pts[None, :])))


def certify(
    kernel: MemoryKernel,
    geom: DiskGeometry,
    T: float,
    n_schedule,
    thresholds: CertifyThresholds = CertifyThresholds(),
    xi: dict | None = None,
    m: int = 1,
    precision="auto",
    workers: int | None = None,
) -> CertificationReport:
    """Classify min-norm growth over nested constraint sets.

    obstructed: the last half of the points clusters within cluster_eps and
    the norm grows monotonically by more than obstruction_growth.
    unobstructed: every control is zero, or the norms stay within
    bounded_growth of each other and the points are cluster_eps-separated.
    Anything else is inconclusive.
    """
    schedule = [int(k) for k in n_schedule]
    if not schedule or any(b <= a for a, b in zip(schedule, schedule[1:])) or schedule[0] < 1:
        raise DomainError(f"schedule must be increasing positive counts, got {schedule}")
    if xi is None:
        xi = lemma1_scenario(max(schedule[-1], 2), m)
    full = build_moment_system(kernel, m, xi, range(1, schedule[-1] + 1), geom, T)

    def one(k):
        return min_norm_control(full.prefix(k), precision=precision)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(one, schedule))
    else:
        results = [one(k) for k in schedule]
    norms = [r.norm for r in results]
    pts = full.points
    diameter = _diameter(pts[len(pts) // 2:])
    separation = full.min_separation
    if norms[0] > 0:
        growth = norms[-1] / norms[0]
    else:
        growth = 1.0 if norms[-1] == 0 else float("inf")
    monotone = all(b >= a * (1 - 1e-9) for a, b in zip(norms, norms[1:]))
    positive = [x for x in norms if x > 0]
    spread = max(positive) / min(positive) if positive else 1.0
    if not positive:
        verdict = "unobstructed"
    elif diameter < thresholds.cluster_eps and monotone and growth > thresholds.obstruction_growth:
        verdict = "obstructed"
    elif spread <= thresholds.bounded_growth and separation >= thresholds.cluster_eps:
        verdict = "unobstructed"
    else:
        verdict = "inconclusive"
    return CertificationReport(
        counts=schedule,
        norms=norms,
        conditions=[r.condition for r in results],
        singular=[r.singular for r in results],
        dps=[r.dps for r in results],
        residuals=[r.residual for r in results],
        cluster_diameter=diameter,
        min_separation=separation,
        growth=growth,
        monotone=monotone,
        verdict=verdict,
        thresholds=thresholds,
        horizon=float(T),
        kernel=repr(kernel),
        points=[complex(z) for z in pts],
    )
