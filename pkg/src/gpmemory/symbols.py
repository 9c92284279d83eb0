"""Characteristic symbol lambda + lambda_sq * Khat(lambda) of a single mode.

Clearing denominators gives the real polynomial
p(lambda) = lambda * den(lambda) + lambda_sq * num(lambda), whose roots are the
modal exponents. As lambda_sq grows one root converges to each nonzero zero
of Khat; `root_sequence` tracks that root along a radial family of modes.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .disk import DiskGeometry, Mode
from .errors import ConvergenceError, DomainError, NoTargetError
from .kernels import MemoryKernel, khat_zeros, laplace_transform


@dataclass(frozen=True, eq=False)
class CharacteristicSymbol:
    kernel: MemoryKernel
    lambda_sq: float
    polynomial: np.ndarray  # ascending, monic
    denominator: np.ndarray  # den(Khat), ascending

    @classmethod
    def build(cls, kernel: MemoryKernel, lambda_sq: float) -> "CharacteristicSymbol":
        if not lambda_sq > 0:
            raise DomainError(f"lambda_sq must be positive, got {lambda_sq}")
        rf = laplace_transform(kernel)
        p = P.polyadd(P.polymulx(rf.den), lambda_sq * rf.num)
        lead = p[-1]
        return cls(kernel, float(lambda_sq), p / lead, rf.den / lead)

    @property
    def degree(self) -> int:
        return len(self.polynomial) - 1

    def residual_scale(self, z) -> float:
        return float(np.max(np.abs(self.polynomial)) * max(1.0, abs(z)) ** self.degree)


def characteristic_polynomial(kernel: MemoryKernel, lambda_sq: float) -> np.ndarray:
    """Monic p(lambda) in ascending coefficient order."""
    return CharacteristicSymbol.build(kernel, lambda_sq).polynomial


def _polish(p, z, iters=30):
    dp = P.polyder(p)
    for _ in range(iters):
        f = P.polyval(z, p)
        fp = P.polyval(z, dp)
        if fp == 0:
            break
        step = f / fp
        z = z - step
        if abs(step) <= 4e-16 * max(1.0, abs(z)):
            break
    return z


def _pair_conjugates(roots, tol):
    real, upper, lower = [], [], []
    for z in roots:
        if abs(z.imag) <= tol * max(1.0, abs(z)):
            real.append(complex(z.real, 0.0))
        elif z.imag > 0:
            upper.append(z)
        else:
            lower.append(z)
    if len(upper) != len(lower):
        raise ConvergenceError("complex roots do not pair into conjugates", residuals=roots)
    out = list(real)
    for z in upper:
        j = int(np.argmin([abs(z - w.conjugate()) for w in lower]))
        w = lower.pop(j)
        z = (z + w.conjugate()) / 2
        out.extend([z, z.conjugate()])
    return out


def characteristic_roots(kernel: MemoryKernel, lambda_sq: float) -> list[complex]:
    """All roots of p, conjugate-closed, sorted by (real part, imaginary part)."""
    sym = CharacteristicSymbol.build(kernel, lambda_sq)
    p = sym.polynomial
    # unit max-norm scaling before the companion matrix
    raw = P.polyroots(p / np.max(np.abs(p)))
    roots = _pair_conjugates([_polish(p, complex(z)) for z in raw], tol=1e-10)
    roots = [_polish(p, z) if z.imag == 0 else z for z in roots]
    res = [abs(P.polyval(z, p)) / sym.residual_scale(z) for z in roots]
    if max(res) > 1e-9:
        raise ConvergenceError(f"root polish did not converge (max scaled residual {max(res):.3e})", residuals=res)
    poles = laplace_transform(kernel).poles()
    for z in roots:
        for pole in poles:
            if abs(z - pole) <= 1e-12 * max(1.0, abs(pole)):
                raise ConvergenceError(f"root {z} coincides with pole {pole}", residuals=res)
    roots = sorted((complex(z) for z in roots), key=lambda z: (z.real, z.imag))
    return roots


def hurwitz_check(roots) -> bool:
    """True iff every root lies in the open left half-plane."""
    return all(complex(z).real < 0 for z in roots)


@dataclass(frozen=True)
class RootEntry:
    n: int
    lambda_sq: float
    root: complex
    distance: float


@dataclass(frozen=True)
class RootSequence:
    m: int
    target: complex
    entries: tuple[RootEntry, ...]

    @property
    def distances(self) -> np.ndarray:
        return np.array([e.distance for e in self.entries])

    @property
    def lambda_sqs(self) -> np.ndarray:
        return np.array([e.lambda_sq for e in self.entries])

    @property
    def roots(self) -> np.ndarray:
        return np.array([e.root for e in self.entries])

    def clustering_slope(self, n_min: int = 1) -> float:
        """Least-squares slope of log distance against log lambda_sq."""
        sel = [e for e in self.entries if e.n >= n_min and e.distance > 0]
        x = np.log([e.lambda_sq for e in sel])
        y = np.log([e.distance for e in sel])
        return float(np.polyfit(x, y, 1)[0])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "lambda_sq", "re_root", "im_root", "dist_to_target"])
            for e in self.entries:
                w.writerow([e.n, repr(e.lambda_sq), repr(e.root.real), repr(e.root.imag), repr(e.distance)])


def nearest_root(roots, target: complex) -> complex:
    # ties go to the smaller |Im|
    return min(roots, key=lambda z: (round(abs(z - target), 14), abs(z.imag)))


def root_sequence(
    kernel: MemoryKernel,
    m: int,
    n_range,
    geom: DiskGeometry,
    target: complex | None = None,
    workers: int | None = None,
) -> RootSequence:
    zeros = khat_zeros(kernel)
    if not zeros:
        raise NoTargetError("Khat has no nonzero zero; the clustering obstruction does not apply")
    if target is None:
        target = zeros[0]
    target = complex(target)
    if min(abs(target - z) for z in zeros) > 1e-8 * max(1.0, abs(target)):
        raise NoTargetError(f"target {target} is not a zero of Khat (zeros: {zeros})")
    ns = list(n_range)
    if not ns:
        raise DomainError("empty n_range")

    def one(n):
        mode = Mode.of(m, n, geom)
        z = nearest_root(characteristic_roots(kernel, mode.lambda_sq), target)
        return RootEntry(n, mode.lambda_sq, z, abs(z - target))

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            entries = list(ex.map(one, ns))
    else:
        entries = [one(n) for n in ns]
    return RootSequence(m, target, tuple(entries))
