"""Memory kernels K(t) and their Laplace transforms.

Three kernel variants are supported: finite sums of decaying exponentials,
positive constants (the wave-equation limit) and uniformly tabulated
samples. Only the first two have rational transforms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.interpolate import CubicSpline

from .errors import DomainError, PoleError, RangeError, UnsupportedKernelError

# relative tolerance for cancelling common real roots of num/den
COPRIME_RTOL = 1e-9


class MemoryKernel:
    """Common interface; see the concrete variants below."""

    def __call__(self, t):
        return eval_kernel(self, t)

    @property
    def mu(self) -> float:
        """K(0)."""
        return float(eval_kernel(self, 0.0))


@dataclass(frozen=True)
class ExpSumKernel(MemoryKernel):
    """K(t) = sum_j c_j exp(-gamma_j t) with c_j, gamma_j > 0 and distinct gamma_j."""

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        terms = tuple((float(c), float(g)) for c, g in self.terms)
        if not terms:
            raise DomainError("ExpSum kernel needs at least one term")
        for c, g in terms:
            if not (np.isfinite(c) and np.isfinite(g)):
                raise DomainError(f"non-finite term {(c, g)}")
            if c <= 0:
                raise DomainError(f"amplitude must be positive, got {c}")
            if g <= 0:
                raise DomainError(f"decay rate must be positive, got {g}")
        gammas = [g for _, g in terms]
        if len(set(gammas)) != len(gammas):
            raise DomainError(f"decay rates must be distinct, got {gammas}")
        object.__setattr__(self, "terms", terms)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    @property
    def rates(self) -> np.ndarray:
        return np.array([g for _, g in self.terms])

    def __len__(self):
        return len(self.terms)


@dataclass(frozen=True)
class ConstantKernel(MemoryKernel):
    C: float

    def __post_init__(self):
        C = float(self.C)
        if not (np.isfinite(C) and C > 0):
            raise DomainError(f"constant kernel needs C > 0, got {self.C}")
        object.__setattr__(self, "C", C)


@dataclass(frozen=True, eq=False)
class TabulatedKernel(MemoryKernel):
    """Samples K(k*step), k = 0..len-1, interpolated by a cubic spline."""

    samples: np.ndarray
    step: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size < 4:
            raise DomainError("tabulated kernel needs a 1-D array of at least 4 samples")
        if not np.all(np.isfinite(s)):
            raise DomainError("tabulated kernel contains non-finite samples")
        if self.step <= 0:
            raise DomainError(f"step must be positive, got {self.step}")
        if s[0] <= 0:
            raise DomainError(f"K(0) must be positive, got {s[0]}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "step", float(self.step))

    @property
    def t_max(self) -> float:
        return self.step * (self.samples.size - 1)

    @cached_property
    def _spline(self):
        t = self.step * np.arange(self.samples.size)
        return CubicSpline(t, self.samples)

    @classmethod
    def from_function(cls, func, t_max: float, step: float) -> "TabulatedKernel":
        n = int(np.ceil(t_max / step - 1e-12)) + 1
        return cls(np.asarray([func(k * step) for k in range(n)], dtype=float), step)


def eval_kernel(kernel: MemoryKernel, t):
    """K(t) for scalar or array t >= 0."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("kernel is only defined for t >= 0")
    if isinstance(kernel, ExpSumKernel):
        out = np.exp(-np.multiply.outer(t_arr, kernel.rates)) @ kernel.amplitudes
    elif isinstance(kernel, ConstantKernel):
        out = np.full(t_arr.shape, kernel.C)
    elif isinstance(kernel, TabulatedKernel):
        # allow one ulp-scale overshoot at the right end
        if np.any(t_arr > kernel.t_max * (1 + 1e-12)):
            raise RangeError(f"t beyond tabulated range [0, {kernel.t_max}]")
        out = kernel._spline(np.minimum(t_arr, kernel.t_max))
    else:
        raise UnsupportedKernelError(type(kernel).__name__)
    return float(out) if np.ndim(out) == 0 else out


def _horner_scale(coeffs, x):
    return np.sum(np.abs(coeffs) * np.abs(x) ** np.arange(len(coeffs)))


@dataclass(frozen=True, eq=False)
class RationalFunction:
    """num(x)/den(x); coefficient arrays are in ascending degree."""

    num: np.ndarray
    den: np.ndarray
    cancelled: tuple = field(default=(), compare=False)

    def __post_init__(self):
        num = P.polytrim(np.asarray(self.num, dtype=float))
        den = P.polytrim(np.asarray(self.den, dtype=float))
        if not np.any(den):
            raise DomainError("denominator is identically zero")
        num, den, cancelled = _cancel_real_roots(num, den)
        for a in (num, den):
            a.setflags(write=False)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "cancelled", tuple(cancelled))

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        d = P.polyval(x, self.den)
        if np.any(d == 0):
            bad = x[d == 0] if x.ndim else x
            raise PoleError(complex(np.ravel(bad)[0]))
        out = P.polyval(x, self.num) / d
        return complex(out) if out.ndim == 0 else out

    def poles(self) -> np.ndarray:
        return P.polyroots(self.den) if len(self.den) > 1 else np.array([], dtype=complex)

    def zeros(self) -> np.ndarray:
        return P.polyroots(self.num) if len(self.num) > 1 else np.array([], dtype=complex)

    def __repr__(self):
        return f"RationalFunction(num={self.num.tolist()}, den={self.den.tolist()})"


def _cancel_real_roots(num, den):
    cancelled = []
    while len(num) > 1 and len(den) > 1:
        hit = None
        for r in P.polyroots(den):
            if abs(r.imag) > COPRIME_RTOL * max(1.0, abs(r)):
                continue
            r = r.real
            if abs(P.polyval(r, num)) <= COPRIME_RTOL * _horner_scale(num, r):
                hit = r
                break
        if hit is None:
            break
        num = P.polytrim(P.polydiv(num, [-hit, 1.0])[0])
        den = P.polytrim(P.polydiv(den, [-hit, 1.0])[0])
        cancelled.append(hit)
    return num, den, cancelled


def laplace_transform(kernel: MemoryKernel) -> RationalFunction:
    """Exact transform over the common denominator prod(x + gamma_j)."""
    if isinstance(kernel, ExpSumKernel):
        den = P.polyfromroots(-kernel.rates)
        num = np.zeros(len(kernel))
        for j, (c, g) in enumerate(kernel.terms):
            others = np.delete(kernel.rates, j)
            num = P.polyadd(num, c * P.polyfromroots(-others))
        return RationalFunction(num, den)
    if isinstance(kernel, ConstantKernel):
        return RationalFunction([kernel.C], [0.0, 1.0])
    raise UnsupportedKernelError(
        f"{type(kernel).__name__} has no rational transform; use the time-domain solver"
    )


def eval_khat(kernel: MemoryKernel, lam: complex) -> complex:
    lam = complex(lam)
    if isinstance(kernel, ExpSumKernel):
        for g in kernel.rates:
            if lam == -g:
                raise PoleError(lam)
        return complex(np.sum(kernel.amplitudes / (lam + kernel.rates)))
    if isinstance(kernel, ConstantKernel):
        if lam == 0:
            raise PoleError(0j)
        return kernel.C / lam
    raise UnsupportedKernelError(type(kernel).__name__)


def khat_zeros(kernel: MemoryKernel) -> list[complex]:
    """All zeros of K-hat, Newton-polished, sorted by decreasing real part."""
    if isinstance(kernel, ConstantKernel):
        return []
    if not isinstance(kernel, ExpSumKernel):
        raise UnsupportedKernelError(type(kernel).__name__)
    rf = laplace_transform(kernel)
    c, g = kernel.amplitudes, kernel.rates
    out = []
    for z in rf.zeros():
        for _ in range(50):
            d = z + g
            f = np.sum(c / d)
            fp = -np.sum(c / d**2)
            step = f / fp
            z = z - step
            if abs(step) <= 1e-16 * max(1.0, abs(z)):
                break
        if abs(z.imag) <= 1e-10 * max(1.0, abs(z)):
            z = complex(z.real, 0.0)
        scale = np.sum(np.abs(c / (z + g)))
        if abs(np.sum(c / (z + g))) > 1e-10 * scale:
            raise ArithmeticError(f"K-hat zero {z} failed to polish")
        out.append(complex(z))
    out.sort(key=lambda z: (-z.real, z.imag))
    return out


def kernel_from_spec(spec: dict) -> MemoryKernel:
    """Build a kernel from a config block such as {"type": "expsum", "terms": [[c, g], ...]}."""
    kind = spec.get("type")
    if kind == "expsum":
        return ExpSumKernel(tuple(tuple(t) for t in spec["terms"]))
    if kind == "constant":
        return ConstantKernel(spec["C"])
    if kind == "tabulated":
        return TabulatedKernel(np.asarray(spec["samples"], dtype=float), spec["step"])
    raise DomainError(f"unknown kernel type {kind!r}")
