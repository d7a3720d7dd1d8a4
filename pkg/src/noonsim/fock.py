"""
Truncated Fock-space states of one and two bosonic modes.

Single-mode states are amplitude vectors indexed by photon number, two-mode
states are square amplitude matrices indexed by ``(n1, n2)``. All states are
immutable once built. Coefficients are accumulated in the log domain so that
photon numbers well beyond 170 do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import TruncationError

TAIL_TOL = 1e-12


def log_factorial(n):
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def default_dim(mean: float) -> int:
    """Starting truncation ``ceil(mu + 8 sqrt(mu) + 20)`` for mean photon number ``mu``."""
    mean = max(float(mean), 0.0)
    return int(math.ceil(mean + 8.0 * math.sqrt(mean) + 20.0))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState1:
    """Single-mode pure state. ``amps[n]`` is the amplitude on ``|n>``."""

    amps: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        a = _frozen(self.amps)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("single-mode amplitudes must be a non-empty vector")
        object.__setattr__(self, "amps", a)

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def photon_distribution(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def mean_photon(self) -> float:
        return float(np.dot(np.arange(self.dim), self.photon_distribution()))

    def padded(self, dim: int) -> PureState1:
        if dim < self.dim:
            raise ValueError(f"cannot pad dim {self.dim} down to {dim}")
        out = np.zeros(dim, dtype=complex)
        out[: self.dim] = self.amps
        return PureState1(out, self.tail_mass)


@dataclass(frozen=True, eq=False)
class PureState2:
    """Two-mode pure state. ``amps[n1, n2]`` is the amplitude on ``|n1>|n2>``."""

    amps: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        a = _frozen(self.amps)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.size == 0:
            raise ValueError("two-mode amplitudes must be a non-empty square matrix")
        object.__setattr__(self, "amps", a)

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def photon_distribution(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def mean_photon(self) -> float:
        return mean_photon(self)

    def padded(self, dim: int) -> PureState2:
        if dim < self.dim:
            raise ValueError(f"cannot pad dim {self.dim} down to {dim}")
        out = np.zeros((dim, dim), dtype=complex)
        out[: self.dim, : self.dim] = self.amps
        return PureState2(out, self.tail_mass)

    def trimmed(self, tol: float = TAIL_TOL) -> PureState2:
        """Drop trailing photon numbers in both modes carrying less than ``tol`` in total."""
        p = self.photon_distribution()
        # mass outside [0, d)^2 for every d
        inside = np.cumsum(np.cumsum(p, axis=0), axis=1).diagonal()
        outside = p.sum() - inside
        budget = tol - self.tail_mass
        ok = np.nonzero(outside <= budget)[0]
        d = int(ok[0]) + 1 if ok.size else self.dim
        d = max(d, 1)
        if d >= self.dim:
            return self
        return PureState2(self.amps[:d, :d], self.tail_mass + float(max(outside[d - 1], 0.0)))


@dataclass(frozen=True)
class ModeParams:
    """Source parameters: squeezing ``zeta``, displacement ``lam``, tap transmittance ``tau``, heralded count ``m``."""

    zeta: complex
    lam: complex
    tau: float = 0.9
    m: int = 0

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tap transmittance must lie in [0, 1], got {self.tau}")
        if int(self.m) != self.m or self.m < 0:
            raise ValueError(f"heralded photon count must be a non-negative integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "zeta", complex(self.zeta))
        object.__setattr__(self, "lam", complex(self.lam))


# -- tail bounds -------------------------------------------------------------


def _squeezed_logp(zeta: complex) -> Callable[[np.ndarray], np.ndarray]:
    r = abs(zeta)

    def logp(n):
        n = np.asarray(n)
        k = n // 2
        if r == 0.0:
            return np.where(n == 0, 0.0, -np.inf)
        val = (log_factorial(2 * k) - 2.0 * log_factorial(k) - 2.0 * k * math.log(2.0)
               + 2.0 * k * math.log(math.tanh(r)) - math.log(math.cosh(r)))
        return np.where(n % 2 == 0, val, -np.inf)

    return logp


def _check_tail(tail: float, tol: float | None, what: str):
    if tol is not None and tail >= tol:
        raise TruncationError(f"{what}: truncation too small for tail tolerance {tol:g}", tail)


# -- constructors ------------------------------------------------------------


def make_vacuum(dim: int = 1) -> PureState1:
    return make_fock(0, dim)


def make_fock(n: int, dim: int) -> PureState1:
    if n < 0 or n >= dim:
        raise ValueError(f"photon number {n} outside truncation dim {dim}")
    a = np.zeros(dim, dtype=complex)
    a[n] = 1.0
    return PureState1(a)


def coherent_amplitudes(lam: complex, dim: int) -> np.ndarray:
    """``<n|lam>`` for ``n < dim``, accumulated in the log domain."""
    n = np.arange(dim)
    mag = abs(lam)
    if mag == 0.0:
        out = np.zeros(dim, dtype=complex)
        out[0] = 1.0
        return out
    logmag = -0.5 * mag**2 + n * math.log(mag) - 0.5 * log_factorial(n)
    return np.exp(logmag + 1j * n * np.angle(lam))


def make_coherent(lam: complex, dim: int | None = None, tol: float | None = TAIL_TOL) -> PureState1:
    """Coherent state ``|lam>``; ``dim=None`` picks the smallest adequate truncation."""
    lam = complex(lam)
    mu = abs(lam) ** 2
    if dim is None:
        dim = default_dim(mu)
        while poisson.sf(dim - 1, mu) >= (tol or TAIL_TOL):
            dim += max(4, dim // 8)
    if dim < 1:
        raise ValueError("dim must be >= 1")
    tail = float(poisson.sf(dim - 1, mu)) if mu > 0 else 0.0
    _check_tail(tail, tol, "coherent state")
    return PureState1(coherent_amplitudes(lam, dim), tail)


def squeezed_amplitudes(zeta: complex, dim: int) -> np.ndarray:
    """``<n|zeta>`` with ``<2k|zeta> ~ (-e^{i arg zeta} tanh|zeta|)^k``."""
    r = abs(zeta)
    out = np.zeros(dim, dtype=complex)
    if r == 0.0:
        out[0] = 1.0
        return out
    n = np.arange(0, dim, 2)
    k = n // 2
    logmag = (0.5 * log_factorial(n) - log_factorial(k) - k * math.log(2.0)
              + k * math.log(math.tanh(r)) - 0.5 * math.log(math.cosh(r)))
    phase = np.exp(1j * k * (np.angle(zeta) + math.pi))
    out[n] = np.exp(logmag) * phase
    return out


def squeezed_tail(zeta: complex, dim: int) -> float:
    """Probability of ``n >= dim`` photons in the squeezed vacuum."""
    r = abs(zeta)
    if r == 0.0:
        return 0.0 if dim >= 1 else 1.0
    t2 = math.tanh(r) ** 2
    k0 = (dim + 1) // 2
    # terms decrease with ratio (2k+1)/(2k+2) tanh^2 < tanh^2
    k = np.arange(k0, k0 + 4096)
    logp = _squeezed_logp(zeta)(2 * k)
    p = np.exp(logp)
    total = float(p.sum())
    last = float(p[-1])
    total += last * t2 / (1.0 - t2)
    return total


def make_squeezed_vacuum(zeta: complex, dim: int | None = None, tol: float | None = TAIL_TOL) -> PureState1:
    """Squeezed vacuum ``S(zeta)|0>`` with ``S(zeta) = exp[(zeta* a^2 - zeta a^+2)/2]``."""
    zeta = complex(zeta)
    mu = math.sinh(abs(zeta)) ** 2
    if dim is None:
        dim = default_dim(mu)
        while squeezed_tail(zeta, dim) >= (tol or TAIL_TOL):
            dim += max(4, dim // 8)
    if dim < 1:
        raise ValueError("dim must be >= 1")
    tail = squeezed_tail(zeta, dim)
    _check_tail(tail, tol, "squeezed vacuum")
    return PureState1(squeezed_amplitudes(zeta, dim), tail)


# -- multilinear plumbing ----------------------------------------------------


def _as_amps(s) -> np.ndarray:
    return s.amps if isinstance(s, (PureState1, PureState2)) else np.asarray(s, dtype=complex)


def tensor(a: PureState1, b: PureState1, dim: int | None = None) -> PureState2:
    """Product state ``|a>|b>`` embedded in a square ``dim x dim`` grid."""
    d = max(a.dim, b.dim) if dim is None else dim
    if d < max(a.dim, b.dim):
        raise ValueError(f"dim {d} smaller than factor dims {a.dim}, {b.dim}")
    out = np.zeros((d, d), dtype=complex)
    out[: a.dim, : b.dim] = np.outer(a.amps, b.amps)
    return PureState2(out, a.tail_mass + b.tail_mass)


def photon_distribution(s) -> np.ndarray:
    return np.abs(_as_amps(s)) ** 2


def mean_photon(s) -> float:
    p = photon_distribution(s)
    if p.ndim == 1:
        return float(np.dot(np.arange(p.size), p))
    n = np.arange(p.shape[0])
    return float(np.dot(n, p.sum(axis=1)) + np.dot(n, p.sum(axis=0)))


def _promote(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if a.ndim != b.ndim:
        raise ValueError("cannot compare single-mode and two-mode states")
    if a.shape == b.shape:
        return a, b
    shape = tuple(max(x, y) for x, y in zip(a.shape, b.shape))
    pa = np.zeros(shape, dtype=complex)
    pb = np.zeros(shape, dtype=complex)
    pa[tuple(slice(0, x) for x in a.shape)] = a
    pb[tuple(slice(0, x) for x in b.shape)] = b
    return pa, pb


def inner(a, b) -> complex:
    """``<a|b>``, zero-padding the smaller truncation."""
    x, y = _promote(_as_amps(a), _as_amps(b))
    return complex(np.vdot(x, y))


def normalize(s):
    """Return ``(normalized_state, norm)``."""
    norm = math.sqrt(s.norm2())
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return type(s)(s.amps / norm, s.tail_mass), norm
