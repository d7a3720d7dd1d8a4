"""
Beam splitters, heralded photon subtraction and the two-mode source states.

Beam-splitter convention: ``U = exp[theta (a_i^+ a_j - a_j^+ a_i)]`` with
``theta = arccos(sqrt(tau))``. Within the block of total photon number ``N``
the generator is ``-i theta D S D^*`` where ``S`` is the real tridiagonal
matrix with off-diagonal ``sqrt((k+1)(N-k))`` and ``D = diag(i^k)``. ``S`` has
the exactly known spectrum ``-N, -N+2, ..., N`` (it is ``2 J_x`` of a spin
``N/2``), so each block is exponentiated through its eigenvectors. Unlike a
column recurrence this stays orthogonal to machine precision at large ``N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .errors import NonConvergenceError, TruncationError, ZeroProbabilityError
from .fock import (
    TAIL_TOL,
    ModeParams,
    PureState1,
    PureState2,
    coherent_amplitudes,
    log_factorial,
    make_coherent,
    make_squeezed_vacuum,
    squeezed_tail,
    tensor,
)

# blocks above this size are rebuilt on demand instead of cached
_CACHE_MAX_N = 320


@dataclass(frozen=True, eq=False)
class HeraldOutcome:
    """A normalized conditional state and the probability of the herald that produced it."""

    state: PureState1 | PureState2
    herald_prob: float


def _check_tau(tau: float, name: str = "tau"):
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {tau}")


def _block_eigvecs_uncached(n_tot: int) -> np.ndarray:
    if n_tot == 0:
        return np.ones((1, 1))
    k = np.arange(n_tot)
    off = np.sqrt((k + 1.0) * (n_tot - k))
    # eigenvalues come back ascending, i.e. -N, -N+2, ..., N
    return eigh_tridiagonal(np.zeros(n_tot + 1), off)[1]


_block_eigvecs_cached = lru_cache(maxsize=None)(_block_eigvecs_uncached)


def _block_eigvecs(n_tot: int) -> np.ndarray:
    if n_tot <= _CACHE_MAX_N:
        return _block_eigvecs_cached(n_tot)
    return _block_eigvecs_uncached(n_tot)


def block_unitary(n_tot: int, tau: float, inverse: bool = False) -> np.ndarray:
    """Beam-splitter matrix on the ``n1 + n2 = n_tot`` block, indexed by ``n1``."""
    _check_tau(tau)
    theta = math.acos(math.sqrt(tau)) * (-1.0 if inverse else 1.0)
    vecs = _block_eigvecs(n_tot)
    eigenvalues = np.arange(-n_tot, n_tot + 1, 2)
    d = 1j ** np.arange(n_tot + 1)
    return (d[:, None] * vecs) @ (np.exp(-1j * theta * eigenvalues)[:, None] * (vecs.T * np.conj(d)[None, :]))


def beam_splitter(s: PureState2, tau: float, inverse: bool = False, tol: float | None = None) -> PureState2:
    """Apply the two-mode beam splitter of transmittance ``tau``.

    The input is padded so that every photon-number block it touches fits
    completely in the output grid; the transformation is then exact. With
    ``tol`` set, trailing photon numbers carrying less than ``tol`` are trimmed.
    ``inverse=True`` applies ``U^+`` (generator negated).
    """
    _check_tau(tau)
    if tau == 1.0:
        return s
    amps = s.amps
    # smallest square that holds the support and all its blocks
    rows = np.nonzero(np.any(amps != 0, axis=1))[0]
    cols = np.nonzero(np.any(amps != 0, axis=0))[0]
    if rows.size == 0:
        return s
    n_max = int(rows[-1] + cols[-1])
    dim = max(n_max + 1, s.dim)
    out = np.zeros((dim, dim), dtype=complex)
    theta = math.acos(math.sqrt(tau)) * (-1.0 if inverse else 1.0)
    for n_tot in range(n_max + 1):
        lo = max(0, n_tot - (s.dim - 1))
        hi = min(n_tot, s.dim - 1)
        j = np.arange(lo, hi + 1)
        v = amps[j, n_tot - j]
        if not np.any(v):
            continue
        vecs = _block_eigvecs(n_tot)
        eigenvalues = np.arange(-n_tot, n_tot + 1, 2)
        d = 1j ** np.arange(n_tot + 1)
        coeff = vecs[j].T @ (np.conj(d[j]) * v)
        k = np.arange(n_tot + 1)
        out[k, n_tot - k] = d * (vecs @ (np.exp(-1j * theta * eigenvalues) * coeff))
    result = PureState2(out, s.tail_mass)
    return result.trimmed(tol) if tol is not None else result


# -- photon subtraction ------------------------------------------------------


def _projection_amplitudes(phi: np.ndarray, tau: float, m: int) -> np.ndarray:
    """Unnormalized mode-1 amplitudes after tapping with ``tau`` and finding ``m`` photons in the tap."""
    dim = phi.shape[0]
    if dim <= m:
        return np.zeros(1, dtype=complex)
    n1 = np.arange(dim - m)
    log_binom = 0.5 * (log_factorial(n1 + m) - log_factorial(n1) - log_factorial(m))
    trans = np.power(tau, 0.5 * n1)
    tap = (-math.sqrt(1.0 - tau)) ** m
    return phi[m:] * np.exp(log_binom) * trans * tap


def _herald_prob_from_distribution(p: np.ndarray, tau: float, m: int) -> float:
    """Probability of ``m`` tapped photons given the input photon-number distribution ``p``."""
    n = np.arange(p.shape[0])
    sel = n >= m
    n = n[sel]
    if n.size == 0:
        return 0.0
    if tau == 1.0:
        return float(p.sum()) if m == 0 else 0.0
    if tau == 0.0:
        return float(p[m])
    logw = (log_factorial(n) - log_factorial(m) - log_factorial(n - m)
            + (n - m) * math.log(tau) + m * math.log(1.0 - tau))
    return float(np.dot(p[sel], np.exp(logw)))


def subtract_photons(zeta: complex, tau: float, m: int, dim: int | None = None,
                     tol: float | None = TAIL_TOL) -> HeraldOutcome:
    """Herald ``m`` photons tapped from a squeezed vacuum by a beam splitter of transmittance ``tau``.

    The tap mode starts in vacuum; the state kept is the exact projection of
    the tapped output onto ``|m>`` of the tap mode.

    Args:
        zeta: Complex squeezing parameter.
        tau: Tap transmittance in ``(0, 1]``.
        m: Number of photons detected in the tap.
        dim: Truncation of the squeezed input. ``None`` sizes it so that the
            relative tail of the conditional state stays below ``tol``.
        tol: Tail tolerance, or ``None`` to skip the check.

    Raises:
        ZeroProbabilityError: If the herald cannot occur.
    """
    _check_tau(tau)
    if int(m) != m or m < 0:
        raise ValueError(f"m must be a non-negative integer, got {m}")
    m = int(m)
    if m >= 1 and (tau == 1.0 or zeta == 0):
        raise ZeroProbabilityError(f"herald of {m} photons has zero probability (zeta={zeta}, tau={tau})")
    if dim is None:
        limit = tol or TAIL_TOL
        sq = make_squeezed_vacuum(zeta, None, limit)
        prob = _herald_prob_from_distribution(sq.photon_distribution(), tau, m)
        if prob <= 0.0:
            raise ZeroProbabilityError(f"herald of {m} photons has zero probability")
        d = sq.dim
        while squeezed_tail(zeta, d) >= limit * prob:
            d += max(4, d // 8)
        sq = make_squeezed_vacuum(zeta, d, None)
    else:
        sq = make_squeezed_vacuum(zeta, dim, None)
    amps = _projection_amplitudes(sq.amps, tau, m)
    prob = float(np.sum(np.abs(amps) ** 2))
    if prob <= 0.0:
        raise ZeroProbabilityError(f"herald of {m} photons has zero probability")
    tail = squeezed_tail(zeta, sq.dim) / prob
    if tol is not None and tail >= tol:
        raise TruncationError("subtracted state", tail)
    state = PureState1(amps / math.sqrt(prob), tail)
    if tol is not None:
        state = _trim1(state, tol)
    return HeraldOutcome(state, prob)


def _trim1(s: PureState1, tol: float) -> PureState1:
    p = s.photon_distribution()
    suffix = np.cumsum(p[::-1])[::-1]
    ok = np.nonzero(suffix < tol - s.tail_mass)[0]
    if ok.size == 0:
        return s
    d = max(int(ok[0]), 1)
    return PureState1(s.amps[:d], s.tail_mass + float(suffix[d]) if d < s.dim else s.tail_mass)


def herald_probabilities(zeta: complex, tau: float, m_max: int, tol: float = TAIL_TOL) -> np.ndarray:
    """Probabilities of detecting exactly ``m' = 0..m_max`` photons in the tap."""
    _check_tau(tau)
    sq = make_squeezed_vacuum(zeta, None, tol)
    p = sq.photon_distribution()
    return np.array([_herald_prob_from_distribution(p, tau, k) for k in range(m_max + 1)])


# -- source states -----------------------------------------------------------


def _mix(a: PureState1, b: PureState1, tol: float | None) -> PureState2:
    d = max(a.dim, b.dim)
    return beam_splitter(tensor(a, b, d), 0.5, tol=tol)


def _fixed_dim(s: PureState2, dim: int | None, tol: float | None) -> PureState2:
    if dim is None:
        return s
    if dim >= s.dim:
        return s.padded(dim)
    p = s.photon_distribution()
    lost = float(p.sum() - p[:dim, :dim].sum())
    if tol is not None and lost + s.tail_mass >= tol:
        raise TruncationError(f"two-mode state at dim {dim}", lost + s.tail_mass)
    return PureState2(s.amps[:dim, :dim], s.tail_mass + lost)


def psi_state(zeta: complex, lam: complex, dim: int | None = None, tol: float | None = TAIL_TOL) -> PureState2:
    """Squeezed vacuum in mode 1 and coherent state in mode 2 mixed on a 50/50 beam splitter.

    ``dim`` sets the per-mode truncation of the output; ``None`` keeps every
    photon number needed for the tail tolerance.
    """
    sq = make_squeezed_vacuum(zeta, None if dim is None else dim, None if dim is not None else tol)
    coh = make_coherent(lam, None if dim is None else dim, None if dim is not None else tol)
    return _fixed_dim(_mix(sq, coh, tol if dim is None else None), dim, tol)


def psi_m_state(p: ModeParams, dim: int | None = None, tol: float | None = TAIL_TOL) -> HeraldOutcome:
    """Photon-subtracted squeezed vacuum mixed with a coherent state on a 50/50 beam splitter."""
    if dim is None:
        sub = subtract_photons(p.zeta, p.tau, p.m, None, tol)
        coh = make_coherent(p.lam, None, tol)
        state = _mix(sub.state, coh, tol)
    else:
        sub = subtract_photons(p.zeta, p.tau, p.m, dim + p.m, None)
        coh = make_coherent(p.lam, dim, None)
        state = _fixed_dim(_mix(sub.state.padded(max(sub.state.dim, dim)), coh, None), dim, None)
    return HeraldOutcome(state, sub.herald_prob)


def edge_amplitudes(p: ModeParams, tol: float = TAIL_TOL) -> tuple[np.ndarray, np.ndarray, float]:
    """Amplitudes of ``|Psi_m>`` on ``|N,0>`` and ``|0,N>`` without building the full state.

    Only the first row and column of the 50/50 output are needed for the
    N00N analysis, and those have closed-form matrix elements
    ``<N,0|U|j,N-j> = sqrt(binom(N,j)) 2^(-N/2)`` (times ``(-1)^j`` for ``<0,N|``).

    Returns:
        ``(along_mode1, along_mode2, herald_prob)``.
    """
    sub = subtract_photons(p.zeta, p.tau, p.m, None, tol)
    coh = coherent_amplitudes(p.lam, make_coherent(p.lam, None, tol).dim)
    e1, e2 = balanced_edges(sub.state.amps, coh)
    return e1, e2, sub.herald_prob


def balanced_edges(phi: np.ndarray, coh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Edge amplitudes of the 50/50 output for the product input ``phi (x) coh``."""
    d1, d2 = phi.shape[0], coh.shape[0]
    n_max = d1 + d2 - 2
    e1 = np.zeros(n_max + 1, dtype=complex)
    e2 = np.zeros(n_max + 1, dtype=complex)
    lf = log_factorial(np.arange(n_max + 1))
    for n_tot in range(n_max + 1):
        j = np.arange(max(0, n_tot - d2 + 1), min(n_tot, d1 - 1) + 1)
        w = np.exp(0.5 * (lf[n_tot] - lf[j] - lf[n_tot - j]) - 0.5 * n_tot * math.log(2.0))
        terms = w * phi[j] * coh[n_tot - j]
        e1[n_tot] = terms.sum()
        e2[n_tot] = np.dot(terms, np.where(j % 2 == 0, 1.0, -1.0))
    return e1, e2


# -- entangled coherent states -----------------------------------------------


def ecs_mean_photon(lam_abs: float, sign: int) -> float:
    """Mean photon number of the entangled coherent state of amplitude ``lam_abs``."""
    x = lam_abs**2
    if sign == -1 and x == 0.0:
        return 1.0
    return x / (1.0 + sign * math.exp(-x))


def ecs_state(lam: complex, sign: int = 1, dim: int | None = None, tol: float | None = TAIL_TOL) -> PureState2:
    """Entangled coherent state ``(|lam,0> + sign |0,lam>)`` normalized.

    The normalization uses the overlap ``<lam,0|0,lam> = exp(-|lam|^2)``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if sign == -1 and lam == 0:
        raise ValueError("the odd entangled coherent state is undefined at lam = 0")
    coh = make_coherent(lam, dim, tol)
    d = coh.dim
    amps = np.zeros((d, d), dtype=complex)
    amps[:, 0] += coh.amps
    amps[0, :] += sign * coh.amps
    norm2 = 2.0 * (1.0 + sign * math.exp(-abs(lam) ** 2))
    return PureState2(amps / math.sqrt(norm2), coh.tail_mass)


def ecs_match_mean(target_mean: float, sign: int = 1, phase: complex = 1j) -> complex:
    """Amplitude ``phase * |lam|`` whose entangled coherent state has mean photon ``target_mean``.

    Raises:
        NonConvergenceError: If no bracket contains the target; the message
            reports the bracket tried.
    """
    lo, hi = 0.0, math.sqrt(max(target_mean, 0.0)) + 4.0

    def f(r):
        return ecs_mean_photon(r, sign) - target_mean

    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise NonConvergenceError(
            f"no root in bracket [{lo}, {hi}]: mean photon spans [{flo + target_mean:.6g}, {fhi + target_mean:.6g}]")
    r = brentq(f, lo, hi, xtol=1e-14, rtol=1e-14)
    return phase * r
