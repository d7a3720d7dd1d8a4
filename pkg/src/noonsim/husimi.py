"""
Husimi Q-functions of one- and two-mode states.

Two independent routes are provided. The Fock route contracts the state with
coherent-state overlaps ``<alpha|n>`` computed in the log domain and works for
pure states, ensembles and lazily attenuated states. The analytic route
evaluates Gaussian closed forms for the squeezed, photon-subtracted and
beam-split states and serves as an oracle for the Fock route.

Normalization follows ``Q(a1, a2) = <a1, a2| rho |a1, a2> / pi^2``. The scaled
quantities used by the Bell observable are ``pi^2 Q(a1, a2)`` and the
single-mode marginal ``pi * int Q d^2 a2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import convolve2d
from scipy.special import comb, roots_hermite
from scipy.stats import poisson

from .errors import AccuracyWarning, UnsupportedOrderError, ZeroProbabilityError
from .fock import PureState1, PureState2, log_factorial

MAX_ANALYTIC_ORDER = 7


@dataclass(frozen=True)
class PhasePoint:
    """Phase-space argument ``(a1, a2)``; ``a2`` may be omitted for single-mode queries."""

    a1: complex
    a2: complex | None = None

    def __post_init__(self):
        for v in (self.a1, self.a2):
            if v is not None and not np.isfinite(complex(v)):
                raise ValueError("phase-space coordinates must be finite")


@dataclass(frozen=True, eq=False)
class GaussianQ:
    """Gaussian single-mode Q-function ``prefactor * exp(-2 c V^-1 c^T)`` with ``c = (Re, Im)(alpha - center)``."""

    center: complex
    covariance: np.ndarray
    prefactor: float

    def __call__(self, alpha) -> np.ndarray:
        d = np.asarray(alpha, dtype=complex) - self.center
        c = np.stack([d.real, d.imag], axis=-1)
        inv = np.linalg.inv(self.covariance)
        return self.prefactor * np.exp(-2.0 * np.einsum("...i,ij,...j->...", c, inv, c))


def rotation(phi: float) -> np.ndarray:
    return np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])


def squeezing_covariance(zeta: complex) -> np.ndarray:
    """Correlation matrix with eigenvalues ``e^{-2|zeta|}+1`` and ``e^{2|zeta|}+1``, rotated by ``arg(zeta)/2``."""
    r = abs(zeta)
    rot = rotation(np.angle(zeta) / 2.0)
    return rot @ np.diag([math.exp(-2.0 * r) + 1.0, math.exp(2.0 * r) + 1.0]) @ rot.T


def squeezed_coherent_q(lam: complex, zeta: complex) -> GaussianQ:
    return GaussianQ(complex(lam), squeezing_covariance(zeta), 1.0 / (math.pi * math.cosh(abs(zeta))))


def q_analytic_squeezed_coherent(alpha, lam: complex, zeta: complex):
    """Closed-form Q of the displaced squeezed vacuum centred at ``lam``."""
    return squeezed_coherent_q(lam, zeta)(alpha)


# -- Fock route --------------------------------------------------------------


@lru_cache(maxsize=64)
def _log_factorials(dim: int) -> np.ndarray:
    return log_factorial(np.arange(dim))


def coherent_rows(points, dim: int, warn: bool = True, tail_mass: float = 0.0) -> np.ndarray:
    """Matrix ``<alpha_i|n>`` for points ``alpha_i`` and ``n < dim``.

    With ``warn`` set, emits :class:`AccuracyWarning` for points whose coherent
    state mostly lies beyond the truncation.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=complex)).ravel()
    n = np.arange(dim)
    mag = np.abs(pts)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_pow = np.where(n == 0, 0.0, n * np.log(mag))
    logmag = -0.5 * mag**2 + log_pow - 0.5 * _log_factorials(dim)
    rows = np.exp(logmag - 1j * n * np.angle(pts)[:, None])
    if warn and pts.size:
        outside = poisson.sf(dim - 1, np.abs(pts) ** 2)
        bad = outside > 0.5
        if np.any(bad):
            # overlap error is at most sqrt(state tail) * sqrt(coherent tail)
            bound = float(np.sqrt(max(tail_mass, np.finfo(float).eps) * outside[bad].max()))
            warnings.warn(
                f"{int(bad.sum())} phase-space point(s) beyond truncation dim {dim}; "
                f"amplitude error bound {bound:.2e}", AccuracyWarning, stacklevel=3)
    return rows


def _pure_marginal(amps: np.ndarray, pts, mode: int, warn: bool, tail: float) -> np.ndarray:
    rows = coherent_rows(pts, amps.shape[0], warn, tail)
    a = rows @ (amps if mode == 1 else amps.T)
    return np.sum(np.abs(a) ** 2, axis=1)


def _pure_joint(amps: np.ndarray, pts1, pts2, warn: bool, tail: float) -> np.ndarray:
    r1 = coherent_rows(pts1, amps.shape[0], warn, tail)
    r2 = coherent_rows(pts2, amps.shape[0], warn, tail)
    return np.abs(r1 @ amps @ r2.T) ** 2


def scaled_marginal(state, points, mode: int = 1, warn: bool = True) -> np.ndarray:
    """``pi * int Q d^2 a_other`` at each point, via completeness of the Fock basis in the other mode."""
    if mode not in (1, 2):
        raise ValueError("mode must be 1 or 2")
    if hasattr(state, "scaled_marginal"):
        return state.scaled_marginal(points, mode, warn)
    if getattr(state, "stacked_amps", None) is not None:
        stack = state.stacked_amps if mode == 1 else np.swapaxes(state.stacked_amps, 1, 2)
        rows = coherent_rows(points, stack.shape[1], warn, state.tail_mass)
        return np.sum(np.abs(np.einsum("pn,bnm->bpm", rows, stack)) ** 2, axis=(0, 2))
    if hasattr(state, "branches"):
        total = np.zeros(np.size(points))
        for w, s in state.branches:
            total += w * _pure_marginal(s.amps, points, mode, warn, s.tail_mass)
        return total
    return _pure_marginal(state.amps, points, mode, warn, state.tail_mass)


def scaled_joint(state, points1, points2, warn: bool = True) -> np.ndarray:
    """``pi^2 Q(a1_i, a2_j)`` on the outer grid of the two point lists."""
    if hasattr(state, "scaled_joint"):
        return state.scaled_joint(points1, points2, warn)
    if getattr(state, "stacked_amps", None) is not None:
        stack = state.stacked_amps
        r1 = coherent_rows(points1, stack.shape[1], warn, state.tail_mass)
        r2 = coherent_rows(points2, stack.shape[1], warn, state.tail_mass)
        return np.sum(np.abs(np.einsum("pn,bnm,qm->bpq", r1, stack, r2)) ** 2, axis=0)
    if hasattr(state, "branches"):
        total = np.zeros((np.size(points1), np.size(points2)))
        for w, s in state.branches:
            total += w * _pure_joint(s.amps, points1, points2, warn, s.tail_mass)
        return total
    return _pure_joint(state.amps, points1, points2, warn, state.tail_mass)


def q_two_mode(state, p: PhasePoint, warn: bool = True) -> float:
    """Two-mode Q at ``(p.a1, p.a2)`` for a pure state, ensemble or attenuated state."""
    if p.a2 is None:
        raise ValueError("two-mode query needs both coordinates")
    return float(scaled_joint(state, [p.a1], [p.a2], warn)[0, 0]) / math.pi**2


def q_marginal(state, a1: complex, mode: int = 1, warn: bool = True) -> float:
    """Single-mode quantity ``pi * int Q d^2 a_other`` (exact, no quadrature)."""
    return float(scaled_marginal(state, [a1], mode, warn)[0])


def q_single(s: PureState1, alpha) -> np.ndarray:
    """Single-mode Q ``|<alpha|psi>|^2 / pi`` at each point."""
    rows = coherent_rows(alpha, s.dim, warn=False)
    return np.abs(rows @ s.amps) ** 2 / math.pi


# -- analytic route ----------------------------------------------------------


def _series_exp(h: np.ndarray, order: int) -> np.ndarray:
    """Bivariate Taylor coefficients of ``exp(h)`` up to total degree ``order``; ``h[0, 0]`` must be 0."""
    size = order + 1
    mask = np.add.outer(np.arange(size), np.arange(size)) <= order
    out = np.zeros((size, size), dtype=h.dtype)
    out[0, 0] = 1.0
    term = out.copy()
    for n in range(1, order + 1):
        term = convolve2d(term, h)[:size, :size] * mask / n
        out = out + term
    return out


def _mixed_derivatives(h_coeffs: np.ndarray, order: int) -> np.ndarray:
    """``d^k/da d^k/da* exp(h)`` at the origin for ``k = 0..order``, with ``h`` given in ``(x, y)`` coefficients."""
    a = _series_exp(h_coeffs, 2 * order)
    out = np.zeros(order + 1, dtype=h_coeffs.dtype)
    for k in range(order + 1):
        acc = 0.0
        for p in range(k + 1):
            q = k - p
            acc += comb(k, p, exact=True) * math.factorial(2 * p) * math.factorial(2 * q) * a[2 * p, 2 * q]
        out[k] = acc / 4.0**k
    return out


def _quadratic_coeffs(mat: np.ndarray, lin: np.ndarray, order: int) -> np.ndarray:
    """Coefficient grid of ``-w^T mat w - 2 lin^T w`` in ``w = (x, y)``."""
    size = 2 * order + 1
    h = np.zeros((max(size, 3), max(size, 3)))
    h[1, 0] = -2.0 * lin[0]
    h[0, 1] = -2.0 * lin[1]
    h[2, 0] = -mat[0, 0]
    h[0, 2] = -mat[1, 1]
    h[1, 1] = -2.0 * mat[0, 1]
    return h[:size, :size] if size >= 3 else h


def _tap_quadratic_form(zeta: complex, tau: float) -> np.ndarray:
    """Matrix ``A`` with ``Q(a1'; zeta) Q(a3'; 0) = exp(-v^T A v) / (pi^2 cosh|zeta|)``, ``v = (a1, a3)`` real."""
    st, sr = math.sqrt(tau), math.sqrt(1.0 - tau)
    eye = np.eye(2)
    l1 = np.hstack([st * eye, -sr * eye])
    l3 = np.hstack([sr * eye, st * eye])
    vinv = np.linalg.inv(squeezing_covariance(zeta))
    return 2.0 * l1.T @ vinv @ l1 + l3.T @ l3


def _fock_p_weights(m: int) -> np.ndarray:
    # P-function of |m> as sum_k binom(m, k)/k! (d/da)^k (d/da*)^k delta
    return np.array([comb(m, k, exact=True) / math.factorial(k) for k in range(m + 1)], dtype=float)


def _check_order(m: int):
    if m > MAX_ANALYTIC_ORDER:
        raise UnsupportedOrderError(f"analytic route supports m <= {MAX_ANALYTIC_ORDER}, got {m}")
    if m < 0:
        raise ValueError("m must be non-negative")


def herald_probability_analytic(zeta: complex, tau: float, m: int) -> float:
    """Probability of heralding ``m`` photons from the phase-space integral of the tap output."""
    _check_order(m)
    a = _tap_quadratic_form(zeta, tau)
    a11, a12, a22 = a[:2, :2], a[:2, 2:], a[2:, 2:]
    schur = a22 - a12.T @ np.linalg.solve(a11, a12)
    # integrating out a1 leaves exp(-w^T schur w) in the tap coordinate
    pref = math.pi * (1.0 / (math.pi**2 * math.cosh(abs(zeta)))) * math.pi / math.sqrt(np.linalg.det(a11))
    derivs = _mixed_derivatives(_quadratic_coeffs(schur, np.zeros(2), m), m)
    return float(pref * np.dot(_fock_p_weights(m), derivs[: m + 1]))


def q_analytic_subtracted(alpha, zeta: complex, tau: float, m: int) -> np.ndarray:
    """Q of the photon-subtracted squeezed vacuum from the tap-output Gaussian and the Fock-state P-function.

    The delta-derivative integral is carried out by differentiating the
    Gaussian integrand ``k`` times in the tap coordinate and its conjugate at
    the origin, using exact Taylor coefficients of the exponent.

    Raises:
        UnsupportedOrderError: For ``m`` above :data:`MAX_ANALYTIC_ORDER`.
        ZeroProbabilityError: If the herald cannot occur.
    """
    _check_order(m)
    prob = herald_probability_analytic(zeta, tau, m)
    if prob <= 1e-300 or (m >= 1 and (tau == 1.0 or zeta == 0)):
        raise ZeroProbabilityError(f"herald of {m} photons has zero probability")
    a = _tap_quadratic_form(zeta, tau)
    a11, a12, a22 = a[:2, :2], a[:2, 2:], a[2:, 2:]
    weights = _fock_p_weights(m)
    pts = np.atleast_1d(np.asarray(alpha, dtype=complex))
    out = np.empty(pts.shape, dtype=float)
    const = 1.0 / (math.pi**2 * math.cosh(abs(zeta)))
    for idx, pt in np.ndenumerate(pts):
        u = np.array([pt.real, pt.imag])
        derivs = _mixed_derivatives(_quadratic_coeffs(a22, a12.T @ u, m), m)
        val = const * math.exp(-u @ a11 @ u) * np.dot(weights, derivs)
        out[idx] = math.pi / prob * val
    return out if np.ndim(alpha) else out.reshape(())[()]


def q_analytic_output(p: PhasePoint, zeta: complex, lam: complex, tau: float, m: int) -> float:
    """Two-mode Q of the heralded state after 50/50 mixing with ``|lam>``, as a product of single-mode Q's."""
    diff = (p.a1 - p.a2) / math.sqrt(2.0)
    total = (p.a1 + p.a2) / math.sqrt(2.0)
    if m == 0 and tau == 1.0:
        q_sub = q_analytic_squeezed_coherent(diff, 0.0, zeta)
    else:
        q_sub = q_analytic_subtracted(diff, zeta, tau, m)
    q_coh = math.exp(-abs(total - lam) ** 2) / math.pi
    return float(q_sub * q_coh)


# -- quadrature --------------------------------------------------------------


def hermite_plane_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``int f d^2 alpha`` when ``f`` is ``exp(-|alpha|^2)`` times a polynomial.

    The weights absorb ``exp(x^2 + y^2)`` so ``f`` is sampled as is. Exact when
    the polynomial degree per axis is below ``2n``.
    """
    x, w = roots_hermite(n)
    w = w * np.exp(x**2)
    nodes = (x[:, None] + 1j * x[None, :]).ravel()
    weights = np.outer(w, w).ravel()
    return nodes, weights


def quadrature_norm(s: PureState2, n_nodes: int | None = None) -> float:
    """``int int Q d^2 a1 d^2 a2`` by Gauss-Hermite quadrature in both modes.

    The mode-2 rule is contracted into the Gram matrix of the sampled coherent
    states so the four-dimensional sum costs two two-dimensional ones.
    """
    n = n_nodes or s.dim + 2
    nodes, weights = hermite_plane_rule(n)
    rows = coherent_rows(nodes, s.dim, warn=False)
    gram = (rows.T * weights) @ np.conj(rows)  # sum_j w_j <n|a_j><a_j|n'>
    a = rows @ s.amps
    per_node = np.real(np.einsum("ik,kl,il->i", a, gram.T, np.conj(a)))
    return float(np.dot(weights, per_node) / math.pi**2)


def quadrature_marginal(s: PureState2, a1: complex, mode: int = 1, n_nodes: int | None = None) -> float:
    """``pi * int Q d^2 a_other`` by Gauss-Hermite quadrature over the other mode."""
    n = n_nodes or s.dim + 2
    nodes, weights = hermite_plane_rule(n)
    amps = s.amps if mode == 1 else s.amps.T
    r1 = coherent_rows([a1], s.dim, warn=False)
    r2 = coherent_rows(nodes, s.dim, warn=False)
    vals = np.abs(r1 @ amps @ r2.T)[0] ** 2
    return float(math.pi * np.dot(weights, vals) / math.pi**2)


def adaptive_quadrature(fn, n_start: int, rel_tol: float = 1e-10, max_nodes: int = 400) -> tuple[float, int]:
    """Refine the node count until two successive estimates agree.

    Returns:
        ``(value, nodes_used)``.
    """
    n = n_start
    prev = fn(n)
    while n < max_nodes:
        n_next = n + max(4, n // 4)
        cur = fn(n_next)
        if abs(cur - prev) <= rel_tol * max(abs(cur), 1.0):
            return cur, n_next
        prev, n = cur, n_next
    return prev, n
