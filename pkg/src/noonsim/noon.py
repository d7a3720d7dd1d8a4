"""
N00N-superposition targets, edge statistics, fidelities and the displacement optimization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateError, TruncationError
from .fock import TAIL_TOL, ModeParams, PureState2, coherent_amplitudes, inner, make_coherent
from .interferometer import balanced_edges, edge_amplitudes, subtract_photons


@dataclass(frozen=True, eq=False)
class PhotonStats:
    """Normalized distribution over ``N`` with its mean and standard deviation."""

    P: np.ndarray
    mean: float
    stddev: float

    @classmethod
    def from_weights(cls, w: np.ndarray) -> PhotonStats:
        w = np.asarray(w, dtype=float)
        total = w.sum()
        if total <= 0.0:
            raise DegenerateError("distribution has no weight")
        p = w / total
        p.setflags(write=False)
        n = np.arange(p.size)
        mean = float(np.dot(n, p))
        var = float(np.dot((n - mean) ** 2, p))
        return cls(p, mean, math.sqrt(max(var, 0.0)))


def edge_marginal(s: PureState2, mode: int = 1) -> PhotonStats:
    """Distribution of the amplitudes on ``|N,0>`` (``mode=1``) or ``|0,N>`` (``mode=2``)."""
    edge = s.amps[:, 0] if mode == 1 else s.amps[0, :]
    weights = np.abs(edge) ** 2
    if not np.any(weights > 0):
        raise DegenerateError("all edge amplitudes vanish")
    return PhotonStats.from_weights(weights)


def noon_superposition(stats: PhotonStats, m: int, dim: int | None = None) -> PureState2:
    """Ideal target ``i^m sqrt(P_0)|0,0> + sum_N i^(N+m) sqrt(P_N/2) (|N,0> + (-1)^m |0,N>)``."""
    p = stats.P
    support = int(np.nonzero(p)[0][-1]) + 1
    d = p.size if dim is None else dim
    if d < support:
        raise TruncationError(f"dim {d} smaller than distribution support", float(p[d:].sum()))
    amps = np.zeros((d, d), dtype=complex)
    n = np.arange(1, support)
    edge = 1j ** ((n + m) % 4) * np.sqrt(p[1:support] / 2.0)
    amps[n, 0] = edge
    amps[0, n] = (-1) ** m * edge
    amps[0, 0] = 1j ** (m % 4) * math.sqrt(p[0])
    return PureState2(amps)


def fidelity(a: PureState2, b: PureState2) -> float:
    """``|<a|b>|``."""
    return abs(inner(a, b))


def _edge_fidelity(e1: np.ndarray, e2: np.ndarray, m: int) -> float:
    # only the edges of |Psi_m> overlap with the target
    w = np.abs(e1) ** 2
    p = w / w.sum()
    n = np.arange(p.size)
    tgt1 = 1j ** ((n + m) % 4) * np.sqrt(p / 2.0)
    tgt2 = (-1) ** m * tgt1
    tgt1[0] = 1j ** (m % 4) * math.sqrt(p[0])
    tgt2[0] = 0.0
    return float(abs(np.vdot(tgt1, e1) + np.vdot(tgt2, e2)))


def noon_fidelity(p: ModeParams, tol: float = TAIL_TOL) -> float:
    """Fidelity between ``|Psi_m>`` and the N00N superposition built from its own edge marginal."""
    e1, e2, _ = edge_amplitudes(p, tol)
    return _edge_fidelity(e1, e2, p.m)


@dataclass(frozen=True)
class NoonSummary:
    """One row of the displacement-optimized N00N analysis."""

    zeta: complex
    tau: float
    m: int
    lam: complex
    fidelity: float
    herald_prob: float
    mean: float
    stddev: float


def summarize(p: ModeParams, tol: float = TAIL_TOL) -> NoonSummary:
    e1, e2, prob = edge_amplitudes(p, tol)
    stats = PhotonStats.from_weights(np.abs(e1) ** 2)
    return NoonSummary(p.zeta, p.tau, p.m, p.lam, _edge_fidelity(e1, e2, p.m), prob, stats.mean, stats.stddev)


class _EdgeEvaluator:
    """Fidelity as a function of the displacement, reusing the subtracted state."""

    def __init__(self, zeta: complex, tau: float, m: int, tol: float = TAIL_TOL):
        self.m = m
        self.tol = tol
        out = subtract_photons(zeta, tau, m, None, tol)
        self.phi = out.state.amps
        self.herald_prob = out.herald_prob

    def fidelity(self, lam: complex) -> float:
        coh = coherent_amplitudes(lam, make_coherent(lam, None, self.tol).dim)
        e1, e2 = balanced_edges(self.phi, coh)
        return _edge_fidelity(e1, e2, self.m)


def optimize_lambda(zeta: complex, tau: float, m: int, phase: complex = 1j,
                    lam_max: float | None = None, grid_points: int = 41,
                    n_refine: int = 3, tol: float = TAIL_TOL) -> tuple[complex, float]:
    """Maximize the N00N fidelity over the displacement magnitude along ``phase * |lam|``.

    A coarse grid locates candidate maxima; the best ``n_refine`` grid cells
    are each refined by bounded Brent search.

    Returns:
        ``(lam_opt, fidelity_max)``.

    Raises:
        DegenerateError: If the objective is flat (no squeezing).
    """
    if zeta == 0:
        raise DegenerateError("fidelity does not depend on the displacement without squeezing")
    ev = _EdgeEvaluator(zeta, tau, m, tol)
    if lam_max is None:
        # the optimum tracks the photon content of the subtracted state
        mean_sub = float(np.dot(np.arange(ev.phi.size), np.abs(ev.phi) ** 2))
        lam_max = 2.0 * math.sqrt(mean_sub) + 3.0
    grid = np.linspace(0.0, lam_max, grid_points)
    vals = np.array([ev.fidelity(phase * r) for r in grid])
    if np.ptp(vals) < 1e-12:
        raise DegenerateError("fidelity is flat in the displacement magnitude")
    order = np.argsort(-vals)
    best_r, best_f = float(grid[order[0]]), float(vals[order[0]])
    step = grid[1] - grid[0]
    tried = 0
    for idx in order:
        if tried >= n_refine:
            break
        tried += 1
        lo, hi = max(0.0, grid[idx] - step), grid[idx] + step
        res = minimize_scalar(lambda r: -ev.fidelity(phase * r), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-6})
        if -res.fun > best_f:
            best_r, best_f = float(res.x), float(-res.fun)
    return phase * best_r, best_f


def cat_fidelity(state_amps: np.ndarray, mu_max: float = 6.0, grid_points: int = 121) -> tuple[float, float, int]:
    """Best overlap of a single-mode state with ``|mu> + s |-mu>`` over complex ``mu`` and parity ``s``.

    Returns:
        ``(fidelity, mu, parity)`` with ``parity`` +1 for the even cat.
    """
    dim = state_amps.shape[0]
    n = np.arange(dim)

    def overlap(mu: complex, parity: int) -> float:
        if parity == -1 and mu == 0:
            return 0.0
        c = coherent_amplitudes(mu, dim)
        cat = c * (1.0 + parity * (-1.0) ** n)
        norm2 = 2.0 * (1.0 + parity * math.exp(-2.0 * abs(mu) ** 2))
        return abs(np.vdot(cat, state_amps)) / math.sqrt(norm2)

    best = (0.0, 0.0, 1)
    for parity in (1, -1):
        # phase of mu matters for squeezed-type states; scan it coarsely then refine magnitude
        for ph in np.linspace(0.0, math.pi, 9)[:-1]:
            rs = np.linspace(0.0, mu_max, grid_points)
            vals = [overlap(r * np.exp(1j * ph), parity) for r in rs]
            k = int(np.argmax(vals))
            lo, hi = rs[max(k - 1, 0)], rs[min(k + 1, grid_points - 1)]
            res = minimize_scalar(lambda r: -overlap(r * np.exp(1j * ph), parity), bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-8})
            f = max(vals[k], -res.fun)
            if f > best[0]:
                r = res.x if -res.fun >= vals[k] else rs[k]
                best = (float(f), complex(r * np.exp(1j * ph)), parity)
    return best


def cat_comparison(zeta: complex, tau: float, m: int, tol: float = TAIL_TOL) -> tuple[float, float]:
    """Return ``(F_cat, F_noon)``: cat overlap of the subtracted state and the optimized N00N fidelity."""
    sub = subtract_photons(zeta, tau, m, None, tol)
    f_cat, _, _ = cat_fidelity(sub.state.amps)
    _, f_noon = optimize_lambda(zeta, tau, m, tol=tol)
    return f_cat, f_noon


# Reference rows keyed by (m, zeta): (fidelity, |lam_opt|, herald_prob, mean, stddev)
TABLE1_REFERENCE = {
    (1, 0.5): (0.996, 1.18, 2.27e-2, 2.98, 1.65),
    (1, 1.0): (0.961, 1.89, 8.76e-2, 6.47, 3.13),
    (1, 1.5): (0.903, 2.36, 1.61e-1, 11.2, 4.68),
    (2, 0.5): (0.981, 1.26, 2.05e-3, 2.79, 2.20),
    (2, 1.0): (0.943, 2.22, 1.78e-2, 9.91, 4.13),
    (2, 1.5): (0.887, 3.13, 6.18e-2, 19.5, 6.28),
    (3, 0.5): (0.991, 1.60, 1.18e-4, 5.17, 2.47),
    (3, 1.0): (0.945, 2.68, 3.56e-3, 14.4, 4.92),
    (3, 1.5): (0.885, 3.75, 2.52e-2, 28.2, 7.57),
    (4, 1.0): (0.943, 3.05, 7.60e-4, 18.7, 5.62),
    (4, 1.5): (0.884, 4.29, 1.08e-2, 36.9, 8.67),
    (4, 2.0): (0.838, 5.21, 3.95e-2, 54.5, 11.0),
    (5, 1.0): (0.943, 3.57, 1.30e-6, 23.0, 6.25),
    (5, 1.5): (0.883, 4.77, 4.75e-3, 45.7, 9.64),
    (5, 2.0): (0.838, 5.81, 2.59e-2, 67.6, 12.3),
    (7, 1.0): (0.942, 3.97, 8.30e-6, 31.6, 7.33),
    (7, 1.5): (0.882, 5.62, 9.65e-4, 63.3, 11.4),
    (7, 2.0): (0.837, 6.84, 1.17e-2, 93.7, 14.5),
}

# rows checked against tolerances; the rest are reported only
TABLE1_ASSERTED = [(1, 0.5), (1, 1.0), (1, 1.5), (3, 0.5), (3, 1.0), (3, 1.5), (5, 2.0), (7, 2.0)]
# herald probabilities that are inconsistent with neighbouring rows
TABLE1_HERALD_EXCLUDED = {(5, 1.0), (7, 1.0)}
