"""
Detector inefficiency and transmission loss as ensembles of pure two-mode states.

A lossy channel of transmittance ``t`` on one mode has Kraus operators
``K_k = sqrt((1-t)^k / k!) t^(n/2) a^k``; branch ``k`` is the conditional
state after losing ``k`` photons. Mixed states are kept as weighted lists of
such branches and never as density matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .errors import TruncationError, ZeroProbabilityError
from .fock import TAIL_TOL, ModeParams, PureState2, log_factorial
from .husimi import coherent_rows, hermite_plane_rule
from .interferometer import herald_probabilities, psi_m_state

PRUNE_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class StateEnsemble:
    """Weighted mixture of normalized pure two-mode states.

    ``total_weight`` is the unnormalized mass the branches were scaled from (a
    heralding probability, or the retained probability for loss channels,
    whose weights are left unnormalized).
    """

    branches: tuple
    total_weight: float = 1.0
    pruned_mass: float = 0.0

    def __post_init__(self):
        br = tuple((float(w), s) for w, s in self.branches)
        if any(w < 0 for w, _ in br):
            raise ValueError("ensemble weights must be non-negative")
        object.__setattr__(self, "branches", br)

    @classmethod
    def from_unnormalized(cls, items, pruned_mass: float = 0.0) -> StateEnsemble:
        """Build from ``(weight, state)`` pairs whose states may be unnormalized; weights absorb the norms."""
        out = []
        for w, s in items:
            n2 = s.norm2()
            if n2 <= 0.0 or w <= 0.0:
                continue
            out.append((w * n2, PureState2(s.amps / math.sqrt(n2), s.tail_mass)))
        total = sum(w for w, _ in out)
        if total <= 0.0:
            raise ZeroProbabilityError("ensemble has no weight")
        return cls(tuple((w / total, s) for w, s in out), total, pruned_mass)

    @cached_property
    def stacked_amps(self) -> np.ndarray | None:
        """Branch amplitudes scaled by ``sqrt(weight)``, stacked when all branches share one dim."""
        dims = {s.dim for _, s in self.branches}
        if len(dims) != 1:
            return None
        return np.stack([math.sqrt(w) * s.amps for w, s in self.branches])

    @property
    def tail_mass(self) -> float:
        return float(sum(w * s.tail_mass for w, s in self.branches))

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.branches])

    def mean_photon(self) -> float:
        return float(sum(w * s.mean_photon() for w, s in self.branches))

    def photon_distribution(self) -> np.ndarray:
        dim = max(s.dim for _, s in self.branches)
        out = np.zeros((dim, dim))
        for w, s in self.branches:
            out[: s.dim, : s.dim] += w * s.photon_distribution()
        return out


# -- detector inefficiency ---------------------------------------------------


def _detection_weights(herald: np.ndarray, eta: float, m: int) -> np.ndarray:
    """``binom(m', m) eta^m (1-eta)^(m'-m) N_m'`` for ``m' = 0..len(herald)-1`` (zero below ``m``)."""
    mp = np.arange(herald.size)
    out = np.zeros(herald.size)
    sel = mp >= m
    k = mp[sel] - m
    if eta == 1.0:
        out[m] = herald[m] if m < herald.size else 0.0
        return out
    logb = gammaln(mp[sel] + 1.0) - gammaln(m + 1.0) - gammaln(k + 1.0)
    log_eta = m * math.log(eta) if m else 0.0
    out[sel] = np.exp(logb + log_eta + k * math.log1p(-eta)) * herald[sel]
    return out


def detection_rate(p: ModeParams, eta: float, tol: float = 1e-10, m_cap: int = 400) -> tuple[float, int]:
    """Heralding probability with an inefficient counter and the ``m'`` cutoff that achieves ``tol``.

    The cutoff is the smallest one for which adding one more term changes the
    rate by less than ``tol`` relative, with a geometric bound on the remainder.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    herald = herald_probabilities(p.zeta, p.tau, m_cap)
    w = _detection_weights(herald, eta, p.m)
    total = w.sum()
    if total <= 0.0:
        raise ZeroProbabilityError(f"no weight for {p.m} counts at eta={eta}")
    suffix = np.cumsum(w[::-1])[::-1]
    ok = np.nonzero(suffix < tol * total)[0]
    ok = ok[ok > p.m]
    if ok.size == 0:
        raise TruncationError(f"m' cutoff exceeds {m_cap}", float(suffix[-1] / total))
    cutoff = int(ok[0]) - 1
    return float(w[: cutoff + 1].sum()), cutoff


def herald_with_inefficiency(p: ModeParams, eta: float, mprime_cutoff: int | None = None,
                             dim: int | None = None, tol: float = 1e-10) -> tuple[StateEnsemble, float]:
    """Mixture of ``|Psi_m'>`` for ``m' >= m`` heralded by ``m`` counts at detection efficiency ``eta``.

    Args:
        p: Source parameters; ``p.m`` is the number of registered counts.
        eta: Detection efficiency in ``(0, 1]``.
        mprime_cutoff: Largest ``m'`` kept. ``None`` picks the smallest cutoff
            whose neglected weight is below ``tol`` relative.
        dim: Optional per-mode truncation of each branch.
        tol: Relative tolerance for the neglected weight.

    Returns:
        ``(ensemble, rate)`` with ``rate`` the heralding probability.
    """
    rate, auto_cut = detection_rate(p, eta, tol)
    cut = auto_cut if mprime_cutoff is None else int(mprime_cutoff)
    herald = herald_probabilities(p.zeta, p.tau, max(cut, p.m))
    w = _detection_weights(herald, eta, p.m)
    items = []
    for mp in range(p.m, cut + 1):
        if w[mp] <= 0.0:
            continue
        out = psi_m_state(ModeParams(p.zeta, p.lam, p.tau, mp), dim, None if dim else TAIL_TOL)
        items.append((w[mp], out.state))
    if not items:
        raise ZeroProbabilityError(f"no weight for {p.m} counts at eta={eta}")
    branch_dim = max(s.dim for _, s in items)
    items = [(wt, s.padded(branch_dim)) for wt, s in items]
    total = float(sum(wt for wt, _ in items))
    ens = StateEnsemble(tuple((wt / total, s) for wt, s in items), total, max(rate - total, 0.0))
    return ens, total


# -- transmission loss -------------------------------------------------------


def loss_factors(dim: int, tau_prime: float, k: int) -> np.ndarray:
    """``sqrt(binom(n, k)) t^((n-k)/2) (1-t)^(k/2)`` for ``n < dim`` (zero for ``n < k``)."""
    n = np.arange(dim)
    out = np.zeros(dim)
    sel = n >= k
    if not np.any(sel):
        return out
    nn = n[sel]
    if tau_prime == 1.0:
        out[sel] = 1.0 if k == 0 else 0.0
        return out
    if tau_prime == 0.0:
        out[sel] = (nn == k).astype(float)
        return out
    log = (0.5 * (log_factorial(nn) - log_factorial(k) - log_factorial(nn - k))
           + 0.5 * (nn - k) * math.log(tau_prime) + 0.5 * k * math.log1p(-tau_prime))
    out[sel] = np.exp(log)
    return out


def _check_tau_prime(tau_prime: float):
    if not 0.0 <= tau_prime <= 1.0:
        raise ValueError(f"tau_prime must lie in [0, 1], got {tau_prime}")


def transmission_loss(s: PureState2, tau_prime: float, prune: float = PRUNE_TOL) -> StateEnsemble:
    """Both output modes pass a loss channel of transmittance ``tau_prime``.

    Branch ``(k1, k2)`` is the normalized state after ``k_i`` photons were lost
    from mode ``i``; its weight is the probability of that loss pattern.
    Branches lighter than ``prune`` are dropped and their mass recorded.
    Weights are the loss-pattern probabilities themselves, so they sum to the
    source norm minus the pruned mass and no renormalization takes place.
    """
    _check_tau_prime(tau_prime)
    if tau_prime == 1.0:
        return StateEnsemble(((1.0, s),), 1.0)
    d = s.dim
    factors = [loss_factors(d, tau_prime, k) for k in range(d)]
    probs = np.abs(s.amps) ** 2
    # branch weights: sum_{n1,n2} p(n1,n2) f_k1(n1)^2 f_k2(n2)^2
    f2 = np.array(factors) ** 2
    weights = f2 @ probs @ f2.T
    branches = []
    pruned = 0.0
    for k1 in range(d):
        for k2 in range(d):
            w = weights[k1, k2]
            if w < prune or w <= 0.0:
                pruned += w
                continue
            amps = np.zeros((d, d), dtype=complex)
            amps[: d - k1, : d - k2] = (factors[k1][:, None] * s.amps * factors[k2][None, :])[k1:, k2:]
            branches.append((w, PureState2(amps / math.sqrt(w), s.tail_mass)))
    if not branches:
        raise ZeroProbabilityError("every loss branch was pruned")
    # weights stay absolute so the ensemble is linear in the source, like the Kraus form
    return StateEnsemble(tuple(branches), float(sum(w for w, _ in branches)), float(pruned))


@dataclass(frozen=True, eq=False)
class AttenuatedState:
    """Pure two-mode state followed by equal loss channels on both modes, kept in Kraus form.

    Q-function values are contracted directly from the Kraus rows
    ``<alpha|K_k|n>``, which avoids materializing the branches.
    """

    source: PureState2
    tau_prime: float
    kraus_tol: float = PRUNE_TOL
    _kraus: np.ndarray = field(init=False, repr=False)
    dropped_mass: float = field(init=False, default=0.0)

    def __post_init__(self):
        _check_tau_prime(self.tau_prime)
        d = self.source.dim
        if self.tau_prime == 1.0:
            kraus = loss_factors(d, 1.0, 0)[None]
            dropped = 0.0
        else:
            kraus = np.array([loss_factors(d, self.tau_prime, k) for k in range(d)])
            # probability of losing k photons from either mode; drop the improbable tail
            p = np.abs(self.source.amps) ** 2
            w = kraus**2 @ (p.sum(axis=1) + p.sum(axis=0))
            tail = np.cumsum(w[::-1])[::-1]
            keep = np.nonzero(tail >= self.kraus_tol)[0]
            kmax = int(keep[-1]) + 1 if keep.size else 1
            dropped = float(tail[kmax]) if kmax < d else 0.0
            kraus = kraus[:kmax]
        object.__setattr__(self, "_kraus", kraus)
        object.__setattr__(self, "dropped_mass", dropped)

    @property
    def tail_mass(self) -> float:
        return self.source.tail_mass + self.dropped_mass

    def _rows(self, points, warn: bool) -> np.ndarray:
        """``<alpha_i|K_k|n>`` flattened to shape ``(k * points, n)``."""
        d = self.source.dim
        base = coherent_rows(points, d, warn, self.source.tail_mass)
        kk = np.arange(self._kraus.shape[0])[:, None]
        shift = np.arange(d)[None, :] - kk
        valid = shift >= 0
        out = base[:, np.where(valid, shift, 0)] * (self._kraus * valid)[None]
        return np.swapaxes(out, 0, 1).reshape(-1, d)

    def scaled_marginal(self, points, mode: int = 1, warn: bool = True) -> np.ndarray:
        amps = self.source.amps if mode == 1 else self.source.amps.T
        n_pts = np.size(points)
        a = self._rows(points, warn) @ amps
        return np.sum(np.abs(a.reshape(-1, n_pts, amps.shape[1])) ** 2, axis=(0, 2))

    def scaled_joint(self, points1, points2, warn: bool = True) -> np.ndarray:
        p, q = np.size(points1), np.size(points2)
        amp = (self._rows(points1, warn) @ self.source.amps) @ self._rows(points2, warn).T
        return np.sum(np.abs(amp.reshape(-1, p, amp.shape[1] // q, q)) ** 2, axis=(0, 2))

    def mean_photon(self) -> float:
        return self.tau_prime * self.source.mean_photon()

    def photon_distribution(self) -> np.ndarray:
        return thinned_distribution(self.source.photon_distribution(), self.tau_prime)

    def materialize(self, prune: float = PRUNE_TOL) -> StateEnsemble:
        return transmission_loss(self.source, self.tau_prime, prune)


def thinning_matrix(dim: int, tau_prime: float) -> np.ndarray:
    """``B[j, n]`` = probability that ``j`` of ``n`` photons survive."""
    out = np.zeros((dim, dim))
    for k in range(dim):
        f = loss_factors(dim, tau_prime, k) ** 2
        n = np.arange(k, dim)
        out[n - k, n] += f[k:]
    return out


def thinned_distribution(p: np.ndarray, tau_prime: float) -> np.ndarray:
    """Joint photon-number distribution after independent loss on both modes."""
    _check_tau_prime(tau_prime)
    b = thinning_matrix(p.shape[0], tau_prime)
    return b @ p @ b.T


def lossy_distribution(p: ModeParams, tau_prime: float, dim: int | None = None) -> np.ndarray:
    """Joint photon-number distribution of the heralded state after transmission loss."""
    out = psi_m_state(p, dim, None if dim else TAIL_TOL)
    return thinned_distribution(out.state.photon_distribution(), tau_prime)


def q_transmission_quadrature(s: PureState2, tau_prime: float, a1: complex, a2: complex, n_nodes: int | None = None) -> float:
    """Q of the attenuated state from the double phase-space integral over the loss ports.

    Integrand: vacuum Q at ``sqrt(1-t) a_i + sqrt(t) b_i`` for each mode times
    the source Q at ``(sqrt(t) a1 - sqrt(1-t) b1, sqrt(t) a2 - sqrt(1-t) b2)``.
    The Gaussian factors combine to ``exp(-|b1|^2 - |b2|^2)`` times a
    polynomial, so Gauss-Hermite quadrature with ``dim`` nodes per axis is exact.
    """
    _check_tau_prime(tau_prime)
    n = n_nodes or s.dim + 2
    nodes, weights = hermite_plane_rule(n)
    st, sr = math.sqrt(tau_prime), math.sqrt(1.0 - tau_prime)
    x1 = st * a1 - sr * nodes
    x2 = st * a2 - sr * nodes
    r1 = coherent_rows(x1, s.dim, warn=False)
    r2 = coherent_rows(x2, s.dim, warn=False)
    src = np.abs(r1 @ s.amps @ r2.T) ** 2 / math.pi**2
    v1 = np.exp(-np.abs(sr * a1 + st * nodes) ** 2) / math.pi
    v2 = np.exp(-np.abs(sr * a2 + st * nodes) ** 2) / math.pi
    integrand = v1[:, None] * v2[None, :] * src
    return float(weights @ integrand @ weights)
