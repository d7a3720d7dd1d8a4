"""
Phase-space Bell observable and its maximization over measurement settings.

``J1 = Q(a) + Q(b) + Q(c) + Q(d) - Q(a,b) - Q(a,c) - Q(a,d) - Q(b,c) - Q(b,d) - Q(c,d)``
where two-argument terms are ``pi^2`` times the two-mode Q-function with the
first argument in mode 1 and the second in mode 2, and single-argument terms
are single-mode marginals. Local realism bounds ``J1 <= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import NonConvergenceError, ZeroProbabilityError
from .fock import ModeParams
from .husimi import coherent_rows, scaled_joint, scaled_marginal
from .interferometer import ecs_match_mean, ecs_state, psi_m_state
from .loss import AttenuatedState, herald_with_inefficiency

CONVENTIONS = ("mode1", "symmetric", "alternating")
_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
_ROWS = np.array([i for i, _ in _PAIRS])
_COLS = np.array([j for _, j in _PAIRS])


@dataclass(frozen=True)
class BellSettings:
    """The four phase-space settings."""

    alpha: complex
    beta: complex
    gamma: complex
    delta: complex

    def __post_init__(self):
        for v in self.as_array():
            if not np.isfinite(v):
                raise ValueError("settings must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.delta], dtype=complex)

    @classmethod
    def from_vector(cls, x: np.ndarray) -> BellSettings:
        z = np.asarray(x[0::2]) + 1j * np.asarray(x[1::2])
        return cls(*[complex(v) for v in z])

    def to_vector(self) -> np.ndarray:
        z = self.as_array()
        return np.column_stack([z.real, z.imag]).ravel()


@dataclass(frozen=True)
class BellResult:
    """Best J1 found and the settings reaching it.

    ``start_values`` lists the optimum reached from every start, which shows
    how flat or multi-peaked the landscape is.
    """

    j1: float
    settings: BellSettings
    starts_used: int
    converged: bool
    convention: str = "mode1"
    start_values: tuple = field(default=(), repr=False)


def _marginal_terms(state, pts: np.ndarray, convention: str) -> np.ndarray:
    if convention == "mode1":
        return scaled_marginal(state, pts, 1, warn=False)
    if convention == "symmetric":
        return 0.5 * (scaled_marginal(state, pts, 1, warn=False) + scaled_marginal(state, pts, 2, warn=False))
    if convention == "alternating":
        m1 = scaled_marginal(state, pts[[0, 2]], 1, warn=False)
        m2 = scaled_marginal(state, pts[[1, 3]], 2, warn=False)
        return np.array([m1[0], m2[0], m1[1], m2[1]])
    raise ValueError(f"unknown marginal convention {convention!r}; choose from {CONVENTIONS}")


def _fast_terms(state, pts: np.ndarray, convention: str):
    """Singles and joint grid from one set of coherent rows, for pure states and stacked ensembles."""
    stack = getattr(state, "stacked_amps", None)
    if stack is None and hasattr(state, "amps"):
        stack = state.amps[None]
    if stack is None:
        return None
    rows = coherent_rows(pts, stack.shape[1], warn=False)
    a = rows @ stack
    joint = np.sum(np.abs(a @ rows.T) ** 2, axis=0)
    m1 = np.sum(np.abs(a) ** 2, axis=(0, 2))
    if convention == "mode1":
        return m1, joint
    m2 = np.sum(np.abs(rows @ np.swapaxes(stack, 1, 2)) ** 2, axis=(0, 2))
    if convention == "symmetric":
        return 0.5 * (m1 + m2), joint
    if convention == "alternating":
        return np.array([m1[0], m2[1], m1[2], m2[3]]), joint
    raise ValueError(f"unknown marginal convention {convention!r}; choose from {CONVENTIONS}")


def j1_value(state, s: BellSettings, convention: str = "mode1") -> float:
    """Bell observable for a pure state, ensemble or attenuated state.

    Args:
        state: Two-mode state.
        s: Settings.
        convention: Mode assignment of the single-argument terms. ``"mode1"``
            uses the mode-1 marginal for all four, ``"symmetric"`` averages the
            mode-1 and mode-2 marginals, ``"alternating"`` takes alpha, gamma
            in mode 1 and beta, delta in mode 2.
    """
    pts = s.as_array()
    fast = _fast_terms(state, pts, convention)
    if fast is None:
        singles = _marginal_terms(state, pts, convention)
        joint = scaled_joint(state, pts, pts, warn=False)
    else:
        singles, joint = fast
    return float(singles.sum() - joint[_ROWS, _COLS].sum())


def _state_scale(state) -> float:
    """Typical phase-space radius of the state, used to place the seed rings."""
    try:
        mean = state.mean_photon()
    except AttributeError:
        mean = 1.0
    return math.sqrt(max(mean, 0.25))


def seed_settings(radius: float, n_starts: int, seed: int) -> list[np.ndarray]:
    """Deterministic list of starting points; a longer list always extends a shorter one.

    Order: all settings at the origin; all four settings equal on rings of
    radius ``radius/sqrt(2)`` and ``radius*sqrt(2)`` at 8 phases; then random
    combinations of those ring points and the origin.
    """
    ring = [0j]
    for r in (radius / math.sqrt(2.0), radius * math.sqrt(2.0)):
        ring += [r * np.exp(1j * k * math.pi / 4.0) for k in range(8)]
    starts = [BellSettings(*([ring[0]] * 4)).to_vector()]
    for p in ring[1:]:
        starts.append(BellSettings(p, p, p, p).to_vector())
    rng = np.random.default_rng(seed)
    while len(starts) < n_starts:
        pick = rng.integers(0, len(ring), size=4)
        jitter = 0.05 * radius * (rng.normal(size=4) + 1j * rng.normal(size=4))
        starts.append(BellSettings(*(np.array(ring)[pick] + jitter)).to_vector())
    return starts[:n_starts]


def maximize_j1(state, n_starts: int = 24, seed: int = 0, convention: str = "mode1",
                radius: float | None = None, extra_starts: list[BellSettings] | None = None,
                maxiter: int = 4000) -> BellResult:
    """Multi-start Nelder-Mead maximization of J1 over the eight real setting coordinates.

    Args:
        state: Two-mode state.
        n_starts: Number of seeded starts (see :func:`seed_settings`).
        seed: Seed for the random part of the start list.
        convention: Marginal convention passed to :func:`j1_value`.
        radius: Seed ring radius; defaults to the square root of the mean photon number.
        extra_starts: Additional starts tried before the seeded ones (warm starts).
        maxiter: Iteration cap per start.

    Raises:
        NonConvergenceError: If no start converged.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown marginal convention {convention!r}")
    rad = _state_scale(state) if radius is None else radius
    starts = [s.to_vector() for s in (extra_starts or [])] + seed_settings(rad, n_starts, seed)

    def neg(x):
        return -j1_value(state, BellSettings.from_vector(x), convention)

    best_x, best_val, best_ok = None, -np.inf, False
    values, flags, trace = [], [], []
    for x0 in starts:
        res = minimize(neg, x0, method="Nelder-Mead",
                       options={"maxiter": maxiter, "maxfev": 2 * maxiter, "xatol": 1e-7,
                                "fatol": 1e-11, "adaptive": True})
        val = -float(res.fun)
        values.append(val)
        flags.append(bool(res.success))
        trace.append(str(res.message))
        if val > best_val:
            best_x, best_val, best_ok = res.x, val, bool(res.success)
    if not any(flags):
        raise NonConvergenceError(f"no start converged: {sorted(set(trace))}")
    settings = BellSettings.from_vector(best_x)
    j1 = j1_value(state, settings, convention)
    return BellResult(j1, settings, len(starts), best_ok, convention, tuple(values))


# -- sweeps ------------------------------------------------------------------


def sweep_zeta_lambda(m_list, zeta_grid, lambda_grid, tau: float = 0.9, n_starts: int = 16,
                      seed: int = 0, convention: str = "mode1") -> list[dict]:
    """Maximal J1 on a grid of ``(m, zeta, |lam|)`` with ``lam = i |lam|``.

    Cells are visited in grid order and each cell also starts from the
    optimum of the previous cell along the ``|lam|`` axis. Failures are
    recorded in the ``error`` field and the sweep continues.
    """
    records = []
    for m in m_list:
        for zeta in zeta_grid:
            warm = None
            for lam_abs in lambda_grid:
                rec = {"m": int(m), "zeta": float(zeta), "lam_abs": float(lam_abs)}
                try:
                    out = psi_m_state(ModeParams(zeta, 1j * lam_abs, tau, m))
                    res = maximize_j1(out.state, n_starts, seed, convention,
                                      extra_starts=[warm] if warm is not None else None)
                    warm = res.settings
                    rec.update(j1=res.j1, herald_prob=out.herald_prob, settings=res.settings,
                               converged=res.converged, error="")
                except (ZeroProbabilityError, NonConvergenceError, ValueError) as exc:
                    rec.update(j1=float("nan"), herald_prob=float("nan"), settings=None,
                               converged=False, error=f"{type(exc).__name__}: {exc}")
                records.append(rec)
    return records


def eta_scan(p: ModeParams, eta_grid, n_starts: int = 16, seed: int = 0,
             convention: str = "mode1") -> list[dict]:
    """Maximal J1 and heralding probability versus detection efficiency at fixed displacement."""
    records = []
    warm = None
    for eta in eta_grid:
        ens, rate = herald_with_inefficiency(p, float(eta))
        state = ens.branches[0][1] if len(ens.branches) == 1 else ens
        res = maximize_j1(state, n_starts, seed, convention, extra_starts=[warm] if warm else None)
        warm = res.settings
        records.append({"eta": float(eta), "j1": res.j1, "herald_prob": rate,
                        "branches": len(ens.branches), "settings": res.settings, "converged": res.converged})
    return records


def tau_prime_scan(p: ModeParams, tau_prime_grid, with_ecs_comparison: bool = False, n_starts: int = 16,
                   seed: int = 0, convention: str = "mode1") -> list[dict]:
    """Maximal J1 versus output transmittance, optionally next to an entangled coherent state of equal mean photon number.

    The comparison state uses sign ``(-1)^m`` and a displacement along ``i``.
    """
    src = psi_m_state(p).state
    ecs = None
    ecs_lam = None
    if with_ecs_comparison:
        sign = -1 if p.m % 2 else 1
        ecs_lam = ecs_match_mean(src.mean_photon(), sign)
        ecs = ecs_state(ecs_lam, sign)
    records = []
    warm, warm_ecs = None, None
    for tp in tau_prime_grid:
        res = maximize_j1(AttenuatedState(src, float(tp)), n_starts, seed, convention,
                          extra_starts=[warm] if warm else None)
        warm = res.settings
        rec = {"tau_prime": float(tp), "j1": res.j1, "settings": res.settings, "converged": res.converged}
        if ecs is not None:
            er = maximize_j1(AttenuatedState(ecs, float(tp)), n_starts, seed, convention,
                             extra_starts=[warm_ecs] if warm_ecs else None)
            warm_ecs = er.settings
            rec.update(ecs_lam=ecs_lam, ecs_j1=er.j1)
        records.append(rec)
    return records


def phase_scan(zeta: complex, lambda_mag: float, tau: float, m: int, phase_grid, n_starts: int = 16,
               seed: int = 0, convention: str = "mode1") -> list[dict]:
    """Maximal J1 with ``lam = |lam| exp(i (pi/2 + offset))`` for each offset.

    Each offset also starts from the previous optimum, both as is and rotated
    by the change in displacement phase.
    """
    records = []
    warm, prev_off = None, None
    for off in phase_grid:
        if not -math.pi / 2 <= off <= math.pi / 2:
            raise ValueError(f"phase offset {off} outside [-pi/2, pi/2]")
        lam = lambda_mag * np.exp(1j * (math.pi / 2 + off))
        out = psi_m_state(ModeParams(zeta, lam, tau, m))
        extra = None
        if warm is not None:
            turn = np.exp(1j * (off - prev_off))
            extra = [warm, BellSettings(*(warm.as_array() * turn))]
        res = maximize_j1(out.state, n_starts, seed, convention, extra_starts=extra)
        warm, prev_off = res.settings, off
        records.append({"offset": float(off), "j1": res.j1, "settings": res.settings, "converged": res.converged})
    return records


def violation_half_width(records: list[dict], bound: float = 1.0) -> float:
    """Largest ``|offset|`` of the contiguous violating range around offset 0 (linear interpolation at the edge)."""
    recs = sorted(records, key=lambda r: abs(r["offset"]))
    offs = np.array([abs(r["offset"]) for r in recs])
    vals = np.array([r["j1"] for r in recs])
    if vals[0] <= bound:
        return 0.0
    for k in range(1, len(offs)):
        if vals[k] <= bound:
            t = (vals[k - 1] - bound) / (vals[k - 1] - vals[k])
            return float(offs[k - 1] + t * (offs[k] - offs[k - 1]))
    return float(offs[-1])
