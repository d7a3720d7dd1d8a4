"""Quick oracle-equivalence checks run by the ``selfcheck`` command."""

from __future__ import annotations

import numpy as np

from .fock import ModeParams, PureState2
from .husimi import PhasePoint, q_analytic_output, q_two_mode
from .interferometer import beam_splitter, herald_probabilities, psi_m_state


def _record(name: str, error: float, limit: float) -> dict:
    return {"check": name, "max_error": float(error), "limit": limit, "passed": bool(error <= limit)}


def run_selfcheck(strict: bool = False, seed: int = 0) -> list[dict]:
    """Compare the two Q-function routes, beam-splitter unitarity and herald completeness."""
    rng = np.random.default_rng(seed)
    scale = 0.1 if strict else 1.0
    records = []

    worst = 0.0
    for m in (0, 1, 2, 3):
        for zeta in (0.5, 1.0):
            for tau in (0.8, 0.9):
                lam = 2.0j
                state = psi_m_state(ModeParams(zeta, lam, tau, m)).state
                pts = rng.normal(scale=1.5, size=(3, 4))
                for x in pts:
                    p = PhasePoint(complex(x[0], x[1]), complex(x[2], x[3]))
                    worst = max(worst, abs(q_analytic_output(p, zeta, lam, tau, m) - q_two_mode(state, p)))
    records.append(_record("q_route_equivalence", worst, 1e-8 * scale))

    amps = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
    s = PureState2(amps / np.linalg.norm(amps))
    out = beam_splitter(s, 0.37)
    back = beam_splitter(out, 0.37, inverse=True)
    records.append(_record("beam_splitter_unitarity", abs(out.norm2() - 1.0), 1e-12 * scale))
    records.append(_record("beam_splitter_inverse", float(np.abs(back.amps[:20, :20] - s.amps).max()), 1e-10 * scale))

    total = herald_probabilities(1.0, 0.9, 200).sum()
    records.append(_record("herald_completeness", abs(total - 1.0), 1e-10 * scale))
    return records
