import math
import warnings

import numpy as np
import pytest

from noonsim.errors import AccuracyWarning, UnsupportedOrderError, ZeroProbabilityError
from noonsim.fock import ModeParams, make_coherent, make_squeezed_vacuum, make_vacuum, tensor
from noonsim.husimi import (
    PhasePoint,
    adaptive_quadrature,
    coherent_rows,
    herald_probability_analytic,
    hermite_plane_rule,
    q_analytic_output,
    q_analytic_squeezed_coherent,
    q_analytic_subtracted,
    q_marginal,
    q_single,
    q_two_mode,
    quadrature_marginal,
    quadrature_norm,
)
from noonsim.interferometer import psi_m_state, psi_state, subtract_photons

rng = np.random.default_rng(11)
POINTS = rng.normal(scale=1.2, size=6) + 1j * rng.normal(scale=1.2, size=6)


def test_vacuum_q():
    s = tensor(make_vacuum(4), make_vacuum(4))
    assert q_two_mode(s, PhasePoint(0, 0)) == pytest.approx(1 / math.pi**2)
    assert q_two_mode(s, PhasePoint(1.0, 0)) == pytest.approx(math.exp(-1) / math.pi**2)


def test_coherent_q_is_gaussian():
    s = make_coherent(0.7 - 0.2j)
    expected = np.exp(-np.abs(POINTS - (0.7 - 0.2j)) ** 2) / math.pi
    np.testing.assert_allclose(q_single(s, POINTS), expected, atol=1e-15)


def test_coherent_rows_large_argument_is_finite():
    rows = coherent_rows([40.0 + 30.0j], 3000, warn=False)
    assert np.all(np.isfinite(rows))
    assert np.sum(np.abs(rows) ** 2) == pytest.approx(1.0, abs=1e-10)


def test_warns_beyond_truncation():
    s = make_coherent(0.5)
    with pytest.warns(AccuracyWarning, match="error bound"):
        q_single_warned = q_two_mode(tensor(s, s), PhasePoint(8.0, 0.0))
    assert q_single_warned >= 0.0


def test_no_warning_inside_truncation():
    s = tensor(make_coherent(1.0), make_vacuum(1))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        q_two_mode(s, PhasePoint(1.0, 0.0))


@pytest.mark.parametrize("zeta", [0.5, 1.0, 0.8 * np.exp(0.9j)])
def test_squeezed_fock_matches_gaussian(zeta):
    s = make_squeezed_vacuum(zeta)
    np.testing.assert_allclose(q_single(s, POINTS), q_analytic_squeezed_coherent(POINTS, 0.0, zeta), atol=1e-14)


@pytest.mark.parametrize("m", [0, 1, 2, 3, 5])
@pytest.mark.parametrize("tau", [0.8, 0.95])
def test_subtracted_routes_agree(m, tau):
    zeta = 1.0
    fock = q_single(subtract_photons(zeta, tau, m).state, POINTS)
    np.testing.assert_allclose(q_analytic_subtracted(POINTS, zeta, tau, m), fock, atol=1e-11)


def test_analytic_herald_probability():
    assert herald_probability_analytic(1.0, 0.9, 3) == pytest.approx(subtract_photons(1.0, 0.9, 3).herald_prob,
                                                                    rel=1e-10)


def test_analytic_order_limit():
    with pytest.raises(UnsupportedOrderError):
        q_analytic_subtracted(0.1, 1.0, 0.9, 8)


def test_analytic_zero_probability():
    with pytest.raises(ZeroProbabilityError):
        q_analytic_subtracted(0.1, 1.0, 1.0, 1)


def test_two_mode_routes_agree():
    p = ModeParams(0.5, 1.6j, 0.9, 3)
    state = psi_m_state(p).state
    for a1, a2 in zip(POINTS, POINTS[::-1] + 1.0j):
        pt = PhasePoint(a1, a2)
        assert q_two_mode(state, pt) == pytest.approx(q_analytic_output(pt, p.zeta, p.lam, p.tau, p.m), abs=1e-12)


def test_unsubtracted_output_at_full_transmission():
    state = psi_state(0.5, 1.0j)
    pt = PhasePoint(0.3, 0.4j)
    assert q_two_mode(state, pt) == pytest.approx(q_analytic_output(pt, 0.5, 1.0j, 1.0, 0), abs=1e-14)


def test_hermite_rule_integrates_gaussian_moments():
    nodes, weights = hermite_plane_rule(10)
    f = np.abs(nodes) ** 4 * np.exp(-np.abs(nodes) ** 2)
    assert np.dot(weights, f) == pytest.approx(2 * math.pi, rel=1e-12)


def test_quadrature_norm_of_psi_state():
    state = psi_state(0.5, 1.0j)
    value, _ = adaptive_quadrature(lambda n: quadrature_norm(state, n), state.dim)
    assert value == pytest.approx(1.0, abs=1e-10)


def test_quadrature_marginal_matches_completeness():
    state = psi_m_state(ModeParams(0.5, 1.6j, 0.9, 1)).state
    for a1 in POINTS[:3]:
        assert quadrature_marginal(state, a1) == pytest.approx(q_marginal(state, a1), abs=1e-13)
        assert quadrature_marginal(state, a1, mode=2) == pytest.approx(q_marginal(state, a1, mode=2), abs=1e-13)


def test_adaptive_quadrature_reports_nodes():
    value, n = adaptive_quadrature(lambda k: 1.0 + 2.0**-k, 4, rel_tol=1e-6)
    assert value == pytest.approx(1.0, abs=1e-6)
    assert n > 4


def test_phase_point_rejects_nan():
    with pytest.raises(ValueError):
        PhasePoint(complex(np.nan, 0))


def test_two_mode_requires_both_coordinates():
    with pytest.raises(ValueError):
        q_two_mode(psi_state(0.5, 1.0), PhasePoint(0.1))
