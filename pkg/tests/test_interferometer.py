import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from noonsim.errors import NonConvergenceError, ZeroProbabilityError
from noonsim.fock import ModeParams, PureState2, make_coherent, make_fock, make_squeezed_vacuum, make_vacuum, tensor
from noonsim.interferometer import (
    beam_splitter,
    ecs_match_mean,
    ecs_mean_photon,
    ecs_state,
    edge_amplitudes,
    herald_probabilities,
    psi_m_state,
    psi_state,
    subtract_photons,
)

taus = st.floats(min_value=0.0, max_value=1.0)


def _random_state(seed, dim=8):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    # keep the input inside the total-photon range the output can represent
    amps[np.add.outer(np.arange(dim), np.arange(dim)) >= dim] = 0
    return PureState2(amps / np.linalg.norm(amps))


def _expm_beam_splitter(amps, tau):
    dim = amps.shape[0]
    big = 2 * dim
    a = np.diag(np.sqrt(np.arange(1, big)), 1)
    eye = np.eye(big)
    a1, a2 = np.kron(a, eye), np.kron(eye, a)
    theta = math.acos(math.sqrt(tau))
    gen = theta * (a1.conj().T @ a2 - a2.conj().T @ a1)
    vec = np.zeros((big, big), dtype=complex)
    vec[:dim, :dim] = amps
    return (expm(gen) @ vec.ravel()).reshape(big, big)


def test_single_photon_balanced():
    out = beam_splitter(tensor(make_fock(1, 2), make_vacuum(2)), 0.5)
    assert out.amps[1, 0] == pytest.approx(1 / math.sqrt(2))
    assert out.amps[0, 1] == pytest.approx(-1 / math.sqrt(2))


@pytest.mark.parametrize("tau", [0.0, 0.2, 0.5, 0.9, 1.0])
def test_matches_matrix_exponential(tau):
    s = _random_state(3, 6)
    out = beam_splitter(s, tau)
    ref = _expm_beam_splitter(s.amps, tau)
    d = out.dim
    np.testing.assert_allclose(out.amps, ref[:d, :d], atol=1e-12)


def test_identity_at_full_transmission():
    s = _random_state(1)
    np.testing.assert_allclose(beam_splitter(s, 1.0).amps[:8, :8], s.amps, atol=1e-15)


def test_hong_ou_mandel():
    out = beam_splitter(tensor(make_fock(1, 2), make_fock(1, 2)), 0.5)
    assert abs(out.amps[1, 1]) < 1e-15
    assert abs(out.amps[2, 0]) ** 2 == pytest.approx(0.5)
    assert abs(out.amps[0, 2]) ** 2 == pytest.approx(0.5)


@given(st.integers(0, 2**32 - 1), taus)
@settings(max_examples=25, deadline=None)
def test_unitary_and_invertible(seed, tau):
    s = _random_state(seed)
    out = beam_splitter(s, tau)
    assert out.norm2() == pytest.approx(1.0, abs=1e-12)
    back = beam_splitter(out, tau, inverse=True)
    np.testing.assert_allclose(back.amps[:8, :8], s.amps, atol=1e-12)


def test_conserves_total_photon_number():
    s = _random_state(7)
    out = beam_splitter(s, 0.3)
    total = np.add.outer(np.arange(out.dim), np.arange(out.dim))
    n_in = np.add.outer(np.arange(8), np.arange(8))
    assert np.sum(total * np.abs(out.amps) ** 2) == pytest.approx(np.sum(n_in * np.abs(s.amps) ** 2))


def test_rejects_bad_tau():
    with pytest.raises(ValueError):
        beam_splitter(_random_state(0), 1.2)


def test_coherent_inputs_stay_coherent():
    # a 50/50 splitter maps |a>|b> to |(a + b)/sqrt2>|(b - a)/sqrt2>
    a, b = 1.0 + 0.5j, -0.3j
    s = tensor(make_coherent(a, 40), make_coherent(b, 40))
    out = beam_splitter(s, 0.5)
    ref = tensor(make_coherent((a + b) / math.sqrt(2), 40, None),
                 make_coherent((b - a) / math.sqrt(2), 40, None))
    assert abs(np.vdot(ref.amps, out.amps[:40, :40])) == pytest.approx(1.0, abs=1e-10)


def test_subtraction_without_photons_at_full_transmission_is_identity():
    out = subtract_photons(1.0, 1.0, 0)
    assert out.herald_prob == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("tau, zeta", [(1.0, 1.0), (0.9, 0.0)])
def test_zero_probability_herald(tau, zeta):
    with pytest.raises(ZeroProbabilityError):
        subtract_photons(zeta, tau, 2)


def test_subtraction_parity():
    odd = subtract_photons(1.0, 0.9, 3).state.amps
    assert np.all(odd[0::2] == 0)
    even = subtract_photons(1.0, 0.9, 2).state.amps
    assert np.all(even[1::2] == 0)


def test_subtraction_small_tap_limit():
    # as tau -> 1 one subtracted photon acts as the annihilation operator
    out = subtract_photons(0.4, 1 - 1e-8, 1, dim=60, tol=None).state
    sq = make_squeezed_vacuum(0.4, 60, None).amps
    ref = np.sqrt(np.arange(1, 60)) * sq[1:]
    ref = ref / np.linalg.norm(ref)
    assert abs(np.vdot(ref, out.amps[:59])) == pytest.approx(1.0, abs=1e-6)


def test_herald_reference_probability():
    assert subtract_photons(1.0, 0.9, 3).herald_prob == pytest.approx(3.562e-3, rel=1e-3)


def test_herald_probabilities_sum_to_one():
    assert herald_probabilities(1.0, 0.9, 200).sum() == pytest.approx(1.0, abs=1e-10)


def test_psi_state_reference_mean():
    assert psi_state(1.0, 2.82j).mean_photon() == pytest.approx(9.33, abs=0.01)


@given(st.floats(0.0, 1.5), st.floats(0.0, 3.0), st.floats(0.0, 2 * math.pi))
@settings(max_examples=15, deadline=None)
def test_psi_state_mean_is_sum_of_inputs(zeta, lam_abs, phase):
    lam = lam_abs * np.exp(1j * phase)
    expected = math.sinh(zeta) ** 2 + lam_abs**2
    assert psi_state(zeta, lam).mean_photon() == pytest.approx(expected, abs=1e-8)


def test_psi_m_state_fixed_dim():
    out = psi_m_state(ModeParams(1.0, 2.0j, 0.9, 1), dim=30)
    assert out.state.dim == 30


def test_edge_amplitudes_match_full_state():
    p = ModeParams(1.0, 2.68j, 0.9, 3)
    full = psi_m_state(p).state.amps
    e1, e2, _ = edge_amplitudes(p)
    n = min(full.shape[0], e1.size)
    np.testing.assert_allclose(e1[:n], full[:n, 0], atol=1e-13)
    np.testing.assert_allclose(e2[:n], full[0, :n], atol=1e-13)


def test_ecs_normalized_and_mean():
    s = ecs_state(3.0j, 1)
    assert s.norm2() == pytest.approx(1.0, abs=1e-12)
    assert s.mean_photon() == pytest.approx(ecs_mean_photon(3.0, 1), abs=1e-10)
    assert ecs_state(3.0j, -1).mean_photon() == pytest.approx(ecs_mean_photon(3.0, -1), abs=1e-10)


def test_ecs_reference_means():
    assert ecs_mean_photon(3.0, 1) == pytest.approx(8.99889, abs=1e-5)
    assert ecs_mean_photon(3.0, -1) == pytest.approx(9.00111, abs=1e-5)


@pytest.mark.xfail(strict=True, reason="both parities differ from |lam|^2 by about 1.1e-3 at |lam| = 3")
def test_ecs_mean_equals_nine_tightly():
    assert abs(ecs_state(3.0j, 1).mean_photon() - 9.0) <= 1e-6


def test_ecs_match_mean_round_trip():
    lam = ecs_match_mean(7.5, -1)
    assert ecs_mean_photon(abs(lam), -1) == pytest.approx(7.5, abs=1e-10)
    assert lam.real == 0.0


def test_ecs_match_mean_reports_bracket():
    with pytest.raises(NonConvergenceError, match="bracket"):
        ecs_match_mean(0.5, -1)
