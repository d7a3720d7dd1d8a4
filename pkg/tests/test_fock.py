import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noonsim.errors import TruncationError
from noonsim.fock import (
    ModeParams,
    PureState1,
    PureState2,
    default_dim,
    inner,
    make_coherent,
    make_fock,
    make_squeezed_vacuum,
    make_vacuum,
    mean_photon,
    normalize,
    photon_distribution,
    squeezed_tail,
    tensor,
)
from noonsim.noon import TABLE1_REFERENCE
from scipy.stats import poisson

complexes = st.complex_numbers(max_magnitude=6.0, allow_nan=False, allow_infinity=False)


def test_coherent_vacuum_limit():
    s = make_coherent(0, 4)
    np.testing.assert_array_equal(s.amps, [1, 0, 0, 0])


def test_coherent_mean_photon():
    assert make_coherent(2.68j).mean_photon() == pytest.approx(7.1824, abs=1e-9)


@given(complexes)
@settings(max_examples=30, deadline=None)
def test_coherent_normalized(lam):
    s = make_coherent(lam)
    assert s.norm2() == pytest.approx(1.0, abs=1e-12)
    assert s.tail_mass < 1e-12


def test_coherent_full_support():
    s = make_coherent(0.3 + 0.1j, 10)
    assert np.all(np.abs(s.amps) > 0)


def test_coherent_large_photon_numbers_do_not_overflow():
    s = make_coherent(15.0)
    assert s.dim > 200
    assert np.all(np.isfinite(s.amps))
    assert s.mean_photon() == pytest.approx(225.0, rel=1e-10)


def test_coherent_too_small_dim_reports_tail():
    with pytest.raises(TruncationError) as info:
        make_coherent(3.0, 5)
    assert info.value.tail_mass == pytest.approx(poisson.sf(4, 9.0))


def test_squeezed_zero_is_vacuum():
    np.testing.assert_array_equal(make_squeezed_vacuum(0, 5).amps, [1, 0, 0, 0, 0])


def test_squeezed_mean_photon():
    assert make_squeezed_vacuum(1.0).mean_photon() == pytest.approx(math.sinh(1.0) ** 2, abs=1e-9)


@given(complexes.filter(lambda z: abs(z) < 2.5))
@settings(max_examples=20, deadline=None)
def test_squeezed_parity_and_norm(zeta):
    s = make_squeezed_vacuum(zeta)
    assert np.all(s.amps[1::2] == 0)
    assert s.norm2() == pytest.approx(1.0, abs=1e-12)


def test_squeezed_phase_convention():
    # amplitude on |2> is -e^{i arg zeta} tanh|zeta| sqrt(2)/2 / sqrt(cosh|zeta|)
    zeta = 0.7 * np.exp(0.4j)
    s = make_squeezed_vacuum(zeta, 10, None)
    expected = -np.exp(0.4j) * math.tanh(0.7) / math.sqrt(2.0) / math.sqrt(math.cosh(0.7))
    assert s.amps[2] == pytest.approx(expected, abs=1e-14)


def test_squeezed_tail_matches_direct_sum():
    full = make_squeezed_vacuum(1.5, 600, None)
    p = full.photon_distribution()
    assert squeezed_tail(1.5, 40) == pytest.approx(p[40:].sum(), rel=1e-8)


def test_fock_basis():
    s = make_fock(3, 10)
    assert s.amps[3] == 1 and np.count_nonzero(s.amps) == 1
    assert make_vacuum(3).amps[0] == 1


def test_fock_orthonormal():
    for n in range(4):
        for k in range(4):
            assert inner(make_fock(n, 6), make_fock(k, 6)) == (1.0 if n == k else 0.0)


def test_fock_out_of_range():
    with pytest.raises(ValueError):
        make_fock(5, 5)


def test_tensor_vacuum():
    s = tensor(make_vacuum(3), make_vacuum(3))
    assert s.amps[0, 0] == 1 and s.norm2() == 1


def test_tensor_marginal_is_poisson():
    s = tensor(make_coherent(2.68j), make_vacuum(1))
    marginal = photon_distribution(s).sum(axis=1)
    np.testing.assert_allclose(marginal, poisson.pmf(np.arange(s.dim), 7.1824), atol=1e-14)


def test_tensor_promotes_dims():
    s = tensor(make_coherent(1.0, 30), make_fock(1, 3))
    assert s.dim == 30
    assert mean_photon(s) == pytest.approx(2.0, abs=1e-9)


def test_inner_with_itself_and_padding():
    a = make_coherent(0.5 + 0.5j)
    assert inner(a, a) == pytest.approx(a.norm2())
    assert inner(a, a.padded(a.dim + 7)) == pytest.approx(1.0)


def test_inner_rejects_mixed_mode_counts():
    with pytest.raises(ValueError):
        inner(make_vacuum(2), tensor(make_vacuum(2), make_vacuum(2)))


def test_normalize():
    s, norm = normalize(PureState1(np.array([3.0, 4.0])))
    assert norm == 5.0
    assert s.norm2() == pytest.approx(1.0)


def test_states_are_read_only():
    s = make_coherent(1.0)
    with pytest.raises(ValueError):
        s.amps[0] = 0


def test_trimmed_respects_tolerance():
    s = tensor(make_coherent(2.0, 80, None), make_coherent(1.0, 80, None))
    t = s.trimmed(1e-12)
    assert t.dim < s.dim
    assert t.tail_mass < 1e-12
    assert t.norm2() == pytest.approx(1.0, abs=1e-12)


def test_mode_params_validation():
    with pytest.raises(ValueError):
        ModeParams(1.0, 1j, tau=1.5)
    with pytest.raises(ValueError):
        ModeParams(1.0, 1j, m=-1)
    assert ModeParams(1.0, 2j, 0.9, 3).m == 3


def test_pure_state2_requires_square():
    with pytest.raises(ValueError):
        PureState2(np.zeros((2, 3)))


def test_auto_sizing_meets_tail_tolerance_for_table_rows():
    for (_, zeta), ref in TABLE1_REFERENCE.items():
        s = make_squeezed_vacuum(zeta)
        c = make_coherent(1j * ref[1])
        assert s.tail_mass < 1e-12 and c.tail_mass < 1e-12
        assert s.dim >= default_dim(math.sinh(zeta) ** 2)


@pytest.mark.xfail(strict=True, reason="the mean-based starting rule undersizes squeezed states; "
                                       "auto-sizing grows the truncation until the tail bound holds")
def test_mean_based_rule_alone_suffices_for_squeezed_rows():
    for zeta in (0.5, 1.0, 1.5, 2.0):
        assert squeezed_tail(zeta, default_dim(math.sinh(zeta) ** 2)) < 1e-12
