import warnings

import numpy as np
import pytest

from deltawave import (DomainError, PacketParams, PhysParams, RegimeWarning, SeriesParams, envelope_B,
                       free_evolution, psi1_series_highE, psi1_series_lowE, psi2_series_highE, psi2_series_lowE)
from deltawave.series import (dfact, evanescent_envelope, high_energy_summands, low_energy_summands_psi1,
                              low_energy_summands_psi2, optimal_truncation, series_params)

SQPI = np.sqrt(np.pi)


@pytest.fixture(autouse=True)
def _no_regime_noise():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        yield


def test_double_factorial():
    assert dfact(np.array([-1, 0, 1, 3, 5, 6])).tolist() == [1, 1, 1, 3, 15, 48]


def test_series_params():
    with pytest.raises(DomainError):
        SeriesParams("medium")
    with pytest.raises(DomainError):
        SeriesParams("high-energy", n_terms=0)
    p = PhysParams(k0=2.0, V0=2.0)
    assert series_params(p, "high-energy").eps0 == pytest.approx(4.0)
    assert series_params(p, "low-energy").eps0 == pytest.approx(-8.0)


@pytest.mark.parametrize("form,power", [("literal", lambda n: 2 * n + 2), ("moment", lambda n: n + 1)])
def test_high_energy_summand_pins(form, power):
    p = PhysParams(m=1.3, hbar=0.9, k0=2.0)
    eps = p.m**2 * p.k0**2 / p.hbar**4
    w = 1.5 + 0.7j
    a = high_energy_summands(p, w, 2, form)
    expected = [(-1) ** n * [1, 1, 3][n] * SQPI / (eps ** power(n) * 2**n * w ** (n + 0.5)) for n in range(3)]
    assert np.allclose(a, expected, rtol=1e-14)


def test_high_energy_term_ratio():
    p = PhysParams(k0=1.5)
    w = 0.8 + 2.0j
    a = high_energy_summands(p, w, 5, "literal")
    n = np.arange(5)
    assert np.allclose(np.abs(a[1:] / a[:-1]), (2 * n + 1) / (2 * p.beta**2 * abs(w)), rtol=1e-13)
    a = high_energy_summands(p, w, 5)
    assert np.allclose(np.abs(a[1:] / a[:-1]), (2 * n + 1) / (2 * p.beta * abs(w)), rtol=1e-13)


def test_psi1_n0_term():
    p, q = PhysParams(k0=2.0, V0=0.1), PacketParams(10.0, 1.0, 3.0)
    x, t = np.array([-3.0, 1.0]), 0.7
    w = 1.0 + 0.35j
    r = psi1_series_highE(p, q, x, t, N=0, form="literal")
    assert np.allclose(r.terms[0], envelope_B(p, q, x, t) * SQPI / (p.beta**2 * np.sqrt(w)), rtol=1e-14)
    assert np.allclose(r.value, free_evolution(p, q, x, t) + r.terms[0], rtol=1e-14)


def test_psi2_n0_value():
    p, q = PhysParams(k0=2.0), PacketParams(10.0, 1.0, 0.0)
    r = psi2_series_highE(p, q, 0.0, 0.0, N=0, form="literal")
    B = envelope_B(p, q, 0.0, 0.0)
    assert complex(r.value) == pytest.approx(5j * B * SQPI / 16, rel=1e-14)


def test_high_energy_properties():
    q = PacketParams(10.0, 1.0, 5.0)
    x = np.linspace(-4, 4, 9)
    r0 = psi2_series_highE(PhysParams(k0=0.0), q, x, 1.0)
    assert np.all(r0.value == 0)
    assert np.array_equal(psi1_series_highE(PhysParams(k0=0.0), q, x, 1.0).value, free_evolution(PhysParams(k0=0.0), q, x, 1.0))
    r = psi2_series_highE(PhysParams(k0=3.0, V0=0.5), q, x, 2.0)
    assert np.allclose(r.value, r.value[::-1], rtol=1e-14)
    # literal power: the correction dies off with k0; moment power: a finite hard-wall limit remains
    big = psi1_series_highE(PhysParams(k0=1e4), q, x, 1.0, form="literal")
    assert np.max(np.abs(big.value - big.base)) < 1e-6
    a = psi1_series_highE(PhysParams(k0=1e4), q, x, 1.0)
    b = psi1_series_highE(PhysParams(k0=2e4), q, x, 1.0)
    assert np.max(np.abs(a.value - a.base)) > 1e-3
    assert np.allclose(a.value, b.value, rtol=0, atol=1e-7)


def test_optimal_truncation():
    assert optimal_truncation([5, 3, 1, 2, 4]) == 2
    assert optimal_truncation([5, 3, 1]) == 2
    p = PhysParams(k0=0.5)
    w = 0.3 + 0.1j
    a = high_energy_summands(p, w, 12)
    r = psi1_series_highE(p, PacketParams(10.0, np.sqrt(0.3), 5.0), 0.0, 0.2, N=12)
    mags = np.abs(a)
    assert mags[r.truncation_index] == mags[: r.truncation_index + 1].min()
    assert r.truncation_index < 12 and mags[r.truncation_index + 1] > mags[r.truncation_index]


def test_regime_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        with pytest.raises(RegimeWarning):
            psi1_series_highE(PhysParams(k0=5.0, V0=10.0), PacketParams(10.0, 1.0, 1.0), 0.0, 1.0)
        with pytest.raises(RegimeWarning):
            psi1_series_lowE(PhysParams(k0=1.0, V0=0.1), PacketParams(10.0, 1.0, 3.0), 0.0, 1.0)


def test_low_energy_requires_offset():
    with pytest.raises(DomainError):
        psi1_series_lowE(PhysParams(V0=0.0), PacketParams(), 0.0, 1.0)
    with pytest.raises(DomainError):
        psi2_series_lowE(PhysParams(V0=0.0), PacketParams(), 0.0, 1.0)


@pytest.mark.parametrize("N", [1, 4, 7])
def test_low_energy_even_terms_only(N):
    a = low_energy_summands_psi1(PhysParams(k0=1.0, V0=20.0), 1.0 + 1j, N)
    assert len(a) == int(np.ceil(N / 2)) + 1


def test_low_energy_psi1_pins():
    p = PhysParams(m=1.2, hbar=0.8, k0=1.5, V0=30.0)
    w = 2.0 + 0.5j
    Z = p.m**2 * p.k0**2 * np.sqrt(2 * p.m * p.V0)
    a = low_energy_summands_psi1(p, w, 4)
    n = np.array([0, 2, 4])
    expected = dfact(n - 1) * p.hbar ** (5 * (n + 1)) * SQPI / ((-1j * Z) ** (2 * (n + 2)) * 2 ** (n / 2) * w ** (n + 0.5))
    assert np.allclose(a, expected, rtol=1e-13)


def test_low_energy_k0_scaling():
    """Doubling k0 rescales each summand by its displayed power of k0^2."""
    w = 1.0 + 0.4j
    p1, p2 = PhysParams(k0=1.0, V0=40.0), PhysParams(k0=2.0, V0=40.0)
    a1, a2 = low_energy_summands_psi1(p1, w, 4), low_energy_summands_psi1(p2, w, 4)
    n = np.array([0, 2, 4])
    assert np.allclose(a2 / a1, 4.0 ** (-2 * (n + 2)), rtol=1e-12)
    ne, e1, no, o1 = low_energy_summands_psi2(p1, w, 4)
    _, e2, _, o2 = low_energy_summands_psi2(p2, w, 4)
    assert np.allclose(e2 / e1, 4.0 ** -(ne + 1.0), rtol=1e-12)
    assert np.allclose(o2 / o1, 4.0 ** -(no + 1.0), rtol=1e-12)


def test_low_energy_psi2_subseries():
    p = PhysParams(k0=1.0, V0=50.0)
    w = 1.0 + 0.0j
    s = 1.0 / np.sqrt(100.0)
    ne, even, no, odd = low_energy_summands_psi2(p, w, 3)
    assert ne.tolist() == [0, 2] and no.tolist() == [-1, 1, 3]
    assert even[0] == pytest.approx(s * SQPI)
    assert odd[0] == pytest.approx(-SQPI)  # n = -1: (-1)^-1 (-1)!! s^0 sqrt(pi) / (2^0 w^(1/2))
    assert odd[1] == pytest.approx(-(s**2) * SQPI / 2.0)


def test_low_energy_psi2_envelope():
    p, q = PhysParams(k0=1.0, V0=50.0), PacketParams(20.0, 4.0, 1.0)
    x = np.linspace(0, 0.3, 7)
    r = psi2_series_lowE(p, q, x, 0.0)
    lit = psi2_series_lowE(p, q, x, 0.0, envelope="literal")
    assert np.allclose(np.abs(evanescent_envelope(p, x)), np.exp(-10.0 * x))
    assert np.allclose(np.abs(evanescent_envelope(p, x, "literal")), 1.0)
    assert not np.allclose(r.value, lit.value)
    with pytest.raises(DomainError):
        evanescent_envelope(p, x, "growing")
    sym = psi2_series_lowE(p, q, np.array([-0.2, 0.2]), 1.0)
    assert sym.value[0] == pytest.approx(sym.value[1], rel=1e-14)
    assert np.all(psi2_series_lowE(PhysParams(k0=0.0, V0=50.0), q, x, 1.0).value == 0)
    assert isinstance(r.truncation_index, tuple)
