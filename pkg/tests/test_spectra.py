import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from oracles import gaussian_vrms2_trapezoid
from patchforce import (
    BandLimitedSpectrum,
    ConvergenceError,
    DomainError,
    GaussianSpectrum,
    TabulatedSpectrum,
    autocorr_eval,
    autocorr_to_psd,
    psd_eval,
    vrms_of,
)
from patchforce.spectra import tabulate, vrms_squared

UM = 1e-6


def test_gaussian_psd_at_zero():
    assert psd_eval(GaussianSpectrum(1.0, 10 * UM), 0.0) == pytest.approx(1e-10, rel=1e-14)


def test_zero_amplitude_gaussian():
    s = GaussianSpectrum(0.0, 10 * UM)
    assert np.all(psd_eval(s, np.linspace(0, 1e6, 7)) == 0)
    assert vrms_of(s) == 0


def test_band_limited_psd_inside_band():
    s = BandLimitedSpectrum(0.01, 1e4, 1e6)
    assert psd_eval(s, 1e5) == pytest.approx(2 * 0.01**2 / (1e12 - 1e8), rel=1e-14)
    assert psd_eval(s, 1e3) == 0 and psd_eval(s, 2e6) == 0


def test_negative_k_rejected():
    with pytest.raises(DomainError):
        psd_eval(GaussianSpectrum(1.0, UM), -1.0)


@pytest.mark.parametrize("kw", [dict(v0=-1, lam=1e-6), dict(v0=1, lam=0)])
def test_gaussian_invariants(kw):
    with pytest.raises(DomainError):
        GaussianSpectrum(**kw)


def test_band_limited_invariants():
    with pytest.raises(DomainError):
        BandLimitedSpectrum(0.01, 1e6, 1e4)
    with pytest.raises(DomainError):
        BandLimitedSpectrum(0.01, -1.0, 1e4)


def test_tabulated_invariants():
    with pytest.raises(DomainError):
        TabulatedSpectrum([0, 2, 1], [1, 1, 1])
    with pytest.raises(DomainError):
        TabulatedSpectrum([0, 1, 2], [1, -1, 0])


def test_band_limited_vrms_is_its_parameter():
    assert vrms_of(BandLimitedSpectrum(0.01, 1e4, 1e6)) == pytest.approx(0.01, rel=1e-10)


def test_gaussian_vrms_against_trapezoid_oracle():
    # oracle: plain trapezoid sum of k S(k); closed form V0^2 / (2 pi)
    oracle = gaussian_vrms2_trapezoid(1.0, 10 * UM)
    assert oracle == pytest.approx(1 / (2 * math.pi), rel=1e-8)
    assert vrms_of(GaussianSpectrum(1.0, 10 * UM)) ** 2 == pytest.approx(oracle, rel=1e-8)
    assert vrms_of(GaussianSpectrum(1.0, 10 * UM)) == pytest.approx(0.3989, abs=1e-4)


def test_tabulated_vrms_exact_piecewise():
    k = np.array([0.0, 1.0, 3.0, 4.0])
    S = np.array([2.0, 1.0, 0.5, 0.0])
    # per piece: h/6 (S0 (2 k0 + k1) + S1 (k0 + 2 k1)), worked by hand
    ref = 1 / 6 * (2 * 1 + 1 * 2) + 2 / 6 * (1 * (2 + 3) + 0.5 * (1 + 6)) + 1 / 6 * (0.5 * (6 + 4) + 0)
    assert TabulatedSpectrum(k, S).vrms_squared_exact() == pytest.approx(ref, rel=1e-14)


def test_tabulated_nondecaying_tail_is_an_error():
    with pytest.raises(ConvergenceError):
        vrms_of(TabulatedSpectrum([0.0, 1.0, 2.0], [1.0, 1.0, 1.0]))


def test_tabulated_interpolation_and_extrapolation():
    s = TabulatedSpectrum([1.0, 3.0], [2.0, 4.0])
    assert psd_eval(s, 2.0) == pytest.approx(3.0)
    assert psd_eval(s, 0.5) == 0 and psd_eval(s, 3.5) == 0


def test_single_plate_doubling():
    s = TabulatedSpectrum.from_single_plate([0, 1, 2], [1, 0.5, 0])
    assert np.array_equal(s.S, [2, 1, 0])


def test_autocorr_gaussian_examples():
    s = GaussianSpectrum(1.0, 10 * UM)
    assert autocorr_eval(s, 0.0) == pytest.approx(1.0)
    assert autocorr_eval(s, 10 * UM) == pytest.approx(math.exp(-1), rel=1e-14)
    assert autocorr_eval(s, 1.0) == 0.0


def test_autocorr_band_limited_matches_generic_transform():
    s = BandLimitedSpectrum(0.01, 1e4, 1e6)
    # the band is open: sample just inside each edge
    tab = tabulate(s, np.concatenate([[0, 1e4], np.linspace(1e4 * (1 + 1e-12), 1e6 * (1 - 1e-12), 4001), [1e6]]))
    r = np.array([0.0, 1e-6, 5e-6, 2e-5])
    assert np.allclose(autocorr_eval(s, r), autocorr_eval(tab, r), rtol=1e-6, atol=1e-12 * abs(autocorr_eval(s, 0)))


def test_autocorr_zero_lag_is_2pi_vrms2():
    # fixed convention: R(0) = 2 pi int k S dk
    s = BandLimitedSpectrum(0.02, 0.0, 1e6)
    assert autocorr_eval(s, 0.0) == pytest.approx(2 * math.pi * 0.02**2, rel=1e-12)


def test_gaussian_round_trip():
    s = GaussianSpectrum(1.0, 10 * UM)
    r = np.linspace(0.0, 8 * s.lam, 400)
    k = np.linspace(0.0, 3 / s.lam, 61)
    tab = autocorr_to_psd(r, autocorr_eval(s, r), k)
    assert np.max(np.abs(tab.S / psd_eval(s, k) - 1)) <= 1e-4


def test_autocorr_to_psd_zero():
    r = np.linspace(0, 1e-4, 50)
    assert np.all(autocorr_to_psd(r, np.zeros_like(r)).S == 0)


def test_autocorr_to_psd_rejects_non_decaying():
    r = np.linspace(0, 1e-4, 50)
    with pytest.raises(DomainError):
        autocorr_to_psd(r, np.ones_like(r))


def test_narrow_autocorr_gives_broad_flat_psd():
    lam = 1 * UM
    s = GaussianSpectrum(1.0, lam)
    r = np.linspace(0.0, 8 * lam, 400)
    k = np.linspace(0.0, 0.1 / lam, 11)
    tab = autocorr_to_psd(r, autocorr_eval(s, r), k)
    assert np.ptp(tab.S) / tab.S[0] < 0.04
    # S(0) = lam^2 v0^2 = 2 pi lam^2 vrms^2
    assert tab.S[0] == pytest.approx(2 * math.pi * vrms_squared(s) * lam**2, rel=1e-4)


amp = st.floats(0.0, 1.0)
length = st.floats(1e-8, 1e-3)


@given(amp, length, st.one_of(st.just(0.0), st.floats(1e-6, 5), st.floats(-5, -1e-6)))
def test_scaling_property(v0, lam, c):
    s = GaussianSpectrum(v0, lam)
    k = np.array([0.0, 0.3 / lam, 1.0 / lam])
    assert np.allclose(psd_eval(s.scaled(c), k), c * c * psd_eval(s, k), rtol=1e-12, atol=0)
    assert vrms_of(s.scaled(c)) == pytest.approx(abs(c) * vrms_of(s), rel=1e-10, abs=1e-300)


@given(st.floats(0.0, 1.0), st.one_of(st.just(0.0), st.floats(1e-3, 1e6)), st.floats(1.01, 100.0))
def test_band_limited_self_consistency(vrms, k_min, ratio):
    s = BandLimitedSpectrum(vrms, k_min, max(k_min, 1.0) * ratio)
    assert vrms_squared(s) == pytest.approx(vrms**2, rel=1e-8, abs=1e-300)
    assert vrms_of(s) >= 0


@given(amp, length)
def test_gaussian_self_consistency(v0, lam):
    s = GaussianSpectrum(v0, lam)
    assert vrms_squared(s) == pytest.approx(v0**2 / (2 * math.pi), rel=1e-8, abs=1e-300)


@given(st.lists(st.floats(0.0, 10.0), min_size=3, max_size=12))
def test_tabulated_self_consistency(values):
    k = np.linspace(0.0, 1e6, len(values) + 1)
    S = np.append(values, 0.0)
    s = TabulatedSpectrum(k, S)
    ref = sum(integrate.quad(lambda x: x * np.interp(x, k, S), a, b, epsrel=1e-13)[0] for a, b in zip(k[:-1], k[1:]))
    assert vrms_squared(s) == pytest.approx(ref, rel=1e-8, abs=1e-30)
