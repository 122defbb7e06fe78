"""Plane-plane and sphere-plane patch energies and forces.

Forces are attraction-positive.  All integrals run over the combined spectrum
``S(k)`` of :mod:`patchforce.spectra`:

=====================  ==============================================
total energy / area    (eps0/2) int k^2 coth(kd) S dk
interaction / area     (eps0/2) int k^2 exp(-kd)/sinh(kd) S dk
plane-plane pressure   (eps0/2) int k^3 S / sinh^2(kd) dk
sphere-plane (PFA)     pi eps0 R int k^2 exp(-kd)/sinh(kd) S dk
=====================  ==============================================

The total energy keeps the d-independent self energy of each plate
(``(eps0/2) int k^2 S dk``); only the interaction energy is physical for force
extraction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .constants import EPS0
from .errors import DomainError
from .spectra import BandLimitedSpectrum, GaussianSpectrum, PatchSpectrum, vrms_squared

PFA_LIMIT = 1e-2


class PfaValidityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SpherePlaneGeometry:
    sphere_radius: float
    separation: float

    def __post_init__(self):
        if not self.sphere_radius > 0:
            raise DomainError(f"sphere radius must be > 0, got {self.sphere_radius}")
        if not self.separation > 0:
            raise DomainError(f"separation must be > 0, got {self.separation}")

    @property
    def pfa_valid(self):
        return self.separation / self.sphere_radius < PFA_LIMIT

    def warn_if_invalid(self):
        if not self.pfa_valid:
            warnings.warn(
                f"d/R = {self.separation / self.sphere_radius:.3g} >= {PFA_LIMIT}: "
                "proximity force approximation is doubtful",
                PfaValidityWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class ModeBoundary:
    """One cosine mode ``cos(k s)`` with amplitudes ``v_a`` at z=0 and ``v_b`` at z=d."""

    k: float
    v_a: float
    v_b: float
    d: float

    def __post_init__(self):
        if not self.k >= 0:
            raise DomainError("mode wavenumber must be >= 0")
        if not self.d > 0:
            raise DomainError("separation must be > 0")


def _check_d(d):
    if not d > 0:
        raise DomainError(f"separation must be > 0, got {d}")
    return float(d)


# geometric kernels, written to stay finite for large kd

def _coth(x):
    return 1.0 / np.tanh(x)


def _exp_over_sinh(x):
    # exp(-x)/sinh(x) = 2/(exp(2x) - 1)
    with np.errstate(over="ignore"):
        return 2.0 / np.expm1(2.0 * x)


def _inv_sinh2(x):
    e = np.exp(-2.0 * x)
    return 4.0 * e / np.square(-np.expm1(-2.0 * x))


def _integrate(kernel, spectrum: PatchSpectrum, d=None):
    scales = list(spectrum.k_scales())
    if d is not None:
        scales.append(1.0 / d)

    def f(k):
        k = np.asarray(k, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = kernel(k) * spectrum.psd(k)
        return np.where(k > 0, val, 0.0)

    return quadrature.semi_infinite(f, scales, spectrum.breakpoints())


def self_energy_pp(spectrum: PatchSpectrum) -> float:
    """Large-separation plateau of the total energy, ``(eps0/2) int k^2 S dk``."""
    return 0.5 * EPS0 * _integrate(np.square, spectrum)


def energy_pp_total(spectrum: PatchSpectrum, d: float) -> float:
    d = _check_d(d)
    return 0.5 * EPS0 * _integrate(lambda k: k * k * _coth(k * d), spectrum, d)


def energy_pp_interaction(spectrum: PatchSpectrum, d: float) -> float:
    d = _check_d(d)
    return 0.5 * EPS0 * _integrate(lambda k: k * k * _exp_over_sinh(k * d), spectrum, d)


def force_pp(spectrum: PatchSpectrum, d: float) -> float:
    """Attractive pressure (N/m^2), ``-dU/dd`` of the interaction energy."""
    d = _check_d(d)
    return 0.5 * EPS0 * _integrate(lambda k: k**3 * _inv_sinh2(k * d), spectrum, d)


def force_sp(spectrum: PatchSpectrum, geom: SpherePlaneGeometry) -> float:
    """Sphere-plane patch force in the proximity force approximation (N)."""
    geom.warn_if_invalid()
    d = geom.separation
    integral = _integrate(lambda k: k * k * _exp_over_sinh(k * d), spectrum, d)
    return math.pi * EPS0 * geom.sphere_radius * integral


def force_sp_small_kd(spectrum, geom: SpherePlaneGeometry) -> float:
    """``pi eps0 R vrms^2 / d``; valid when every patch wavenumber has kd << 1.

    ``spectrum`` may also be a bare V_rms value in volts.
    """
    if isinstance(spectrum, (int, float)):
        vrms2 = float(spectrum) ** 2
    else:
        vrms2 = vrms_squared(spectrum)
    return math.pi * EPS0 * geom.sphere_radius * vrms2 / geom.separation


def force_sp_gaussian(spectrum: GaussianSpectrum, geom: SpherePlaneGeometry, panels=32, order=48) -> float:
    """Gaussian-model force in the dimensionless form with ``u = k lam``::

        F = 2 pi eps0 R v0^2 / lam * int_0^inf u^2 exp(-pi u^2) / (exp(2 u d / lam) - 1) du

    Fixed Gauss-Legendre on ``u in [0, 4]`` (``exp(-16 pi)`` ~ 1e-22).
    """
    lam = spectrum.lam
    ratio = geom.separation / lam

    def f(u):
        return u * u * np.exp(-math.pi * u * u) / np.expm1(2.0 * u * ratio)

    integral = quadrature.gauss_legendre(f, 0.0, 4.0, panels=panels, order=order)
    return 2.0 * math.pi * EPS0 * geom.sphere_radius * spectrum.v0**2 / lam * integral


def force_sp_band_limited(spectrum: BandLimitedSpectrum, geom: SpherePlaneGeometry, order=48) -> float:
    """Band-limited force as a finite-band integral::

        F = 2 pi eps0 vrms^2 R / (k_max^2 - k_min^2) * int_{k_min}^{k_max} k^2 exp(-kd)/sinh(kd) dk

    The prefactor follows from the generic sphere-plane integral with
    ``S = 2 vrms^2 / (k_max^2 - k_min^2)``; a 4 pi prefactor would double count.
    """
    d = geom.separation
    # past k_min + 21/d the band contributes below exp(-42) of its start
    k_hi = min(spectrum.k_max, spectrum.k_min + 21.0 / d)
    panels = max(8, int(math.ceil((k_hi - spectrum.k_min) * d)))
    integral = quadrature.gauss_legendre(
        lambda k: k * k * _exp_over_sinh(k * d), spectrum.k_min, k_hi, panels=panels, order=order
    )
    pref = 2.0 * math.pi * EPS0 * spectrum.vrms**2 * geom.sphere_radius
    return pref / (spectrum.k_max**2 - spectrum.k_min**2) * integral


def effective_area(geom: SpherePlaneGeometry):
    """Return ``(r_eff, A_eff)``: radius where the gap doubles, and ``2 pi R d``."""
    R, d = geom.sphere_radius, geom.separation
    return math.sqrt(2.0 * R * d), 2.0 * math.pi * R * d


def mode_potential(mode: ModeBoundary, s, z):
    """Potential of one mode between the plates; ``s`` runs along the wavevector."""
    k, d = mode.k, mode.d
    s = np.asarray(s, dtype=float)
    z = np.asarray(z, dtype=float)
    if k == 0:
        return mode.v_a + (mode.v_b - mode.v_a) * z / d
    # sinh(k(d-z))/sinh(kd) and sinh(kz)/sinh(kd) in overflow-free form
    den = -np.expm1(-2.0 * k * d)
    lower = np.exp(-k * z) * (-np.expm1(-2.0 * k * (d - z))) / den
    upper = np.exp(-k * (d - z)) * (-np.expm1(-2.0 * k * z)) / den
    return np.cos(k * s) * (mode.v_a * lower + mode.v_b * upper)


def mode_energy_pp(mode: ModeBoundary, interaction: bool = False) -> float:
    """Field energy per unit area of one mode, averaged over a period.

    ``(eps0 k / 4) [(v_a^2 + v_b^2) coth(kd) - 2 v_a v_b / sinh(kd)]``;
    with ``interaction=True`` the ``d -> inf`` limit ``(eps0 k/4)(v_a^2+v_b^2)``
    is subtracted.
    """
    k, d, va, vb = mode.k, mode.d, mode.v_a, mode.v_b
    if k == 0:
        # uniform mode: plain capacitor, vanishing at infinite separation
        return 0.5 * EPS0 * (va - vb) ** 2 / d
    x = k * d
    csch = 2.0 * math.exp(-x) / -math.expm1(-2.0 * x)
    if interaction:
        coth_minus_1 = 2.0 / math.expm1(2.0 * x)
        return 0.25 * EPS0 * k * ((va * va + vb * vb) * coth_minus_1 - 2.0 * va * vb * csch)
    coth = 1.0 / math.tanh(x)
    return 0.25 * EPS0 * k * ((va * va + vb * vb) * coth - 2.0 * va * vb * csch)
