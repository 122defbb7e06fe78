"""Isotropic patch-potential statistics.

Every spectrum stores the *combined* two-plate density ``S(k)`` (V^2 m^2),
``k`` being the angular wavenumber that sets the Laplace decay ``exp(-kz)``.
Two identities fix the normalisation:

* ``vrms**2 == integral_0^inf k S(k) dk``;
* the Gaussian pair ``R(r) = v0**2 exp(-r**2/lam**2)`` and
  ``S(k) = v0**2 lam**2 exp(-pi lam**2 k**2)`` is exact.

The scaled Hankel pair consistent with both is::

    S(k) = 2      int_0^inf R(r) J0(2 sqrt(pi) k r) r dr
    R(r) = 2 pi   int_0^inf S(k) J0(2 sqrt(pi) k r) k dk

so that ``R(0) = 2 pi vrms**2``.  ``R`` is therefore a bookkeeping quantity in
this convention; the variance of a synthesized potential map is ``vrms**2``
(see :mod:`patchforce.surface`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, special

from . import quadrature
from .errors import ConvergenceError, DomainError

SQRT_PI = math.sqrt(math.pi)
_HANKEL_SCALE = 2.0 * SQRT_PI
TAIL_TOL = 1e-6


def _check_k(k):
    arr = np.asarray(k, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("wavenumber must be >= 0")
    return arr


def _check_r(r):
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("distance must be >= 0")
    return arr


def _as_output(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


@dataclass(frozen=True)
class GaussianSpectrum:
    """Gaussian autocorrelation with amplitude ``v0`` (V) and length ``lam`` (m)."""

    v0: float
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"lambda must be > 0, got {self.lam}")
        if not self.v0 >= 0:
            raise DomainError(f"v0 must be >= 0, got {self.v0}")

    def psd(self, k):
        return self.v0**2 * self.lam**2 * np.exp(-math.pi * self.lam**2 * np.square(k))

    def autocorr(self, r):
        return self.v0**2 * np.exp(-np.square(r) / self.lam**2)

    def vrms_squared_exact(self):
        return self.v0**2 / (2.0 * math.pi)

    def k_scales(self):
        return (1.0 / self.lam,)

    def breakpoints(self):
        return ()

    def scaled(self, c):
        return GaussianSpectrum(abs(c) * self.v0, self.lam)

    def descriptor(self):
        return {"variant": "gaussian", "v0_V": self.v0, "lambda_m": self.lam}


@dataclass(frozen=True)
class BandLimitedSpectrum:
    """Flat combined density between ``k_min`` and ``k_max``, normalised to ``vrms``."""

    vrms: float
    k_min: float
    k_max: float

    def __post_init__(self):
        if not self.vrms >= 0:
            raise DomainError(f"vrms must be >= 0, got {self.vrms}")
        if not 0 <= self.k_min < self.k_max:
            raise DomainError(f"need 0 <= k_min < k_max, got {self.k_min}, {self.k_max}")
        span = self.k_max**2 - self.k_min**2
        if not (span > 0 and math.isfinite(span) and math.isfinite(self.vrms**2 / span)):
            raise DomainError(f"band [{self.k_min}, {self.k_max}] gives a non-representable spectral level")

    @classmethod
    def from_plate_amplitude(cls, v0_tilde, k_min, k_max):
        """Build from the per-plate correlation constant ``C_a = C_b = v0_tilde**2``."""
        vrms2 = v0_tilde**2 * (k_max**2 - k_min**2) / (8.0 * math.pi)
        return cls(math.sqrt(vrms2), k_min, k_max)

    @property
    def level(self):
        return 2.0 * self.vrms**2 / (self.k_max**2 - self.k_min**2)

    def psd(self, k):
        k = np.asarray(k, dtype=float)
        inside = (k > self.k_min) & (k < self.k_max)
        return _as_output(np.where(inside, self.level, 0.0), k)

    def autocorr(self, r):
        # closed form of the inverse transform: int k J0(b k) dk = k J1(b k) / b
        r = np.asarray(r, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            br = _HANKEL_SCALE * r
            prim_hi = self.k_max * special.j1(br * self.k_max) / br
            prim_lo = self.k_min * special.j1(br * self.k_min) / br
            val = 2.0 * math.pi * self.level * (prim_hi - prim_lo)
        at_zero = 2.0 * math.pi * self.vrms**2
        return _as_output(np.where(r == 0, at_zero, val), r)

    def vrms_squared_exact(self):
        return self.vrms**2

    def k_scales(self):
        return tuple(k for k in (self.k_min, self.k_max) if k > 0)

    def breakpoints(self):
        return tuple(k for k in (self.k_min, self.k_max) if k > 0)

    def scaled(self, c):
        return BandLimitedSpectrum(abs(c) * self.vrms, self.k_min, self.k_max)

    def descriptor(self):
        return {
            "variant": "band_limited",
            "vrms_V": self.vrms,
            "k_min_per_m": self.k_min,
            "k_max_per_m": self.k_max,
        }


@dataclass(frozen=True)
class TabulatedSpectrum:
    """Combined density sampled at strictly increasing ``k``; linear in between, zero outside."""

    k: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)

    def __post_init__(self):
        k = np.array(self.k, dtype=float)
        S = np.array(self.S, dtype=float)
        if k.ndim != 1 or k.shape != S.shape or k.size < 2:
            raise DomainError("tabulated spectrum needs matching 1-D k and S with >= 2 samples")
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(S))):
            raise DomainError("tabulated spectrum contains non-finite values")
        if k[0] < 0 or np.any(np.diff(k) <= 0):
            raise DomainError("tabulated k must be >= 0 and strictly increasing")
        if np.any(S < 0):
            raise DomainError("tabulated S must be >= 0")
        k.flags.writeable = False
        S.flags.writeable = False
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "S", S)

    @classmethod
    def from_single_plate(cls, k, S_single):
        """Both plates share the statistics of one measured plate: combined = 2x."""
        return cls(k, 2.0 * np.asarray(S_single, dtype=float))

    def psd(self, k):
        k = np.asarray(k, dtype=float)
        return _as_output(np.interp(k, self.k, self.S, left=0.0, right=0.0), k)

    def autocorr(self, r):
        r = np.asarray(r, dtype=float)
        flat = np.atleast_1d(r)
        out = 2.0 * math.pi * _hankel_piecewise_linear(self.k, self.S, _HANKEL_SCALE * flat)
        return _as_output(out.reshape(flat.shape) if np.ndim(r) else out[0], r)

    def vrms_squared_exact(self):
        if self.S.max() > 0 and self.S[-1] > TAIL_TOL * self.S.max():
            raise ConvergenceError(
                "tabulated spectrum has not decayed at its last sample; "
                "int k S(k) dk is truncated, not converged"
            )
        k0, k1 = self.k[:-1], self.k[1:]
        s0, s1 = self.S[:-1], self.S[1:]
        return math.fsum((k1 - k0) / 6.0 * (s0 * (2 * k0 + k1) + s1 * (k0 + 2 * k1)))

    def k_scales(self):
        pos = self.k[self.k > 0]
        return (float(pos[0]), float(self.k[-1]))

    def breakpoints(self):
        return tuple(float(x) for x in self.k if x > 0)

    def scaled(self, c):
        return TabulatedSpectrum(self.k, c * c * self.S)

    def descriptor(self):
        return {"variant": "tabulated", "n_samples": int(self.k.size),
                "k_range_per_m": [float(self.k[0]), float(self.k[-1])]}

    def __eq__(self, other):
        if not isinstance(other, TabulatedSpectrum):
            return NotImplemented
        return np.array_equal(self.k, other.k) and np.array_equal(self.S, other.S)

    __hash__ = None


PatchSpectrum = GaussianSpectrum | BandLimitedSpectrum | TabulatedSpectrum


def _hankel_piecewise_linear(k, S, q, order=16):
    """``int S(k) J0(q k) k dk`` for piecewise-linear ``S``; vectorised over ``q``."""
    q = np.asarray(q, dtype=float)
    x, w = quadrature._leggauss(order)
    qmax = float(q.max()) if q.size else 0.0
    nodes, weights = [], []
    for a, b in zip(k[:-1], k[1:]):
        # keep under ~one Bessel half-period per sub-panel at the largest q
        m = max(1, int(math.ceil(qmax * (b - a) / math.pi)))
        e = np.linspace(a, b, m + 1)
        half = 0.5 * np.diff(e)
        mid = 0.5 * (e[1:] + e[:-1])
        nodes.append((mid[:, None] + half[:, None] * x).ravel())
        weights.append((half[:, None] * w).ravel())
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    f = np.interp(nodes, k, S) * nodes * weights
    return _bessel_sum(q, nodes, f)


def _bessel_sum(q, nodes, f, chunk=32):
    out = np.empty(q.size)
    for i in range(0, q.size, chunk):
        out[i:i + chunk] = special.j0(np.outer(q[i:i + chunk], nodes)) @ f
    return out


def psd_eval(spectrum: PatchSpectrum, k):
    """Combined spectral density S(k) in V^2 m^2."""
    k = _check_k(k)
    return _as_output(np.asarray(spectrum.psd(k), dtype=float), k)


def vrms_squared(spectrum: PatchSpectrum) -> float:
    """``int_0^inf k S(k) dk``; adaptive quadrature except for tabulated data."""
    if isinstance(spectrum, TabulatedSpectrum):
        return spectrum.vrms_squared_exact()
    return quadrature.semi_infinite(
        lambda k: k * spectrum.psd(k),
        spectrum.k_scales(),
        spectrum.breakpoints(),
    )


def vrms_of(spectrum: PatchSpectrum) -> float:
    return math.sqrt(vrms_squared(spectrum))


def autocorr_eval(spectrum: PatchSpectrum, r):
    """Autocorrelation in the fixed convention (Gaussian pair exact)."""
    r = _check_r(r)
    return _as_output(np.asarray(spectrum.autocorr(r), dtype=float), r)


def tabulate(spectrum: PatchSpectrum, k) -> TabulatedSpectrum:
    k = _check_k(k)
    return TabulatedSpectrum(k, np.asarray(spectrum.psd(k), dtype=float))


def autocorr_to_psd(r, R, k=None, order=8) -> TabulatedSpectrum:
    """Numerically transform a sampled autocorrelation into a tabulated spectrum.

    ``R`` is interpolated by a cubic spline in ``r**2`` (an isotropic
    autocorrelation is even in ``r``) and the transform integral is done with
    Gauss-Legendre panels fine enough to resolve the Bessel oscillation.
    The default k grid runs from 0 to the sampling Nyquist wavenumber.
    """
    r = np.asarray(r, dtype=float)
    R = np.asarray(R, dtype=float)
    if r.ndim != 1 or r.shape != R.shape or r.size < 4:
        raise DomainError("need matching 1-D r and R with >= 4 samples")
    if r[0] < 0 or np.any(np.diff(r) <= 0):
        raise DomainError("r grid must be >= 0 and strictly increasing")
    scale = float(np.max(np.abs(R)))
    if scale > 0 and abs(R[-1]) > TAIL_TOL * scale:
        raise DomainError(
            f"autocorrelation has not decayed at r={r[-1]:.3e} "
            f"(|R|/max = {abs(R[-1]) / scale:.2e}); extend the r grid"
        )
    if k is None:
        k = np.linspace(0.0, SQRT_PI / (2.0 * float(np.min(np.diff(r)))), r.size)
    k = _check_k(k)
    if scale == 0:
        return TabulatedSpectrum(k, np.zeros_like(k))

    spline = interpolate.CubicSpline(r**2, R)
    x, w = quadrature._leggauss(order)
    q = _HANKEL_SCALE * k
    qmax = float(q.max())
    nodes, weights = [], []
    grid = np.concatenate(([0.0], r)) if r[0] > 0 else r
    for a, b in zip(grid[:-1], grid[1:]):
        m = max(1, int(math.ceil(qmax * (b - a) / math.pi)))
        e = np.linspace(a, b, m + 1)
        half = 0.5 * np.diff(e)
        mid = 0.5 * (e[1:] + e[:-1])
        nodes.append((mid[:, None] + half[:, None] * x).ravel())
        weights.append((half[:, None] * w).ravel())
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    f = spline(nodes**2) * nodes * weights
    S = 2.0 * _bessel_sum(q, nodes, f)

    floor = 1e-9 * float(np.max(np.abs(S)))
    if np.any(S < -floor):
        raise DomainError("transform has significantly negative density; input is not an autocorrelation")
    return TabulatedSpectrum(k, np.clip(S, 0.0, None))
