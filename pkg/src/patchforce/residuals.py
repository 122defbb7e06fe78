"""Residual electrostatic force analysis.

* ``fit_residual_model``: the two-parameter model
  ``F(d) = pi R eps0 [(V_m(d) + V_1)^2 + V_rms^2] / d``.
  With ``y = F d / (pi R eps0) - V_m^2`` the model is linear,
  ``y = 2 V_1 V_m + (V_1^2 + V_rms^2)``, so it is solved exactly by weighted
  linear least squares.
* ``powerlaw_fit``: ``F = A / d^e`` on log-log axes.
* ``offset_study``: distance-offset error from fitting ``B_f/(x + 1 + eps)`` to a
  mixture ``alpha/(x+1)^p + (1-alpha)/(x+1)`` over ``0 < x < x_max``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate

from .constants import EPS0
from .errors import BracketError, DomainError, InfeasibleFitError

P_NOMINAL = 0.8
P_GE_EXPERIMENT = 0.72
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class ResidualDataset:
    d: np.ndarray
    v_m: np.ndarray
    f: np.ndarray
    sigma_f: np.ndarray
    sphere_radius: float

    def __post_init__(self):
        arrays = [np.array(getattr(self, name), dtype=float) for name in ("d", "v_m", "f", "sigma_f")]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
            raise DomainError("d, v_m, f and sigma_f must be 1-D arrays of equal length")
        d, _, _, sigma = arrays
        if np.any(d <= 0) or np.any(np.diff(d) <= 0):
            raise DomainError("d must be positive and strictly increasing")
        if np.any(sigma <= 0):
            raise DomainError("sigma_f must be > 0")
        if not self.sphere_radius > 0:
            raise DomainError("sphere radius must be > 0")
        for name, arr in zip(("d", "v_m", "f", "sigma_f"), arrays):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.d.size


@dataclass(frozen=True)
class ResidualFit:
    v_1: float
    vrms: float
    vrms_squared: float
    chi2_per_dof: float
    # covariance of (v_1, v_1^2 + vrms^2)
    covariance: np.ndarray = field(repr=False)
    dof: int = 0

    def predict(self, d, v_m, sphere_radius):
        d = np.asarray(d, dtype=float)
        return math.pi * sphere_radius * EPS0 * ((np.asarray(v_m) + self.v_1) ** 2 + self.vrms_squared) / d


def residual_model(d, v_m, v_1, vrms, sphere_radius):
    """``pi R eps0 [(V_m + V_1)^2 + V_rms^2] / d``."""
    d = np.asarray(d, dtype=float)
    return math.pi * sphere_radius * EPS0 * ((np.asarray(v_m, dtype=float) + v_1) ** 2 + vrms**2) / d


def fit_residual_model(data: ResidualDataset) -> ResidualFit:
    if len(data) < 3:
        raise DomainError("need at least 3 points")
    pref = math.pi * data.sphere_radius * EPS0
    g = data.f * data.d / pref
    sg = data.sigma_f * data.d / pref
    vm = data.v_m

    scale = max(float(np.max(np.abs(vm))), 1e-300)
    if np.ptp(vm) <= 1e-12 * scale:
        # F d / (pi R eps0) = const; only identifiable if that constant is zero
        wts = 1.0 / sg**2
        level = float(np.sum(wts * g) / np.sum(wts))
        level_sigma = float(1.0 / math.sqrt(np.sum(wts)))
        if abs(level) > 3.0 * level_sigma and level != 0.0:
            raise DomainError("V_m does not vary with d: V_1 and V_rms are not separately identifiable")
        chi2 = float(np.sum(((g - 0.0) / sg) ** 2))
        cov = np.full((2, 2), np.nan)
        return ResidualFit(-float(vm[0]), 0.0, 0.0, chi2 / (len(data) - 2), cov, len(data) - 2)

    y = g - vm**2
    X = np.column_stack([vm, np.ones_like(vm)])
    Xw = X / sg[:, None]
    yw = y / sg
    beta, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    a, c = beta
    cov_ac = np.linalg.inv(Xw.T @ Xw)
    jac = np.diag([0.5, 1.0])
    cov = jac @ cov_ac @ jac.T
    dof = len(data) - 2
    chi2 = float(np.sum((yw - Xw @ beta) ** 2)) / dof

    v1 = 0.5 * a
    vrms2 = c - v1 * v1
    # cancellation in c - v1^2 leaves a few ulp of c even for exact data
    if -64 * np.finfo(float).eps * max(abs(c), v1 * v1) <= vrms2 < 0:
        vrms2 = 0.0
    if vrms2 < 0:
        fit = ResidualFit(float(v1), math.nan, float(vrms2), chi2, cov, dof)
        raise InfeasibleFitError(
            f"fit gives V_rms^2 = {vrms2:.3e} V^2 < 0 (V_1 = {v1:.4g} V, chi2/dof = {chi2:.3g}); "
            "the two-parameter model does not describe these data",
            fit,
        )
    return ResidualFit(float(v1), math.sqrt(vrms2), float(vrms2), chi2, cov, dof)


class PowerLawFit(NamedTuple):
    amplitude: float
    exponent: float
    exponent_sigma: float
    chi2_per_dof: float


def powerlaw_fit(data: ResidualDataset) -> PowerLawFit:
    """Weighted fit of ``log F = log A - e log d``; amplitude in N m^e."""
    if len(data) < 3:
        raise DomainError("need at least 3 points")
    if np.any(data.f <= 0):
        raise DomainError("power-law fit needs strictly positive forces")
    x = np.log(data.d)
    x0 = float(np.mean(x))
    y = np.log(data.f)
    sy = data.sigma_f / data.f
    X = np.column_stack([np.ones_like(x), x - x0])
    Xw = X / sy[:, None]
    beta, *_ = np.linalg.lstsq(Xw, y / sy, rcond=None)
    cov = np.linalg.inv(Xw.T @ Xw)
    dof = len(data) - 2
    chi2 = float(np.sum((y / sy - Xw @ beta) ** 2)) / dof
    exponent = -float(beta[1])
    amplitude = math.exp(float(beta[0]) + exponent * x0)
    return PowerLawFit(amplitude, exponent, math.sqrt(cov[1, 1]), chi2)


# --- wrong-fit-function study ------------------------------------------------

@dataclass(frozen=True)
class OffsetStudyResult:
    alpha: float
    x_max: float
    p: float
    epsilon: float
    b_f: float
    chi2_min: float


def _quad(f, a, b):
    return integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)[0]


class _OffsetObjective:
    def __init__(self, alpha, x_max, p):
        self.alpha, self.x_max, self.p = alpha, x_max, p

    def true_force(self, x):
        return self.alpha / (x + 1.0) ** self.p + (1.0 - self.alpha) / (x + 1.0)

    def best_amplitude(self, eps):
        # linear in B_f: B = <g t> / <g g>
        gg = 1.0 / (1.0 + eps) - 1.0 / (self.x_max + 1.0 + eps)
        gt = _quad(lambda x: self.true_force(x) / (x + 1.0 + eps), 0.0, self.x_max)
        return gt / gg

    def chi2(self, eps, b=None):
        if b is None:
            b = self.best_amplitude(eps)
        return _quad(lambda x: (b / (x + 1.0 + eps) - self.true_force(x)) ** 2, 0.0, self.x_max)

    def __call__(self, eps):
        return self.chi2(eps)


def golden_section(f, a, b, tol=1e-6, max_iter=200):
    """Minimise a unimodal ``f`` on ``[a, b]`` until the bracket is below ``tol``."""
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def bracket_minimum(f, grid):
    """Coarse scan; returns the neighbours of the smallest interior value."""
    vals = np.array([f(x) for x in grid])
    i = int(np.argmin(vals))
    if i == 0 or i == len(grid) - 1:
        raise BracketError(
            f"minimum at scan edge x={grid[i]:.4g}; widen the search range",
            scan=list(zip(map(float, grid), map(float, vals))),
        )
    return grid[i - 1], grid[i + 1]


def offset_study(alpha: float, x_max: float = 10.0, p: float = P_NOMINAL, tol: float = 1e-6,
                 eps_range=(-0.5, 3.0), scan_points: int = 71) -> OffsetStudyResult:
    """Minimise the continuous chi^2 over ``(B_f, eps)``.

    ``B_f`` is eliminated in closed form; ``eps`` is bracketed by a coarse
    scan and refined by golden-section search to ``tol``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must be in [0, 1]")
    if not x_max > 0:
        raise DomainError("x_max must be > 0")
    if not 0.0 < p <= 1.0:
        raise DomainError("p must be in (0, 1]")
    lo, hi = eps_range
    if lo <= -1.0:
        raise DomainError("eps range must stay above -1")
    objective = _OffsetObjective(alpha, x_max, p)
    a, b = bracket_minimum(objective, np.linspace(lo, hi, scan_points))
    eps, chi2 = golden_section(objective, a, b, tol)
    return OffsetStudyResult(alpha, x_max, p, float(eps), float(objective.best_amplitude(eps)), float(chi2))


def offset_sweep(alphas: Sequence[float], x_max: float = 10.0, p: float = P_NOMINAL):
    return [offset_study(a, x_max, p) for a in alphas]


def epsilon_slope(results: Sequence[OffsetStudyResult]) -> float:
    """Least-squares slope of eps against alpha."""
    alphas = np.array([r.alpha for r in results])
    eps = np.array([r.epsilon for r in results])
    return float(np.polyfit(alphas, eps, 1)[0])


class PerturbativeWarning(UserWarning):
    pass


def force_error_from_offset(delta_d: float, d: float) -> float:
    """Fractional Casimir-force change ``-3 delta_d / d`` for an ``F ~ 1/d^3`` force."""
    if not d > 0:
        raise DomainError("d must be > 0")
    ratio = delta_d / d
    if abs(ratio) > 0.1:
        warnings.warn(f"delta_d/d = {ratio:.3g}: linear propagation is unreliable", PerturbativeWarning,
                      stacklevel=2)
    return -3.0 * ratio
