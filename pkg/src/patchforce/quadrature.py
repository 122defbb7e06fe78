"""Quadrature helpers for integrals over wavenumber.

The force and energy integrands all have the shape ``g(k) * S(k)`` where the
geometric factor decays like ``exp(-2kd)`` (or not at all, for the total
energy) and the spectrum supplies its own scale.  ``semi_infinite`` finds the
point past which the integrand is negligible, cuts the half line into
log-spaced panels and hands each panel to QUADPACK.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

from .errors import ConvergenceError

REL_FLOOR = 1e-16
EPSREL = 1e-12
_SCAN_PER_DECADE = 24
_SCAN_SPAN = 1e6


def decay_cutoff(f: Callable, scales: Sequence[float], rel_floor: float = REL_FLOOR,
                 breakpoints: Iterable[float] = ()):
    """Return ``(k_cut, peak)`` for a non-negative integrand on ``k >= 0``.

    ``k_cut`` is the first point of a log-spaced scan beyond which ``|f|`` stays
    below ``rel_floor * peak``.  The scan also samples between consecutive
    ``breakpoints`` so that narrow bands are never stepped over.  Returns
    ``(0.0, 0.0)`` for an identically zero integrand.
    """
    scales = [s for s in scales if s > 0 and math.isfinite(s)]
    if not scales:
        raise ValueError("need at least one positive finite wavenumber scale")
    lo = min(scales) / _SCAN_SPAN
    hi = max(scales) * _SCAN_SPAN
    n = int(math.ceil(_SCAN_PER_DECADE * math.log10(hi / lo))) + 1
    grid = np.geomspace(lo, hi, n)
    bps = sorted(b for b in breakpoints if lo < b < hi)
    if bps:
        inner = [np.linspace(a, b, 9)[1:-1] for a, b in zip(bps[:-1], bps[1:])]
        grid = np.unique(np.concatenate([grid, *inner])) if inner else grid
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.abs(np.asarray(f(grid), dtype=float))
    if not np.all(np.isfinite(vals)):
        raise ConvergenceError("integrand is not finite on the scan grid")
    peak = float(vals.max())
    if peak == 0.0:
        return 0.0, 0.0
    above = np.nonzero(vals > rel_floor * peak)[0]
    last = int(above[-1])
    if last >= grid.size - 1:
        raise ConvergenceError(
            f"integrand has not decayed below {rel_floor:g} of its peak by k={hi:.3e}"
        )
    return float(grid[last + 1]), peak


def semi_infinite(
    f: Callable,
    scales: Sequence[float],
    breakpoints: Iterable[float] = (),
    epsrel: float = EPSREL,
    rel_floor: float = REL_FLOOR,
) -> float:
    """Integrate ``f`` over ``[0, inf)``.

    ``scales`` are characteristic wavenumbers (1/lambda, 1/d, band edges) used to
    place the scan; ``breakpoints`` are known kinks or jumps of ``f``.
    """
    breakpoints = tuple(breakpoints)
    k_cut, peak = decay_cutoff(f, scales, rel_floor, breakpoints)
    if peak == 0.0:
        return 0.0
    # one panel per half decade below the cutoff, plus the known kinks
    lo = max(min(s for s in scales if s > 0) / _SCAN_SPAN, k_cut * 1e-12)
    edges = set(np.geomspace(lo, k_cut, max(2, int(2 * math.log10(k_cut / lo)) + 1)))
    edges.update(b for b in breakpoints if 0.0 < b < k_cut)
    edges.add(0.0)
    edges.add(k_cut)
    edges = sorted(edges)
    epsabs = rel_floor * peak * k_cut
    parts = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        val, err = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=200)
        if not math.isfinite(val):
            raise ConvergenceError(f"quadrature failed on panel [{a:.3e}, {b:.3e}]")
        parts.append(val)
    return math.fsum(parts)


_LEGGAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leggauss(n):
    if n not in _LEGGAUSS_CACHE:
        _LEGGAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _LEGGAUSS_CACHE[n]


def gauss_legendre(f: Callable, a: float, b: float, panels: int = 16, order: int = 48) -> float:
    """Composite fixed-order Gauss-Legendre rule on ``[a, b]`` (vectorised ``f``)."""
    if b <= a:
        return 0.0
    x, w = _leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return float(math.fsum(weights * np.asarray(f(nodes), dtype=float)))
