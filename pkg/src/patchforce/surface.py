"""Sampled potential maps and their PFA sphere-plate forces.

A :class:`SurfaceMap` holds the *net* potential difference ``V(x, y)`` between
facing surface elements on a square grid centred on the point of closest
approach.  The force for an applied voltage ``V0`` is the PFA sum::

    F(d, V0) = (eps0/2) sum_cells h^2 (V + V0)^2 / (d + r^2/2R)^2

over cells whose centres lie inside the plate disk.  ``F`` is exactly
quadratic in ``V0``, which gives the minimising potential, the residual force
and the capacitance curvature in closed form.

Random maps are stationary Gaussian fields.  A lattice wavevector ``k`` gets an
independent complex amplitude with variance ``S(|k|)/(2 pi) * dk^2`` so that
the map variance approaches ``int k S dk = vrms^2``.  A single plate carries
half of the combined spectrum.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .constants import EPS0, UM
from .errors import DomainError, GeometryError, ResolutionError
from .spectra import BandLimitedSpectrum, GaussianSpectrum, PatchSpectrum, TabulatedSpectrum

MIN_GRID = 16
DEFAULT_D_LIST = np.geomspace(0.5 * UM, 20.0 * UM, 40)


class CoverageWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SurfaceMap:
    n: int
    h: float
    values: np.ndarray = field(repr=False)
    seed: int | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.n) < MIN_GRID:
            raise DomainError(f"grid needs n >= {MIN_GRID}, got {self.n}")
        if not self.h > 0:
            raise DomainError(f"grid spacing must be > 0, got {self.h}")
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != (self.n, self.n):
            raise DomainError(f"values must be {self.n}x{self.n}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("surface contains non-finite potentials")
        vals.flags.writeable = False
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "values", vals)

    @property
    def half_width(self):
        return 0.5 * self.n * self.h

    def coords(self):
        """Cell-centre coordinates along one axis, symmetric about 0."""
        return (np.arange(self.n) - 0.5 * (self.n - 1)) * self.h

    def shifted(self, c):
        return self.with_values(self.values + c, {"offset_V": c})

    def with_values(self, values, note):
        prov = dict(self.provenance)
        prov.setdefault("components", [])
        prov["components"] = list(prov["components"]) + [note]
        return SurfaceMap(self.n, self.h, values, self.seed, prov)

    def __eq__(self, other):
        if not isinstance(other, SurfaceMap):
            return NotImplemented
        return (self.n, self.h, self.seed) == (other.n, other.h, other.seed) and np.array_equal(
            self.values, other.values
        )

    __hash__ = None


@dataclass(frozen=True)
class PfaConfig:
    """Sphere radius, plate radius ``D/2`` (integration cap) and applied voltage."""

    sphere_radius: float
    plate_radius: float
    v0: float = 0.0

    def __post_init__(self):
        if not self.sphere_radius > 0:
            raise DomainError("sphere radius must be > 0")
        if not self.plate_radius > 0:
            raise DomainError("plate radius must be > 0")

    def with_v0(self, v0):
        return PfaConfig(self.sphere_radius, self.plate_radius, v0)


@dataclass(frozen=True)
class VmCurve:
    d: np.ndarray
    v_m: np.ndarray
    v_1: float | None = None


class ResidualPoint(NamedTuple):
    d: float
    v_m: float
    f_res: float


# --- synthesis -------------------------------------------------------------

def _check_resolution(spectrum, n, h):
    nyquist = math.pi / h
    if isinstance(spectrum, GaussianSpectrum):
        if spectrum.v0 > 0 and h > spectrum.lam / 4:
            raise ResolutionError(f"h = {h:.3e} m exceeds lambda/4 = {spectrum.lam / 4:.3e} m")
        if spectrum.v0 > 0 and n * h < 5 * spectrum.lam:
            warnings.warn(f"grid side {n * h:.3e} m is below 5 lambda", CoverageWarning, stacklevel=3)
    elif isinstance(spectrum, BandLimitedSpectrum):
        if spectrum.vrms > 0 and spectrum.k_max > nyquist:
            raise ResolutionError(f"k_max = {spectrum.k_max:.3e} beyond grid Nyquist {nyquist:.3e}")
    elif isinstance(spectrum, TabulatedSpectrum):
        support = spectrum.k[spectrum.S > 0]
        if support.size and support[-1] > nyquist:
            raise ResolutionError(f"spectrum support {support[-1]:.3e} beyond grid Nyquist {nyquist:.3e}")


def synthesize_surface(spectrum: PatchSpectrum, n: int, h: float, seed: int, plate: str = "net") -> SurfaceMap:
    """Draw a zero-mean Gaussian random map with the given spectrum.

    ``plate="net"`` draws the potential difference of both plates (variance
    ``vrms**2``); ``plate="single"`` draws one plate (half the spectrum).
    Identical arguments give bit-identical maps.
    """
    if plate not in ("net", "single"):
        raise DomainError("plate must be 'net' or 'single'")
    if int(n) < MIN_GRID:
        raise DomainError(f"grid needs n >= {MIN_GRID}, got {n}")
    if not h > 0:
        raise DomainError("grid spacing must be > 0")
    n = int(n)
    _check_resolution(spectrum, n, h)

    dk = 2.0 * math.pi / (n * h)
    kx = 2.0 * math.pi * np.fft.fftfreq(n, h)
    ky = 2.0 * math.pi * np.fft.rfftfreq(n, h)
    kk = np.hypot(kx[:, None], ky[None, :])
    density = np.asarray(spectrum.psd(kk), dtype=float) / (2.0 * math.pi)
    if plate == "single":
        density = 0.5 * density
    amp = n * np.sqrt(density) * dk
    amp[0, 0] = 0.0

    rng = np.random.default_rng(seed)
    white = rng.standard_normal((n, n))
    values = np.fft.irfft2(np.fft.rfft2(white) * amp, s=(n, n))
    prov = {"spectrum": spectrum.descriptor(), "plate": plate, "components": []}
    return SurfaceMap(n, h, values, seed, prov)


def coherent_field(n: int, h: float, kind: str, amplitude: float, angle: float = 0.0):
    """Low-order large-patch fields.

    ``constant``: ``a``; ``tilt``: ``a * x'`` with ``x'`` along ``angle``;
    ``quadratic``: ``a * r**2``.
    """
    x = (np.arange(n) - 0.5 * (n - 1)) * h
    X, Y = np.meshgrid(x, x, indexing="ij")
    if kind == "constant":
        return np.full((n, n), float(amplitude))
    if kind == "tilt":
        return amplitude * (X * math.cos(angle) + Y * math.sin(angle))
    if kind == "quadratic":
        return amplitude * (X * X + Y * Y)
    raise DomainError(f"unknown coherent component {kind!r}")


def add_coherent(surface: SurfaceMap, kind: str, amplitude: float, angle: float = 0.0) -> SurfaceMap:
    extra = coherent_field(surface.n, surface.h, kind, amplitude, angle)
    return surface.with_values(surface.values + extra, {"kind": kind, "amplitude": amplitude, "angle": angle})


def add_map(surface: SurfaceMap, other) -> SurfaceMap:
    """Add a user-supplied map (array or second surface, e.g. the other plate)."""
    if isinstance(other, SurfaceMap):
        if (other.n, other.h) != (surface.n, surface.h):
            raise DomainError("surfaces live on different grids")
        note = {"kind": "map", "seed": other.seed, "provenance": other.provenance}
        other = other.values
    else:
        note = {"kind": "map"}
    return surface.with_values(surface.values + np.asarray(other, dtype=float), note)


def two_plate_surface(spectrum: PatchSpectrum, n: int, h: float, seed_a: int, seed_b: int) -> SurfaceMap:
    """Net map as the difference of two independent single-plate maps."""
    a = synthesize_surface(spectrum, n, h, seed_a, plate="single")
    b = synthesize_surface(spectrum, n, h, seed_b, plate="single")
    prov = {"spectrum": spectrum.descriptor(), "plate": "two-surface", "seeds": [seed_a, seed_b], "components": []}
    return SurfaceMap(n, h, a.values - b.values, seed_a, prov)


# --- PFA evaluation --------------------------------------------------------

class _Disk:
    """Cells of a surface whose centres lie inside the plate disk."""

    def __init__(self, surface: SurfaceMap, plate_radius: float):
        if plate_radius > surface.half_width * (1 + 1e-12):
            raise GeometryError(
                f"plate radius {plate_radius:.3e} m exceeds grid half-width {surface.half_width:.3e} m"
            )
        x = surface.coords()
        r2 = x[:, None] ** 2 + x[None, :] ** 2
        mask = r2 <= plate_radius**2
        self.r2 = r2[mask]
        self.v = surface.values[mask]
        self.cell = surface.h**2

    def weights(self, d, sphere_radius):
        return 1.0 / np.square(d + self.r2 / (2.0 * sphere_radius))


def _check_d(d):
    if not d > 0:
        raise DomainError(f"separation must be > 0, got {d}")


def _quadratic(disk: _Disk, w):
    sw = float(np.sum(w))
    if disk.v.size and np.all(disk.v == disk.v[0]):
        # equipotential disk: keep the residual exactly zero
        return sw, float(disk.v[0]), 0.0
    swv = float(np.dot(w, disk.v))
    vbar = swv / sw
    dev = disk.v - vbar
    spread = float(np.dot(w, dev * dev))
    return sw, vbar, spread


def pfa_force(surface: SurfaceMap, cfg: PfaConfig, d: float) -> float:
    """PFA sphere-plate force (N) at separation ``d`` and applied ``cfg.v0``."""
    _check_d(d)
    disk = _Disk(surface, cfg.plate_radius)
    w = disk.weights(d, cfg.sphere_radius)
    v = disk.v + cfg.v0
    return 0.5 * EPS0 * disk.cell * float(np.dot(w, v * v))


def pfa_quadratic(surface: SurfaceMap, cfg: PfaConfig, d: float):
    """Coefficients ``(c0, c1, c2)`` of ``F(V0) = c0 + c1 V0 + c2 V0^2``."""
    _check_d(d)
    disk = _Disk(surface, cfg.plate_radius)
    w = disk.weights(d, cfg.sphere_radius)
    pref = 0.5 * EPS0 * disk.cell
    return (
        pref * float(np.dot(w, disk.v * disk.v)),
        2.0 * pref * float(np.dot(w, disk.v)),
        pref * float(np.sum(w)),
    )


def minimizing_potential(surface: SurfaceMap, cfg: PfaConfig, d: float) -> float:
    """``V_m(d)``: minus the PFA-weighted mean potential over the plate disk."""
    _check_d(d)
    disk = _Disk(surface, cfg.plate_radius)
    _, vbar, _ = _quadratic(disk, disk.weights(d, cfg.sphere_radius))
    return -vbar


def residual_force_curve(surface: SurfaceMap, cfg: PfaConfig, d_list: Sequence[float] = DEFAULT_D_LIST):
    """``[(d, V_m(d), F(d, V_m(d)))]``; the per-d minimisation is exact."""
    d_arr = np.asarray(d_list, dtype=float)
    if d_arr.ndim != 1 or d_arr.size == 0:
        raise DomainError("d_list must be a non-empty sequence")
    if np.any(d_arr <= 0) or np.any(np.diff(d_arr) <= 0):
        raise DomainError("d_list must be positive and strictly increasing")
    disk = _Disk(surface, cfg.plate_radius)
    pref = 0.5 * EPS0 * disk.cell
    out = []
    for d in d_arr:
        _, vbar, spread = _quadratic(disk, disk.weights(d, cfg.sphere_radius))
        out.append(ResidualPoint(float(d), -vbar, pref * spread))
    return out


def capacitance_curvature(surface: SurfaceMap, cfg: PfaConfig, d: float) -> float:
    """``d^2F/dV0^2`` (N/V^2) of the discretised force; independent of the map values."""
    _check_d(d)
    disk = _Disk(surface, cfg.plate_radius)
    return EPS0 * disk.cell * float(np.sum(disk.weights(d, cfg.sphere_radius)))


def capacitance_curvature_disk(sphere_radius: float, d: float, plate_radius: float = math.inf) -> float:
    """Continuum curvature ``2 pi eps0 R [1/d - 1/(d + a^2/2R)]`` for a disk of radius ``a``."""
    _check_d(d)
    tail = 0.0 if math.isinf(plate_radius) else 1.0 / (d + plate_radius**2 / (2.0 * sphere_radius))
    return 2.0 * math.pi * EPS0 * sphere_radius * (1.0 / d - tail)


def infer_distance(curvature: float, sphere_radius: float) -> float:
    """Invert ``curvature = 2 pi R eps0 / d``."""
    if not curvature > 0:
        raise DomainError(f"curvature must be > 0, got {curvature}")
    if not sphere_radius > 0:
        raise DomainError("sphere radius must be > 0")
    return 2.0 * math.pi * sphere_radius * EPS0 / curvature


def plane_plane_vm_check(surface: SurfaceMap, d_list: Sequence[float], plate_radius: float) -> VmCurve:
    """Minimising potential for parallel planes (uniform weight over the disk)."""
    d_arr = np.asarray(d_list, dtype=float)
    if d_arr.size == 0 or np.any(d_arr <= 0) or np.any(np.diff(d_arr) <= 0):
        raise DomainError("d_list must be positive and strictly increasing")
    disk = _Disk(surface, plate_radius)
    vm = []
    for _ in d_arr:
        # flat plates: the gap weight 1/d^2 is common to every cell
        w = np.ones_like(disk.r2)
        vm.append(-_quadratic(disk, w)[1])
    return VmCurve(d_arr, np.array(vm))


# --- ensembles -------------------------------------------------------------

def member_seeds(seed: int, count: int):
    """Sub-seeds by counter from one top-level seed."""
    return [int(seed) + i for i in range(count)]


def ensemble_pfa_force(
    spectrum: PatchSpectrum,
    n: int,
    h: float,
    seeds: Sequence[int],
    cfg: PfaConfig,
    d: float,
    threads: int = 1,
):
    """PFA force for one synthesized map per seed, returned in seed order."""

    def one(seed):
        return pfa_force(synthesize_surface(spectrum, n, h, seed), cfg, d)

    if threads <= 1:
        return np.array([one(s) for s in seeds])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.array(list(pool.map(one, seeds)))
