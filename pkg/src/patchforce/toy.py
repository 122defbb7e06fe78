"""Two-capacitor toy model for a distance-dependent minimising potential.

Two upper pads of area ``A`` face a continuous lower plate, pad *a* at gap
``d`` and pad *b* at ``d + delta``; pad *b* sits at an extra contact
potential ``v_c``.  With ``C'`` the capacitance derivatives,

    F(d, V0) = -C_a' V0^2 / 2 - C_b' (V0 + v_c)^2 / 2,
    C_a' = -eps0 A / d^2,  C_b' = -eps0 A / (d + delta)^2.
"""

from __future__ import annotations

from dataclasses import dataclass

from .constants import EPS0
from .errors import DomainError


@dataclass(frozen=True)
class ToyConfig:
    area: float
    delta: float
    v_c: float
    v_1: float = 0.0

    def __post_init__(self):
        if not self.area > 0:
            raise DomainError("pad area must be > 0")
        if not self.delta >= 0:
            raise DomainError("delta must be >= 0")


def _check_d(d):
    if not d > 0:
        raise DomainError(f"separation must be > 0, got {d}")


def capacitance_derivatives(cfg: ToyConfig, d: float):
    _check_d(d)
    return -EPS0 * cfg.area / d**2, -EPS0 * cfg.area / (d + cfg.delta) ** 2


def toy_force(cfg: ToyConfig, d: float, v0: float) -> float:
    ca, cb = capacitance_derivatives(cfg, d)
    return -0.5 * ca * v0**2 - 0.5 * cb * (v0 + cfg.v_c) ** 2


def toy_vm_general(cfg: ToyConfig, d: float) -> float:
    """``-C_b' v_c / (C_a' + C_b')`` from the capacitance derivatives."""
    ca, cb = capacitance_derivatives(cfg, d)
    return -cb * cfg.v_c / (ca + cb)


def toy_vm(cfg: ToyConfig, d: float, report_offset: bool = True) -> float:
    """Minimising potential ``-v_c d^2 / (d^2 + (d+delta)^2)``.

    The circuit offset ``v_1`` is a pure reporting shift: the returned value
    is ``V_m - v_1`` unless ``report_offset`` is False.
    """
    _check_d(d)
    vm = -cfg.v_c * d * d / (d * d + (d + cfg.delta) ** 2)
    return vm - cfg.v_1 if report_offset else vm


def toy_residual(cfg: ToyConfig, d: float) -> float:
    """Force left at the minimising potential: ``(eps0 A/2) v_c^2 / (d^2 + (d+delta)^2)``."""
    _check_d(d)
    return 0.5 * EPS0 * cfg.area * cfg.v_c**2 / (d * d + (d + cfg.delta) ** 2)


def toy_residual_from_vm(cfg: ToyConfig, d: float) -> float:
    """Same force written through ``V_m``: ``(eps0 A/2) V_m^2 [d^2 + (d+delta)^2] / d^4``."""
    vm = toy_vm(cfg, d, report_offset=False)
    return 0.5 * EPS0 * cfg.area * vm**2 * (d * d + (d + cfg.delta) ** 2) / d**4


def toy_sweep(cfg: ToyConfig, d_list):
    """Rows ``(d, reported V_m, F_res)`` for plotting."""
    return [(float(d), toy_vm(cfg, d), toy_residual(cfg, d)) for d in d_list]
