"""Electrostatic forces from surface contact-potential patches."""

__version__ = "0.1.0"

from .constants import EPS0
from .errors import (
    BracketError,
    ConvergenceError,
    DomainError,
    GeometryError,
    InfeasibleFitError,
    PatchForceError,
    ResolutionError,
)
from .forces import (
    ModeBoundary,
    SpherePlaneGeometry,
    effective_area,
    energy_pp_interaction,
    energy_pp_total,
    force_pp,
    force_sp,
    force_sp_small_kd,
    mode_energy_pp,
)
from .residuals import (
    ResidualDataset,
    ResidualFit,
    fit_residual_model,
    force_error_from_offset,
    offset_study,
    powerlaw_fit,
)
from .spectra import (
    BandLimitedSpectrum,
    GaussianSpectrum,
    TabulatedSpectrum,
    autocorr_eval,
    autocorr_to_psd,
    psd_eval,
    vrms_of,
)
from .surface import (
    PfaConfig,
    SurfaceMap,
    capacitance_curvature,
    infer_distance,
    minimizing_potential,
    pfa_force,
    plane_plane_vm_check,
    residual_force_curve,
    synthesize_surface,
)
from .toy import ToyConfig, toy_force, toy_residual, toy_vm
