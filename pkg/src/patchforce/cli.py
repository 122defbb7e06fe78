"""``patchforce`` command line.

Every subcommand reads a JSON config (unit-suffixed keys), writes CSV/JSON
into ``--out`` and exits nonzero on error, removing any files it had already
written.  Identical config and seed give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import io as pio
from .config import (
    ConfigError,
    RunConfig,
    block,
    build_spectrum,
    integer,
    number,
    number_list,
    separations,
)
from .errors import InfeasibleFitError, PatchForceError
from .forces import (
    SpherePlaneGeometry,
    effective_area,
    energy_pp_interaction,
    energy_pp_total,
    force_pp,
    force_sp,
    force_sp_small_kd,
)
from .residuals import (
    P_NOMINAL,
    epsilon_slope,
    fit_residual_model,
    force_error_from_offset,
    offset_study,
    powerlaw_fit,
    residual_model,
)
from .spectra import BandLimitedSpectrum, GaussianSpectrum, vrms_squared
from .surface import (
    DEFAULT_D_LIST,
    PfaConfig,
    SurfaceMap,
    add_coherent,
    capacitance_curvature,
    capacitance_curvature_disk,
    infer_distance,
    member_seeds,
    plane_plane_vm_check,
    residual_force_curve,
    synthesize_surface,
    two_plate_surface,
)
from .toy import ToyConfig, toy_residual, toy_vm

EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


class Outputs:
    """Tracks written files so a failed run can remove them."""

    def __init__(self, out_dir, cfg: RunConfig, seed=None):
        self.dir = Path(out_dir)
        self.created_dir = not self.dir.exists()
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written = []
        self.meta = {"command": cfg.command, "config_hash": cfg.config_hash()}
        if seed is not None:
            self.meta["seed"] = seed

    def path(self, name):
        p = self.dir / name
        self.written.append(p)
        return p

    def csv(self, name, columns, rows, **meta):
        pio.write_csv(self.path(name), columns, rows, {**self.meta, **meta})

    def json(self, name, obj):
        pio.write_json(self.path(name), {"tool": f"patchforce {__version__}", **self.meta, **obj})

    def discard(self):
        for p in self.written:
            p.unlink(missing_ok=True)
        if self.created_dir:
            try:
                self.dir.rmdir()
            except OSError:
                pass


# --- subcommands -----------------------------------------------------------

def _default_grids(spectrum, k_points, r_points):
    if isinstance(spectrum, GaussianSpectrum):
        return np.linspace(0.0, 3.0 / spectrum.lam, k_points), np.linspace(0.0, 4.0 * spectrum.lam, r_points)
    if isinstance(spectrum, BandLimitedSpectrum):
        k = np.linspace(0.0, 1.25 * spectrum.k_max, k_points)
        return k, np.linspace(0.0, 40.0 / spectrum.k_max, r_points)
    return spectrum.k, np.linspace(0.0, 40.0 / spectrum.k[-1], r_points)


def cmd_spectrum(cfg: RunConfig, out: Outputs, args):
    p = cfg.params
    spectrum = build_spectrum(block(p, "spectrum"), "$.spectrum", cfg)
    k_default, r_default = _default_grids(spectrum, integer(p, "k_points", default=256, minimum=2),
                                          integer(p, "r_points", default=256, minimum=2))
    k = number_list(p, "k_per_m", default=k_default) if "k_per_m" in p else k_default
    r = number_list(p, "r_m", default=r_default) if "r_m" in p else r_default
    if np.any(k < 0) or np.any(r < 0):
        raise ConfigError("$", "k and r samples must be >= 0")
    vrms2 = vrms_squared(spectrum)
    out.csv("psd.csv", pio.SPECTRUM_COLUMNS, zip(k, spectrum.psd(k)))
    out.csv("autocorr.csv", ("r_m", "R_V2"), zip(r, spectrum.autocorr(r)))
    out.json("summary.json", {
        "spectrum": spectrum.descriptor(),
        "vrms_V": math.sqrt(vrms2),
        "vrms_squared_V2": vrms2,
    })


def _sweep(fn, d_list):
    return [(float(d), fn(float(d))) for d in d_list]


def cmd_force_pp(cfg: RunConfig, out: Outputs, args):
    p = cfg.params
    spectrum = build_spectrum(block(p, "spectrum"), "$.spectrum", cfg)
    d = separations(p)
    out.csv("force_pp.csv", ("d_m", "value"), _sweep(lambda x: force_pp(spectrum, x), d),
            quantity="attractive pressure", value_unit="N/m^2", spectrum=spectrum.descriptor())
    out.csv("energy_total.csv", ("d_m", "value"), _sweep(lambda x: energy_pp_total(spectrum, x), d),
            quantity="total field energy per area", value_unit="J/m^2",
            spectrum=spectrum.descriptor())
    out.csv("energy_interaction.csv", ("d_m", "value"), _sweep(lambda x: energy_pp_interaction(spectrum, x), d),
            quantity="interaction energy per area", value_unit="J/m^2",
            spectrum=spectrum.descriptor())


def cmd_force_sp(cfg: RunConfig, out: Outputs, args):
    p = cfg.params
    spectrum = build_spectrum(block(p, "spectrum"), "$.spectrum", cfg)
    radius = number(p, "sphere_radius_m", positive=True)
    rows, areas = [], []
    for d in separations(p):
        geom = SpherePlaneGeometry(radius, float(d))
        rows.append((d, force_sp(spectrum, geom), force_sp_small_kd(spectrum, geom)))
        r_eff, a_eff = effective_area(geom)
        areas.append((d, r_eff, a_eff))
    out.csv("force_sp.csv", ("d_m", "value", "small_kd_value"), rows,
            quantity="sphere-plane patch force", value_unit="N", sphere_radius_m=radius,
            spectrum=spectrum.descriptor())
    out.csv("effective_area.csv", ("d_m", "r_eff_m", "A_eff_m2"), areas)


def _seed(cfg: RunConfig, args):
    if args.seed is not None:
        return int(args.seed)
    if "seed" in cfg.params:
        return integer(cfg.params, "seed", minimum=0)
    raise ConfigError("$.seed", "a seed is required (config field or --seed)")


def _grid(p):
    g = block(p, "grid")
    return integer(g, "n", "$.grid", minimum=16), number(g, "h_m", "$.grid", positive=True)


def _apply_coherent(surface, p):
    comps = p.get("coherent", [])
    if not isinstance(comps, list):
        raise ConfigError("$.coherent", "expected a list of components")
    units = {"constant": "amplitude_V", "tilt": "amplitude_V_per_m", "quadratic": "amplitude_V_per_m2"}
    for i, comp in enumerate(comps):
        path = f"$.coherent[{i}]"
        if not isinstance(comp, dict) or comp.get("kind") not in units:
            raise ConfigError(f"{path}.kind", "expected constant, tilt or quadratic")
        amp = number(comp, units[comp["kind"]], path)
        surface = add_coherent(surface, comp["kind"], amp, number(comp, "angle_rad", path, default=0.0))
    return surface


def _make_surface(cfg, spectrum, n, h, seed, plate):
    if spectrum is None:
        return SurfaceMap(n, h, np.zeros((n, n)), seed, {"spectrum": None, "components": []})
    if plate == "two-surface":
        # counter-derived plate seeds that never collide across members
        return two_plate_surface(spectrum, n, h, 2 * seed, 2 * seed + 1)
    return synthesize_surface(spectrum, n, h, seed, plate=plate)


def cmd_synth(cfg: RunConfig, out: Outputs, args):
    p = cfg.params
    seed = out.meta["seed"]
    spectrum = build_spectrum(block(p, "spectrum"), "$.spectrum", cfg)
    n, h = _grid(p)
    plate = p.get("plate", "net")
    if plate not in ("net", "single", "two-surface"):
        raise ConfigError("$.plate", "expected net, single or two-surface")
    surface = _apply_coherent(_make_surface(cfg, spectrum, n, h, seed, plate), p)
    pio.save_surface(out.path("surface.pfs"), surface)
    if p.get("export_csv", True):
        pio.export_surface_csv(out.path("surface.csv"), surface, out.meta)
    target = vrms_squared(spectrum) * (0.5 if plate in ("single",) else 1.0)
    out.json("summary.json", {
        "n": n,
        "h_m": h,
        "plate": plate,
        "mean_V": float(np.mean(surface.values)),
        "variance_V2": float(np.var(surface.values)),
        "spectral_variance_V2": target,
    })


def cmd_vm_curve(cfg: RunConfig, out: Outputs, args):
    p = cfg.params
    geo = block(p, "geometry")
    radius = number(geo, "sphere_radius_m", "$.geometry", positive=True)
    d_list = separations(p, default=DEFAULT_D_LIST)
    persist = bool(p.get("persist_surfaces", True))

    if "surface_file" in p:
        surface = pio.load_surface(cfg.resolve(p["surface_file"]))
        surfaces = [(surface.seed, surface)]
        spectrum = None
    else:
        seed = out.meta["seed"]
        spec_block = block(p, "spectrum", required=False)
        spectrum = build_spectrum(spec_block, "$.spectrum", cfg) if spec_block is not None else None
        n, h = _grid(p)
        plate = p.get("plate", "net")
        seeds = member_seeds(seed, integer(p, "seeds", default=1, minimum=1))

        def make(s):
            return s, _apply_coherent(_make_surface(cfg, spectrum, n, h, s, plate), p)

        if args.threads > 1 and len(seeds) > 1:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                surfaces = list(pool.map(make, seeds))
        else:
            surfaces = [make(s) for s in seeds]

    first = surfaces[0][1]
    plate_radius = number(geo, "plate_radius_m", "$.geometry", default=first.half_width, positive=True)
    pfa = PfaConfig(radius, plate_radius)

    curves = []
    for s, surface in surfaces:
        curve = residual_force_curve(surface, pfa, d_list)
        curves.append(curve)
        out.csv(f"curve_seed{s}.csv", pio.CURVE_COLUMNS, curve, member_seed=s)
        if persist and "surface_file" not in p:
            pio.save_surface(out.path(f"surface_seed{s}.pfs"), surface)
    arr = np.array(curves)  # (members, d, 3)
    mean = arr.mean(axis=0)
    out.csv("ensemble_mean.csv", pio.CURVE_COLUMNS, mean, members=len(curves))

    calib = []
    for d in d_list:
        curv = capacitance_curvature(first, pfa, d)
        calib.append((d, curv, infer_distance(curv, radius), capacitance_curvature_disk(radius, d, plate_radius)))
    out.csv("calibration.csv", ("d_m", "curvature_N_V2", "inferred_d_m", "continuum_curvature_N_V2"), calib)

    flat = plane_plane_vm_check(first, d_list, plate_radius)
    out.csv("plane_plane_vm.csv", ("d_m", "vm_V"), zip(flat.d, flat.v_m))

    report = {"members": len(curves), "sphere_radius_m": radius, "plate_radius_m": plate_radius}
    if spectrum is not None:
        pred = [force_sp(spectrum, SpherePlaneGeometry(radius, float(d))) for d in d_list]
        report["prediction"] = [
            {"d_m": float(d), "ensemble_mean_Fres_N": float(m), "spectral_force_N": float(f),
             "ratio": float(m / f) if f > 0 else None}
            for d, m, f in zip(d_list, mean[:, 2], pred)
        ]
    out.json("summary.json", report)


def cmd_residual_fit(cfg: RunConfig, out: Outputs, args):
    p = cfg.params
    if not isinstance(p.get("dataset_file"), str):
        raise ConfigError("$.dataset_file", "expected a CSV path")
    path = cfg.resolve(p["dataset_file"])
    if not path.exists():
        raise ConfigError("$.dataset_file", f"file not found: {p['dataset_file']}")
    radius = number(p, "sphere_radius_m", positive=True)
    data = pio.read_dataset_csv(path, radius)
    fit = fit_residual_model(data)
    report = {
        "v_1_V": fit.v_1,
        "vrms_V": fit.vrms,
        "vrms_squared_V2": fit.vrms_squared,
        "chi2_per_dof": fit.chi2_per_dof,
        "dof": fit.dof,
        "covariance_v1_c": fit.covariance.tolist(),
    }
    try:
        pl = powerlaw_fit(data)
        report["powerlaw"] = {"amplitude": pl.amplitude, "exponent": pl.exponent,
                              "exponent_sigma": pl.exponent_sigma, "chi2_per_dof": pl.chi2_per_dof}
    except PatchForceError as exc:
        report["powerlaw"] = {"error": str(exc)}
    planted = block(p, "planted", required=False)
    if planted is not None:
        v1 = number(planted, "v_1_V", "$.planted")
        vrms = number(planted, "vrms_V", "$.planted", nonnegative=True)
        report["recovery"] = {
            "v_1_V": v1,
            "vrms_V": vrms,
            "v_1_rel_error": abs(fit.v_1 - v1) / abs(v1) if v1 else None,
            "vrms_rel_error": abs(fit.vrms - vrms) / vrms if vrms else None,
        }
    model = residual_model(data.d, data.v_m, fit.v_1, fit.vrms, radius)
    out.csv("fit_curve.csv", ("d_m", "F_N", "model_N", "sigmaF_N"), zip(data.d, data.f, model, data.sigma_f))
    out.json("fit.json", report)


def cmd_offset_study(cfg: RunConfig, out: Outputs, args):
    p = cfg.params
    alphas = number_list(p, "alphas", default=[0.0, 0.05, 0.1, 0.15, 0.2])
    x_max = number(p, "x_max", default=10.0, positive=True)
    exponent = number(p, "p", default=P_NOMINAL, positive=True)
    results = [offset_study(float(a), x_max, exponent) for a in alphas]
    out.csv("offset_study.csv", pio.STUDY_COLUMNS,
            [(r.alpha, r.x_max, r.p, r.epsilon, r.b_f, r.chi2_min) for r in results])
    summary = {}
    if len(results) >= 2:
        summary["epsilon_slope"] = epsilon_slope(results)
    fe = block(p, "force_error", required=False)
    if fe is not None:
        dd = number(fe, "delta_d_m", "$.force_error")
        d = number(fe, "d_m", "$.force_error", positive=True)
        summary["force_error"] = {"delta_d_m": dd, "d_m": d, "fractional_change": force_error_from_offset(dd, d)}
    out.json("summary.json", summary)


def cmd_toy(cfg: RunConfig, out: Outputs, args):
    p = cfg.params
    toy = ToyConfig(number(p, "area_m2", positive=True), number(p, "delta_m", nonnegative=True),
                    number(p, "v_c_V"), number(p, "v_1_V", default=0.0))
    rows = [(d, toy_vm(toy, d), toy_residual(toy, d)) for d in separations(p)]
    out.csv("toy.csv", pio.CURVE_COLUMNS, rows)


COMMANDS = {
    "spectrum": (cmd_spectrum, "tabulate S(k), R(r) and V_rms"),
    "force-pp": (cmd_force_pp, "plane-plane energy and pressure sweep"),
    "force-sp": (cmd_force_sp, "sphere-plane force sweep with the small-kd limit"),
    "synth": (cmd_synth, "synthesize a random patch surface"),
    "vm-curve": (cmd_vm_curve, "minimising potential, residual force and calibration curves"),
    "residual-fit": (cmd_residual_fit, "fit the residual-force model to a dataset"),
    "offset-study": (cmd_offset_study, "distance-offset error from a wrong fit function"),
    "toy": (cmd_toy, "two-capacitor toy model sweep"),
}
SEEDED = {"synth", "vm-curve"}


def build_parser():
    parser = argparse.ArgumentParser(prog="patchforce", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"patchforce {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", default=".", help="output directory (default: current)")
        sp.add_argument("--seed", type=int, default=None, help="top-level seed (overrides config)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for ensembles")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("patchforce: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("patchforce: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    out = None
    try:
        cfg = RunConfig.load(args.config, args.command)
        seed = None
        if args.command in SEEDED:
            # a stored surface already carries its own seed
            optional = args.command == "vm-curve" and "surface_file" in cfg.params
            if not optional or args.seed is not None or "seed" in cfg.params:
                seed = _seed(cfg, args)
        if seed is not None:
            cfg = cfg.with_params(seed=seed)
        out = Outputs(args.out, cfg, seed)
        COMMANDS[args.command][0](cfg, out, args)
    except InfeasibleFitError as exc:
        if out is not None:
            out.discard()
        print(f"patchforce: infeasible fit: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConfigError as exc:
        if out is not None:
            out.discard()
        print(f"patchforce: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PatchForceError, OSError) as exc:
        if out is not None:
            out.discard()
        print(f"patchforce: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
