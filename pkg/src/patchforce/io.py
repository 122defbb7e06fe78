"""File formats: metadata-headed CSV, binary surface maps, JSON summaries.

CSV files are comma separated with LF line endings; leading ``#`` lines hold
``key: value`` metadata (values JSON-encoded).  Floats are written with 17
significant digits so that reading a file back is lossless.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError
from .residuals import ResidualDataset
from .spectra import TabulatedSpectrum
from .surface import SurfaceMap

SPECTRUM_COLUMNS = ("k_per_m", "S_V2m2")
DATASET_COLUMNS = ("d_m", "vm_V", "F_N", "sigmaF_N")
CURVE_COLUMNS = ("d_m", "vm_V", "Fres_N")
STUDY_COLUMNS = ("alpha", "x_max", "p", "epsilon", "b_f", "chi2_min")

SURFACE_MAGIC = b"PFSURF\x00\x00"
SURFACE_VERSION = 1


def fmt(x):
    return format(float(x), ".17g")


def write_csv(path, columns, rows, meta=None):
    meta = {"tool": f"patchforce {__version__}", "units": "SI", **(meta or {})}
    lines = [f"# {key}: {json.dumps(value, sort_keys=True)}" for key, value in meta.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_csv(path):
    """Return ``(meta, columns, data)`` with ``data`` shaped ``(rows, columns)``."""
    meta, columns, rows = {}, None, []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            try:
                meta[key.strip()] = json.loads(value)
            except json.JSONDecodeError:
                meta[key.strip()] = value.strip()
            continue
        if columns is None:
            columns = [c.strip() for c in line.split(",")]
            continue
        rows.append([float(v) for v in line.split(",")])
    if columns is None:
        raise DomainError(f"{path}: no header line")
    data = np.array(rows, dtype=float).reshape(-1, len(columns))
    return meta, columns, data


def _require_columns(path, columns, expected):
    if tuple(columns) != tuple(expected):
        raise DomainError(f"{path}: expected header {','.join(expected)}, got {','.join(columns)}")


def read_spectrum_csv(path, single_plate=False) -> TabulatedSpectrum:
    _, columns, data = read_csv(path)
    _require_columns(path, columns, SPECTRUM_COLUMNS)
    if single_plate:
        return TabulatedSpectrum.from_single_plate(data[:, 0], data[:, 1])
    return TabulatedSpectrum(data[:, 0], data[:, 1])


def write_spectrum_csv(path, spectrum: TabulatedSpectrum, meta=None):
    write_csv(path, SPECTRUM_COLUMNS, zip(spectrum.k, spectrum.S), meta)


def read_dataset_csv(path, sphere_radius) -> ResidualDataset:
    _, columns, data = read_csv(path)
    _require_columns(path, columns, DATASET_COLUMNS)
    return ResidualDataset(data[:, 0], data[:, 1], data[:, 2], data[:, 3], sphere_radius)


def write_dataset_csv(path, data: ResidualDataset, meta=None):
    write_csv(path, DATASET_COLUMNS, zip(data.d, data.v_m, data.f, data.sigma_f), meta)


def save_surface(path, surface: SurfaceMap):
    """Binary map: magic, u32 version, u32 header length, JSON header, float64 LE values."""
    header = json.dumps(
        {"n": surface.n, "h_m": surface.h, "seed": surface.seed, "provenance": surface.provenance},
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(SURFACE_MAGIC)
        fh.write(struct.pack("<II", SURFACE_VERSION, len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(surface.values, dtype="<f8").tobytes())


def load_surface(path) -> SurfaceMap:
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:8] != SURFACE_MAGIC:
        raise DomainError(f"{path}: not a surface map file")
    version, hlen = struct.unpack_from("<II", blob, 8)
    if version != SURFACE_VERSION:
        raise DomainError(f"{path}: unsupported surface format version {version}")
    try:
        header = json.loads(blob[16:16 + hlen].decode("utf-8"))
        n = int(header["n"])
    except (ValueError, KeyError, TypeError) as exc:
        raise DomainError(f"{path}: corrupt surface header ({exc})") from None
    if len(blob) != 16 + hlen + 8 * n * n:
        raise DomainError(f"{path}: expected {n}x{n} values, file size does not match")
    values = np.frombuffer(blob, dtype="<f8", count=n * n, offset=16 + hlen).reshape(n, n)
    return SurfaceMap(n, header["h_m"], values.astype(np.float64), header["seed"], header["provenance"])


def export_surface_csv(path, surface: SurfaceMap, meta=None):
    x = surface.coords()
    X, Y = np.meshgrid(x, x, indexing="ij")
    rows = zip(X.ravel(), Y.ravel(), surface.values.ravel())
    write_csv(path, ("x_m", "y_m", "V_V"), rows, {"n": surface.n, "h_m": surface.h, "seed": surface.seed,
                                                  **(meta or {})})


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n")
