"""Run configuration: strict key = value parsing, validation, canonical
serialization and hashing.

Unknown sections or keys are hard errors with line numbers; every key has a
documented default, so the empty file is a valid config.  The canonical
serialization (fixed section/key order, floats at 17 significant digits)
defines the config hash used for reproducibility metadata.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, PilotwaveError
from .params import (
    DropParams,
    FluidParams,
    ForcingParams,
    ParameterError,
    faraday_wavenumber,
    make_drop,
)
from .topography import VARIANTS, GeometrySpec, Region, essw_geometry


class ConfigError(PilotwaveError):
    """Malformed or invalid configuration text."""


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (list, tuple)):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def _parse_float(s, where):
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got '{s}'") from None


def _parse_int(s, where):
    try:
        return int(s)
    except ValueError:
        raise ConfigError(f"{where}: expected an integer, got '{s}'") from None


def _parse_bool(s, where):
    low = s.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{where}: expected true/false, got '{s}'")


def _parse_float_list(s, where):
    items = [p.strip() for p in s.split(",") if p.strip()]
    return [_parse_float(p, where) for p in items]


def _parse_optional_float(s, where):
    if s.strip().lower() in ("none", "auto", ""):
        return None
    return _parse_float(s, where)


# (kind, default) per key; kinds: float, int, bool, str, floats, opt_float
SCHEMA = {
    "fluid": {
        "sigma": ("float", 0.0209),
        "nu": ("float", 2.0e-5),
        # nu_eff ships recalibrated so the 128^2 open-bath Faraday threshold
        # lands on gamma_F = 3.82 g (see calibrate-threshold)
        "nu_eff": ("float", 1.561861e-5),
        "rho": ("float", 965.0),
        "g": ("float", 9.81),
        "h0": ("float", 0.007),
    },
    "forcing": {
        "f": ("float", 75.0),
        "gamma_F": ("float", 3.8177),
        "gamma_over_gamma_F": ("opt_float", 0.905),
        "gamma": ("opt_float", None),
    },
    "drop": {
        "R": ("float", 0.55e-3),
        "c_skid": ("float", 0.17),
        "mu_air": ("float", 1.8e-5),
        "tau_c_over_T_F": ("float", 0.25),
        "phi_imp_over_T_F": ("float", 0.375),
    },
    "geometry": {
        "variant": ("str", "two_barrier"),
        "barrier_depth_mm": ("float", 0.6),
        "walls": ("bool", True),
        "rhombus_half_width": ("float", 1.5),
        "rhombus_half_height": ("float", 2.5),
        "barrier_width": ("float", 1.5),
        "barrier_length": ("float", 6.0),
        "barrier_tip_dx": ("float", 4.0),
        "barrier_tip_dy": ("float", 6.0),
        "barrier_angle_deg": ("float", 45.0),
        "corridor_half_width": ("float", 1.0),
        "wall_thickness": ("float", 1.5),
        "wall_top": ("float", 8.0),
        "domain_lx": ("float", 24.0),
        "domain_ly": ("float", 32.0),
        "domain_y_min": ("float", -22.0),
    },
    "numerics": {
        "nx": ("int", 192),
        "ny": ("int", 256),
        "steps_per_t_f": ("int", 64),
        "kernel_width": ("opt_float", None),
        "total_time_t_f": ("float", 300.0),
        "snapshot_every_t_f": ("float", 4.0),
        "snapshot_phi": ("bool", False),
        "stop_below_y": ("opt_float", None),
    },
    "launch": {
        "impact_parameter": ("float", 0.5),
        "y0": ("float", 3.0),
        "speed": ("float", 0.008),
        "heading_deg": ("float", -90.0),
        "jitter": ("float", 0.0),
    },
    "run": {
        "seed": ("int", 1),
        "name": ("str", "run"),
    },
    "ensemble": {
        "impact_parameters": ("floats", [-0.8, -0.4, 0.2, 0.5, 0.8]),
        "memory_values": ("floats", [0.88, 0.90, 0.92]),
    },
    "calibration": {
        "grid": ("int", 128),
        "domain_lambda": ("float", 16.0),
        "tolerance": ("float", 0.005),
        "window_t_f": ("float", 50.0),
        "noise_amplitude": ("float", 1e-10),
        "bracket_lo": ("float", 3.4),
        "bracket_hi": ("float", 4.6),
        "fit_target": ("opt_float", None),
        "fit_tolerance": ("float", 0.01),
    },
    "bohm": {
        "packet_x0": ("float", 3.0),
        "packet_speed": ("float", 1.0),
        "half_angle_deg": ("float", 45.0),
        "packet_width": ("float", 1.0),
        "n_trajectories": ("int", 20),
        "launch_halfwidth": ("float", 1.5),
        "t_final": ("float", 7.0),
        "dt": ("float", 1e-3),
    },
}

_PARSERS = {
    "float": _parse_float,
    "int": _parse_int,
    "bool": _parse_bool,
    "str": lambda s, _w: s.strip(),
    "floats": _parse_float_list,
    "opt_float": _parse_optional_float,
}

_REGION_KEY = re.compile(r"^region\d+$")


def parse_config_text(text: str) -> dict:
    """Parse key = value sections into a {section: {key: value}} dict.

    Starts from the documented defaults; rejects unknown sections/keys and
    malformed lines, reporting 1-based line numbers.
    """
    values = {sec: dict((k, d) for k, (_, d) in keys.items()) for sec, keys in SCHEMA.items()}
    regions: list = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header '{line}'")
            section = line[1:-1].strip().lower()
            if section not in SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got '{line}'")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside of any [section]")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if section == "geometry" and _REGION_KEY.match(key):
            regions.append(_parse_region(val, f"line {lineno}"))
            continue
        if key not in SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key '{key}' in [{section}]")
        kind = SCHEMA[section][key][0]
        values[section][key] = _PARSERS[kind](val, f"line {lineno}")
    values["geometry"]["custom_regions"] = regions
    return values


def _parse_region(val: str, where: str):
    """Custom region syntax: name | depth_mm | x1,y1; x2,y2; ...  (mm)."""
    parts = [p.strip() for p in val.split("|")]
    if len(parts) != 3:
        raise ConfigError(f"{where}: region needs 'name | depth_mm | x1,y1; x2,y2; ...'")
    name, depth_s, verts_s = parts
    depth = _parse_float(depth_s, where)
    verts = []
    for pair in verts_s.split(";"):
        xy = [p for p in pair.split(",") if p.strip()]
        if len(xy) != 2:
            raise ConfigError(f"{where}: bad vertex '{pair.strip()}'")
        verts.append((_parse_float(xy[0], where), _parse_float(xy[1], where)))
    if len(verts) < 3:
        raise ConfigError(f"{where}: region polygon needs >= 3 vertices")
    return (name, depth, tuple(verts))


def serialize_config(values: dict) -> str:
    """Canonical text: fixed section and key order, normalized numbers."""
    lines = []
    for sec in SCHEMA:
        lines.append(f"[{sec}]")
        for key, (kind, _) in SCHEMA[sec].items():
            v = values[sec][key]
            if v is None:
                lines.append(f"{key} = none")
            else:
                lines.append(f"{key} = {_fmt(v)}")
        if sec == "geometry":
            for i, (name, depth, verts) in enumerate(values["geometry"].get("custom_regions", []), 1):
                vs = "; ".join(f"{_fmt(x)},{_fmt(y)}" for (x, y) in verts)
                lines.append(f"region{i} = {name} | {_fmt(depth)} | {vs}")
        lines.append("")
    return "\n".join(lines)


def config_hash(values: dict) -> str:
    return hashlib.sha256(serialize_config(values).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SimConfig:
    """Fully resolved simulation setup plus its canonical form."""

    fluid: FluidParams
    forcing: ForcingParams
    drop: DropParams
    geometry: GeometrySpec
    lambda_F: float
    k_F: float
    nx: int
    ny: int
    dt: float
    kernel_width: float | None
    total_time: float
    snapshot_every: float
    snapshot_phi: bool
    stop_below_y: float | None
    launch_x0: float
    launch_y0: float
    launch_v: tuple
    launch_jitter: float
    seed: int
    name: str
    values: dict = field(repr=False)
    canonical: str = field(repr=False, default="")
    hash: str = ""


def resolve_config(values: dict) -> SimConfig:
    """Build validated parameter objects from a parsed config dict."""
    fv = values["fluid"]
    try:
        fluid = FluidParams(
            sigma=fv["sigma"], nu=fv["nu"], nu_eff=fv["nu_eff"],
            rho=fv["rho"], g=fv["g"], h0=fv["h0"],
        )
        ov = values["forcing"]
        if ov["gamma"] is not None and ov["gamma_over_gamma_F"] is not None:
            raise ConfigError("[forcing]: set either gamma or gamma_over_gamma_F, not both")
        if ov["gamma"] is not None:
            gamma = ov["gamma"]
        else:
            ratio = ov["gamma_over_gamma_F"]
            if ratio is None:
                raise ConfigError("[forcing]: gamma or gamma_over_gamma_F required")
            gamma = ratio * ov["gamma_F"]
        forcing = ForcingParams(f=ov["f"], gamma=gamma, gamma_F=ov["gamma_F"])
        dv = values["drop"]
        drop = make_drop(
            fluid, forcing, R=dv["R"],
            c_skid=dv["c_skid"], mu_air=dv["mu_air"],
            tau_c_frac=dv["tau_c_over_T_F"],
            phi_imp_frac=dv["phi_imp_over_T_F"],
        )
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc

    k_F = faraday_wavenumber(fluid, forcing)
    lambda_F = 2.0 * np.pi / k_F

    gv = dict(values["geometry"])
    custom = gv.pop("custom_regions", [])
    try:
        geometry = essw_geometry(
            lambda_F,
            gv["variant"],
            ambient_depth=fluid.h0,
            barrier_depth=gv["barrier_depth_mm"] * 1e-3,
            walls=gv["walls"],
            rhombus_half_width=gv["rhombus_half_width"],
            rhombus_half_height=gv["rhombus_half_height"],
            barrier_width=gv["barrier_width"],
            barrier_length=gv["barrier_length"],
            barrier_tip_dx=gv["barrier_tip_dx"],
            barrier_tip_dy=gv["barrier_tip_dy"],
            barrier_angle_deg=gv["barrier_angle_deg"],
            corridor_half_width=gv["corridor_half_width"],
            wall_thickness=gv["wall_thickness"],
            wall_top=gv["wall_top"],
            domain_lx=gv["domain_lx"],
            domain_ly=gv["domain_ly"],
            domain_y_min=gv["domain_y_min"],
        )
        if custom:
            extra = tuple(
                Region(tuple((x * 1e-3, y * 1e-3) for (x, y) in verts), depth * 1e-3, name)
                for (name, depth, verts) in custom
            )
            geometry = GeometrySpec(
                regions=geometry.regions + extra,
                ambient_depth=geometry.ambient_depth,
                domain_size=geometry.domain_size,
                domain_origin=geometry.domain_origin,
                has_left_barrier=geometry.has_left_barrier,
                has_right_barrier=geometry.has_right_barrier,
                lambda_F=lambda_F,
                variant="custom",
            )
    except GeometryError as exc:
        raise ConfigError(f"[geometry]: {exc}") from exc

    nv = values["numerics"]
    dt = forcing.T_F / nv["steps_per_t_f"]
    lv = values["launch"]
    heading = np.deg2rad(lv["heading_deg"])
    launch_v = (lv["speed"] * np.cos(heading), lv["speed"] * np.sin(heading))

    canonical = serialize_config(values)
    return SimConfig(
        fluid=fluid,
        forcing=forcing,
        drop=drop,
        geometry=geometry,
        lambda_F=lambda_F,
        k_F=k_F,
        nx=nv["nx"],
        ny=nv["ny"],
        dt=dt,
        kernel_width=nv["kernel_width"],
        total_time=nv["total_time_t_f"] * forcing.T_F,
        snapshot_every=nv["snapshot_every_t_f"] * forcing.T_F,
        snapshot_phi=nv["snapshot_phi"],
        stop_below_y=None if nv["stop_below_y"] is None else nv["stop_below_y"] * lambda_F,
        launch_x0=lv["impact_parameter"] * lambda_F,
        launch_y0=lv["y0"] * lambda_F,
        launch_v=launch_v,
        launch_jitter=lv["jitter"],
        seed=values["run"]["seed"],
        name=values["run"]["name"],
        values=values,
        canonical=canonical,
        hash=hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
    )


def parse_config(text: str) -> SimConfig:
    """Parse, validate and resolve a configuration (empty text = defaults)."""
    return resolve_config(parse_config_text(text))


def default_config_text() -> str:
    """Canonical serialization of the documented defaults."""
    return serialize_config(parse_config_text(""))
