"""Coupled wave-droplet runs: single trajectories, impact-parameter
ensembles, memory sweeps and Faraday-threshold calibration.

Every run is fully determined by (config hash, seed): RNG use is limited to
explicitly seeded generators, stepping is serial within a run, and ensemble
members are independent, so results do not depend on worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .config import SimConfig, resolve_config
from .droplet import DropState, contact_force, step_drop
from .errors import BlowUpError, CalibrationError, DomainExitError, PilotwaveError
from .gridio import TrajectoryRecord
from .params import (
    FluidParams,
    ForcingParams,
    ParameterError,
    faraday_wavenumber,
)
from .topography import essw_geometry, rasterize_depth
from .wavefield import (
    DropForcing,
    GradientSampler,
    SpectralWorkspace,
    init_state,
    step_wave,
    wave_energy,
)


def build_depthmap(config: SimConfig):
    return rasterize_depth(config.geometry, config.nx, config.ny, config.k_F)


def _geometry_metadata(config: SimConfig) -> dict:
    regions = [
        {"name": r.name, "depth_m": r.depth, "vertices_m": [list(v) for v in r.polygon]}
        for r in config.geometry.regions
    ]
    return {
        "variant": config.geometry.variant,
        "ambient_depth_m": config.geometry.ambient_depth,
        "domain_size_m": list(config.geometry.domain_size),
        "domain_origin_m": list(config.geometry.domain_origin),
        "regions": regions,
        "lambda_F_m": config.lambda_F,
        "k_F_per_m": config.k_F,
    }


def run_single(config: SimConfig, member_index: int = 0, depthmap=None) -> TrajectoryRecord:
    """Lockstep coupled run: deposit pressure, step wave, sample slope, step drop.

    Terminates at total time, on domain exit, on wave blow-up, or when the
    droplet descends past ``stop_below_y``; all are graceful, tagged outcomes.
    """
    if depthmap is None:
        depthmap = build_depthmap(config)
    ws = SpectralWorkspace(depthmap, config.fluid, config.forcing, config.dt,
                           kernel_width=config.kernel_width)
    state = init_state(ws)

    rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed,
                                                       spawn_key=(member_index,)))
    V0 = np.array(config.launch_v, dtype=float)
    if config.launch_jitter > 0.0:
        V0 = V0 + config.launch_jitter * rng.standard_normal(2)
    drop_state = DropState(
        X=np.array([config.launch_x0, config.launch_y0]),
        V=V0,
        bounce_phase=0.0,
    )

    n_steps = int(round(config.total_time / config.dt))
    snap_stride = max(1, int(round(config.snapshot_every / config.dt)))
    dt = config.dt
    force = lambda t: contact_force(t, config.drop, config.forcing)

    n_rec = n_steps + 1
    t_arr = np.empty(n_rec)
    x_arr = np.empty(n_rec)
    y_arr = np.empty(n_rec)
    vx_arr = np.empty(n_rec)
    vy_arr = np.empty(n_rec)
    F_arr = np.empty(n_rec)
    ph_arr = np.empty(n_rec)

    def record(i, t):
        t_arr[i] = t
        x_arr[i], y_arr[i] = drop_state.X
        vx_arr[i], vy_arr[i] = drop_state.V
        F_arr[i] = force(t)
        ph_arr[i] = t % config.forcing.T_F

    snapshots = []
    termination = "completed"
    record(0, 0.0)
    n_done = 0
    try:
        for i in range(n_steps):
            t = i * dt
            forcing_term = DropForcing(X=drop_state.X, F=force, kernel_width=ws.kernel_width)
            state = step_wave(state, ws, forcing_term)
            sampler = GradientSampler(state, ws)
            drop_state = step_drop(
                drop_state, sampler.sample, force,
                config.drop, config.fluid, config.forcing,
                dt, t, domain=ws.domain,
            )
            n_done = i + 1
            record(n_done, state.t)
            if n_done % snap_stride == 0:
                if config.snapshot_phi:
                    snapshots.append((state.t, state.eta, state.phi))
                else:
                    snapshots.append((state.t, state.eta))
            if config.stop_below_y is not None and drop_state.X[1] < config.stop_below_y:
                termination = "detector_reached"
                break
    except DomainExitError:
        termination = "domain_exit"
    except BlowUpError:
        termination = "blow_up"

    n_kept = n_done + 1
    metadata = {
        "config_hash": config.hash,
        "config_text": config.canonical,
        "software_version": __version__,
        "seed": config.seed,
        "member_index": member_index,
        "impact_parameter_m": config.launch_x0,
        "gamma_over_gamma_F": config.forcing.gamma / config.forcing.gamma_F,
        "units": "si",
        "geometry": _geometry_metadata(config),
        "grid": {"Nx": config.nx, "Ny": config.ny,
                 "dx_m": depthmap.dx, "dy_m": depthmap.dy,
                 "x0_m": depthmap.x0, "y0_m": depthmap.y0},
        "dt_s": dt,
        "snapshot_times_s": [s[0] for s in snapshots],
    }
    return TrajectoryRecord(
        t=t_arr[:n_kept], x=x_arr[:n_kept], y=y_arr[:n_kept],
        vx=vx_arr[:n_kept], vy=vy_arr[:n_kept],
        F=F_arr[:n_kept], phase=ph_arr[:n_kept],
        metadata=metadata, snapshots=snapshots, termination=termination,
    )


@dataclass(frozen=True)
class EnsembleSpec:
    """A base config fanned out over launch impact parameters."""

    config: SimConfig
    impact_parameters: tuple  # meters
    weights: tuple | None = None

    def __post_init__(self):
        lam = self.config.lambda_F
        gv = self.config.values["geometry"]
        half = gv["corridor_half_width"] * lam
        for b in self.impact_parameters:
            if abs(b) >= half:
                raise ParameterError(
                    f"impact parameter {b / lam:.3g} lambda_F outside the "
                    f"launch corridor (half-width {half / lam:.3g} lambda_F)"
                )
        if self.weights is not None:
            if len(self.weights) != len(self.impact_parameters):
                raise ParameterError("weights length mismatch")
            if any(w < 0 for w in self.weights):
                raise ParameterError("weights must be non-negative")


def member_config(spec: EnsembleSpec, index: int) -> SimConfig:
    b = spec.impact_parameters[index]
    values = {k: dict(v) for k, v in spec.config.values.items()}
    values["geometry"]["custom_regions"] = spec.config.values["geometry"].get("custom_regions", [])
    values["launch"]["impact_parameter"] = b / spec.config.lambda_F
    return resolve_config(values)


def _run_member(args):
    spec, index, depthmap = args
    return run_single(member_config(spec, index), member_index=index, depthmap=depthmap)


def run_ensemble(spec: EnsembleSpec, threads: int = 1) -> list:
    """Run members independently; output order follows the impact list."""
    if not spec.impact_parameters:
        return []
    depthmap = build_depthmap(spec.config)
    jobs = [(spec, i, depthmap) for i in range(len(spec.impact_parameters))]
    if threads <= 1 or len(jobs) == 1:
        return [_run_member(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_member, jobs))


def sweep_memory(spec: EnsembleSpec, values, threads: int = 1) -> dict:
    """Run the same ensemble at several gamma/gamma_F values (all < 0.93)."""
    for v in values:
        if not 0.0 < v < 0.93:
            raise ParameterError(
                f"memory value {v} outside validity range (0, 0.93): the wave "
                "field reaches the domain edges at higher memory"
            )
    out = {}
    for v in values:
        cfg_values = {k: dict(d) for k, d in spec.config.values.items()}
        cfg_values["geometry"]["custom_regions"] = spec.config.values["geometry"].get("custom_regions", [])
        cfg_values["forcing"]["gamma_over_gamma_F"] = v
        cfg_values["forcing"]["gamma"] = None
        cfg = resolve_config(cfg_values)
        out[v] = run_ensemble(replace(spec, config=cfg), threads=threads)
    return out


@dataclass(frozen=True)
class CalibrationResult:
    gamma_F: float
    nu_eff: float
    probes: tuple  # (gamma, grew) pairs of the final bisection
    fitted: bool
    elapsed_s: float


def _threshold_grows(fluid, f_drive, gamma, grid, domain_lambda, window_t_f,
                     noise_amplitude, seed, k_F):
    """One noise-seeded open-bath evolution, classified grow/decay."""
    lam = 2.0 * np.pi / k_F
    forcing = ForcingParams(f=f_drive, gamma=gamma, gamma_F=max(2.0 * gamma, 1.0))
    geom = essw_geometry(lam, "open_bath", walls=False, ambient_depth=fluid.h0,
                         domain_lx=domain_lambda, domain_ly=domain_lambda,
                         domain_y_min=-domain_lambda / 2.0)
    dm = rasterize_depth(geom, grid, grid, k_F)
    ws = SpectralWorkspace(dm, fluid, forcing, forcing.T_F / 64.0)
    rng = np.random.default_rng(seed)
    state = init_state(ws, noise_amplitude=noise_amplitude, rng=rng)
    n = int(round(window_t_f * 64))
    e_mid = None
    try:
        for i in range(n):
            state = step_wave(state, ws)
            if i == n // 2:
                e_mid = wave_energy(state, ws)
    except BlowUpError:
        return True
    e_end = wave_energy(state, ws)
    if e_mid == 0.0 or e_end == 0.0:
        raise CalibrationError("seeded wave energy vanished; increase noise amplitude")
    return e_end > e_mid


def calibrate_threshold(
    fluid: FluidParams,
    f_drive: float = 75.0,
    *,
    grid: int = 128,
    domain_lambda: float = 16.0,
    tolerance: float = 0.005,
    window_t_f: float = 50.0,
    noise_amplitude: float = 1e-10,
    bracket: tuple = (3.4, 4.6),
    seed: int = 1,
    fit_target: float | None = None,
    fit_tolerance: float = 0.01,
    max_fit_iterations: int = 6,
) -> CalibrationResult:
    """Bisect the Faraday threshold on a small open bath; optionally refit nu_eff.

    The same noise seed is used for every probe, so grow/decay is monotone in
    gamma; a non-monotone bracket raises CalibrationError.  With
    ``fit_target`` set, nu_eff is adjusted by secant iteration until the
    calibrated threshold matches the target.
    """
    t_start = time.perf_counter()

    def bisect(flu, lo, hi):
        forcing_probe = ForcingParams(f=f_drive, gamma=0.0, gamma_F=1.0)
        k_F = faraday_wavenumber(flu, forcing_probe)
        probes = []

        def grows(gamma):
            g = _threshold_grows(flu, f_drive, gamma, grid, domain_lambda,
                                 window_t_f, noise_amplitude, seed, k_F)
            probes.append((gamma, g))
            return g

        if grows(lo):
            raise CalibrationError(
                f"energy grows at bracket floor gamma = {lo} g; solver or bracket misconfigured"
            )
        if not grows(hi):
            raise CalibrationError(
                f"energy decays at bracket ceiling gamma = {hi} g; solver or bracket misconfigured"
            )
        while hi - lo > tolerance:
            mid = 0.5 * (lo + hi)
            if grows(mid):
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi), probes

    lo, hi = bracket
    gamma_F, probes = bisect(fluid, lo, hi)
    if fit_target is None:
        return CalibrationResult(gamma_F, fluid.nu_eff, tuple(probes), False,
                                 time.perf_counter() - t_start)

    # secant on nu_eff; the threshold is nearly proportional to nu_eff
    nu_prev, g_prev = fluid.nu_eff, gamma_F
    nu_cur = fluid.nu_eff * fit_target / gamma_F
    for _ in range(max_fit_iterations):
        flu = replace(fluid, nu_eff=nu_cur)
        pad = max(10 * tolerance, abs(fit_target - g_prev))
        gamma_F, probes = bisect(flu, fit_target - pad - 10 * tolerance,
                                 fit_target + pad + 10 * tolerance)
        if abs(gamma_F - fit_target) <= fit_tolerance:
            return CalibrationResult(gamma_F, nu_cur, tuple(probes), True,
                                     time.perf_counter() - t_start)
        denom = gamma_F - g_prev
        if denom == 0.0:
            break
        nu_next = nu_cur + (fit_target - gamma_F) * (nu_cur - nu_prev) / denom
        nu_prev, g_prev, nu_cur = nu_cur, gamma_F, nu_next
    raise CalibrationError(
        f"nu_eff fit did not reach gamma_F = {fit_target} g within "
        f"{max_fit_iterations} iterations (last {gamma_F:.4f} g)"
    )
