"""Horizontal droplet dynamics under wave-slope propulsion and drag.

Vertical bouncing is imposed, not solved: the droplet contacts the bath once
per Faraday period through a prescribed sin^2 force window whose integral
equals the weight impulse m*g*T_F.  The horizontal equation of motion is

    m dV/dt = -F(t) grad(eta)(X, t) - D(F(t)) V,    dX/dt = V,

with D(F) the skidding-plus-air drag, integrated with RK4 against the frozen
current wave state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainExitError
from .params import G_STANDARD, DropParams, FluidParams, ForcingParams


@dataclass(frozen=True)
class DropState:
    """Droplet position (m), velocity (m/s) and phase within the Faraday period."""

    X: np.ndarray
    V: np.ndarray
    bounce_phase: float


def contact_force(t: float, drop: DropParams, forcing: ForcingParams) -> float:
    """Periodic normal force (N): a sin^2 pulse of length tau_c once per T_F.

    The pulse starts at phi_imp into each Faraday period; its integral over
    one period is m*g*T_F, so the mean force balances the weight.
    """
    T_F = forcing.T_F
    ph = (t - drop.phi_imp) % T_F
    if ph < drop.tau_c:
        peak = 2.0 * drop.m * G_STANDARD * T_F / drop.tau_c
        return peak * np.sin(np.pi * ph / drop.tau_c) ** 2
    return 0.0


def drag_coefficient(F: float, drop: DropParams, fluid: FluidParams) -> float:
    """Total drag (kg/s): contact skidding drag, affine in F, plus Stokes air drag."""
    if F < 0.0:
        raise ValueError("contact force must be non-negative")
    return drop.c_skid * np.sqrt(fluid.rho * drop.R / fluid.sigma) * F + 6.0 * np.pi * drop.R * drop.mu_air


@dataclass(frozen=True)
class StepAudit:
    """RK4-weighted impulses of one step, for momentum-balance checks."""

    slope_impulse: np.ndarray
    drag_impulse: np.ndarray


def step_drop(
    state: DropState,
    slope,
    force,
    drop: DropParams,
    fluid: FluidParams,
    forcing: ForcingParams,
    dt: float,
    t: float,
    domain=None,
    with_audit: bool = False,
):
    """Advance the droplet by dt with RK4, re-sampling the slope at substep positions.

    ``slope`` maps a position to grad(eta) there (the wave state is frozen
    during the step); ``force`` maps time to the instantaneous normal force.
    Raises DomainExitError when the position leaves ``domain``
    (x_min, x_max, y_min, y_max).
    """
    m = drop.m

    def acc(ti, Xi, Vi):
        F = force(ti)
        if F != 0.0:
            a = -(F / m) * slope(Xi) - (drag_coefficient(F, drop, fluid) / m) * Vi
            return a, F
        return -(drag_coefficient(0.0, drop, fluid) / m) * Vi, 0.0

    X0, V0 = state.X, state.V
    a1, F1 = acc(t, X0, V0)
    X2, V2 = X0 + (dt / 2) * V0, V0 + (dt / 2) * a1
    a2, F2 = acc(t + dt / 2, X2, V2)
    X3, V3 = X0 + (dt / 2) * V2, V0 + (dt / 2) * a2
    a3, F3 = acc(t + dt / 2, X3, V3)
    X4, V4 = X0 + dt * V3, V0 + dt * a3
    a4, F4 = acc(t + dt, X4, V4)

    Xn = X0 + (dt / 6) * (V0 + 2 * V2 + 2 * V3 + V4)
    Vn = V0 + (dt / 6) * (a1 + 2 * a2 + 2 * a3 + a4)

    if domain is not None:
        x_min, x_max, y_min, y_max = domain
        if not (x_min <= Xn[0] < x_max and y_min <= Xn[1] < y_max):
            raise DomainExitError(f"droplet left the domain at t = {t + dt:.6g} s")

    new = DropState(X=Xn, V=Vn, bounce_phase=(state.bounce_phase + dt) % forcing.T_F)
    if not with_audit:
        return new

    # the same RK4 weighting of the two force contributions reproduces m*dV
    # exactly, so the audit isolates rounding, not scheme error
    def slope_term(ti, Xi, Fi):
        return -Fi * slope(Xi) if Fi != 0.0 else np.zeros(2)

    s1 = slope_term(t, X0, F1)
    s2 = slope_term(t + dt / 2, X2, F2)
    s3 = slope_term(t + dt / 2, X3, F3)
    s4 = slope_term(t + dt, X4, F4)
    slope_imp = (dt / 6) * (s1 + 2 * s2 + 2 * s3 + s4)
    d1 = -drag_coefficient(F1, drop, fluid) * V0
    d2 = -drag_coefficient(F2, drop, fluid) * V2
    d3 = -drag_coefficient(F3, drop, fluid) * V3
    d4 = -drag_coefficient(F4, drop, fluid) * V4
    drag_imp = (dt / 6) * (d1 + 2 * d2 + 2 * d3 + d4)
    return new, StepAudit(slope_impulse=slope_imp, drag_impulse=drag_imp)
