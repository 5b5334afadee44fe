"""Physical parameters and derived scales of the vibrating-bath system.

All quantities are SI unless stated otherwise; vibrational accelerations
(``gamma``, ``gamma_F``) are dimensionless multiples of g.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

G_STANDARD = 9.81  # m/s^2, fixed convention for gamma in units of g


class ParameterError(ValueError):
    """Invalid or inconsistent physical parameters."""


@dataclass(frozen=True)
class FluidParams:
    """Bath fluid properties.

    sigma   surface tension (N/m)
    nu      kinematic viscosity (m^2/s)
    nu_eff  effective viscosity of the damped wave model (m^2/s)
    rho     density (kg/m^3)
    g       gravitational acceleration (m/s^2)
    h0      ambient bath depth (m)
    """

    sigma: float
    nu: float
    nu_eff: float
    rho: float
    g: float = G_STANDARD
    h0: float = 0.007

    def __post_init__(self):
        for name in ("sigma", "nu", "nu_eff", "rho", "g", "h0"):
            if not getattr(self, name) > 0.0:
                raise ParameterError(f"fluid.{name} must be strictly positive")
        if self.nu_eff > self.nu:
            raise ParameterError("nu_eff must not exceed nu")


@dataclass(frozen=True)
class ForcingParams:
    """Vertical vibration of the bath.

    f        driving frequency (Hz)
    gamma    peak vibrational acceleration (units of g)
    gamma_F  Faraday threshold (units of g)
    """

    f: float
    gamma: float
    gamma_F: float

    def __post_init__(self):
        if self.f <= 0.0:
            raise ParameterError("forcing.f must be positive")
        if self.gamma_F <= 0.0:
            raise ParameterError("forcing.gamma_F must be positive")
        if not 0.0 <= self.gamma < self.gamma_F:
            raise ParameterError(
                "forcing.gamma must satisfy 0 <= gamma < gamma_F "
                f"(got gamma={self.gamma}, gamma_F={self.gamma_F})"
            )

    @property
    def omega0(self) -> float:
        """Angular driving frequency, 2*pi*f (rad/s)."""
        return 2.0 * np.pi * self.f

    @property
    def T_F(self) -> float:
        """Faraday (subharmonic) period, 2/f (s)."""
        return 2.0 / self.f


@dataclass(frozen=True)
class DropParams:
    """Droplet properties and the imposed bouncing waveform.

    R        drop radius (m)
    m        drop mass (kg); rho*(4/3)*pi*R^3 when built via :func:`make_drop`
    c_skid   dimensionless skidding-friction coefficient
    mu_air   air dynamic viscosity (kg/(m s))
    tau_c    contact duration per bounce (s)
    phi_imp  impact phase offset in [0, T_F) relative to the driving signal (s)
    """

    R: float
    m: float
    c_skid: float
    mu_air: float
    tau_c: float
    phi_imp: float

    def __post_init__(self):
        if self.R <= 0.0 or self.m <= 0.0:
            raise ParameterError("drop.R and drop.m must be positive")
        if self.c_skid < 0.0 or self.mu_air < 0.0:
            raise ParameterError("drop.c_skid and drop.mu_air must be non-negative")
        if self.tau_c <= 0.0:
            raise ParameterError("drop.tau_c must be positive")


def make_drop(
    fluid: FluidParams,
    forcing: ForcingParams,
    R: float = 0.55e-3,
    c_skid: float = 0.17,
    mu_air: float = 1.8e-5,
    tau_c_frac: float = 0.25,
    phi_imp_frac: float = 0.375,
) -> DropParams:
    """Build drop parameters with mass consistent with the fluid density.

    ``tau_c_frac`` and ``phi_imp_frac`` are fractions of the Faraday period.
    """
    T_F = forcing.T_F
    if not 0.0 < tau_c_frac < 1.0:
        raise ParameterError("tau_c must satisfy 0 < tau_c < T_F")
    m = fluid.rho * (4.0 / 3.0) * np.pi * R**3
    return DropParams(
        R=R,
        m=m,
        c_skid=c_skid,
        mu_air=mu_air,
        tau_c=tau_c_frac * T_F,
        phi_imp=(phi_imp_frac % 1.0) * T_F,
    )


@dataclass(frozen=True)
class DerivedScales:
    """Length and time scales derived from fluid/forcing parameters.

    k_F       Faraday wavenumber (1/m)
    lambda_F  Faraday wavelength, 2*pi/k_F (m)
    T_d       unforced wave decay time (s)
    Me        memory parameter (dimensionless)
    """

    k_F: float
    lambda_F: float
    T_d: float
    Me: float


def dispersion_omega_sq(k, h, fluid: FluidParams):
    """Squared angular frequency of gravity-capillary waves at depth h.

    omega^2 = (g k + sigma k^3 / rho) tanh(k h).  Accepts scalar or array k.
    """
    k = np.asarray(k, dtype=float)
    if np.any(k < 0.0):
        raise ParameterError("wavenumber k must be non-negative")
    if not h > 0.0:
        raise ParameterError("depth h must be positive")
    out = (fluid.g * k + fluid.sigma * k**3 / fluid.rho) * np.tanh(k * h)
    return out if out.ndim else float(out)


def faraday_wavenumber(fluid: FluidParams, forcing: ForcingParams) -> float:
    """Wavenumber of the subharmonic response, solving omega^2(k) = (pi f)^2."""
    target = (np.pi * forcing.f) ** 2
    k_hi = 1e5
    if dispersion_omega_sq(k_hi, fluid.h0, fluid) < target:
        raise ParameterError("no dispersion bracket for k in (0, 1e5 1/m)")
    return brentq(
        lambda k: dispersion_omega_sq(k, fluid.h0, fluid) - target,
        1e-6,
        k_hi,
        xtol=1e-13,
        rtol=8.9e-16,
    )


def derived_scales(fluid: FluidParams, forcing: ForcingParams, k_F: float) -> DerivedScales:
    """Decay time T_d = 1/(2 nu_eff k_F^2) and memory Me = T_d/(T_F (1 - gamma/gamma_F))."""
    if forcing.gamma >= forcing.gamma_F:
        raise ParameterError("memory undefined for gamma >= gamma_F")
    T_d = 1.0 / (2.0 * fluid.nu_eff * k_F**2)
    Me = T_d / (forcing.T_F * (1.0 - forcing.gamma / forcing.gamma_F))
    return DerivedScales(k_F=k_F, lambda_F=2.0 * np.pi / k_F, T_d=T_d, Me=Me)


def effective_depth_b(h, k_F: float):
    """Effective depth b(h) = tanh(k_F h)/k_F controlling the local phase speed.

    Matches the finite-depth phase speed at k_F; monotonically increasing in h
    and bounded above by 1/k_F.  Accepts scalar or array h.
    """
    h = np.asarray(h, dtype=float)
    if np.any(h < 0.0):
        raise ParameterError("depth h must be non-negative")
    out = np.tanh(k_F * h) / k_F
    return out if out.ndim else float(out)
