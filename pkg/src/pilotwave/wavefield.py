"""Pseudo-spectral integrator for the damped, parametrically forced
quasi-potential wave equations over variable topography.

Per Fourier mode the damping 2*nu_eff*k^2 acts as a scalar, so it is applied
as an exact integrating factor; the remaining coupled terms

    dphi/dt = -g (1 + gamma cos(omega0 t)) eta + (sigma/rho) lap(eta) - P_d/rho
    deta/dt = -div(b(x) grad(phi))

are advanced with explicit RK4.  div(b grad phi) is evaluated
pseudo-spectrally with 2/3-rule de-aliasing on the product; odd-derivative
operators have their Nyquist modes zeroed, which also makes the stepping
mirror-equivariant to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.ndimage import map_coordinates

from .errors import BlowUpError, DomainExitError
from .params import FluidParams, ForcingParams
from .topography import DepthMap


@dataclass(frozen=True)
class WaveState:
    """Surface elevation and velocity potential at time t.

    The payload is spectral (rfft2 layout); ``eta`` and ``phi`` reconstruct
    the real-space grids.  States are immutable; stepping returns new ones.
    """

    etah: np.ndarray
    phih: np.ndarray
    t: float
    shape: tuple

    @property
    def eta(self) -> np.ndarray:
        return sfft.irfft2(self.etah, s=self.shape)

    @property
    def phi(self) -> np.ndarray:
        return sfft.irfft2(self.phih, s=self.shape)


@dataclass(frozen=True)
class DropForcing:
    """Localized normal-force deposit: P_d(x) = F * K(x - X).

    F may be the instantaneous force (N) or a callable F(t) evaluated at the
    Runge-Kutta stage times.  K is a normalized Gaussian of std kernel_width.
    """

    X: np.ndarray
    F: object
    kernel_width: float

    def force_at(self, t: float) -> float:
        return float(self.F(t)) if callable(self.F) else float(self.F)


def _sinc4(theta: np.ndarray) -> np.ndarray:
    out = np.ones_like(theta)
    nz = theta != 0.0
    half = 0.5 * theta[nz]
    out[nz] = (np.sin(half) / half) ** 4
    return out


class SpectralWorkspace:
    """Precomputed spectral operators bound to one grid, fluid and time step."""

    def __init__(
        self,
        depthmap: DepthMap,
        fluid: FluidParams,
        forcing: ForcingParams,
        dt: float,
        kernel_width: float | None = None,
    ):
        Nx, Ny = depthmap.shape
        self.depthmap = depthmap
        self.fluid = fluid
        self.forcing = forcing
        self.dt = float(dt)
        self.Nx, self.Ny = Nx, Ny
        self.dx, self.dy = depthmap.dx, depthmap.dy
        self.lambda_F = 2.0 * np.pi / depthmap.k_F

        kx = 2.0 * np.pi * sfft.fftfreq(Nx, d=self.dx)
        ky = 2.0 * np.pi * sfft.rfftfreq(Ny, d=self.dy)
        self.kx, self.ky = kx, ky
        # Nyquist modes carry no sign information for odd derivatives
        self.kxd = kx.copy()
        self.kxd[Nx // 2] = 0.0
        self.kyd = ky.copy()
        self.kyd[-1] = 0.0
        self.k2 = kx[:, None] ** 2 + ky[None, :] ** 2
        self.damp = np.exp(-2.0 * fluid.nu_eff * self.k2 * self.dt)
        self.dealias = (np.abs(kx)[:, None] <= (2.0 / 3.0) * np.abs(kx).max()) & (
            ky[None, :] <= (2.0 / 3.0) * ky.max()
        )
        self.b = depthmap.b

        # CFL guard at the per-axis Nyquist wavenumber under the b operator
        b_max = float(self.b.max())

        def phase_speed(k):
            return np.sqrt(b_max * (fluid.g + fluid.sigma * k**2 / fluid.rho))

        cfl = max(
            self.dt * phase_speed(np.abs(kx).max()) / self.dx,
            self.dt * phase_speed(ky.max()) / self.dy,
        )
        if cfl >= 0.5:
            raise ValueError(f"CFL violated: dt*c_max/dx = {cfl:.3f} >= 0.5")
        # RK4 imaginary-axis stability of the stiffest retained (de-aliased) mode
        k_corner = np.hypot((2.0 / 3.0) * np.abs(kx).max(), (2.0 / 3.0) * ky.max())
        omega_corner = k_corner * phase_speed(k_corner)
        if self.dt * omega_corner >= 2.8:
            raise ValueError(
                f"unstable: dt*omega_max = {self.dt * omega_corner:.3f} exceeds the RK4 bound 2.8"
            )
        if self.dt > forcing.T_F / 64.0 * (1.0 + 1e-12):
            raise ValueError("dt must not exceed T_F/64")

        # pressure kernel: real spectrum centered on the grid center node,
        # translated to the drop position by phase shift
        if kernel_width is None:
            kernel_width = 2.0 * max(self.dx, self.dy)
        self.kernel_width = float(kernel_width)
        xc, yc = self._center_node()
        self.kernel_center = (xc, yc)
        self.kernel_hat = sfft.rfft2(drop_kernel(self.kernel_width, depthmap, (xc, yc)))

        # interpolation prefilter: continuous cubic B-spline response
        # compensation, minimizing reconstruction error on the resolved band
        self.grad_prefilter = _sinc4(2.0 * np.pi * sfft.fftfreq(Nx))[:, None] * _sinc4(
            2.0 * np.pi * sfft.rfftfreq(Ny)
        )[None, :]

        # Parseval weights for spectral quadrature of real fields
        w = np.full(Ny // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        self._parseval_w = w[None, :]
        self._blowup_eta = 1e3 * self.lambda_F

    def _center_node(self):
        x, y = self.depthmap.coords()
        return x[self.Nx // 2], y[self.Ny // 2]

    @property
    def domain(self):
        """(x_min, x_max, y_min, y_max) of the periodic cell."""
        x0, y0 = self.depthmap.x0, self.depthmap.y0
        return (
            x0 - self.dx / 2.0,
            x0 - self.dx / 2.0 + self.Nx * self.dx,
            y0 - self.dy / 2.0,
            y0 - self.dy / 2.0 + self.Ny * self.dy,
        )

    def contains(self, X) -> bool:
        x_min, x_max, y_min, y_max = self.domain
        return x_min <= X[0] < x_max and y_min <= X[1] < y_max

    def _deposit_hat(self, X):
        """Spectrum of the unit-force pressure kernel centered at X."""
        px = np.exp(-1j * self.kx * (X[0] - self.kernel_center[0]))
        py = np.exp(-1j * self.ky * (X[1] - self.kernel_center[1]))
        return self.kernel_hat * px[:, None] * py[None, :]

    def _rhs(self, t, etah, phih, dep_hat, force_at):
        fl, fo = self.fluid, self.forcing
        g_eff = fl.g * (1.0 + fo.gamma * np.cos(fo.omega0 * t))
        phidot = (-g_eff) * etah - (fl.sigma / fl.rho) * self.k2 * etah
        if dep_hat is not None:
            F = force_at(t)
            if F != 0.0:
                phidot -= (F / fl.rho) * dep_hat
        px = sfft.irfft2(1j * self.kxd[:, None] * phih, s=(self.Nx, self.Ny))
        py = sfft.irfft2(1j * self.kyd[None, :] * phih, s=(self.Nx, self.Ny))
        div = sfft.rfft2(self.b * px) * (1j * self.kxd[:, None]) + sfft.rfft2(
            self.b * py
        ) * (1j * self.kyd[None, :])
        etadot = np.where(self.dealias, -div, 0.0)
        return etadot, phidot


def init_state(
    ws_or_depthmap,
    noise_amplitude: float = 0.0,
    rng: np.random.Generator | None = None,
) -> WaveState:
    """Quiescent state, optionally seeded with white elevation noise of given RMS."""
    dm = ws_or_depthmap.depthmap if isinstance(ws_or_depthmap, SpectralWorkspace) else ws_or_depthmap
    Nx, Ny = dm.shape
    if noise_amplitude > 0.0:
        if rng is None:
            raise ValueError("noise seeding requires an explicit RNG")
        eta = noise_amplitude * rng.standard_normal((Nx, Ny))
        etah = sfft.rfft2(eta)
    else:
        etah = np.zeros((Nx, Ny // 2 + 1), dtype=complex)
    return WaveState(etah=etah, phih=np.zeros_like(etah), t=0.0, shape=(Nx, Ny))


def step_wave(state: WaveState, ws: SpectralWorkspace, forcing: DropForcing | None = None) -> WaveState:
    """Advance one time step: exact damping factor, then RK4 on the coupled terms."""
    dt, t = ws.dt, state.t
    etah = state.etah * ws.damp
    phih = state.phih * ws.damp
    if forcing is not None:
        dep = ws._deposit_hat(forcing.X)
        fat = forcing.force_at
    else:
        dep, fat = None, None
    k1e, k1p = ws._rhs(t, etah, phih, dep, fat)
    k2e, k2p = ws._rhs(t + dt / 2, etah + (dt / 2) * k1e, phih + (dt / 2) * k1p, dep, fat)
    k3e, k3p = ws._rhs(t + dt / 2, etah + (dt / 2) * k2e, phih + (dt / 2) * k2p, dep, fat)
    k4e, k4p = ws._rhs(t + dt, etah + dt * k3e, phih + dt * k3p, dep, fat)
    etah = etah + (dt / 6) * (k1e + 2 * k2e + 2 * k3e + k4e)
    phih = phih + (dt / 6) * (k1p + 2 * k2p + 2 * k3p + k4p)

    # blow-up guard: cheap spectral bound first, exact max only when close
    n_tot = ws.Nx * ws.Ny
    rms = np.sqrt(np.sum(ws._parseval_w * (etah.real**2 + etah.imag**2))) / n_tot
    if not np.isfinite(rms):
        raise BlowUpError(f"wave field lost finiteness at t = {t + dt:.6g} s")
    if rms * np.sqrt(n_tot) > ws._blowup_eta:
        eta = sfft.irfft2(etah, s=(ws.Nx, ws.Ny))
        if np.abs(eta).max() > ws._blowup_eta:
            raise BlowUpError(
                f"max|eta| exceeded {ws._blowup_eta:.3g} m at t = {t + dt:.6g} s "
                "(instability or gamma above threshold)"
            )
    return WaveState(etah=etah, phih=phih, t=t + dt, shape=state.shape)


class GradientSampler:
    """Bicubic B-spline sampler of the spectral gradient of eta.

    Spline coefficients are produced directly in spectral space (derivative
    times prefilter), so evaluation is a local 4x4 stencil per point.
    """

    def __init__(self, state: WaveState, ws: SpectralWorkspace):
        ch = state.etah / ws.grad_prefilter
        self._gx = sfft.irfft2(1j * ws.kxd[:, None] * ch, s=(ws.Nx, ws.Ny))
        self._gy = sfft.irfft2(1j * ws.kyd[None, :] * ch, s=(ws.Nx, ws.Ny))
        self._ws = ws

    def sample(self, X) -> np.ndarray:
        ws = self._ws
        if not ws.contains(X):
            raise DomainExitError(f"position {tuple(X)} outside the domain")
        dm = ws.depthmap
        coords = np.array(
            [[(X[0] - dm.x0) / dm.dx], [(X[1] - dm.y0) / dm.dy]]
        )
        gx = map_coordinates(self._gx, coords, order=3, mode="grid-wrap", prefilter=False)[0]
        gy = map_coordinates(self._gy, coords, order=3, mode="grid-wrap", prefilter=False)[0]
        return np.array([gx, gy])


def sample_eta_gradient(state: WaveState, ws: SpectralWorkspace, X) -> np.ndarray:
    """Interpolated wave slope grad(eta) at position X (dimensionless)."""
    return GradientSampler(state, ws).sample(X)


def wave_energy(state: WaveState, ws: SpectralWorkspace) -> float:
    """0.5 * integral of [g eta^2 + (sigma/rho)|grad eta|^2 + b |grad phi|^2] dA.

    Density-scaled energy (J per kg/m^3); non-negative, zero only for the
    quiescent state.
    """
    fl = ws.fluid
    s = (ws.Nx, ws.Ny)
    eta = sfft.irfft2(state.etah, s=s)
    ex = sfft.irfft2(1j * ws.kxd[:, None] * state.etah, s=s)
    ey = sfft.irfft2(1j * ws.kyd[None, :] * state.etah, s=s)
    px = sfft.irfft2(1j * ws.kxd[:, None] * state.phih, s=s)
    py = sfft.irfft2(1j * ws.kyd[None, :] * state.phih, s=s)
    dA = ws.dx * ws.dy
    return 0.5 * dA * float(
        np.sum(fl.g * eta**2 + (fl.sigma / fl.rho) * (ex**2 + ey**2) + ws.b * (px**2 + py**2))
    )


def drop_kernel(width: float, depthmap: DepthMap, center) -> np.ndarray:
    """Periodic Gaussian pressure kernel, discrete sum * dx * dy = 1 exactly.

    ``width`` is the Gaussian standard deviation (m) and must resolve on the
    grid (>= 2 cells).
    """
    dx, dy = depthmap.dx, depthmap.dy
    if width < 2.0 * max(dx, dy):
        raise ValueError(f"kernel width {width:.3e} under-resolved: need >= 2*dx = {2 * max(dx, dy):.3e}")
    Nx, Ny = depthmap.shape
    x, y = depthmap.coords()
    Lx, Ly = Nx * dx, Ny * dy
    rx = np.abs(x - center[0])
    rx = np.minimum(rx, Lx - rx)
    ry = np.abs(y - center[1])
    ry = np.minimum(ry, Ly - ry)
    ker = np.exp(-0.5 * (rx[:, None] / width) ** 2) * np.exp(-0.5 * (ry[None, :] / width) ** 2)
    ker /= ker.sum() * dx * dy
    return ker
