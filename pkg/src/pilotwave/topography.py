"""Bathymetry of the beam-splitter table and its rasterization.

The table consists of a launch corridor, a rhombus splitter and up to two
slanted submerged barriers, all realized as shallow regions over an ambient
depth.  Geometry is laid out in units of the Faraday wavelength with the
rhombus centered at the origin; the domain is periodic and symmetric in x.
"""

from __future__ import annotations

from dataclasses import dataclass, replace, field

import numpy as np

from .errors import GeometryError
from .params import effective_depth_b

VARIANTS = ("two_barrier", "right_barrier_only", "left_barrier_only", "open_bath")


@dataclass(frozen=True)
class Region:
    """A polygonal patch of prescribed water depth."""

    polygon: tuple  # ordered (x, y) vertices, meters
    depth: float  # meters
    name: str = ""

    def __post_init__(self):
        if len(self.polygon) < 3:
            raise GeometryError(f"region '{self.name}' needs >= 3 vertices")
        if not self.depth > 0.0:
            raise GeometryError(f"region '{self.name}' depth must be positive")


@dataclass(frozen=True)
class GeometrySpec:
    """Named depth regions over an ambient-depth periodic domain.

    Later regions override earlier ones.  ``domain_size`` is (Lx, Ly) and
    ``domain_origin`` the (x, y) of the lower-left corner; the x range must
    be symmetric about x = 0.
    """

    regions: tuple
    ambient_depth: float
    domain_size: tuple
    domain_origin: tuple
    has_left_barrier: bool = False
    has_right_barrier: bool = False
    lambda_F: float = 0.0
    variant: str = "custom"

    def __post_init__(self):
        Lx, Ly = self.domain_size
        x0, y0 = self.domain_origin
        if abs(x0 + Lx / 2.0) > 1e-12 * Lx:
            raise GeometryError("domain x range must be centered on x = 0")
        for r in self.regions:
            xs = [v[0] for v in r.polygon]
            ys = [v[1] for v in r.polygon]
            if min(xs) < x0 or max(xs) > x0 + Lx or min(ys) < y0 or max(ys) > y0 + Ly:
                raise GeometryError(f"region '{r.name}' exits the domain")


def _rect(center, length, width, axis):
    """Corners of a rectangle whose long axis points along unit vector ``axis``."""
    u = np.asarray(axis)
    w = np.array([-u[1], u[0]])
    c = np.asarray(center)
    hl, hw = length / 2.0, width / 2.0
    return tuple(map(tuple, (c + hl * u + hw * w, c - hl * u + hw * w,
                             c - hl * u - hw * w, c + hl * u - hw * w)))


def essw_geometry(
    lambda_F: float,
    variant: str = "two_barrier",
    *,
    ambient_depth: float = 0.007,
    barrier_depth: float = 0.6e-3,
    walls: bool = True,
    rhombus_half_width: float = 1.5,
    rhombus_half_height: float = 2.5,
    barrier_width: float = 1.5,
    barrier_length: float = 6.0,
    barrier_tip_dx: float = 4.0,
    barrier_tip_dy: float = 6.0,
    barrier_angle_deg: float = 45.0,
    corridor_half_width: float = 1.0,
    wall_thickness: float = 1.5,
    wall_top: float = 8.0,
    domain_lx: float = 24.0,
    domain_ly: float = 32.0,
    domain_y_min: float = -22.0,
) -> GeometrySpec:
    """Default beam-splitter table; all lengths except depths in units of lambda_F.

    The rhombus splitter is centered at the origin.  Barrier inner tips sit
    ``barrier_tip_dx`` to the side of and ``barrier_tip_dy`` below the rhombus
    bottom tip, with the long axis inclined at ``barrier_angle_deg`` to the
    vertical so that incoming walkers are reflected back toward the
    centerline.  ``variant`` drops one or both barriers; ``walls`` toggles the
    launch-corridor side strips.
    """
    if variant not in VARIANTS:
        raise GeometryError(f"unknown geometry variant '{variant}'")
    if not lambda_F > 0.0:
        raise GeometryError("lambda_F must be positive")
    lam = lambda_F
    regions = []

    def mirrored(poly):
        # vertex-by-vertex negation, same order: the even-odd rasterization
        # then mirrors bitwise
        return tuple((-x, y) for (x, y) in poly)

    if walls:
        xin = corridor_half_width * lam
        xout = (corridor_half_width + wall_thickness) * lam
        y_lo = rhombus_half_height * lam
        y_hi = wall_top * lam
        wall_right = ((xin, y_lo), (xout, y_lo), (xout, y_hi), (xin, y_hi))
        regions.append(Region(mirrored(wall_right), barrier_depth, "wall_left"))
        regions.append(Region(wall_right, barrier_depth, "wall_right"))

    if variant != "open_bath":
        rhombus = (
            (0.0, rhombus_half_height * lam),
            (rhombus_half_width * lam, 0.0),
            (0.0, -rhombus_half_height * lam),
            (-rhombus_half_width * lam, 0.0),
        )
        regions.append(Region(rhombus, barrier_depth, "splitter"))

    has_left = variant in ("two_barrier", "left_barrier_only")
    has_right = variant in ("two_barrier", "right_barrier_only")
    ang = np.deg2rad(barrier_angle_deg)
    tip_y = -(rhombus_half_height + barrier_tip_dy) * lam
    # long axis points up-outward at barrier_angle_deg to the vertical, so the
    # inner face reflects walkers arriving from the splitter back toward the
    # centerline; the left barrier is the exact mirror of the right one
    tip = np.array([barrier_tip_dx * lam, tip_y])
    axis = np.array([np.sin(ang), np.cos(ang)])
    center = tip + 0.5 * barrier_length * lam * axis
    barrier_right = _rect(center, barrier_length * lam, barrier_width * lam, axis)
    if has_left:
        regions.append(Region(mirrored(barrier_right), barrier_depth, "barrier_left"))
    if has_right:
        regions.append(Region(barrier_right, barrier_depth, "barrier_right"))

    return GeometrySpec(
        regions=tuple(regions),
        ambient_depth=ambient_depth,
        domain_size=(domain_lx * lam, domain_ly * lam),
        domain_origin=(-domain_lx * lam / 2.0, domain_y_min * lam),
        has_left_barrier=has_left,
        has_right_barrier=has_right,
        lambda_F=lam,
        variant=variant,
    )


@dataclass(frozen=True)
class DepthMap:
    """Rasterized, smoothed depth field h and effective depth b on a periodic grid.

    Grids are cell-centered: node (i, j) sits at (x0 + i*dx, y0 + j*dy) with
    x0 = domain_x_min + dx/2.  Mirror symmetry about x = 0 maps node i to
    Nx-1-i exactly.
    """

    h: np.ndarray
    b: np.ndarray
    dx: float
    dy: float
    x0: float
    y0: float
    smoothing_width: float
    k_F: float

    @property
    def shape(self):
        return self.h.shape

    @property
    def Lx(self):
        return self.h.shape[0] * self.dx

    @property
    def Ly(self):
        return self.h.shape[1] * self.dy

    def coords(self):
        """Cell-center coordinate vectors (x, y).

        x is built as (i - (Nx-1)/2)*dx, which is exactly antisymmetric in
        floating point, so mirrored geometry rasterizes bitwise-mirrored.
        """
        Nx, Ny = self.h.shape
        return (
            (np.arange(Nx) - (Nx - 1) / 2.0) * self.dx,
            self.y0 + np.arange(Ny) * self.dy,
        )


def _points_in_polygon(px, py, polygon):
    """Even-odd rule point-in-polygon test, vectorized over grid points.

    Crossing parity is evaluated with rays in both x directions and OR-ed, so
    points exactly on an edge count as inside and negating all x coordinates
    (polygon and points) yields the exactly mirrored boolean mask, boundary
    ties included.
    """
    left = np.zeros(px.shape, dtype=bool)
    right = np.zeros(px.shape, dtype=bool)
    n = len(polygon)
    for a in range(n):
        x1, y1 = polygon[a]
        x2, y2 = polygon[(a + 1) % n]
        if y1 == y2:
            continue
        straddles = (py > min(y1, y2)) & (py <= max(y1, y2))
        xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        left ^= straddles & (px < xint)
        right ^= straddles & (px > xint)
    return left | right


def _fft_friendly(n: int) -> bool:
    while n % 2 == 0:
        n //= 2
    for p in (3, 5):
        while n % p == 0:
            n //= p
    return n == 1


def _smooth_periodic(raw: np.ndarray, dx: float, dy: float, width: float) -> np.ndarray:
    """Separable periodic Gaussian smoothing (std = width, support +-6 std).

    The x pass accumulates +-j shifts pairwise so that mirroring the input
    about the x midplane mirrors the output bitwise.
    """
    out = raw
    for axis, d in ((0, dx), (1, dy)):
        r = int(np.ceil(6.0 * width / d))
        n = raw.shape[axis]
        if 2 * r + 1 > n:
            raise GeometryError("smoothing width too large for the domain")
        ker = np.exp(-0.5 * (np.arange(r + 1) * d / width) ** 2)
        ker /= ker[0] + 2.0 * ker[1:].sum()
        acc = ker[0] * out
        for j in range(1, r + 1):
            acc = acc + ker[j] * (np.roll(out, j, axis=axis) + np.roll(out, -j, axis=axis))
        out = acc
    return out


def rasterize_depth(
    spec: GeometrySpec,
    Nx: int,
    Ny: int,
    k_F: float,
    smoothing_width: float | None = None,
) -> DepthMap:
    """Rasterize a GeometrySpec to smoothed h and pointwise b = tanh(k_F h)/k_F.

    Depth transitions are smoothed with a Gaussian of standard deviation
    ``smoothing_width`` (default lambda_F/8) to keep the spectral solver free
    of ringing.  Deterministic; raises on under-resolved grids.
    """
    lam = 2.0 * np.pi / k_F
    if smoothing_width is None:
        smoothing_width = lam / 8.0
    Lx, Ly = spec.domain_size
    dx, dy = Lx / Nx, Ly / Ny
    if not (_fft_friendly(Nx) and _fft_friendly(Ny)) or Nx % 2 or Ny % 2:
        raise GeometryError("Nx, Ny must be even products of 2, 3, 5 for the spectral solver")
    if dx > lam / 8.0 + 1e-12 * lam or dy > lam / 8.0 + 1e-12 * lam:
        raise GeometryError(
            f"grid under-resolved: need dx,dy <= lambda_F/8 = {lam / 8.0:.3e} m, "
            f"got dx={dx:.3e}, dy={dy:.3e}"
        )
    # exactly antisymmetric x coordinates so mirrored specs rasterize bitwise-mirrored
    xs = (np.arange(Nx) - (Nx - 1) / 2.0) * dx
    x0 = xs[0]
    y0 = spec.domain_origin[1] + dy / 2.0
    px = xs[:, None] + np.zeros((1, Ny))
    py = y0 + np.zeros((Nx, 1)) + np.arange(Ny)[None, :] * dy

    h = np.full((Nx, Ny), float(spec.ambient_depth))
    for region in spec.regions:
        mask = _points_in_polygon(px, py, region.polygon)
        h[mask] = region.depth

    h = _smooth_periodic(h, dx, dy, smoothing_width)
    return DepthMap(
        h=h,
        b=effective_depth_b(h, k_F),
        dx=dx,
        dy=dy,
        x0=x0,
        y0=y0,
        smoothing_width=smoothing_width,
        k_F=k_F,
    )


def mirror_x(obj):
    """Reflect a GeometrySpec or DepthMap about x = 0 (an involution)."""
    if isinstance(obj, GeometrySpec):
        regions = []
        for r in obj.regions:
            # vertex order is kept so the even-odd rasterization mirrors bitwise
            poly = tuple((-x, y) for (x, y) in r.polygon)
            name = r.name
            if "left" in name:
                name = name.replace("left", "right")
            elif "right" in name:
                name = name.replace("right", "left")
            regions.append(Region(poly, r.depth, name))
        variant = obj.variant
        if variant == "left_barrier_only":
            variant = "right_barrier_only"
        elif variant == "right_barrier_only":
            variant = "left_barrier_only"
        return replace(
            obj,
            regions=tuple(regions),
            has_left_barrier=obj.has_right_barrier,
            has_right_barrier=obj.has_left_barrier,
            variant=variant,
        )
    if isinstance(obj, DepthMap):
        return replace(obj, h=obj.h[::-1, :].copy(), b=obj.b[::-1, :].copy())
    raise TypeError(f"mirror_x expects GeometrySpec or DepthMap, got {type(obj)!r}")
