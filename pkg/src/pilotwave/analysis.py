"""Trajectory classification (expected vs surreal), crossing detection,
walking-speed statistics and the Gaussian-weighted mean wave field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PilotwaveError
from .gridio import TrajectoryRecord
from .topography import GeometrySpec

EXPECTED = "Expected"
SURREAL = "Surreal"
INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class Classification:
    label: str
    first_crossing_time: float | None
    turnaround_point: tuple | None
    detector_side: str  # "left" | "right" | "none"
    reflection_time: float | None = None

    def __post_init__(self):
        if self.label == EXPECTED and self.first_crossing_time is None:
            raise ValueError("Expected classification requires a crossing time")


def detect_crossings(record: TrajectoryRecord, axis_x: float = 0.0) -> list:
    """Time-ordered (t, y) events where x - axis_x changes sign.

    Events are located by linear interpolation between samples; samples
    exactly on the axis count as events.
    """
    if record.n_samples < 2:
        raise PilotwaveError("trajectory needs >= 2 samples for crossing detection")
    s = record.x - axis_x
    events = []
    on_axis = np.nonzero(s == 0.0)[0]
    for i in on_axis:
        events.append((record.t[i], record.y[i]))
    sign_change = np.nonzero(s[:-1] * s[1:] < 0.0)[0]
    for i in sign_change:
        f = s[i] / (s[i] - s[i + 1])
        events.append((
            record.t[i] + f * (record.t[i + 1] - record.t[i]),
            record.y[i] + f * (record.y[i + 1] - record.y[i]),
        ))
    events.sort(key=lambda e: e[0])
    return events


def _segment_distance(px, py, a, b):
    """Distance from points (px, py) to segment a-b, vectorized."""
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    den = dx * dx + dy * dy
    if den == 0.0:
        return np.hypot(px - ax, py - ay)
    u = np.clip(((px - ax) * dx + (py - ay) * dy) / den, 0.0, 1.0)
    return np.hypot(px - (ax + u * dx), py - (ay + u * dy))


def _polygon_distance(px, py, polygon):
    d = None
    n = len(polygon)
    for i in range(n):
        di = _segment_distance(px, py, polygon[i], polygon[(i + 1) % n])
        d = di if d is None else np.minimum(d, di)
    return d


def _barrier_normal(polygon, side: str) -> np.ndarray:
    """Unit normal of the barrier's long axis pointing toward the centerline."""
    verts = np.asarray(polygon)
    # long axis = direction between midpoints of the two short edges
    e = verts - np.roll(verts, -1, axis=0)
    lengths = np.hypot(e[:, 0], e[:, 1])
    i_long = int(np.argmax(lengths))
    u = e[i_long] / lengths[i_long]
    n = np.array([-u[1], u[0]])
    want = 1.0 if side == "left" else -1.0  # inward x-direction
    if np.sign(n[0]) != np.sign(want):
        n = -n
    return n


def classify_trajectory(
    record: TrajectoryRecord,
    geometry: GeometrySpec,
    *,
    reflection_distance_lambda: float = 1.5,
    detector_drop_lambda: float = 8.0,
) -> Classification:
    """Label a run Expected, Surreal or Indeterminate.

    A reflection is the first reversal of the barrier-normal velocity
    component while within ``reflection_distance_lambda`` of a barrier.
    Expected then means crossing the centerline before the detector line
    (``detector_drop_lambda`` below the barrier inner tips); Surreal means
    reaching the detector line on the launch side without crossing.
    """
    if record.n_samples == 0:
        raise PilotwaveError("cannot classify an empty trajectory")
    lam = geometry.lambda_F
    x, y, t = record.x, record.y, record.t
    launch_x = record.metadata.get("impact_parameter_m", x[0])
    if launch_x == 0.0:
        return Classification(INDETERMINATE, None, None, "none")
    launch_side = "right" if launch_x > 0 else "left"

    barriers = [
        (r, "left" if "left" in r.name else "right")
        for r in geometry.regions
        if r.name.startswith("barrier")
    ]
    if not barriers:
        return Classification(INDETERMINATE, None, None, "none")
    tip_y = min(min(v[1] for v in r.polygon) for r, _ in barriers)
    y_detector = tip_y - detector_drop_lambda * lam

    # reflection: normal velocity reverses while close to a barrier
    reflection_idx = None
    for region, side in barriers:
        dist = _polygon_distance(x, y, region.polygon)
        n = _barrier_normal(region.polygon, side)
        vn = record.vx * n[0] + record.vy * n[1]
        near = dist < reflection_distance_lambda * lam
        rev = near[1:] & near[:-1] & (vn[:-1] < 0.0) & (vn[1:] >= 0.0)
        hits = np.nonzero(rev)[0]
        if hits.size and (reflection_idx is None or hits[0] + 1 < reflection_idx):
            reflection_idx = int(hits[0]) + 1
    if reflection_idx is None:
        return Classification(INDETERMINATE, None, None, "none")
    t_reflect = float(t[reflection_idx])

    tail = TrajectoryRecord(
        t=t[reflection_idx:], x=x[reflection_idx:], y=y[reflection_idx:],
        vx=record.vx[reflection_idx:], vy=record.vy[reflection_idx:],
        F=record.F[reflection_idx:], phase=record.phase[reflection_idx:],
    )
    crossings = detect_crossings(tail, 0.0) if tail.n_samples >= 2 else []
    det_hits = np.nonzero(tail.y <= y_detector)[0]
    t_detect = float(tail.t[det_hits[0]]) if det_hits.size else None
    detector_side = "none"
    if det_hits.size:
        detector_side = "right" if tail.x[det_hits[0]] > 0 else "left"

    if crossings and (t_detect is None or crossings[0][0] <= t_detect):
        # turnaround: extreme lateral excursion between reflection and crossing
        seg = tail.x[tail.t <= crossings[0][0]]
        seg_y = tail.y[tail.t <= crossings[0][0]]
        i_ext = int(np.argmax(np.abs(seg)))
        return Classification(
            EXPECTED,
            first_crossing_time=float(crossings[0][0]),
            turnaround_point=(float(seg[i_ext]), float(seg_y[i_ext])),
            detector_side=detector_side,
            reflection_time=t_reflect,
        )
    if t_detect is not None and not crossings and detector_side == launch_side:
        i_turn = int(np.argmin(np.abs(tail.x[: det_hits[0] + 1])))
        return Classification(
            SURREAL,
            first_crossing_time=None,
            turnaround_point=(float(tail.x[i_turn]), float(tail.y[i_turn])),
            detector_side=detector_side,
            reflection_time=t_reflect,
        )
    return Classification(INDETERMINATE, None, None, detector_side, reflection_time=t_reflect)


@dataclass(frozen=True)
class MeanField:
    """Impact-parameter-weighted mean elevation field."""

    mean_eta: np.ndarray  # meters
    mean_eta_lambda: np.ndarray  # units of lambda_F
    weights: np.ndarray
    dx: float
    dy: float
    metadata: dict


def mean_wave_field(records: list, sigma_b: float | None = None) -> MeanField:
    """Gaussian-weighted ensemble average of time-averaged elevation snapshots.

    Weights are exp(-b^2 / (2 sigma_b^2)) in the impact parameter b,
    normalized to unit sum; sigma_b defaults to 1.4 lambda_F.  Each record's
    snapshots are first averaged over its own post-splitter segment (all
    snapshots if the droplet never descends past the splitter).
    """
    if not records:
        raise PilotwaveError("mean_wave_field needs at least one record")
    lam = records[0].metadata["geometry"]["lambda_F_m"]
    grid = records[0].metadata["grid"]
    if sigma_b is None:
        sigma_b = 1.4 * lam
    shapes = set()
    weights = []
    means = []
    for rec in records:
        if not rec.snapshots:
            raise PilotwaveError("every record needs >= 1 wave snapshot")
        if rec.metadata["grid"] != grid:
            raise PilotwaveError("records were run on different grids")
        b = rec.metadata.get("impact_parameter_m", rec.x[0])
        weights.append(np.exp(-(b**2) / (2.0 * sigma_b**2)))
        # post-splitter gate: first time the drop passes below the splitter tip
        splitter = [r for r in rec.metadata["geometry"]["regions"] if r["name"] == "splitter"]
        if splitter:
            y_tip = min(v[1] for v in splitter[0]["vertices_m"])
            below = np.nonzero(rec.y < y_tip)[0]
            t_gate = rec.t[below[0]] if below.size else None
        else:
            t_gate = None
        etas = [s[1] for s in rec.snapshots if t_gate is None or s[0] >= t_gate]
        if not etas:
            etas = [s[1] for s in rec.snapshots]
        means.append(np.mean(etas, axis=0))
        shapes.add(means[-1].shape)
    if len(shapes) != 1:
        raise PilotwaveError("snapshot grids mismatch across records")
    weights = np.asarray(weights)
    total = weights.sum()
    if total == 0.0:
        raise PilotwaveError("all ensemble weights are zero")
    weights = weights / total
    mean = np.tensordot(weights, np.array(means), axes=1)
    meta = {
        "sigma_b_m": sigma_b,
        "lambda_F_m": lam,
        "impact_parameters_m": [r.metadata.get("impact_parameter_m", r.x[0]) for r in records],
        "time_averaging": "post-splitter snapshots, uniform in time",
        "n_records": len(records),
    }
    return MeanField(
        mean_eta=mean,
        mean_eta_lambda=mean / lam,
        weights=weights,
        dx=grid["dx_m"],
        dy=grid["dy_m"],
        metadata=meta,
    )


def walking_speed(record: TrajectoryRecord, window: float):
    """Mean speed and relative std over the trailing time window (s)."""
    if record.n_samples < 2:
        raise PilotwaveError("trajectory too short for speed statistics")
    span = record.t[-1] - record.t[0]
    if not 0.0 < window <= span:
        raise PilotwaveError(f"window {window} s outside trajectory span {span} s")
    sel = record.t >= record.t[-1] - window
    sp = record.speeds()[sel]
    mean = float(np.mean(sp))
    rel_std = float(np.std(sp) / mean) if mean > 0 else float("inf")
    return mean, rel_std
