"""Ground-truth alignment and detector accuracy metrics.

Target GPS positions are brought into the moving vehicle frame by a
clockwise heading rotation of the absolute deltas; the aligned series is
then compared frame by frame against the nearest detection to produce
longitudinal/lateral offset statistics and footprint dimension
statistics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import LidarGridError, ObstacleEstimate

EARTH_RADIUS_M = 6_378_137.0


class EmptySeries(LidarGridError):
    """A statistic was requested over zero samples."""

    category = "empty-series"


class InvalidLatitude(LidarGridError):
    """Latitude outside [-90, 90] degrees."""

    category = "invalid-latitude"


class SchemaError(LidarGridError):
    """A CSV input does not match any supported header."""

    category = "schema"


def _wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.remainder(a, math.tau)
    if w <= -math.pi:
        w += math.tau
    return w


@dataclass(frozen=True)
class EgoPose:
    """Ego position in the absolute plane frame plus heading (CCW from +X)."""

    X: float
    Y: float
    psi: float

    def __post_init__(self):
        object.__setattr__(self, "psi", _wrap_angle(self.psi))


class RelativePosition(NamedTuple):
    x_loc: float  # longitudinal, meters
    y_loc: float  # lateral, meters


@dataclass(frozen=True)
class OffsetStats:
    mean_offset: float
    std: float
    sample_count: int
    availability: float


@dataclass(frozen=True)
class DimensionStats:
    mean_length: float
    std_length: float
    mean_width: float
    std_width: float


def geodetic_to_plane(lat: float, lon: float, ref_lat: float, ref_lon: float):
    """Local tangent-plane conversion of geodetic degrees to meters.

    Equirectangular approximation around the reference point:
    X = R_e * rad(lon - ref_lon) * cos(ref_lat), Y = R_e * rad(lat - ref_lat).
    Accurate to sub-centimeter over the sub-kilometer baselines this
    harness targets; exactly linear in the input deltas.
    """
    for name, value in (("lat", lat), ("ref_lat", ref_lat)):
        if not math.isfinite(value) or abs(value) > 90.0:
            raise InvalidLatitude(f"{name} = {value}")
    if not (math.isfinite(lon) and math.isfinite(ref_lon)):
        raise ValueError("longitude must be finite")
    x = EARTH_RADIUS_M * math.radians(lon - ref_lon) * math.cos(math.radians(ref_lat))
    y = EARTH_RADIUS_M * math.radians(lat - ref_lat)
    return x, y


def transform_to_local(ego: EgoPose, target_x: float, target_y: float) -> RelativePosition:
    """Rotate the absolute ego-to-target delta into the vehicle frame.

    Clockwise rotation by the heading:
    x_loc = cos(psi)*dX + sin(psi)*dY, y_loc = -sin(psi)*dX + cos(psi)*dY.
    """
    dx = target_x - ego.X
    dy = target_y - ego.Y
    c, s = math.cos(ego.psi), math.sin(ego.psi)
    return RelativePosition(c * dx + s * dy, -s * dx + c * dy)


def associate(estimates, gt: RelativePosition, gate: float) -> ObstacleEstimate | None:
    """Nearest estimate to the ground truth within ``gate`` meters, else None."""
    if gate <= 0.0:
        raise ValueError("gate must be > 0")
    best = None
    best_d = gate
    for est in estimates:
        d = math.hypot(est.center_x - gt.x_loc, est.center_y - gt.y_loc)
        if d <= best_d:
            best, best_d = est, d
    return best


def offset_stats(matched, axis: str, total_frames: int) -> OffsetStats:
    """Mean and population std of (estimate - truth) along one axis.

    ``matched`` is a sequence of (ObstacleEstimate, RelativePosition)
    pairs; ``axis`` is "longitudinal" (x) or "lateral" (y).
    """
    if axis not in ("longitudinal", "lateral"):
        raise ValueError(f"unknown axis {axis!r}")
    pairs = list(matched)
    if not pairs:
        raise EmptySeries("no matched estimate/truth pairs")
    if total_frames < len(pairs):
        raise ValueError("total_frames smaller than the matched count")
    if axis == "longitudinal":
        errors = np.array([est.center_x - gt.x_loc for est, gt in pairs])
    else:
        errors = np.array([est.center_y - gt.y_loc for est, gt in pairs])
    return OffsetStats(
        mean_offset=float(errors.mean()),
        std=float(errors.std()),
        sample_count=len(pairs),
        availability=len(pairs) / total_frames,
    )


def dimension_stats(estimates) -> DimensionStats:
    """Mean and population std of estimated length and width."""
    ests = list(estimates)
    if not ests:
        raise EmptySeries("no estimates")
    lengths = np.array([e.length for e in ests])
    widths = np.array([e.width for e in ests])
    return DimensionStats(
        mean_length=float(lengths.mean()),
        std_length=float(lengths.std()),
        mean_width=float(widths.mean()),
        std_width=float(widths.std()),
    )


# ---------------------------------------------------------------------------
# CSV series I/O


def _read_csv_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        return [h.strip() for h in header], list(reader)


def read_ground_truth_csv(path, ref_lat: float | None = None,
                          ref_lon: float | None = None):
    """Read target positions: header ``t,lat,lon`` or ``t,X,Y``.

    Geodetic input is converted to plane meters around (ref_lat, ref_lon),
    defaulting to the first row.  Returns (t, X, Y) float arrays.
    """
    header, rows = _read_csv_rows(path)
    t = np.array([float(r[0]) for r in rows])
    a = np.array([float(r[1]) for r in rows])
    b = np.array([float(r[2]) for r in rows])
    if header == ["t", "X", "Y"]:
        return t, a, b
    if header == ["t", "lat", "lon"]:
        if t.size == 0:
            raise SchemaError(f"{path}: no ground-truth rows")
        rlat = ref_lat if ref_lat is not None else float(a[0])
        rlon = ref_lon if ref_lon is not None else float(b[0])
        xy = np.array([geodetic_to_plane(la, lo, rlat, rlon) for la, lo in zip(a, b)])
        return t, xy[:, 0], xy[:, 1]
    raise SchemaError(f"{path}: expected header t,lat,lon or t,X,Y, got {header}")


def read_ego_csv(path):
    """Read ego poses: header ``t,X,Y,psi``. Returns (t, X, Y, psi) arrays."""
    header, rows = _read_csv_rows(path)
    if header != ["t", "X", "Y", "psi"]:
        raise SchemaError(f"{path}: expected header t,X,Y,psi, got {header}")
    cols = np.array([[float(v) for v in r] for r in rows]).reshape(-1, 4)
    return cols[:, 0], cols[:, 1], cols[:, 2], cols[:, 3]


OBSTACLE_CSV_HEADER = ["frame_id", "t", "center_x", "center_y", "length",
                       "width", "height", "confidence", "class", "range"]


def write_obstacles_csv(path, rows) -> None:
    """Write (frame_id, t, ObstacleEstimate) triples to the flat schema."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(OBSTACLE_CSV_HEADER)
        for frame_id, t, est in rows:
            writer.writerow([
                int(frame_id), repr(float(t)),
                repr(float(est.center_x)), repr(float(est.center_y)),
                repr(float(est.length)), repr(float(est.width)),
                "" if est.height is None else repr(float(est.height)),
                repr(float(est.confidence)), est.class_tag, repr(float(est.range)),
            ])


def read_obstacles_csv(path):
    """Read the obstacle CSV back into (frame_id, t, ObstacleEstimate) triples."""
    header, rows = _read_csv_rows(path)
    if header != OBSTACLE_CSV_HEADER:
        raise SchemaError(f"{path}: unexpected obstacle header {header}")
    out = []
    for r in rows:
        est = ObstacleEstimate(
            center_x=float(r[2]), center_y=float(r[3]),
            length=float(r[4]), width=float(r[5]),
            height=None if r[6] == "" else float(r[6]),
            confidence=float(r[7]), class_tag=r[8], range=float(r[9]),
        )
        out.append((int(r[0]), float(r[1]), est))
    return out


# ---------------------------------------------------------------------------
# Evaluation harness


@dataclass(frozen=True)
class EvalResult:
    longitudinal: OffsetStats
    lateral: OffsetStats
    dimensions: DimensionStats
    comparison_rows: list  # (t, x_gt, y_gt, x_est or None, y_est or None)


def _interp_heading(t_query, t, psi):
    unwrapped = np.unwrap(psi)
    vals = np.interp(t_query, t, unwrapped)
    return np.array([_wrap_angle(v) for v in np.atleast_1d(vals)])


def evaluate_detections(estimate_rows, gt_t, gt_x, gt_y, ego_t, ego_x, ego_y,
                        ego_psi, gate: float = 5.0,
                        lever_arm: tuple[float, float] = (0.0, 0.0),
                        total_frames: int | None = None) -> EvalResult:
    """Associate per-frame estimates with interpolated GT and fold metrics.

    ``estimate_rows`` is an iterable of (frame_id, t, ObstacleEstimate).
    Ground truth and ego series are linearly interpolated to the frame
    timestamps (heading via unwrap).  The lever arm is added to the GT
    position in the local frame.  ``total_frames`` defaults to the span
    of frame ids in the estimates file (missing-frame rows cannot appear
    in the CSV, so a contiguous id range is assumed).
    """
    by_frame: dict[int, tuple[float, list]] = {}
    for frame_id, t, est in estimate_rows:
        by_frame.setdefault(int(frame_id), (float(t), []))[1].append(est)
    if not by_frame:
        raise EmptySeries("no estimates to evaluate")
    frame_ids = sorted(by_frame)
    if total_frames is None:
        total_frames = frame_ids[-1] - frame_ids[0] + 1

    matched = []
    comparison = []
    for frame_id in frame_ids:
        t, ests = by_frame[frame_id]
        gx = float(np.interp(t, gt_t, gt_x))
        gy = float(np.interp(t, gt_t, gt_y))
        ex = float(np.interp(t, ego_t, ego_x))
        ey = float(np.interp(t, ego_t, ego_y))
        epsi = float(_interp_heading(t, ego_t, ego_psi)[0])
        local = transform_to_local(EgoPose(ex, ey, epsi), gx, gy)
        local = RelativePosition(local.x_loc + lever_arm[0],
                                 local.y_loc + lever_arm[1])
        best = associate(ests, local, gate)
        if best is None:
            comparison.append((t, local.x_loc, local.y_loc, None, None))
        else:
            matched.append((best, local))
            comparison.append((t, local.x_loc, local.y_loc,
                               best.center_x, best.center_y))

    return EvalResult(
        longitudinal=offset_stats(matched, "longitudinal", total_frames),
        lateral=offset_stats(matched, "lateral", total_frames),
        dimensions=dimension_stats([est for est, _ in matched]),
        comparison_rows=comparison,
    )


def write_offset_stats_csv(path, result: EvalResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "delta", "sigma", "availability"])
        for axis, stats in (("longitudinal", result.longitudinal),
                            ("lateral", result.lateral)):
            writer.writerow([axis, repr(stats.mean_offset), repr(stats.std),
                             repr(stats.availability)])


def write_dimension_stats_csv(path, dims: DimensionStats) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["E_l", "sigma_l", "E_w", "sigma_w"])
        writer.writerow([repr(dims.mean_length), repr(dims.std_length),
                         repr(dims.mean_width), repr(dims.std_width)])


def write_comparison_csv(path, result: EvalResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x_loc_gt", "y_loc_gt", "x_loc_est", "y_loc_est"])
        for t, xg, yg, xe, ye in result.comparison_rows:
            writer.writerow([repr(t), repr(xg), repr(yg),
                             "" if xe is None else repr(xe),
                             "" if ye is None else repr(ye)])
