"""Shared domain types and frame validation.

Coordinate convention used throughout: right-handed vehicle frame with
x forward, y left, z up, sensor at the origin.  Point clouds are stored
as float64 arrays of shape (N, 4) with columns x, y, z, intensity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class LidarGridError(Exception):
    """Base class for all package errors.

    ``category`` is a short machine-readable tag the CLI prints alongside
    the message.
    """

    category = "error"


class EmptyFrame(LidarGridError):
    """Raised when a frame has no usable points left after validation."""

    category = "empty-frame"


@dataclass(frozen=True)
class Point3:
    """A single LiDAR return: position in meters, intensity in [0, 1]."""

    x: float
    y: float
    z: float
    intensity: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.intensity], dtype=float)


def as_point_array(points) -> np.ndarray:
    """Coerce a point collection to a float64 array of shape (N, 4).

    Accepts an (N, 3) or (N, 4) array, or a sequence of Point3 / length-3
    or length-4 tuples.  Missing intensity is filled with zeros.
    """
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
    else:
        rows = []
        for p in points:
            if isinstance(p, Point3):
                rows.append((p.x, p.y, p.z, p.intensity))
            else:
                q = tuple(p)
                rows.append(q if len(q) == 4 else (q[0], q[1], q[2], 0.0))
        arr = np.array(rows, dtype=float).reshape(-1, 4)
    if arr.ndim != 2 or arr.shape[1] not in (3, 4):
        raise ValueError(f"expected (N, 3) or (N, 4) points, got shape {arr.shape}")
    if arr.shape[1] == 3:
        arr = np.hstack([arr, np.zeros((arr.shape[0], 1))])
    return arr


@dataclass(frozen=True, eq=False)
class PointCloudFrame:
    """One timestamped sensor revolution.

    ``points`` is an (N, 4) float64 array with columns x, y, z, intensity.
    """

    points: np.ndarray
    timestamp: float = 0.0
    frame_id: int = 0

    def __post_init__(self):
        arr = as_point_array(self.points)
        object.__setattr__(self, "points", arr)

    @property
    def xyz(self) -> np.ndarray:
        return self.points[:, :3]

    @property
    def intensity(self) -> np.ndarray:
        return self.points[:, 3]

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class ValidatedFrame(PointCloudFrame):
    """A frame that passed validation; ``dropped_points`` counts removals."""

    dropped_points: int = 0


@dataclass(frozen=True, eq=False)
class ObstacleEstimate:
    """One detected object in the vehicle frame.

    ``center_x``/``center_y`` locate the representative center, ``length``
    and ``width`` are the footprint extents with length >= width, and
    ``range`` is the horizontal distance from the sensor origin to the
    center (derived when not supplied).
    """

    center_x: float
    center_y: float
    length: float
    width: float
    height: float | None = None
    confidence: float = 1.0
    class_tag: str = "unknown"
    range: float | None = None  # derived from the center when omitted

    def __post_init__(self):
        if not (self.length >= self.width > 0.0):
            raise ValueError(
                f"need length >= width > 0, got length={self.length} width={self.width}"
            )
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        r = math.hypot(self.center_x, self.center_y)
        if self.range is None:
            object.__setattr__(self, "range", r)
        elif abs(self.range - r) > 1e-9:
            raise ValueError(f"range {self.range} inconsistent with center ({r})")


def validate_frame(frame: PointCloudFrame, eight_bit_intensity: bool = False) -> ValidatedFrame:
    """Drop non-finite points and normalize intensity into [0, 1].

    ``eight_bit_intensity`` declares that the raw intensities are on the
    0..255 scale and must be divided by 255.  Values are clipped to [0, 1]
    afterwards.  Raises EmptyFrame when no valid point remains.
    """
    pts = frame.points
    keep = np.isfinite(pts).all(axis=1)
    kept = pts[keep].copy()
    if kept.shape[0] == 0:
        raise EmptyFrame(f"frame {frame.frame_id}: no finite points")
    if eight_bit_intensity:
        kept[:, 3] /= 255.0
    np.clip(kept[:, 3], 0.0, 1.0, out=kept[:, 3])
    return ValidatedFrame(
        points=kept,
        timestamp=frame.timestamp,
        frame_id=frame.frame_id,
        dropped_points=int(pts.shape[0] - kept.shape[0]),
    )


def range_of(p) -> float:
    """Horizontal radial distance sqrt(x^2 + y^2) of a point (z ignored)."""
    if isinstance(p, Point3):
        return math.hypot(p.x, p.y)
    q = np.asarray(p, dtype=float).ravel()
    return float(math.hypot(q[0], q[1]))
