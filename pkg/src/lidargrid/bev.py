"""Bird's-eye-view channel features and output-grid post-processing.

``extract_channels`` collapses a point cloud into a 6-plane square BEV
image (height/intensity peaks and means, a bounded log density, and a
binary occupancy bit).  The detector that would consume that image is
abstracted behind a callable; ``cluster_output_grid`` and
``postprocess_clusters`` turn a detector's per-cell attribute grid back
into discrete obstacle estimates via union-find grouping and confidence
filtering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .core import LidarGridError, ObstacleEstimate, as_point_array
from .cluster import UnionFind, label_components

PLANE_NAMES = ("max_height", "mean_height", "max_intensity",
               "mean_intensity", "density", "occupancy")

# density plane: log(count + 1) / log(64), clipped to [0, 1]
_DENSITY_NORM = math.log(64.0)


class GeometryMismatch(LidarGridError):
    """Attribute-grid planes disagree with the configured geometry."""

    category = "geometry-mismatch"


@dataclass(frozen=True)
class BevConfig:
    """Square BEV raster: ``image_size`` cells per side covering ±``range`` m."""

    image_size: int = 672
    range: float = 30.0

    def __post_init__(self):
        if self.image_size < 1:
            raise ValueError("image_size must be >= 1")
        if self.range <= 0.0:
            raise ValueError("range must be > 0")

    @property
    def cell_size(self) -> float:
        return 2.0 * self.range / self.image_size

    def cell_centers(self) -> np.ndarray:
        return -self.range + (np.arange(self.image_size) + 0.5) * self.cell_size


@dataclass(frozen=True, eq=False)
class ChannelImage:
    """Six stacked planes over the BEV raster, float32, shape (6, n, n).

    Plane order follows PLANE_NAMES.  Empty cells are zero in every plane.
    """

    planes: np.ndarray
    config: BevConfig

    def __post_init__(self):
        p = np.asarray(self.planes, dtype=np.float32)
        n = self.config.image_size
        if p.shape != (len(PLANE_NAMES), n, n):
            raise GeometryMismatch(f"planes shape {p.shape}, expected (6, {n}, {n})")
        object.__setattr__(self, "planes", p)

    def plane(self, name: str) -> np.ndarray:
        return self.planes[PLANE_NAMES.index(name)]

    def save(self, path) -> None:
        """Write the one-line text header plus little-endian float32 planes."""
        n = self.config.image_size
        with open(path, "wb") as fh:
            fh.write(f"BEV v1 {len(PLANE_NAMES)} {n} {n}\n".encode("ascii"))
            fh.write(np.ascontiguousarray(self.planes, dtype="<f4").tobytes())


def load_channel_image(path, half_range: float = 30.0) -> ChannelImage:
    """Read a file written by ChannelImage.save.

    The header carries raster dimensions only; the metric half-extent is
    supplied by the caller.
    """
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 5 or header[0] != "BEV" or header[1] != "v1":
            raise GeometryMismatch(f"bad BEV header in {path}")
        planes, h, w = int(header[2]), int(header[3]), int(header[4])
        if planes != len(PLANE_NAMES) or h != w:
            raise GeometryMismatch(f"unsupported BEV layout {planes}x{h}x{w}")
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != planes * h * w:
        raise GeometryMismatch(f"truncated BEV payload in {path}")
    cfg = BevConfig(image_size=h, range=half_range)
    return ChannelImage(planes=data.reshape(planes, h, w).copy(), config=cfg)


def extract_channels(points, cfg: BevConfig) -> ChannelImage:
    """Build the 6-channel BEV image; points outside ±range are dropped."""
    pts = as_point_array(points)
    n = cfg.image_size
    x, y, z, inten = pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3]
    keep = (x >= -cfg.range) & (x < cfg.range) & (y >= -cfg.range) & (y < cfg.range)
    x, y, z, inten = x[keep], y[keep], z[keep], inten[keep]
    ix = ((x + cfg.range) / cfg.cell_size).astype(np.int64)
    iy = ((y + cfg.range) / cfg.cell_size).astype(np.int64)
    ok = (ix < n) & (iy < n)
    flat = ix[ok] * n + iy[ok]
    z, inten = z[ok], inten[ok]

    counts = np.bincount(flat, minlength=n * n).astype(np.float64)
    nonempty = counts > 0
    sum_z = np.bincount(flat, weights=z, minlength=n * n)
    sum_i = np.bincount(flat, weights=inten, minlength=n * n)
    max_z = np.full(n * n, -np.inf)
    max_i = np.full(n * n, -np.inf)
    np.maximum.at(max_z, flat, z)
    np.maximum.at(max_i, flat, inten)

    mean_z = np.divide(sum_z, counts, out=np.zeros(n * n), where=nonempty)
    mean_i = np.divide(sum_i, counts, out=np.zeros(n * n), where=nonempty)
    max_z = np.where(nonempty, max_z, 0.0)
    max_i = np.where(nonempty, max_i, 0.0)
    density = np.clip(np.log1p(counts) / _DENSITY_NORM, 0.0, 1.0)
    occupancy = nonempty.astype(np.float64)

    planes = np.stack([
        max_z, mean_z, max_i, mean_i, density, occupancy,
    ]).reshape(len(PLANE_NAMES), n, n)
    return ChannelImage(planes=planes.astype(np.float32), config=cfg)


@dataclass(frozen=True, eq=False)
class OutputAttributeGrid:
    """Per-cell detector attributes over the BEV raster.

    ``objectness`` and ``confidence`` are scores in [0, 1]; the center
    offsets are meters from the cell center to the predicted object
    center; ``class_scores`` is opaque per-cell data carried through
    aggregation, shape (n, n, C) or None.
    """

    config: BevConfig
    objectness: np.ndarray
    center_offset_x: np.ndarray
    center_offset_y: np.ndarray
    confidence: np.ndarray
    height: np.ndarray
    class_scores: np.ndarray | None = None

    def __post_init__(self):
        n = self.config.image_size
        for name in ("objectness", "center_offset_x", "center_offset_y",
                     "confidence", "height"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (n, n):
                raise GeometryMismatch(f"{name} shape {arr.shape}, expected ({n}, {n})")
            object.__setattr__(self, name, arr)
        for name in ("objectness", "confidence"):
            arr = getattr(self, name)
            if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
                raise ValueError(f"{name} scores outside [0, 1]")
        if self.class_scores is not None:
            cs = np.asarray(self.class_scores, dtype=np.float64)
            if cs.ndim != 3 or cs.shape[:2] != (n, n):
                raise GeometryMismatch(f"class_scores shape {cs.shape}")
            object.__setattr__(self, "class_scores", cs)


class Detector(Protocol):
    """Anything that maps a ChannelImage to an OutputAttributeGrid."""

    def __call__(self, channels: ChannelImage) -> OutputAttributeGrid: ...


DetectorFn = Callable[[ChannelImage], OutputAttributeGrid]


def occupancy_detector(channels: ChannelImage) -> OutputAttributeGrid:
    """Trivial plug-in predictor: objectness and confidence from occupancy.

    Stands in for an external network so the post-processing route can be
    exercised end to end.
    """
    n = channels.config.image_size
    occ = channels.plane("occupancy").astype(np.float64)
    return OutputAttributeGrid(
        config=channels.config,
        objectness=occ,
        center_offset_x=np.zeros((n, n)),
        center_offset_y=np.zeros((n, n)),
        confidence=occ,
        height=channels.plane("max_height").astype(np.float64),
    )


def height_gap_detector(channels: ChannelImage,
                        min_height: float = 0.25) -> OutputAttributeGrid:
    """Heuristic stand-in predictor that suppresses the road surface.

    The median mean-height over occupied cells approximates the ground
    level (ground returns dominate a road scene); cells rising at least
    ``min_height`` above it score as objects.  The height attribute is
    reported relative to that ground estimate.
    """
    n = channels.config.image_size
    occ = channels.plane("occupancy") > 0
    mean_h = channels.plane("mean_height").astype(np.float64)
    max_h = channels.plane("max_height").astype(np.float64)
    ground = float(np.median(mean_h[occ])) if occ.any() else 0.0
    hit = occ & (max_h - ground >= min_height)
    score = hit.astype(np.float64)
    return OutputAttributeGrid(
        config=channels.config,
        objectness=score,
        center_offset_x=np.zeros((n, n)),
        center_offset_y=np.zeros((n, n)),
        confidence=score,
        height=np.where(hit, max_h - ground, 0.0),
    )


@dataclass(frozen=True, eq=False)
class RawCluster:
    """A group of above-threshold cells with aggregated attributes."""

    cells: np.ndarray  # (m, 2) int cell indices
    mean_confidence: float
    mean_height: float
    cell_center_x: float
    cell_center_y: float
    mean_offset_x: float
    mean_offset_y: float
    mean_class_scores: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.cells.shape[0]


def cluster_output_grid(attr: OutputAttributeGrid, objectness_threshold: float,
                        connectivity: int = 8) -> list[RawCluster]:
    """Group above-threshold cells by adjacency plus center-offset links.

    Cells with objectness >= threshold are first joined by grid
    connectivity; each cell is additionally unioned with the cell its
    center-offset vector points into (skipped when that cell is outside
    the grid or below threshold).  With all offsets zero this reduces to
    plain connected-component labeling.
    """
    if not 0.0 <= objectness_threshold <= 1.0:
        raise ValueError("objectness_threshold outside [0, 1]")
    cfg = attr.config
    n = cfg.image_size
    mask = attr.objectness >= objectness_threshold
    base = label_components(mask, connectivity)
    k = base.num_components
    if k == 0:
        return []

    ii, jj = np.nonzero(mask)
    centers = cfg.cell_centers()
    tx = centers[ii] + attr.center_offset_x[ii, jj]
    ty = centers[jj] + attr.center_offset_y[ii, jj]
    t_i = np.floor((tx + cfg.range) / cfg.cell_size).astype(np.int64)
    t_j = np.floor((ty + cfg.range) / cfg.cell_size).astype(np.int64)
    in_grid = (t_i >= 0) & (t_i < n) & (t_j >= 0) & (t_j < n)
    valid = in_grid.copy()
    valid[in_grid] &= mask[t_i[in_grid], t_j[in_grid]]

    src_comp = base.labels[ii, jj] - 1
    uf = UnionFind()
    for _ in range(k):
        uf.make_set()
    if valid.any():
        dst_comp = base.labels[t_i[valid], t_j[valid]] - 1
        pairs = np.unique(src_comp[valid] * k + dst_comp)
        for p in pairs:
            uf.union(int(p) // k, int(p) % k)

    roots = np.array([uf.find(c) for c in range(k)])
    _, group = np.unique(roots, return_inverse=True)
    cell_group = group[src_comp]

    conf = attr.confidence[ii, jj]
    height = attr.height[ii, jj]
    offx = attr.center_offset_x[ii, jj]
    offy = attr.center_offset_y[ii, jj]
    cx = centers[ii]
    cy = centers[jj]

    clusters = []
    order = np.argsort(cell_group, kind="stable")
    bounds = np.searchsorted(cell_group[order], np.arange(group.max() + 2))
    for g in range(group.max() + 1):
        sel = order[bounds[g]:bounds[g + 1]]
        cells = np.stack([ii[sel], jj[sel]], axis=1)
        mean_cs = None
        if attr.class_scores is not None:
            mean_cs = attr.class_scores[ii[sel], jj[sel]].mean(axis=0)
        clusters.append(RawCluster(
            cells=cells,
            mean_confidence=float(conf[sel].mean()),
            mean_height=float(height[sel].mean()),
            cell_center_x=float(cx[sel].mean()),
            cell_center_y=float(cy[sel].mean()),
            mean_offset_x=float(offx[sel].mean()),
            mean_offset_y=float(offy[sel].mean()),
            mean_class_scores=mean_cs,
        ))
    return clusters


def postprocess_clusters(clusters, min_confidence: float,
                         cfg: BevConfig) -> list[ObstacleEstimate]:
    """Drop low-confidence clusters and convert survivors to estimates.

    Center is the mean member cell center displaced by the mean predicted
    offset; footprint dimensions come from the cluster's axis-aligned
    bounding box; the height attribute is averaged.
    """
    out = []
    for c in clusters:
        if c.mean_confidence < min_confidence:
            continue
        center_x = c.cell_center_x + c.mean_offset_x
        center_y = c.cell_center_y + c.mean_offset_y
        ext_i = (c.cells[:, 0].max() - c.cells[:, 0].min() + 1) * cfg.cell_size
        ext_j = (c.cells[:, 1].max() - c.cells[:, 1].min() + 1) * cfg.cell_size
        tag = "unknown"
        if c.mean_class_scores is not None and c.mean_class_scores.size:
            tag = f"class_{int(np.argmax(c.mean_class_scores))}"
        out.append(ObstacleEstimate(
            center_x=float(center_x),
            center_y=float(center_y),
            length=float(max(ext_i, ext_j)),
            width=float(min(ext_i, ext_j)),
            height=c.mean_height,
            confidence=c.mean_confidence,
            class_tag=tag,
            range=math.hypot(center_x, center_y),
        ))
    return out
