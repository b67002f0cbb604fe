"""Connected-component labeling and obstacle extraction.

Labeling is the classic two-pass raster scan: the first pass hands out
provisional labels and records merges in a union-find, the second pass
flattens them to dense final labels.  Obstacles are then read off each
component as a count-weighted centroid plus axis-aligned footprint
extents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LidarGridError, ObstacleEstimate
from .grid import CellHistogram, GridConfig, OccupancyGrid


class DimensionMismatch(LidarGridError):
    """Label grid and histogram shapes disagree."""

    category = "dimension-mismatch"


class UnionFind:
    """Array-based disjoint sets with path compression and union by rank."""

    def __init__(self):
        self.parent: list[int] = []
        self.rank: list[int] = []

    def make_set(self) -> int:
        self.parent.append(len(self.parent))
        self.rank.append(0)
        return len(self.parent) - 1

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return ra


@dataclass(frozen=True, eq=False)
class LabelGrid:
    """Per-cell component ids: 0 = free, 1..num_components occupied."""

    labels: np.ndarray
    num_components: int

    @property
    def width(self) -> int:
        return self.labels.shape[0]

    @property
    def height(self) -> int:
        return self.labels.shape[1]


_NEIGHBORS_4 = ((-1, 0), (0, -1))
_NEIGHBORS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1))


def label_components(grid, connectivity: int = 8) -> LabelGrid:
    """Label connected components of a boolean grid (4- or 8-connectivity).

    Accepts an OccupancyGrid or a bare boolean array.  The resulting
    partition equals flood fill; labels are dense and numbered in raster
    order of first appearance.
    """
    cells = grid.cells if isinstance(grid, OccupancyGrid) else np.asarray(grid, dtype=bool)
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    offsets = _NEIGHBORS_4 if connectivity == 4 else _NEIGHBORS_8
    ni, nj = cells.shape

    provisional = np.zeros((ni, nj), dtype=np.int64)
    uf = UnionFind()
    uf.make_set()  # index 0 reserved for free space

    occupied = np.argwhere(cells)  # raster order
    for i, j in occupied:
        best = 0
        for di, dj in offsets:
            a, b = i + di, j + dj
            if 0 <= a < ni and 0 <= b < nj:
                lab = provisional[a, b]
                if lab:
                    if best:
                        uf.union(best, lab)
                    else:
                        best = lab
        if not best:
            best = uf.make_set()
        provisional[i, j] = best

    # second pass: resolve equivalences to dense ids in first-seen order
    n_prov = len(uf.parent)
    dense = np.zeros(n_prov, dtype=np.int64)
    next_id = 0
    for p in range(1, n_prov):
        root = uf.find(p)
        if dense[root] == 0:
            next_id += 1
            dense[root] = next_id
        dense[p] = dense[root]
    return LabelGrid(labels=dense[provisional], num_components=next_id)


def extract_obstacles(labels: LabelGrid, hist: CellHistogram, cfg: GridConfig,
                      min_cells: int = 2) -> list[ObstacleEstimate]:
    """Convert labeled components into obstacle estimates.

    Center is the point-count-weighted centroid of member cell centers;
    length/width are the axis-aligned footprint extents (length is the
    larger).  Components smaller than ``min_cells`` cells are skipped.
    """
    if labels.labels.shape != hist.counts.shape:
        raise DimensionMismatch(
            f"labels {labels.labels.shape} vs histogram {hist.counts.shape}"
        )
    k = labels.num_components
    if k == 0:
        return []

    ii, jj = np.nonzero(labels.labels)
    comp = labels.labels[ii, jj] - 1
    weights = hist.counts[ii, jj].astype(float)
    cx = cfg.cell_centers_x()[ii]
    cy = cfg.cell_centers_y()[jj]

    cell_counts = np.bincount(comp, minlength=k)
    w_sum = np.bincount(comp, weights=weights, minlength=k)
    wx = np.bincount(comp, weights=weights * cx, minlength=k)
    wy = np.bincount(comp, weights=weights * cy, minlength=k)
    # fall back to unweighted centroids for components of count-zero cells
    ux = np.bincount(comp, weights=cx, minlength=k)
    uy = np.bincount(comp, weights=cy, minlength=k)

    min_i = np.full(k, labels.width, dtype=np.int64)
    max_i = np.full(k, -1, dtype=np.int64)
    min_j = np.full(k, labels.height, dtype=np.int64)
    max_j = np.full(k, -1, dtype=np.int64)
    np.minimum.at(min_i, comp, ii)
    np.maximum.at(max_i, comp, ii)
    np.minimum.at(min_j, comp, jj)
    np.maximum.at(max_j, comp, jj)

    obstacles = []
    for c in range(k):
        if cell_counts[c] < min_cells:
            continue
        if w_sum[c] > 0.0:
            center_x = wx[c] / w_sum[c]
            center_y = wy[c] / w_sum[c]
        else:
            center_x = ux[c] / cell_counts[c]
            center_y = uy[c] / cell_counts[c]
        ext_x = (max_i[c] - min_i[c] + 1) * cfg.cell_size
        ext_y = (max_j[c] - min_j[c] + 1) * cfg.cell_size
        obstacles.append(ObstacleEstimate(
            center_x=float(center_x),
            center_y=float(center_y),
            length=float(max(ext_x, ext_y)),
            width=float(min(ext_x, ext_y)),
            confidence=1.0,
            class_tag="unknown",
            range=math.hypot(center_x, center_y),
        ))
    return obstacles
