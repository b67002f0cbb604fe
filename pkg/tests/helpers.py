"""Independent oracles shared across the test suite.

Everything here is deliberately naive (flood fill, explicit set
morphology, plain-loop statistics) so it cannot share a bug with the
implementations it checks.
"""

from __future__ import annotations

import math

import numpy as np


def flood_fill_labels(cells: np.ndarray, connectivity: int) -> np.ndarray:
    """Label connected components by explicit-stack flood fill."""
    cells = np.asarray(cells, dtype=bool)
    ni, nj = cells.shape
    if connectivity == 4:
        offsets = ((-1, 0), (1, 0), (0, -1), (0, 1))
    else:
        offsets = tuple((di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)
                        if (di, dj) != (0, 0))
    labels = np.zeros((ni, nj), dtype=np.int64)
    next_label = 0
    for si in range(ni):
        for sj in range(nj):
            if not cells[si, sj] or labels[si, sj]:
                continue
            next_label += 1
            stack = [(si, sj)]
            labels[si, sj] = next_label
            while stack:
                i, j = stack.pop()
                for di, dj in offsets:
                    a, b = i + di, j + dj
                    if 0 <= a < ni and 0 <= b < nj and cells[a, b] and not labels[a, b]:
                        labels[a, b] = next_label
                        stack.append((a, b))
    return labels


def same_partition(labels_a: np.ndarray, labels_b: np.ndarray) -> bool:
    """True when two label grids induce identical partitions of the cells."""
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.shape != b.shape or np.any((a == 0) != (b == 0)):
        return False
    fwd: dict[int, int] = {}
    rev: dict[int, int] = {}
    for x, y in zip(a, b):
        if x == 0:
            continue
        if fwd.setdefault(int(x), int(y)) != y or rev.setdefault(int(y), int(x)) != x:
            return False
    return True


def erode_cells(occupied: set, radius: int) -> set:
    """Set-based erosion on the infinite plane; everything outside the set
    is free, so a cell survives only with its full square neighborhood."""
    out = set()
    for (i, j) in occupied:
        if all((i + di, j + dj) in occupied
               for di in range(-radius, radius + 1)
               for dj in range(-radius, radius + 1)):
            out.add((i, j))
    return out


def dilate_cells(occupied: set, radius: int) -> set:
    """Set-based dilation on the infinite plane (no clipping)."""
    out = set()
    for (i, j) in occupied:
        for di in range(-radius, radius + 1):
            for dj in range(-radius, radius + 1):
                out.add((i + di, j + dj))
    return out


def open_close_cells(occupied: set, radius: int) -> set:
    """Opening then closing on the infinite plane."""
    opened = dilate_cells(erode_cells(occupied, radius), radius)
    return erode_cells(dilate_cells(opened, radius), radius)


def cells_to_array(occupied: set, shape: tuple) -> np.ndarray:
    """Rasterize a cell set onto a grid, discarding out-of-window cells."""
    out = np.zeros(shape, dtype=bool)
    for i, j in occupied:
        if 0 <= i < shape[0] and 0 <= j < shape[1]:
            out[i, j] = True
    return out


def array_to_cells(cells: np.ndarray) -> set:
    return {(int(i), int(j)) for i, j in np.argwhere(cells)}


def reference_mean_std(values) -> tuple:
    """Plain-loop mean and population standard deviation."""
    vals = [float(v) for v in values]
    n = len(vals)
    mean = sum(vals) / n
    var = sum((v - mean) ** 2 for v in vals) / n
    return mean, math.sqrt(var)


def least_squares_plane(xyz: np.ndarray) -> tuple:
    """Reference orthogonal-regression plane (normal, offset), normal.z > 0."""
    centroid = xyz.mean(axis=0)
    u, s, vt = np.linalg.svd(xyz - centroid)
    normal = vt[-1]
    if normal[2] < 0:
        normal = -normal
    return normal, float(-normal @ centroid)
