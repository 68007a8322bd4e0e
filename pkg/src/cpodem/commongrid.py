"""Common grid selection, per-case region maps, and inverse-distance
interpolation between geometries.

Each axisymmetric domain is partitioned into five region boxes (headend,
injector interior, three downstream thirds). A region map is the set of
per-region axis-aligned affine transforms sending the common grid's boxes
onto a case's boxes; box edges map to box edges, which makes the map
continuous across shared boundaries. Interpolation between grids uses
inverse-distance weighting over the k nearest nodes, with distances taken
in region-local normalized coordinates so the axial extent cannot swamp
the radial one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .design import DesignPoint
from .errors import DegenerateRegion, EmptySource, GeometryMismatch
from .oracle import REGIONS, AxisymGrid, SnapshotSeries, axial_breaks, domain_extent

__all__ = [
    "RegionBox",
    "CommonGrid",
    "RegionMap",
    "partition_domain",
    "select_common_grid",
    "build_region_map",
    "idw_weights",
    "idw_interpolate",
    "rescale_case_to_common",
    "resample_to_case",
]

EXACT_HIT_TOL = 1e-12


@dataclass(frozen=True)
class RegionBox:
    name: str
    x0: float
    x1: float
    r0: float
    r1: float


def partition_domain(grid: AxisymGrid, d: DesignPoint):
    """Five axial-radial region boxes for a case geometry."""
    x_max, r_max = domain_extent(d)
    tol = 1e-9 * max(x_max, r_max)
    if grid.x[-1] < x_max - tol or grid.r[-1] < r_max - tol:
        raise GeometryMismatch(
            f"grid extent ({grid.x[-1]}, {grid.r[-1]}) smaller than domain ({x_max}, {r_max})"
        )
    breaks = axial_breaks(d)
    return [
        RegionBox(REGIONS[i], breaks[i], breaks[i + 1], 0.0, r_max)
        for i in range(len(REGIONS))
    ]


@dataclass
class CommonGrid:
    """Reference grid for an ensemble plus its region partition."""

    grid: AxisymGrid
    case_index: int = 0
    boxes: list = None


def select_common_grid(cases, designs=None) -> CommonGrid:
    """Pick the densest grid (most nodes); ties go to the lowest index."""
    if not cases:
        raise ValueError("no cases given")
    counts = [g.n_nodes for g in cases]
    idx = int(np.argmax(counts))  # argmax returns the first maximum
    boxes = None
    if designs is not None:
        boxes = partition_domain(cases[idx], designs[idx])
    return CommonGrid(grid=cases[idx], case_index=idx, boxes=boxes)


@dataclass
class RegionMap:
    """Per-region affine transforms from common coordinates to a case's."""

    common_boxes: list
    case_boxes: list
    x_scale: np.ndarray
    x_offset: np.ndarray
    r_scale: np.ndarray
    r_offset: np.ndarray

    @property
    def n_regions(self) -> int:
        return len(self.common_boxes)

    def _breaks(self, boxes):
        return np.array([b.x0 for b in boxes] + [boxes[-1].x1])

    def region_of_common(self, x) -> np.ndarray:
        breaks = self._breaks(self.common_boxes)
        return np.clip(np.searchsorted(breaks, x, side="right") - 1, 0, self.n_regions - 1)

    def region_of_case(self, x) -> np.ndarray:
        breaks = self._breaks(self.case_boxes)
        return np.clip(np.searchsorted(breaks, x, side="right") - 1, 0, self.n_regions - 1)

    def forward(self, points) -> np.ndarray:
        """Map (x, r) points from common coordinates into case coordinates."""
        pts = np.asarray(points, dtype=float)
        reg = self.region_of_common(pts[:, 0])
        out = np.empty_like(pts)
        out[:, 0] = self.x_scale[reg] * pts[:, 0] + self.x_offset[reg]
        out[:, 1] = self.r_scale[reg] * pts[:, 1] + self.r_offset[reg]
        return out

    def inverse(self, points) -> np.ndarray:
        """Map (x, r) points from case coordinates back to common ones."""
        pts = np.asarray(points, dtype=float)
        reg = self.region_of_case(pts[:, 0])
        out = np.empty_like(pts)
        out[:, 0] = (pts[:, 0] - self.x_offset[reg]) / self.x_scale[reg]
        out[:, 1] = (pts[:, 1] - self.r_offset[reg]) / self.r_scale[reg]
        return out


def build_region_map(common: CommonGrid, case_d: DesignPoint) -> RegionMap:
    """Affine transforms sending each common region box to the case box."""
    if common.boxes is None:
        raise ValueError("common grid carries no region boxes")
    case_boxes = partition_domain_for_design(case_d)
    xs, xo, rs, ro = [], [], [], []
    for cb, kb in zip(common.boxes, case_boxes):
        wx_c, wx_k = cb.x1 - cb.x0, kb.x1 - kb.x0
        wr_c, wr_k = cb.r1 - cb.r0, kb.r1 - kb.r0
        if wx_k <= 0 or wr_k <= 0 or wx_c <= 0 or wr_c <= 0:
            raise DegenerateRegion(f"zero-extent region {kb.name}")
        sx = wx_k / wx_c
        sr = wr_k / wr_c
        xs.append(sx)
        xo.append(kb.x0 - sx * cb.x0)
        rs.append(sr)
        ro.append(kb.r0 - sr * cb.r0)
    return RegionMap(
        common_boxes=list(common.boxes),
        case_boxes=case_boxes,
        x_scale=np.array(xs),
        x_offset=np.array(xo),
        r_scale=np.array(rs),
        r_offset=np.array(ro),
    )


def partition_domain_for_design(d: DesignPoint):
    """Region boxes straight from the geometry (no grid to check against)."""
    _, r_max = domain_extent(d)
    breaks = axial_breaks(d)
    return [
        RegionBox(REGIONS[i], breaks[i], breaks[i + 1], 0.0, r_max)
        for i in range(len(REGIONS))
    ]


def idw_weights(src_points, queries, k: int = 10, power: int = 2):
    """Neighbor indices and normalized inverse-distance weights.

    A query within EXACT_HIT_TOL of a source node gets that node's value
    exactly (one-hot weights). Distances use the coordinates as given;
    scale axes beforehand when they are incommensurate.
    """
    src = np.asarray(src_points, dtype=float)
    if src.size == 0:
        raise EmptySource("no source points")
    if k > len(src):
        raise ValueError(f"k={k} exceeds {len(src)} source points")
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    tree = cKDTree(src)
    dist, idx = tree.query(q, k=k)
    if k == 1:
        dist = dist[:, None]
        idx = idx[:, None]
    w = np.empty_like(dist)
    with np.errstate(divide="ignore"):
        w = dist ** (-float(power))
    exact = dist[:, 0] <= EXACT_HIT_TOL
    if np.any(exact):
        w[exact] = 0.0
        w[exact, 0] = 1.0
    w /= w.sum(axis=1, keepdims=True)
    return idx.astype(np.int64), w


def idw_interpolate(src_points, values, queries, k: int = 10, power: int = 2, scale=None):
    """Interpolate one or more fields at query points.

    `values` is (n_src,) or (T, n_src); the result matches with n_src
    replaced by the number of queries.
    """
    src = np.asarray(src_points, dtype=float)
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    if scale is not None:
        scale = np.asarray(scale, dtype=float)
        src = src / scale
        q = q / scale
    idx, w = idw_weights(src, q, k=k, power=power)
    vals = np.asarray(values, dtype=float)
    squeeze = vals.ndim == 1
    if squeeze:
        vals = vals[None, :]
    out = kernels.idw_apply(idx, w, vals)
    return out[0] if squeeze else out


def _grouped_weights(src_points, queries, query_regions, region_boxes, k, power):
    """IDW weights with per-region axis normalization.

    Queries are grouped by region; within a group, both the source cloud
    and the queries are rescaled by that region's box extents before the
    nearest-neighbor search.
    """
    n_q = len(queries)
    idx = np.empty((n_q, k), dtype=np.int64)
    w = np.empty((n_q, k))
    for reg, box in enumerate(region_boxes):
        sel = np.flatnonzero(query_regions == reg)
        if len(sel) == 0:
            continue
        scale = np.array([max(box.x1 - box.x0, 1e-300), max(box.r1 - box.r0, 1e-300)])
        i_reg, w_reg = idw_weights(src_points / scale, queries[sel] / scale, k=k, power=power)
        idx[sel] = i_reg
        w[sel] = w_reg
    return idx, w


def rescale_case_to_common(
    series: SnapshotSeries, rmap: RegionMap, common: CommonGrid, k: int = 10, power: int = 2
) -> SnapshotSeries:
    """Resample a case's snapshots onto the common grid.

    Common nodes are pushed through the forward map into case coordinates
    and interpolated from the case grid, region by region.
    """
    common_nodes = common.grid.node_coords()
    regions = rmap.region_of_common(common_nodes[:, 0])
    mapped = rmap.forward(common_nodes)
    src = series.grid.node_coords()
    idx, w = _grouped_weights(src, mapped, regions, rmap.case_boxes, k, power)
    data = {name: kernels.idw_apply(idx, w, arr) for name, arr in series.data.items()}
    return SnapshotSeries(grid=common.grid, data=data, dt=series.dt, t0=series.t0)


def resample_to_case(
    fields, common: CommonGrid, rmap: RegionMap, case_grid: AxisymGrid, k: int = 10, power: int = 2
):
    """Resample fields living on the common grid onto a case grid.

    Case nodes are pulled back through the inverse map into common
    coordinates and interpolated from the common grid. `fields` is (N,)
    or (T, N) on the common grid.
    """
    case_nodes = case_grid.node_coords()
    regions = rmap.region_of_case(case_nodes[:, 0])
    pulled = rmap.inverse(case_nodes)
    src = common.grid.node_coords()
    idx, w = _grouped_weights(src, pulled, regions, rmap.common_boxes, k, power)
    vals = np.asarray(fields, dtype=float)
    squeeze = vals.ndim == 1
    if squeeze:
        vals = vals[None, :]
    out = kernels.idw_apply(idx, w, vals)
    return out[0] if squeeze else out
