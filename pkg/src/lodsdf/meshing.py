"""Isosurface extraction: marching cubes, a dense-grid oracle, octree
acceleration, and level-of-detail refinement that reuses coarse SDF values.

The octree path evaluates the field on a coarse grid and subdivides only
cells whose minimum corner |value| is within ``kappa`` cell diagonals of the
iso level, so for ~1-Lipschitz fields it reproduces the dense-grid mesh
bit for bit at a fraction of the evaluations.  Refinement re-queries a
deeper network head only where the cached coarse head is within ``tau`` of
the surface.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .mc_tables import CORNER_OFFSETS, EDGE_CORNERS, TRI_COUNTS, TRI_TABLE
from .mesh import TriangleMesh

# Per-edge: (dx, dy, dz) of the low corner, the axis the edge runs along,
# and whether the table's first endpoint is the low one.
_EDGE_BASE = np.minimum(
    CORNER_OFFSETS[EDGE_CORNERS[:, 0]], CORNER_OFFSETS[EDGE_CORNERS[:, 1]]
)
_EDGE_AXIS = np.argmax(
    np.abs(CORNER_OFFSETS[EDGE_CORNERS[:, 0]] - CORNER_OFFSETS[EDGE_CORNERS[:, 1]]), axis=1
)
_EDGE_C0_LOW = (
    CORNER_OFFSETS[EDGE_CORNERS[:, 0], _EDGE_AXIS]
    < CORNER_OFFSETS[EDGE_CORNERS[:, 1], _EDGE_AXIS]
)


@dataclass
class MeshingConfig:
    base_resolution: int = 32
    target_resolution: int = 256
    kappa: float = 3.0                    # keep cells with min |sdf| <= kappa * diagonal
    reuse_threshold: float | None = None  # tau for refinement; default 2x finest diagonal
    iso: float = 0.0
    lower: float = -0.55
    upper: float = 0.55

    def __post_init__(self):
        if self.base_resolution < 2:
            raise ValueError("base_resolution must be >= 2")
        ratio = self.target_resolution / self.base_resolution
        if self.target_resolution < self.base_resolution or ratio != int(ratio) or (
            int(ratio) & (int(ratio) - 1)
        ):
            raise ValueError("target/base resolution must be a power of 2")
        if self.kappa < 1.0:
            raise ValueError("kappa must be >= 1")
        if self.reuse_threshold is not None and self.reuse_threshold <= 0:
            raise ValueError("reuse_threshold must be positive")
        if self.upper <= self.lower:
            raise ValueError("empty extraction box")

    def spacing(self, resolution: int) -> float:
        return (self.upper - self.lower) / resolution

    def cell_diagonal(self, resolution: int) -> float:
        return float(np.sqrt(3.0) * self.spacing(resolution))

    @property
    def tau(self) -> float:
        if self.reuse_threshold is not None:
            return self.reuse_threshold
        return 2.0 * self.cell_diagonal(self.target_resolution)


@dataclass
class EvalStats:
    network_evaluations: int = 0
    cells_per_level: list[int] = field(default_factory=list)
    target_level_evaluations: int | None = None
    reused_values: int | None = None

    def to_json(self) -> str:
        payload = {
            "evals": int(self.network_evaluations),
            "cells_per_level": [int(c) for c in self.cells_per_level],
        }
        if self.target_level_evaluations is not None:
            payload["target_level_evals"] = int(self.target_level_evaluations)
        if self.reused_values is not None:
            payload["reused_values"] = int(self.reused_values)
        return json.dumps(payload)


def _perturb_iso(values: np.ndarray, iso: float) -> np.ndarray:
    """Nudge corners that sit exactly on the iso level (keeps MC watertight
    and interpolation finite)."""
    exact = values == iso
    if np.any(exact):
        values = values.copy()
        values[exact] = iso + 1e-9
    return values


def _emit_cells(cell_idx, corner_vals, origin, spacing, iso, resolution):
    """Triangles for the given cells (lexicographically pre-sorted).

    Vertices on shared crossing edges are computed once per global edge and
    deduplicated exactly; winding is flipped so normals point outward
    (toward positive field values).
    """
    if len(cell_idx) == 0:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    cases = (corner_vals < iso) @ (1 << np.arange(8))
    n_tris = TRI_COUNTS[cases]
    keep = n_tris > 0
    cell_idx, corner_vals, cases, n_tris = (
        cell_idx[keep], corner_vals[keep], cases[keep], n_tris[keep]
    )
    if len(cell_idx) == 0:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    rows = TRI_TABLE[cases]
    flat = rows[rows >= 0]                               # row-major: cell order preserved
    owner = np.repeat(np.arange(len(cell_idx)), n_tris * 3)

    base = cell_idx[owner] + _EDGE_BASE[flat]            # low corner of each edge
    axis = _EDGE_AXIS[flat]
    stride = resolution + 2
    keys = ((base[:, 0] * stride + base[:, 1]) * stride + base[:, 2]) * 4 + axis
    uniq, first_occ, inverse = np.unique(keys, return_index=True, return_inverse=True)
    triangles = inverse.reshape(-1, 3)[:, [0, 2, 1]]     # outward-facing winding

    u_axis = (uniq % 4).astype(np.int64)
    rest = uniq // 4
    uk = rest % stride
    rest //= stride
    uj = rest % stride
    ui = rest // stride
    a_idx = np.stack([ui, uj, uk], axis=1)

    # read both endpoint values through one owning (cell, edge) occurrence,
    # ordered low-to-high along the edge axis
    occ_owner = owner[first_occ]
    occ_edge = flat[first_occ]
    v0 = corner_vals[occ_owner, EDGE_CORNERS[occ_edge, 0]]
    v1 = corner_vals[occ_owner, EDGE_CORNERS[occ_edge, 1]]
    c0_low = _EDGE_C0_LOW[occ_edge]
    va = np.where(c0_low, v0, v1)
    vb = np.where(c0_low, v1, v0)

    t = (iso - va) / (vb - va)
    pos = origin + spacing * a_idx.astype(np.float64)
    pos[np.arange(len(uniq)), u_axis] += spacing * t
    return TriangleMesh(pos, triangles)


def marching_cubes(values, spacing: float, origin=(0.0, 0.0, 0.0), iso: float = 0.0
                   ) -> TriangleMesh:
    """Standard marching cubes over a dense corner-value grid.

    ``values`` has shape (nx+1, ny+1, nz+1); vertices are placed by linear
    interpolation along crossing edges.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 3 or min(values.shape) < 2:
        raise ValueError("corner grid must be at least 2x2x2")
    values = _perturb_iso(values, iso)
    inside = values < iso
    mixed = np.zeros(tuple(s - 1 for s in values.shape), dtype=bool)
    all_in = np.ones_like(mixed)
    for dx, dy, dz in CORNER_OFFSETS:
        corner = inside[
            dx : dx + mixed.shape[0], dy : dy + mixed.shape[1], dz : dz + mixed.shape[2]
        ]
        mixed |= corner
        all_in &= corner
    mixed &= ~all_in
    cells = np.argwhere(mixed)  # lexicographic order
    corner_vals = _gather_corners(values, cells)
    resolution = max(values.shape) - 1
    return _emit_cells(cells, corner_vals, np.asarray(origin, dtype=np.float64),
                       spacing, iso, resolution)


def _gather_corners(values: np.ndarray, cells: np.ndarray) -> np.ndarray:
    out = np.empty((len(cells), 8), dtype=np.float64)
    for c, (dx, dy, dz) in enumerate(CORNER_OFFSETS):
        out[:, c] = values[cells[:, 0] + dx, cells[:, 1] + dy, cells[:, 2] + dz]
    return out


def _grid_points(cfg: MeshingConfig, resolution: int, idx: np.ndarray) -> np.ndarray:
    return cfg.lower + cfg.spacing(resolution) * idx.astype(np.float64)


def extract_mesh_dense(evaluator, resolution: int, cfg: MeshingConfig | None = None
                       ) -> tuple[TriangleMesh, EvalStats]:
    """Dense-grid oracle: evaluate every corner, then marching cubes."""
    cfg = cfg or MeshingConfig(target_resolution=resolution, base_resolution=resolution)
    values = _dense_values(evaluator, resolution, cfg)
    mesh = marching_cubes(values, cfg.spacing(resolution), origin=(cfg.lower,) * 3, iso=cfg.iso)
    stats = EvalStats(network_evaluations=(resolution + 1) ** 3,
                      cells_per_level=[resolution**3])
    return mesh, stats


def _dense_values(evaluator, resolution: int, cfg: MeshingConfig) -> np.ndarray:
    """Full corner grid of (iso-perturbed) field values.

    Corners are evaluated in multi-plane slabs of ~1M points to keep both
    the coordinate buffers and the evaluator's per-call overhead small.
    """
    n = resolution + 1
    axis = cfg.lower + cfg.spacing(resolution) * np.arange(n)
    yy, zz = np.meshgrid(axis, axis, indexing="ij")
    planes_per_slab = max(1, 1_000_000 // (n * n))
    values = np.empty((n, n, n), dtype=np.float64)
    for start in range(0, n, planes_per_slab):
        count = min(planes_per_slab, n - start)
        slab = np.empty((count, n * n, 3), dtype=np.float64)
        slab[:, :, 0] = axis[start : start + count, None]
        slab[:, :, 1] = yy.ravel()
        slab[:, :, 2] = zz.ravel()
        vals = np.asarray(evaluator(slab.reshape(-1, 3)), dtype=np.float64)
        values[start : start + count] = vals.reshape(count, n, n)
    return _perturb_iso(values, cfg.iso)


def extract_mesh(evaluator, cfg: MeshingConfig) -> tuple[TriangleMesh, EvalStats]:
    """Octree-accelerated extraction.

    The base grid is fully evaluated; a cell stays active when its minimum
    corner |value - iso| is within kappa cell diagonals (or its corner signs
    are mixed).  Children of active cells are evaluated only at new corners,
    with a Lipschitz prefilter on the corner each child shares with its
    parent, until the target resolution, where marching cubes runs on the
    active cells only.
    """
    stats = EvalStats()
    res = cfg.base_resolution
    values = _dense_values(evaluator, res, cfg)
    stats.network_evaluations += (res + 1) ** 3

    active = _keep_cells(values, _all_cells(res), cfg, res)
    stats.cells_per_level.append(len(active))

    while res < cfg.target_resolution:
        res *= 2
        child_cells, eval_mask_grid, values = _subdivide(values, active, cfg, res)
        new_points = np.argwhere(eval_mask_grid)
        if len(new_points):
            pts = _grid_points(cfg, res, new_points)
            vals = np.asarray(evaluator(pts), dtype=np.float64)
            vals = _perturb_iso(vals, cfg.iso)
            values[new_points[:, 0], new_points[:, 1], new_points[:, 2]] = vals
        stats.network_evaluations += len(new_points)
        active = _keep_cells(values, child_cells, cfg, res)
        stats.cells_per_level.append(len(active))

    corner_vals = _gather_corners(values, active)
    mesh = _emit_cells(active, corner_vals, np.full(3, cfg.lower), cfg.spacing(res),
                       cfg.iso, res)
    return mesh, stats


def _all_cells(resolution: int) -> np.ndarray:
    r = np.arange(resolution)
    return np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)


def _keep_cells(values, cells, cfg: MeshingConfig, resolution: int) -> np.ndarray:
    """Active-cell test: near-surface corners or mixed corner signs.

    Cells are returned in lexicographic order so emission is deterministic.
    """
    if len(cells) == 0:
        return cells.reshape(0, 3)
    corner_vals = _gather_corners(values, cells)
    near = np.nanmin(np.abs(corner_vals - cfg.iso), axis=1) <= cfg.kappa * cfg.cell_diagonal(
        resolution
    )
    finite = np.isfinite(corner_vals)
    inside = (corner_vals < cfg.iso) & finite
    mixed = inside.any(axis=1) & (~inside & finite).any(axis=1)
    kept = cells[near | mixed]
    order = np.lexsort((kept[:, 2], kept[:, 1], kept[:, 0]))
    return kept[order]


def _subdivide(values, active, cfg: MeshingConfig, child_res: int):
    """Children of active cells that survive the shared-corner prefilter,
    plus the mask of not-yet-known corners to evaluate.

    A child is skipped outright when the corner it shares with its parent is
    more than (kappa + 1) child diagonals from the iso level: for a
    ~1-Lipschitz field the keep test would fail anyway, so the active set is
    unchanged while far-side children cost no evaluations.
    """
    n = child_res + 1
    child_values = np.full((n, n, n), np.nan)
    child_values[::2, ::2, ::2] = values

    octants = CORNER_OFFSETS  # the 8 (a, b, c) octant offsets
    parent_corner = active[:, None, :] + octants[None, :, :]       # (k, 8, 3)
    shared = values[
        parent_corner[..., 0], parent_corner[..., 1], parent_corner[..., 2]
    ]
    limit = (cfg.kappa + 1.0) * cfg.cell_diagonal(child_res)
    survives = np.abs(shared - cfg.iso) <= limit
    # unknown parent corners (possible only on pathological fields) stay in
    survives |= ~np.isfinite(shared)

    child_cells = (2 * active[:, None, :] + octants[None, :, :])[survives]

    eval_mask = np.zeros_like(child_values, dtype=bool)
    for dx, dy, dz in CORNER_OFFSETS:
        eval_mask[
            child_cells[:, 0] + dx, child_cells[:, 1] + dy, child_cells[:, 2] + dz
        ] = True
    eval_mask &= np.isnan(child_values)
    return child_cells, eval_mask, child_values


def refine_mesh(
    cached_values: np.ndarray,
    evaluator,
    cfg: MeshingConfig,
    tau: float | None = None,
) -> tuple[TriangleMesh, EvalStats]:
    """Re-extract at a deeper network level, reusing coarse-level values.

    ``cached_values`` is the dense corner grid produced at the coarse level;
    the deeper evaluator is queried only where |cached - iso| < tau, other
    corners keep their cached values (far from the surface, where the
    coarse and fine heads agree in sign).
    """
    cached = np.asarray(cached_values, dtype=np.float64)
    if cached.ndim != 3:
        raise ValueError("cached grid must be a dense 3D corner array")
    if tau is None:
        tau = cfg.tau
    cached = _perturb_iso(cached, cfg.iso)
    mask = np.abs(cached - cfg.iso) < tau
    merged = cached.copy()
    idx = np.argwhere(mask)
    if len(idx):
        resolution = cached.shape[0] - 1
        pts = _grid_points(cfg, resolution, idx)
        vals = np.asarray(evaluator(pts), dtype=np.float64)
        merged[idx[:, 0], idx[:, 1], idx[:, 2]] = _perturb_iso(vals, cfg.iso)
    resolution = cached.shape[0] - 1
    mesh = marching_cubes(merged, cfg.spacing(resolution), origin=(cfg.lower,) * 3,
                          iso=cfg.iso)
    stats = EvalStats(
        network_evaluations=int(mask.sum()),
        cells_per_level=[resolution**3],
        target_level_evaluations=int(mask.sum()),
        reused_values=int((~mask).sum()),
    )
    return mesh, stats
