"""Triangle meshes: OBJ I/O, surface sampling, and watertight-mesh SDF oracles."""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np


class ObjParseError(ValueError):
    """Malformed OBJ content; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class TriangleMesh:
    """Indexed triangle mesh. ``vertices`` is (n, 3) float, ``triangles`` (m, 3) int."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(self.triangles) and (
            self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)
        ):
            raise ValueError("triangle indices out of range")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    def edge_counts(self):
        """Undirected edges and how many triangles share each."""
        e = self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        e = np.sort(e, axis=1)
        return np.unique(e, axis=0, return_counts=True)

    def is_watertight(self) -> bool:
        if self.is_empty():
            return False
        _, counts = self.edge_counts()
        return bool(np.all(counts == 2))

    def triangle_areas(self) -> np.ndarray:
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def area(self) -> float:
        return float(self.triangle_areas().sum())


def load_obj(path) -> TriangleMesh:
    """Parse an ASCII OBJ (v/f records only); polygon faces are fan-triangulated."""
    vertices: list[list[float]] = []
    triangles: list[list[int]] = []
    with open(path, "r", encoding="ascii") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            tag = fields[0]
            if tag == "v":
                if len(fields) < 4:
                    raise ObjParseError(line_no, "vertex needs 3 coordinates")
                try:
                    vertices.append([float(v) for v in fields[1:4]])
                except ValueError:
                    raise ObjParseError(line_no, f"bad vertex coordinate in {line!r}") from None
            elif tag == "f":
                if len(fields) < 4:
                    raise ObjParseError(line_no, "face needs at least 3 indices")
                idx = []
                for tok in fields[1:]:
                    head = tok.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError:
                        raise ObjParseError(line_no, f"bad face index {tok!r}") from None
                    if i < 0:
                        i = len(vertices) + 1 + i
                    if not 1 <= i <= len(vertices):
                        raise ObjParseError(line_no, f"face index {i} out of range")
                    idx.append(i - 1)
                for k in range(1, len(idx) - 1):
                    triangles.append([idx[0], idx[k], idx[k + 1]])
            # other records (vn, vt, o, g, s, usemtl, ...) are ignored
    return TriangleMesh(
        np.asarray(vertices, dtype=np.float64).reshape(-1, 3),
        np.asarray(triangles, dtype=np.int64).reshape(-1, 3),
    )


def save_obj(mesh: TriangleMesh, path) -> None:
    """Write an ASCII OBJ atomically (temp file + rename)."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".obj.tmp")
    try:
        with os.fdopen(fd, "w", encoding="ascii") as fh:
            for v in mesh.vertices:
                fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
            for t in mesh.triangles:
                fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sample_surface_points(mesh: TriangleMesh, n: int, rng_seed: int) -> np.ndarray:
    """Area-uniform surface samples: triangles chosen proportional to area,
    positions uniform in barycentric coordinates."""
    if mesh.is_empty():
        raise ValueError("cannot sample an empty mesh")
    rng = np.random.default_rng(rng_seed)
    areas = mesh.triangle_areas()
    total = areas.sum()
    if total <= 0:
        raise ValueError("mesh has zero total area")
    tri = rng.choice(len(areas), size=n, p=areas / total)
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    a = mesh.vertices[mesh.triangles[tri, 0]]
    b = mesh.vertices[mesh.triangles[tri, 1]]
    c = mesh.vertices[mesh.triangles[tri, 2]]
    return a + u[:, None] * (b - a) + v[:, None] * (c - a)


# Fixed, non-axis-aligned ray directions for inside/outside parity voting.
# Three directions, majority vote, so a ray grazing an edge cannot flip the sign.
_PARITY_DIRECTIONS = np.array(
    [
        [0.57735026, 0.70710678, 0.40824829],
        [-0.26726124, 0.53452248, 0.80178373],
        [0.84515425, -0.16903085, -0.50709255],
    ]
)
_PARITY_DIRECTIONS /= np.linalg.norm(_PARITY_DIRECTIONS, axis=1, keepdims=True)


def _closest_distance_sq(points, tri_a, tri_ab, tri_ac):
    """Squared point-triangle distances, (n_points, n_triangles).

    Region-based closest-point-on-triangle (Ericson), vectorized over the
    full points x triangles grid.
    """
    p = points[:, None, :]
    a = tri_a[None, :, :]
    ab = tri_ab[None, :, :]
    ac = tri_ac[None, :, :]

    ap = p - a
    d1 = (ab * ap).sum(-1)
    d2 = (ac * ap).sum(-1)

    bp = ap - ab
    d3 = (ab * bp).sum(-1)
    d4 = (ac * bp).sum(-1)

    cp = ap - ac
    d5 = (ab * cp).sum(-1)
    d6 = (ac * cp).sum(-1)

    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = np.where(d1 - d3 != 0, d1 / (d1 - d3), 0.0)
        w_ac = np.where(d2 - d6 != 0, d2 / (d2 - d6), 0.0)
        den_bc = (d4 - d3) + (d5 - d6)
        w_bc = np.where(den_bc != 0, (d4 - d3) / den_bc, 0.0)
        denom = va + vb + vc
        v_in = np.where(denom != 0, vb / denom, 0.0)
        w_in = np.where(denom != 0, vc / denom, 0.0)

    # candidate closest points per region, selected in the standard priority order
    v = np.where(
        (d1 <= 0) & (d2 <= 0), 0.0,
        np.where(
            (d3 >= 0) & (d4 <= d3), 1.0,
            np.where(
                (vc <= 0) & (d1 >= 0) & (d3 <= 0), v_ab,
                np.where(
                    (d6 >= 0) & (d5 <= d6), 0.0,
                    np.where(
                        (vb <= 0) & (d2 >= 0) & (d6 <= 0), 0.0,
                        np.where((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0), 1.0 - w_bc, v_in),
                    ),
                ),
            ),
        ),
    )
    w = np.where(
        (d1 <= 0) & (d2 <= 0), 0.0,
        np.where(
            (d3 >= 0) & (d4 <= d3), 0.0,
            np.where(
                (vc <= 0) & (d1 >= 0) & (d3 <= 0), 0.0,
                np.where(
                    (d6 >= 0) & (d5 <= d6), 1.0,
                    np.where(
                        (vb <= 0) & (d2 >= 0) & (d6 <= 0), w_ac,
                        np.where((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0), w_bc, w_in),
                    ),
                ),
            ),
        ),
    )
    closest = a + v[..., None] * ab + w[..., None] * ac
    diff = p - closest
    return (diff * diff).sum(-1)


def _ray_crossings(points, direction, tri_a, tri_ab, tri_ac):
    """Number of ray/triangle intersections per point (Moeller-Trumbore)."""
    d = direction
    pvec = np.cross(d, tri_ac)                      # (t, 3)
    det = np.einsum("tk,tk->t", tri_ab, pvec)       # (t,)
    ok = np.abs(det) > 1e-14
    inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)

    tvec = points[:, None, :] - tri_a[None, :, :]   # (p, t, 3)
    u = np.einsum("ptk,tk->pt", tvec, pvec) * inv_det
    qvec = np.cross(tvec, tri_ab[None, :, :])       # (p, t, 3)
    v = np.einsum("ptk,k->pt", qvec, d) * inv_det
    t_hit = np.einsum("ptk,tk->pt", qvec, tri_ac) * inv_det

    hit = ok & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t_hit > 0.0)
    return hit.sum(axis=1)


class MeshSdf:
    """Signed distance oracle for a watertight triangle mesh.

    |s| is the exact minimum point-to-triangle distance; the sign comes from
    ray-crossing parity, majority-voted over three fixed skew directions.
    """

    def __init__(self, mesh: TriangleMesh):
        if not mesh.is_watertight():
            raise ValueError("mesh SDF requires a watertight mesh")
        self.mesh = mesh
        tris = mesh.triangles
        self._a = mesh.vertices[tris[:, 0]]
        self._ab = mesh.vertices[tris[:, 1]] - self._a
        self._ac = mesh.vertices[tris[:, 2]] - self._a

    def sdf(self, x):
        pts = np.asarray(x, dtype=np.float64)
        squeeze = pts.ndim == 1
        pts = np.atleast_2d(pts)
        out = np.empty(len(pts))
        # chunk to bound the (points x triangles) working set
        chunk = max(1, int(4e6 / max(1, len(self._a))))
        for start in range(0, len(pts), chunk):
            block = pts[start : start + chunk]
            dist = np.sqrt(_closest_distance_sq(block, self._a, self._ab, self._ac).min(axis=1))
            votes = np.zeros(len(block), dtype=np.int64)
            for d in _PARITY_DIRECTIONS:
                votes += _ray_crossings(block, d, self._a, self._ab, self._ac) % 2
            inside = votes >= 2
            out[start : start + len(block)] = np.where(inside, -dist, dist)
        return float(out[0]) if squeeze else out

    def __call__(self, x):
        return self.sdf(x)


def mesh_sdf(mesh: TriangleMesh, x):
    """One-shot signed distance of ``x`` to a watertight mesh."""
    return MeshSdf(mesh).sdf(x)


def icosphere(subdivisions: int = 2, radius: float = 0.4, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Geodesic sphere mesh, used as a deterministic closed test mesh."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=np.float64,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    for _ in range(subdivisions):
        midpoint: dict[tuple[int, int], int] = {}
        new_faces = []
        verts_list = [v for v in verts]

        def mid(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in midpoint:
                verts_list.append((verts_list[i] + verts_list[j]) / 2.0)
                midpoint[key] = len(verts_list) - 1
            return midpoint[key]

        for f in faces:
            a, b, c = (int(v) for v in f)
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.asarray(verts_list)
        faces = np.asarray(new_faces, dtype=np.int64)
    verts = verts / np.linalg.norm(verts, axis=1, keepdims=True) * radius + np.asarray(center)
    return TriangleMesh(verts, faces)
