"""Analytic signed distance fields used as exact ground-truth oracles.

All shapes live inside the [-0.5, 0.5]^3 normalization box and every field
is 1-Lipschitz with a negative interior.  Evaluation is vectorized: ``sdf``
accepts an (n, 3) array (or a single 3-vector) and returns (n,) values.
"""

from __future__ import annotations

import numpy as np

DOMAIN_HALF = 0.5          # shapes are normalized into [-0.5, 0.5]^3
SAMPLE_HALF = 0.55         # slightly padded box used for sampling/extraction


def _as_points(x):
    pts = np.asarray(x, dtype=np.float64)
    squeeze = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected points of shape (n, 3), got {pts.shape}")
    return pts, squeeze


def _maybe_scalar(values, squeeze):
    return float(values[0]) if squeeze else values


class AnalyticShape:
    """Base class for exact SDF oracles."""

    kind = "abstract"

    def sdf(self, x):
        pts, squeeze = _as_points(x)
        return _maybe_scalar(self._sdf(pts), squeeze)

    def __call__(self, x):
        return self.sdf(x)

    def _sdf(self, pts):
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params()}

    def _check_inside_domain(self, max_extent):
        if max_extent > DOMAIN_HALF:
            raise ValueError(
                f"{self.kind} extends to {max_extent:.4f}, outside the "
                f"[-{DOMAIN_HALF}, {DOMAIN_HALF}]^3 box"
            )


class Sphere(AnalyticShape):
    kind = "sphere"

    def __init__(self, radius: float, center=(0.0, 0.0, 0.0)):
        if radius <= 0:
            raise ValueError("sphere radius must be positive")
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=np.float64)
        self._check_inside_domain(self.radius + np.abs(self.center).max())

    def _sdf(self, pts):
        return np.linalg.norm(pts - self.center, axis=1) - self.radius

    def params(self):
        return {"radius": self.radius, "center": self.center.tolist()}


class Box(AnalyticShape):
    kind = "box"

    def __init__(self, half_extents, center=(0.0, 0.0, 0.0)):
        self.half_extents = np.asarray(half_extents, dtype=np.float64)
        self.center = np.asarray(center, dtype=np.float64)
        if self.half_extents.shape != (3,) or np.any(self.half_extents <= 0):
            raise ValueError("box half extents must be 3 positive numbers")
        self._check_inside_domain((self.half_extents + np.abs(self.center)).max())

    def _sdf(self, pts):
        q = np.abs(pts - self.center) - self.half_extents
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(q.max(axis=1), 0.0)
        return outside + inside

    def params(self):
        return {"half_extents": self.half_extents.tolist(), "center": self.center.tolist()}


class Torus(AnalyticShape):
    """Torus around the z axis: major radius to the tube center, minor tube radius."""

    kind = "torus"

    def __init__(self, major_radius: float, minor_radius: float, center=(0.0, 0.0, 0.0)):
        if minor_radius <= 0 or major_radius <= minor_radius:
            raise ValueError("torus requires major_radius > minor_radius > 0")
        self.major_radius = float(major_radius)
        self.minor_radius = float(minor_radius)
        self.center = np.asarray(center, dtype=np.float64)
        extent = self.major_radius + self.minor_radius + np.abs(self.center).max()
        self._check_inside_domain(extent)

    def _sdf(self, pts):
        p = pts - self.center
        ring = np.hypot(p[:, 0], p[:, 1]) - self.major_radius
        return np.hypot(ring, p[:, 2]) - self.minor_radius

    def params(self):
        return {
            "major_radius": self.major_radius,
            "minor_radius": self.minor_radius,
            "center": self.center.tolist(),
        }


class Capsule(AnalyticShape):
    kind = "capsule"

    def __init__(self, point_a, point_b, radius: float):
        if radius <= 0:
            raise ValueError("capsule radius must be positive")
        self.point_a = np.asarray(point_a, dtype=np.float64)
        self.point_b = np.asarray(point_b, dtype=np.float64)
        self.radius = float(radius)
        extent = max(np.abs(self.point_a).max(), np.abs(self.point_b).max()) + radius
        self._check_inside_domain(extent)

    def _sdf(self, pts):
        ab = self.point_b - self.point_a
        ap = pts - self.point_a
        denom = float(ab @ ab)
        t = np.clip((ap @ ab) / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(pts))
        closest = self.point_a + t[:, None] * ab
        return np.linalg.norm(pts - closest, axis=1) - self.radius

    def params(self):
        return {
            "point_a": self.point_a.tolist(),
            "point_b": self.point_b.tolist(),
            "radius": self.radius,
        }


class SmoothUnion(AnalyticShape):
    """Polynomial smooth minimum of two child shapes.

    The blend is 1-Lipschitz (the gradient is a convex combination of the
    children's gradients) and vanishes on the blended surface, which is all
    the downstream octree pruning relies on.
    """

    kind = "smooth_union_of_two"

    def __init__(self, shape_a: AnalyticShape, shape_b: AnalyticShape, blend: float = 0.1):
        if blend <= 0:
            raise ValueError("blend radius must be positive")
        self.shape_a = shape_a
        self.shape_b = shape_b
        self.blend = float(blend)

    def _sdf(self, pts):
        a = self.shape_a._sdf(pts)
        b = self.shape_b._sdf(pts)
        k = self.blend
        h = np.clip(0.5 + 0.5 * (b - a) / k, 0.0, 1.0)
        return b + (a - b) * h - k * h * (1.0 - h)

    def params(self):
        return {"a": self.shape_a.to_dict(), "b": self.shape_b.to_dict(), "blend": self.blend}


def _fibonacci_directions(n: int, phase: float = 0.0) -> np.ndarray:
    """n near-uniform unit directions (golden-angle spiral)."""
    golden = np.pi * (3.0 - np.sqrt(5.0))
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    ring = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    theta = golden * i + phase
    return np.stack([ring * np.cos(theta), ring * np.sin(theta), z], axis=1)


def add_surface_bumps(
    base: AnalyticShape,
    count: int,
    radius: float,
    phase: float = 0.0,
    blend: float = 0.03,
    inset: float = 0.4,
) -> AnalyticShape:
    """Smooth-union ``count`` spherical bumps onto the base surface.

    Bump centers are found by projecting a deterministic direction fan onto
    the base's zero level set, then insetting by ``inset`` x radius so each
    bump protrudes by a fraction of its radius.  Everything stays an exact
    1-Lipschitz field; bumps whose extent would leave the unit box are
    skipped by the Sphere constructor's own domain check.
    """
    from .samples import _numeric_gradient, project_to_surface

    seeds = 0.6 * _fibonacci_directions(count, phase)
    on_surface = project_to_surface(base.sdf, seeds)
    normals = _numeric_gradient(base.sdf, on_surface)
    normals /= np.maximum(np.linalg.norm(normals, axis=1, keepdims=True), 1e-12)
    shape: AnalyticShape = base
    for p, n in zip(on_surface, normals):
        center = p - inset * radius * n
        shape = SmoothUnion(shape, Sphere(radius, center=center), blend=blend)
    return shape


_KINDS = {cls.kind: cls for cls in (Sphere, Box, Torus, Capsule)}


def shape_from_dict(spec: dict) -> AnalyticShape:
    """Build a shape from its JSON dict form (inverse of ``to_dict``)."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == SmoothUnion.kind:
        return SmoothUnion(
            shape_from_dict(spec.pop("a")),
            shape_from_dict(spec.pop("b")),
            blend=spec.pop("blend", 0.1),
        )
    if kind not in _KINDS:
        raise ValueError(f"unknown shape kind {kind!r}")
    return _KINDS[kind](**spec)


def _with_detail_tiers(base: AnalyticShape, tiers, phase: float) -> AnalyticShape:
    shape = base
    for count, radius in tiers:
        shape = add_surface_bumps(shape, count, radius, phase=phase)
        phase += 1.0
    return shape


def standard_training_shapes() -> list[AnalyticShape]:
    """The 8-shape desk-scale dataset used by the default configs and tests.

    Alongside plain primitives, most shapes carry spherical surface bumps at
    graded radii, giving the dataset genuine geometric detail in each
    frequency band so that successive heads have something real to add.
    """
    coarse, mid, fine = (8, 0.14), (20, 0.09), (40, 0.055)
    return [
        Sphere(0.42),
        _with_detail_tiers(Sphere(0.3), [coarse, mid, fine], phase=1.0),
        _with_detail_tiers(Sphere(0.32), [(7, 0.13), (22, 0.085), (36, 0.055)], phase=2.0),
        Torus(0.32, 0.11),
        _with_detail_tiers(Torus(0.3, 0.09), [(10, 0.11), (26, 0.06)], phase=3.0),
        _with_detail_tiers(
            Capsule((-0.26, -0.04, 0.0), (0.26, 0.04, 0.0), 0.13),
            [(10, 0.1), (24, 0.06)], phase=4.0,
        ),
        _with_detail_tiers(
            SmoothUnion(
                Sphere(0.24, center=(-0.16, 0.0, 0.0)),
                Sphere(0.19, center=(0.19, 0.04, 0.0)),
                blend=0.1,
            ),
            [(14, 0.09), (30, 0.055)], phase=5.0,
        ),
        _with_detail_tiers(Sphere(0.28, center=(0.0, 0.03, 0.0)),
                           [(9, 0.13), (34, 0.06)], phase=6.0),
    ]
