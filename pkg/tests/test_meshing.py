import numpy as np
import pytest

from lodsdf import Box, Sphere, Torus, standard_training_shapes
from lodsdf.meshing import (
    EvalStats,
    MeshingConfig,
    _dense_values,
    extract_mesh,
    extract_mesh_dense,
    marching_cubes,
    refine_mesh,
)


def test_all_positive_corners_empty_mesh():
    mesh = marching_cubes(np.full((2, 2, 2), 1.0), spacing=1.0)
    assert mesh.is_empty()


def test_single_negative_corner_one_triangle():
    vals = np.full((2, 2, 2), 1.0)
    vals[0, 0, 0] = -1.0
    mesh = marching_cubes(vals, spacing=1.0)
    assert mesh.n_triangles == 1


def test_exact_zero_corner_perturbed():
    vals = np.full((2, 2, 2), 1.0)
    vals[0, 0, 0] = 0.0
    mesh = marching_cubes(vals, spacing=1.0)  # corner nudged to +1e-9: outside
    assert mesh.is_empty()


def test_grid_too_small_rejected():
    with pytest.raises(ValueError):
        marching_cubes(np.ones((1, 2, 2)), spacing=1.0)


def test_sphere_vertices_near_radius():
    cfg = MeshingConfig(base_resolution=64, target_resolution=64)
    mesh, _ = extract_mesh_dense(Sphere(0.4).sdf, 64, cfg)
    radii = np.linalg.norm(mesh.vertices, axis=1)
    assert np.abs(radii - 0.4).max() <= cfg.cell_diagonal(64)


def test_marching_cubes_watertight_on_random_fields():
    rng = np.random.default_rng(0)
    for _ in range(5):
        vals = np.full((10, 10, 10), 3.0)
        vals[1:9, 1:9, 1:9] = rng.standard_normal((8, 8, 8))
        mesh = marching_cubes(vals, spacing=0.1)
        assert mesh.is_watertight()


def test_outward_orientation_positive_volume():
    mesh, _ = extract_mesh_dense(Sphere(0.4).sdf, 32)
    a = mesh.vertices[mesh.triangles[:, 0]]
    b = mesh.vertices[mesh.triangles[:, 1]]
    c = mesh.vertices[mesh.triangles[:, 2]]
    volume = np.sum(np.einsum("ij,ij->i", a, np.cross(b, c))) / 6.0
    assert volume == pytest.approx(4 / 3 * np.pi * 0.4**3, rel=0.01)


def test_degenerate_octree_equals_dense():
    cfg = MeshingConfig(base_resolution=32, target_resolution=32)
    mesh_o, _ = extract_mesh(Sphere(0.4).sdf, cfg)
    mesh_d, _ = extract_mesh_dense(Sphere(0.4).sdf, 32, cfg)
    np.testing.assert_array_equal(mesh_o.vertices, mesh_d.vertices)
    np.testing.assert_array_equal(mesh_o.triangles, mesh_d.triangles)


@pytest.mark.parametrize("shape", standard_training_shapes(), ids=lambda s: s.kind)
def test_octree_equals_dense_all_shapes(shape):
    cfg = MeshingConfig(base_resolution=16, target_resolution=64, kappa=3.0)
    mesh_o, stats_o = extract_mesh(shape.sdf, cfg)
    mesh_d, stats_d = extract_mesh_dense(shape.sdf, 64, cfg)
    np.testing.assert_array_equal(mesh_o.vertices, mesh_d.vertices)
    np.testing.assert_array_equal(mesh_o.triangles, mesh_d.triangles)
    assert stats_o.network_evaluations < stats_d.network_evaluations


@pytest.mark.parametrize("kappa", [1.5, np.sqrt(3.0), 3.0])
def test_octree_equals_dense_at_probe_kappas(kappa):
    """Exact SDFs only need min corner |sdf| <= diagonal/2 at surface cells,
    so even kappa = 1.5 preserves dense equality on the analytic oracles."""
    cfg = MeshingConfig(base_resolution=16, target_resolution=64, kappa=kappa)
    mesh_o, stats_o = extract_mesh(Torus(0.32, 0.12).sdf, cfg)
    mesh_d, _ = extract_mesh_dense(Torus(0.32, 0.12).sdf, 64, cfg)
    np.testing.assert_array_equal(mesh_o.vertices, mesh_d.vertices)
    np.testing.assert_array_equal(mesh_o.triangles, mesh_d.triangles)


def test_constant_positive_field_only_base_evals():
    cfg = MeshingConfig(base_resolution=16, target_resolution=64)
    mesh, stats = extract_mesh(lambda pts: np.full(len(pts), 2.0), cfg)
    assert mesh.is_empty()
    assert stats.network_evaluations == 17**3
    assert stats.cells_per_level[0] == 0


def test_octree_deterministic():
    cfg = MeshingConfig(base_resolution=16, target_resolution=64)
    m1, _ = extract_mesh(Box((0.3, 0.25, 0.2)).sdf, cfg)
    m2, _ = extract_mesh(Box((0.3, 0.25, 0.2)).sdf, cfg)
    np.testing.assert_array_equal(m1.vertices, m2.vertices)
    np.testing.assert_array_equal(m1.triangles, m2.triangles)


def test_eval_stats_json():
    stats = EvalStats(network_evaluations=10, cells_per_level=[4, 2])
    assert '"evals": 10' in stats.to_json()


def test_config_validation():
    with pytest.raises(ValueError):
        MeshingConfig(base_resolution=32, target_resolution=96)  # not a power of 2
    with pytest.raises(ValueError):
        MeshingConfig(kappa=0.5)
    with pytest.raises(ValueError):
        MeshingConfig(reuse_threshold=-0.1)


# --- refinement: emulate two network levels with a coarse (perturbed) and a
# --- fine (exact) field of the same sphere


def coarse_field(pts):
    pts = np.asarray(pts)
    wobble = 0.004 * np.sin(6 * pts[:, 0]) * np.cos(5 * pts[:, 1])
    return Sphere(0.4).sdf(pts) + wobble


def test_refine_infinite_tau_equals_fresh():
    cfg = MeshingConfig(base_resolution=64, target_resolution=64)
    cached = _dense_values(coarse_field, 64, cfg)
    mesh_r, stats = refine_mesh(cached, Sphere(0.4).sdf, cfg, tau=np.inf)
    mesh_f, _ = extract_mesh_dense(Sphere(0.4).sdf, 64, cfg)
    np.testing.assert_array_equal(mesh_r.vertices, mesh_f.vertices)
    np.testing.assert_array_equal(mesh_r.triangles, mesh_f.triangles)
    assert stats.reused_values == 0


def test_refine_default_tau_matches_fresh_with_fewer_evals():
    cfg = MeshingConfig(base_resolution=64, target_resolution=64)
    cached = _dense_values(coarse_field, 64, cfg)
    mesh_r, stats = refine_mesh(cached, Sphere(0.4).sdf, cfg)
    mesh_f, _ = extract_mesh_dense(Sphere(0.4).sdf, 64, cfg)
    assert mesh_r.n_vertices == mesh_f.n_vertices
    a = mesh_r.vertices[np.lexsort(mesh_r.vertices.T)]
    b = mesh_f.vertices[np.lexsort(mesh_f.vertices.T)]
    np.testing.assert_allclose(a, b, atol=1e-6)
    assert stats.target_level_evaluations < 65**3
    assert stats.reused_values > 0


def test_refine_requires_dense_cache():
    with pytest.raises(ValueError, match="dense 3D"):
        refine_mesh(np.zeros((4, 4)), Sphere(0.4).sdf, MeshingConfig())
