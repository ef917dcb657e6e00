import numpy as np
import pytest

from lodsdf import Box, Capsule, SmoothUnion, Sphere, Torus, shape_from_dict
from lodsdf.shapes import standard_training_shapes


def test_sphere_surface_point():
    assert Sphere(0.4).sdf((0.4, 0.0, 0.0)) == pytest.approx(0.0, abs=1e-15)


def test_sphere_center():
    assert Sphere(0.4).sdf((0.0, 0.0, 0.0)) == pytest.approx(-0.4)


def test_box_axis_exterior():
    assert Box((0.3, 0.3, 0.3)).sdf((0.5, 0.0, 0.0)) == pytest.approx(0.2)


def test_box_inside_negative():
    assert Box((0.3, 0.3, 0.3)).sdf((0.0, 0.0, 0.0)) == pytest.approx(-0.3)


def test_torus_on_ring():
    t = Torus(0.3, 0.1)
    assert t.sdf((0.3, 0.0, 0.1)) == pytest.approx(0.0, abs=1e-15)
    assert t.sdf((0.3, 0.0, 0.0)) == pytest.approx(-0.1)


def test_capsule_endpoints():
    c = Capsule((-0.2, 0.0, 0.0), (0.2, 0.0, 0.0), 0.1)
    assert c.sdf((0.3, 0.0, 0.0)) == pytest.approx(0.0, abs=1e-15)
    assert c.sdf((0.0, 0.0, 0.0)) == pytest.approx(-0.1)


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        Sphere(-0.1)
    with pytest.raises(ValueError):
        Sphere(0.6)  # outside the unit box
    with pytest.raises(ValueError):
        Box((0.1, -0.1, 0.1))
    with pytest.raises(ValueError):
        Torus(0.1, 0.2)  # tube fatter than the ring
    with pytest.raises(ValueError):
        Capsule((0, 0, 0), (0.1, 0, 0), -1.0)


@pytest.mark.parametrize("shape", standard_training_shapes(),
                         ids=lambda s: s.kind)
def test_lipschitz_on_random_pairs(shape):
    """|sdf(x) - sdf(y)| <= ||x - y|| on 10k random pairs."""
    rng = np.random.default_rng(0)
    a = rng.uniform(-0.6, 0.6, (10000, 3))
    b = rng.uniform(-0.6, 0.6, (10000, 3))
    lhs = np.abs(shape.sdf(a) - shape.sdf(b))
    rhs = np.linalg.norm(a - b, axis=1)
    assert np.all(lhs <= rhs + 1e-12)


@pytest.mark.parametrize("shape", standard_training_shapes(),
                         ids=lambda s: s.kind)
def test_fits_inside_domain(shape):
    """Field is positive on the domain boundary: shape inside [-0.5, 0.5]^3."""
    rng = np.random.default_rng(1)
    pts = rng.uniform(-0.5, 0.5, (2000, 3))
    face = rng.integers(0, 3, 2000)
    sign = rng.choice([-0.5, 0.5], 2000)
    pts[np.arange(2000), face] = sign
    assert np.all(shape.sdf(pts) >= 0)


def test_dict_round_trip():
    for shape in standard_training_shapes():
        clone = shape_from_dict(shape.to_dict())
        pts = np.random.default_rng(2).uniform(-0.5, 0.5, (100, 3))
        np.testing.assert_array_equal(shape.sdf(pts), clone.sdf(pts))


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="unknown shape kind"):
        shape_from_dict({"kind": "cone", "radius": 0.3})


def test_smooth_union_blends():
    u = SmoothUnion(Sphere(0.2, center=(-0.15, 0, 0)), Sphere(0.2, center=(0.15, 0, 0)), 0.1)
    # between the spheres the blend is fuller than the hard union
    hard = min(u.shape_a.sdf((0.0, 0.18, 0.0)), u.shape_b.sdf((0.0, 0.18, 0.0)))
    assert u.sdf((0.0, 0.18, 0.0)) <= hard
