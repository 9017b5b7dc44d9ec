import math

import numpy as np
import pytest

from stablesurf import surfaces
from stablesurf.curvature import (boundary_loop_curve, gauss_bonnet_residual,
                                  gaussian_curvature, geodesic_curvature,
                                  loop_length_derivative)
from stablesurf.geodesics import (SourceSet, distance_field,
                                  extract_level_polylines)
from stablesurf.mesh import total_area


@pytest.mark.parametrize("kind,kw", [
    ("sphere", {}), ("plane_disk", {}), ("annulus", {}),
    ("flat_cylinder", {}), ("flat_torus", {}), ("capsule", {}),
    ("dumbbell", {})])
def test_gauss_bonnet(kind, kw):
    m = surfaces.generate(kind, 3, **kw).mesh
    assert abs(gauss_bonnet_residual(m)) < 1e-9


def test_flat_meshes_zero_defect(flat_cylinder, square_torus):
    for m in (flat_cylinder, square_torus):
        cf = gaussian_curvature(m)
        interior = ~m.is_boundary_vertex
        assert np.allclose(cf.vertex_defect[interior], 0.0, atol=1e-10)


def test_sphere_total_curvature(unit_sphere):
    cf = gaussian_curvature(unit_sphere)
    assert cf.total_interior_defect() == pytest.approx(4 * math.pi)
    # pointwise curvature of the unit sphere is 1
    assert np.median(cf.pointwise) == pytest.approx(1.0, rel=0.05)


def test_sphere_curvature_scaling(unit_sphere):
    m2 = unit_sphere.scaled(2.0)
    cf = gaussian_curvature(m2)
    # K = 1/R^2 = 1/4, total still 4*pi
    assert cf.total_interior_defect() == pytest.approx(4 * math.pi)
    assert np.median(cf.pointwise) == pytest.approx(0.25, rel=0.05)


def test_loop_length_derivative_annulus():
    # pushing the inner circle (radius 1) outward: l' = 2*pi; pushing the
    # outer circle (radius 2) inward: l' = -2*pi
    m = surfaces.generate("annulus", 5, r_in=1.0, r_out=2.0).mesh
    lders = sorted(loop_length_derivative(m, i) for i in range(2))
    assert lders[0] == pytest.approx(-2 * math.pi, rel=0.01)
    assert lders[1] == pytest.approx(2 * math.pi, rel=0.01)


def test_loop_length_derivative_cylinder(flat_cylinder):
    # straight boundary circles of a flat cylinder are geodesics: l' = 0
    for i in range(2):
        assert loop_length_derivative(flat_cylinder, i) == pytest.approx(
            0.0, abs=1e-9)


def test_geodesic_curvature_level_circle():
    # distance-1.5 circle on the plane has geodesic curvature 1/1.5 toward
    # the origin side
    m = surfaces.generate("plane_disk", 5, radius=2.0).mesh
    center = int(np.argmin(np.abs(m.positions[:, :2]).sum(axis=1)))
    df = distance_field(m, SourceSet.from_vertex(center), k=3)
    polys = extract_level_polylines(m, df.values, 1.5)
    assert len(polys) == 1
    kappa, duals, turning = geodesic_curvature(m, polys[0], side="left")
    # total turning of a full circle is 2*pi regardless of radius
    assert abs(float(turning.sum())) == pytest.approx(2 * math.pi, rel=0.05)
    assert float(duals.sum()) == pytest.approx(2 * math.pi * 1.5, rel=0.05)


def test_boundary_curve_total_turning(plane_disk):
    curve = boundary_loop_curve(plane_disk, 0)
    _k, _d, turning = geodesic_curvature(plane_disk, curve, side="left",
                                         closed=True)
    # Gauss-Bonnet on the flat disk: boundary turning = 2*pi*chi = 2*pi
    assert float(turning.sum()) == pytest.approx(-2 * math.pi, rel=1e-6) or \
        float(turning.sum()) == pytest.approx(2 * math.pi, rel=1e-6)


def test_curvature_area_weighting(unit_sphere):
    cf = gaussian_curvature(unit_sphere)
    assert cf.vertex_area.sum() == pytest.approx(total_area(unit_sphere))
