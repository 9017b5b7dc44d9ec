import math

import numpy as np
import pytest

from stablesurf import surfaces
from stablesurf.errors import NotClosed
from stablesurf.report import FAIL, NOT_APPLICABLE, PASS
from stablesurf.spectral import (check_p5, cheeger_sweep, cotan_weights,
                                 lambda1, mass_matrix, stiffness_matrix)


def test_stiffness_matrix_annihilates_constants(unit_sphere):
    K = stiffness_matrix(unit_sphere)
    ones = np.ones(unit_sphere.n_vertices)
    assert np.abs(K @ ones).max() < 1e-10


def test_mass_matrix_total(unit_sphere):
    from stablesurf.mesh import total_area
    M = mass_matrix(unit_sphere)
    assert M.diagonal().sum() == pytest.approx(total_area(unit_sphere))


def test_lambda1_sphere(unit_sphere):
    # first nonzero eigenvalue of the unit sphere is exactly 2
    spec = lambda1(unit_sphere, k=3)
    assert spec.lambda1 == pytest.approx(2.0, rel=0.02)
    assert spec.diameter == pytest.approx(math.pi, rel=0.03)


def test_lambda1_scaling(unit_sphere):
    spec1 = lambda1(unit_sphere, k=2)
    spec2 = lambda1(unit_sphere.scaled(2.0), k=2)
    # lambda scales like 1/s^2, the product lambda*diam^2 is invariant
    assert spec2.lambda1 == pytest.approx(spec1.lambda1 / 4.0, rel=1e-6)
    assert spec2.product == pytest.approx(spec1.product, rel=1e-6)


def test_lambda1_torus():
    g = surfaces.generate("flat_torus", 4, a=1.0, b=1.0)
    spec = lambda1(g.mesh, k=2)
    assert spec.lambda1 == pytest.approx(g.oracles["lambda1"], rel=0.02)


def test_lambda1_requires_closed(flat_annulus):
    with pytest.raises(NotClosed):
        lambda1(flat_annulus)


def test_eigenfield_orthogonal_to_constants(unit_sphere):
    spec = lambda1(unit_sphere, k=2)
    v = spec.eigenfield.values
    assert abs((unit_sphere.vertex_areas * v).sum()) < 1e-8
    assert np.abs(v).max() == pytest.approx(1.0)


def test_cheeger_sweep_sphere(unit_sphere):
    # hemispherical cut: length 2 pi, each side 2 pi, ratio 1
    xi = cheeger_sweep(unit_sphere, seeds=(0,), k=2)
    assert 0.9 < xi < 1.3
    # proof-chain lower bound: xi >= 1/(2 diam)
    assert xi >= 1.0 / (2 * math.pi) - 1e-9


def test_p5_sphere_passes(unit_sphere):
    rep = check_p5(unit_sphere, k=2)
    assert rep.verdict == PASS
    assert rep.lhs == pytest.approx(1.0 / 8.0)
    assert rep.rhs == pytest.approx(2 * math.pi ** 2, rel=0.05)


def test_p5_wrong_topology_not_applicable():
    m = surfaces.generate("flat_torus", 4).mesh
    rep = check_p5(m, k=2)
    assert rep.verdict == NOT_APPLICABLE


def bottleneck_profile(w=0.002, neck=2.0, taper=1.5):
    """Two unit bulbs joined by a long hair-thin tube of radius w."""
    cap = math.pi / 2
    span = 2 * (cap + taper) + neck

    def phi(r):
        r = min(r, span - r)
        if r < cap:
            return max(math.sin(r), 1e-9)
        if r < cap + taper:
            return 1.0 + (w - 1.0) * (r - cap) / taper
        return w

    return surfaces.RevolutionProfile(phi, 0.0, span, cap_min=True,
                                      cap_max=True)


def test_p5_bottleneck_body_fails():
    # sphere-topology body with a long hair-thin neck: the neck cut has
    # tiny length against O(1) bulb areas, so lambda1*diam^2 drops below
    # 1/8 even though the diameter grows
    m = surfaces.generate("revolution", 6, profile=bottleneck_profile(),
                          n_theta=8).mesh
    assert m.euler_characteristic() == 2
    rep = check_p5(m, k=2)
    assert rep.verdict == FAIL
    assert rep.rhs < rep.lhs


def test_cotan_weights_delaunay_flat():
    m = surfaces.generate("rectangle", 3).mesh
    # right-triangle grid: no obtuse angles, all weights nonnegative
    assert (cotan_weights(m) >= -1e-12).all()
