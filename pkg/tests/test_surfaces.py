import math

import numpy as np
import pytest

from stablesurf import surfaces
from stablesurf.errors import BadParameter
from stablesurf.mesh import boundary_loops, total_area
from stablesurf.surfaces import RevolutionProfile, generate

KINDS_CLOSED = ["sphere", "flat_torus", "dumbbell", "capsule"]
KINDS_OPEN = ["plane_disk", "annulus", "rectangle", "flat_cylinder",
              "yang_tube"]


@pytest.mark.parametrize("kind", KINDS_CLOSED)
def test_closed_kinds(kind):
    m = generate(kind, 3).mesh
    assert m.is_closed
    assert m.is_connected()


def _gen3(kind):
    # the strongly warped tube needs more angular columns at level 3
    kw = {"eps": 0.1, "n_theta": 32} if kind == "yang_tube" else {}
    return generate(kind, 3, **kw)


@pytest.mark.parametrize("kind", KINDS_OPEN)
def test_open_kinds(kind):
    m = _gen3(kind).mesh
    assert not m.is_closed
    assert m.is_connected()


@pytest.mark.parametrize("kind,chi", [
    ("sphere", 2), ("dumbbell", 2), ("capsule", 2),
    ("flat_torus", 0), ("flat_cylinder", 0), ("annulus", 0),
    ("yang_tube", 0), ("plane_disk", 1), ("rectangle", 1)])
def test_euler_characteristics(kind, chi):
    assert _gen3(kind).mesh.euler_characteristic() == chi


def test_area_oracles_converge():
    # areas must approach the analytic oracle as resolution grows
    for kind in ("plane_disk", "sphere", "annulus"):
        errs = []
        for lvl in (3, 4):
            g = generate(kind, lvl)
            errs.append(abs(total_area(g.mesh) - g.oracles["area"])
                        / g.oracles["area"])
        assert errs[1] < errs[0]
        assert errs[1] < 0.02


def test_flat_surfaces_exact_area():
    for kind, kw in (("rectangle", {"width": 2.0, "height": 1.0}),
                     ("flat_cylinder", {}), ("flat_torus", {})):
        g = generate(kind, 4, **kw)
        assert total_area(g.mesh) == pytest.approx(g.oracles["area"],
                                                   rel=1e-12)


def test_flat_torus_zero_defect():
    m = generate("flat_torus", 4, a=1.0, b=2.0).mesh
    assert np.allclose(m.angle_sum(), 2 * math.pi, atol=1e-10)


def test_flat_cylinder_loops():
    g = generate("flat_cylinder", 4)
    loops = boundary_loops(g.mesh)
    assert len(loops) == 2
    for _verts, length in loops:
        assert length == pytest.approx(g.oracles["loop_length"], rel=1e-12)


def test_annulus_loop_lengths():
    g = generate("annulus", 5, r_in=1.0, r_out=2.0)
    lengths = sorted(l for _v, l in boundary_loops(g.mesh))
    assert lengths[0] == pytest.approx(g.oracles["inner_length"], rel=2e-3)
    assert lengths[1] == pytest.approx(g.oracles["outer_length"], rel=2e-3)


def test_yang_tube_loop_lengths():
    eps = 0.1
    g = generate("yang_tube", 5, eps=eps)
    lengths = sorted(l for _v, l in boundary_loops(g.mesh))
    assert lengths[0] == pytest.approx(2 * math.pi * eps ** 2, rel=2e-2)
    assert lengths[1] == pytest.approx(2 * math.pi * (eps + 1) ** 2, rel=2e-2)


def test_revolution_requires_profile():
    with pytest.raises(BadParameter):
        generate("revolution", 3)


def test_revolution_cone_area():
    # phi(r) = r/2 over [0, 1]: lateral cone, area = integral 2*pi*phi dr
    prof = RevolutionProfile(lambda r: 0.5 * r, 0.0, 1.0, cap_min=True)
    g = generate("revolution", 4, profile=prof)
    assert total_area(g.mesh) == pytest.approx(g.oracles["area"], rel=1e-2)
    assert g.oracles["area"] == pytest.approx(math.pi * 0.5, rel=1e-6)


def test_unknown_kind():
    with pytest.raises(BadParameter):
        generate("mobius", 3)


def test_bad_params():
    with pytest.raises(BadParameter):
        generate("annulus", 3, r_in=2.0, r_out=1.0)
    with pytest.raises(BadParameter):
        generate("yang_tube", 3, eps=0.0)
    with pytest.raises(BadParameter):
        generate("dumbbell", 3, neck_width=0.0)


def test_dumbbell_neck_is_thin():
    g = generate("dumbbell", 4, neck_width=0.05)
    prof = g.profile
    mid = 0.5 * (prof.r_min + prof.r_max)
    assert prof.phi(mid) < 0.06
    assert prof.phi(prof.r_max * 0.25) > 0.5


def test_capsule_diameter_oracle():
    g = generate("capsule", 3, length=4.0, radius=1.0)
    assert g.oracles["diameter"] == pytest.approx(4.0 + math.pi)


def test_resolution_refines():
    a = generate("sphere", 3).mesh
    b = generate("sphere", 4).mesh
    assert b.n_faces == 4 * a.n_faces
    assert b.mean_edge_length() < a.mean_edge_length()
