"""Stability quadratic form and the main comparison check for balls around
boundary loops.

The central object is the quadratic form

    Q_R0(f) = sum_faces |grad f|^2 area
            + sum_vertices defect(v) f(v)^2
            - (R0/2) sum_vertices f(v)^2 vertex_area(v)

for piecewise-linear f, which discretizes int |grad f|^2 + kappa f^2
- (R0/2) f^2 dA with curvature lumped at vertices.  A surface that is
stable for ambient lower bound R0 must make Q_R0(f) >= 0 for every f
supported away from the boundary; each checker here either calibrates
that inequality or produces a FAIL certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import gaussian_curvature, loop_length_derivative
from .errors import BadParameter, DomainMismatch
from .geodesics import (DEFAULT_SUBDIVISIONS, ScalarField, SourceSet,
                        distance_field, face_layouts, sublevel_area)
from .mesh import TriMesh, boundary_loops, total_area
from . import report as rp


@dataclass
class TrialFunction:
    """Piecewise-linear test function with the recipe that built it.

    Invariants: 0 <= f <= 1 and f is not identically zero; radial recipes
    are 1/L-Lipschitz by construction (f = max(0, 1 - r/L)).
    """
    field: ScalarField
    recipe: dict = field(default_factory=dict)

    def __post_init__(self):
        v = self.field.values
        if v.min() < -1e-12 or v.max() > 1.0 + 1e-12:
            raise BadParameter("trial function must take values in [0, 1]")
        if v.max() <= 0.0:
            raise BadParameter("trial function is identically zero")

    @property
    def values(self):
        return self.field.values


def radial_trial(mesh: TriMesh, source: SourceSet, L,
                 k=DEFAULT_SUBDIVISIONS, dfield=None) -> TrialFunction:
    """f = max(0, 1 - r/L) with r the distance to ``source``."""
    if L <= 0:
        raise BadParameter("L must be positive")
    if dfield is None:
        dfield = distance_field(mesh, source, k=k)
    vals = np.clip(1.0 - dfield.values / L, 0.0, 1.0)
    return TrialFunction(ScalarField(mesh, vals),
                         {"kind": "radial", "L": float(L)})


def two_sided_trial(mesh: TriMesh, r_field, r_lo, r_hi, ramp) -> TrialFunction:
    """Plateau profile: 0 outside [r_lo - ramp, r_hi + ramp], 1 on
    [r_lo, r_hi], linear in between.  Used by the ball-ratio arguments."""
    r = np.asarray(r_field, float)
    up = np.clip((r - (r_lo - ramp)) / ramp, 0.0, 1.0)
    down = np.clip(((r_hi + ramp) - r) / ramp, 0.0, 1.0)
    return TrialFunction(ScalarField(mesh, np.minimum(up, down)),
                         {"kind": "plateau", "r_lo": float(r_lo),
                          "r_hi": float(r_hi), "ramp": float(ramp)})


def face_gradient_sq(mesh: TriMesh, values):
    """|grad f|^2 per face for the linear interpolant of vertex values."""
    layouts = face_layouts(mesh)
    fv = values[mesh.faces]
    e1 = layouts[:, 1] - layouts[:, 0]
    e2 = layouts[:, 2] - layouts[:, 0]
    d1 = fv[:, 1] - fv[:, 0]
    d2 = fv[:, 2] - fv[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    gx = (d1 * e2[:, 1] - d2 * e1[:, 1]) / det
    gy = (d2 * e1[:, 0] - d1 * e2[:, 0]) / det
    return gx * gx + gy * gy


def dirichlet_energy(mesh: TriMesh, values):
    return float((face_gradient_sq(mesh, values) * mesh.face_areas).sum())


def quadratic_form(mesh: TriMesh, f: TrialFunction, R0=0.0):
    """Q_R0(f); a stable surface gives Q_R0(f) >= 0 for admissible f."""
    if f.field.mesh is not mesh:
        raise DomainMismatch("trial function lives on a different mesh")
    v = f.values
    cf = gaussian_curvature(mesh)
    energy = dirichlet_energy(mesh, v)
    # interior defects only: the turning concentrated at boundary vertices
    # is geodesic curvature of the boundary, not Gaussian curvature
    interior = ~mesh.is_boundary_vertex
    curv = float((cf.vertex_defect * v * v)[interior].sum())
    mass = float((mesh.vertex_areas * v * v).sum())
    return energy + curv - 0.5 * R0 * mass


def default_tolerance(mesh: TriMesh, lhs, rhs, diam=None):
    """First-order scheme: slack resolves to a few mesh lengths."""
    if diam is None:
        diam = math.sqrt(total_area(mesh))
    h = mesh.mean_edge_length() / diam
    return max(1e-8, 3.0 * h * (abs(lhs) + abs(rhs)))


def check_theorem1(mesh: TriMesh, loops, L, k=DEFAULT_SUBDIVISIONS,
                   tol=None) -> rp.CheckReport:
    """Ball-around-boundary comparison.

    For r the distance to the chosen boundary loops (``loops``: loop
    indices, or a SourceSet for the point-source extension), and the
    radial trial f = 1 - r/L, a stable surface satisfies

        Q_0(f) <= 2 l / L + l' - A / L^2

    with l, l' the total length and inward first variation of the chosen
    loops and A the area of the ball of radius L around them.  Equality is
    attained on flat, locus-free regions.  NOT_APPLICABLE when L exceeds
    the distance to the remaining boundary (f would not vanish there).
    """
    meta = {"L": float(L), "k": int(k)}
    if isinstance(loops, SourceSet):
        source = loops
        point_mode = loops.vertices is not None and len(loops.vertices) > 0
        loop_idx = list(loops.loops or [])
    else:
        loop_idx = sorted(int(i) for i in loops)
        source = SourceSet.from_loops(*loop_idx)
        point_mode = False
    dfield = distance_field(mesh, source, k=k)

    blv = mesh.boundary_loops_vertices
    other = [i for i in range(len(blv)) if i not in loop_idx]
    if other:
        reach = min(float(dfield.values[v]) for i in other for v in blv[i])
        if L > reach + 1e-12:
            meta["reach"] = reach
            return rp.make_report("theorem1", 0.0, 0.0, 0.0, meta,
                                  applicable=False)

    if point_mode:
        cf = gaussian_curvature(mesh)
        l = 0.0
        lp = sum(2.0 * math.pi - float(cf.vertex_defect[v])
                 for v in source.vertices)
        meta["mode"] = "point"
    else:
        all_loops = boundary_loops(mesh)
        l = sum(all_loops[i][1] for i in loop_idx)
        lp = sum(loop_length_derivative(mesh, i) for i in loop_idx)
        meta["mode"] = "loops"
    f = radial_trial(mesh, source, L, dfield=dfield)
    lhs = quadratic_form(mesh, f, R0=0.0)
    area = sublevel_area(mesh, dfield.values, L)
    rhs = 2.0 * l / L + lp - area / L ** 2
    meta.update({"l": l, "l_prime": lp, "area": area})
    if tol is None:
        tol = default_tolerance(mesh, lhs, rhs, diam=dfield.max_value())
    return rp.make_report("theorem1", lhs, rhs, tol, meta)


def check_area_upper_bound(mesh: TriMesh, p, L, R0=0.0,
                           k=DEFAULT_SUBDIVISIONS, tol=None) -> rp.CheckReport:
    """A(B(p, L)) <= 2 pi L^2 / (1 + R0~ L^2 / 2) with R0~ = min(R0, 0).

    FAIL certifies that no stable surface with ambient bound R0 looks like
    this ball.  NOT_APPLICABLE outside the guard L^2 R0 / 2 >= -1.
    """
    meta = {"p": int(p), "L": float(L), "R0": float(R0)}
    r0t = min(float(R0), 0.0)
    if 1.0 + 0.5 * r0t * L * L <= 0.0:
        return rp.make_report("area_upper_bound", 0.0, 0.0, 0.0, meta,
                              applicable=False)
    dfield = distance_field(mesh, SourceSet.from_vertex(p), k=k)
    area = sublevel_area(mesh, dfield.values, L)
    rhs = 2.0 * math.pi * L * L / (1.0 + 0.5 * r0t * L * L)
    meta["area"] = area
    if tol is None:
        tol = default_tolerance(mesh, area, rhs, diam=dfield.max_value())
    return rp.make_report("area_upper_bound", area, rhs, tol, meta)


def _rayleigh_minimizer(mesh: TriMesh, R0):
    """Smallest eigenpair of Q_R0 over piecewise-linear functions vanishing
    on the boundary; the strongest linear probe of the form."""
    from .spectral import mass_matrix, stiffness_matrix
    from scipy.sparse.linalg import eigsh

    K = stiffness_matrix(mesh)
    M = mass_matrix(mesh)
    cf = gaussian_curvature(mesh)
    from scipy.sparse import diags
    A = K + diags(cf.vertex_defect - 0.5 * R0 * mesh.vertex_areas)
    interior = np.where(~mesh.is_boundary_vertex)[0]
    if interior.size == 0:
        return None, None
    A = A[np.ix_(interior, interior)].tocsc()
    M_i = M[np.ix_(interior, interior)].tocsc()
    if interior.size <= 2:
        Ad = A.toarray()
        Md = M_i.toarray()
        from scipy.linalg import eigh
        w, vec = eigh(Ad, Md)
        lam, x = w[0], vec[:, 0]
    else:
        v0 = np.ones(interior.size)
        w, vec = eigsh(A, k=1, M=M_i, sigma=None, which="SA", v0=v0,
                       tol=1e-9)
        lam, x = w[0], vec[:, 0]
    full = np.zeros(mesh.n_vertices)
    full[interior] = x / max(abs(x.max()), abs(x.min()))
    return float(lam), full


def stability_probe(mesh: TriMesh, R0=0.0, recipes=(), tol=None,
                    use_rayleigh=True) -> rp.CheckReport:
    """min over trial functions of Q_R0; FAIL certifies instability at R0."""
    values = {}
    for i, f in enumerate(recipes):
        label = f.recipe.get("kind", "trial") + f"_{i}"
        values[label] = quadratic_form(mesh, f, R0)
    if use_rayleigh and mesh.is_boundary_vertex.any():
        lam, vec = _rayleigh_minimizer(mesh, R0)
        if lam is not None:
            vmax = np.abs(vec).max()
            if vmax > 0:
                probe = TrialFunction(ScalarField(mesh, np.abs(vec) / vmax),
                                      {"kind": "rayleigh"})
                values["rayleigh"] = quadratic_form(mesh, probe, R0)
            values["rayleigh_eigenvalue"] = lam
    if not values:
        raise BadParameter("no trial functions supplied")
    qmin = min(values.values())
    meta = {"R0": float(R0), "probes": values}
    if tol is None:
        tol = default_tolerance(mesh, 0.0, qmin)
    return rp.make_report("stability_probe", 0.0, qmin, tol, meta)
