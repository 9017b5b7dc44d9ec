"""Checks specific to tube-shaped surfaces (annuli S^1 x [-1, 1]):
the three-slope neck inequality, the cross-tube size relation, the
thin-end forbidden-configuration scan, and a flatness certificate.

All of them instantiate the ball comparison with trial functions that
are piecewise linear in the distance across the tube, so a violation on
a mesh certifies that no stable surface (ambient scalar curvature
bounded below by zero) can carry that geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import report as rp
from .curvature import gaussian_curvature, loop_length_derivative
from .errors import BadParameter, NonTubeTopology
from .geodesics import (DEFAULT_SUBDIVISIONS, SourceSet, distance_field,
                        level_length, sublevel_area)
from .mesh import TriMesh, boundary_loops, total_area
from .stability import dirichlet_energy, face_gradient_sq
from .cutlocus import _edge_tent_deviation, _ridge_vertices


def _require_tube(mesh: TriMesh):
    loops = boundary_loops(mesh)
    if len(loops) != 2 or mesh.euler_characteristic() != 0:
        raise NonTubeTopology(
            "expected an annulus: two boundary loops and euler number 0, "
            f"got {len(loops)} loops, chi={mesh.euler_characteristic()}")
    return loops


def locus_distance(mesh: TriMesh, dfield, threshold=0.1):
    """Smallest distance value at which the field's locus is detected;
    infinity when the ball stays locus-free."""
    dev, tstar = _edge_tent_deviation(mesh, dfield)
    r = dfield.values
    best = math.inf
    for e in np.where(dev > threshold)[0]:
        u, v = mesh.edges[e]
        le = mesh.edge_lengths[e]
        best = min(best, (1 - tstar[e]) * r[u] + tstar[e] * r[v])
    ridge = _ridge_vertices(mesh, dfield, math.inf, threshold,
                            set(int(e) for e in np.where(dev > threshold)[0]))
    if ridge.any():
        best = min(best, float(r[ridge].min()))
    return best


@dataclass
class TubeDecomposition:
    """Two nested loops across a tube and the three regions they bound.

    The middle loop sits at distance ``t2`` from boundary loop 0; the
    second loop lies ``L`` further in.  ``L2`` runs back toward boundary
    loop 0 and ``L1`` onward past the second loop.
    """
    mesh: TriMesh
    dfield: object
    t2: float
    L: float
    L1: float
    L2: float
    l1: float = field(init=False)
    l2: float = field(init=False)
    l: float = field(init=False)
    A1: float = field(init=False)
    A: float = field(init=False)
    A2: float = field(init=False)

    def __post_init__(self):
        r = self.dfield.values
        m = self.mesh
        if min(self.L, self.L1, self.L2) <= 0 or self.t2 <= 0:
            raise BadParameter("decomposition lengths must be positive")
        self.l2 = level_length(m, r, self.t2)
        self.l1 = level_length(m, r, self.t2 + self.L)
        self.l = 0.5 * (self.l1 + self.l2)
        a0 = sublevel_area(m, r, self.t2 - self.L2)
        a1 = sublevel_area(m, r, self.t2)
        a2 = sublevel_area(m, r, self.t2 + self.L)
        a3 = sublevel_area(m, r, self.t2 + self.L + self.L1)
        self.A2 = a1 - a0
        self.A = a2 - a1
        self.A1 = a3 - a2


def tube_decomposition(mesh: TriMesh, t2, L, L1=None, L2=None,
                       k=DEFAULT_SUBDIVISIONS) -> TubeDecomposition:
    """Decomposition based at boundary loop 0 of an annulus mesh."""
    _require_tube(mesh)
    dfield = distance_field(mesh, SourceSet.from_loops(0), k=k)
    r = dfield.values
    depth = float(min(r[v] for v in mesh.boundary_loops_vertices[1]))
    if L2 is None:
        L2 = t2
    if L1 is None:
        L1 = depth - t2 - L
    if t2 + L + L1 > depth + 1e-9:
        raise BadParameter(
            f"t2 + L + L1 = {t2 + L + L1} exceeds tube depth {depth}")
    return TubeDecomposition(mesh, dfield, float(t2), float(L),
                             float(L1), float(L2))


def _quadratic_form_raw(mesh: TriMesh, values):
    """Q_0 without the 0..1 range restriction of TrialFunction."""
    cf = gaussian_curvature(mesh)
    interior = ~mesh.is_boundary_vertex
    energy = dirichlet_energy(mesh, values)
    curv = float((cf.vertex_defect * values * values)[interior].sum())
    return energy + curv


def check_p6(mesh: TriMesh, dec: TubeDecomposition, tol=None,
             locus_threshold=0.1) -> rp.CheckReport:
    """Neck inequality: (1 - min(l1,l2)/max(l1,l2))^2 <= 4 (L/L1 + L/L2).

    FAIL certifies that no stable surface (nonnegative ambient scalar
    curvature) realizes the decomposition's lengths.  The metadata also
    carries the three-slope trial function's quadratic form, whose
    negativity is the mechanism behind a failure.
    """
    ld = locus_distance(mesh, dec.dfield, locus_threshold)
    applicable = dec.t2 + dec.L <= ld
    lo, hi = min(dec.l1, dec.l2), max(dec.l1, dec.l2)
    lhs = (1.0 - lo / hi) ** 2 if hi > 0 else 0.0
    rhs = 4.0 * (dec.L / dec.L1 + dec.L / dec.L2)
    if tol is None:
        h = mesh.mean_edge_length() / math.sqrt(total_area(mesh))
        tol = max(1e-9, 5.0 * h * (abs(lhs) + abs(rhs)))

    # three-slope trial: f2 on the near side, ramp to f1 across the
    # middle region, then down to zero over L1
    r = dec.dfield.values
    f1 = 1.0
    f2 = (dec.l1 + dec.l2) / (2.0 * dec.l2)
    t2, L, L1, L2 = dec.t2, dec.L, dec.L1, dec.L2
    vals = np.where(
        r <= t2,
        f2 * np.clip(1.0 - (t2 - r) / L2, 0.0, None),
        np.where(r <= t2 + L,
                 f2 + (f1 - f2) * (r - t2) / L,
                 f1 * np.clip(1.0 - (r - t2 - L) / L1, 0.0, None)))
    q = _quadratic_form_raw(mesh, vals)
    meta = {"l1": dec.l1, "l2": dec.l2, "L": dec.L, "L1": dec.L1,
            "L2": dec.L2, "f2": f2, "three_slope_q": q,
            "locus_distance": ld}
    return rp.make_report("p6_neck", lhs, rhs, tol, meta,
                          applicable=applicable)


def size_relation(mesh: TriMesh, t, k=DEFAULT_SUBDIVISIONS,
                  tol=None, dfield=None) -> rp.CheckReport:
    """Cross-tube size relation at the loop {dist = t} from boundary
    loop 0:

        2 l (1/L1 + 1/L2) >= A1/L1^2 + A2/L2^2

    with L1 = t, L2 the remaining distance to the far boundary loop, and
    A1, A2 the areas swept on each side.  Both sides are dimensionless,
    so the reported slack is invariant under uniform scaling.
    """
    _require_tube(mesh)
    if dfield is None:
        dfield = distance_field(mesh, SourceSet.from_loops(0), k=k)
    r = dfield.values
    depth = float(min(r[v] for v in mesh.boundary_loops_vertices[1]))
    if not 0.0 < t < depth:
        raise BadParameter(f"loop offset {t} outside tube depth {depth}")
    L1 = float(t)
    L2 = depth - L1
    l = level_length(mesh, r, t)
    A1 = sublevel_area(mesh, r, t)
    A2 = sublevel_area(mesh, r, t + L2) - A1
    lhs = A1 / L1 ** 2 + A2 / L2 ** 2
    rhs = 2.0 * l * (1.0 / L1 + 1.0 / L2)
    if tol is None:
        h = mesh.mean_edge_length() / math.sqrt(total_area(mesh))
        tol = max(1e-9, 5.0 * h * (abs(lhs) + abs(rhs)))
    meta = {"l": l, "L1": L1, "L2": L2, "A1": A1, "A2": A2,
            "trend": l * (1.0 / L1 + 1.0 / L2),
            "slack_over_l": (rhs - lhs) / l}
    return rp.make_report("size_relation", lhs, rhs, tol, meta)


def ncfd_scan(family, A0, L0, k=DEFAULT_SUBDIVISIONS,
              rescaled_depth=None):
    """Thin-end scan over a family of tubes.

    Checks the hypotheses of the forbidden-configuration statement
    (thin first loop, bounded separation >= A0 area) per member and
    evaluates the size relation at the proof's intermediate loop: in the
    metric rescaled by 1/l1^2 the loop sits at half the trusted depth.
    A member is flagged when its hypotheses hold and the size relation
    fails there; a genuinely stable family can never be flagged.
    """
    members = []
    lengths = []
    for m in family:
        loops = _require_tube(m)
        lengths.append(loops[0][1])
    shrinking = len(family) >= 2 and lengths[-1] < 0.5 * lengths[0]
    for i, m in enumerate(family):
        l1 = lengths[i]
        dfield = distance_field(m, SourceSet.from_loops(0), k=k)
        r = dfield.values
        d = float(min(r[v] for v in m.boundary_loops_vertices[1]))
        area = sublevel_area(m, r, d)
        hyp = {"l1": l1, "separation": d, "area": area,
               "thin_sequence": bool(shrinking),
               "separation_bounded": bool(d <= L0),
               "area_bounded_below": bool(area >= A0)}
        ok = shrinking and hyp["separation_bounded"] \
            and hyp["area_bounded_below"]
        d_tilde = d / l1 if l1 > 0 else math.inf
        if rescaled_depth is None:
            d_i = min(1.0 / math.sqrt(l1), d_tilde) if l1 > 0 else d_tilde
        else:
            d_i = min(rescaled_depth, d_tilde)
        t = 0.5 * d_i * l1
        cell = m.mean_edge_length()
        t = float(np.clip(t, 1.5 * cell, d - 1.5 * cell))
        ce = size_relation(m, t, k=k, dfield=dfield)
        entry = {"index": i, "hypotheses": hyp, "loop_offset": t,
                 "trend": ce.metadata["trend"],
                 "size_relation": ce.to_dict(),
                 "flagged": bool(ok and ce.verdict == rp.FAIL)}
        if not ok:
            entry["verdict"] = rp.NOT_APPLICABLE
        else:
            entry["verdict"] = rp.FAIL if entry["flagged"] else rp.PASS
        members.append(entry)
    return {"members": members,
            "flagged_indices": [e["index"] for e in members if e["flagged"]],
            "A0": float(A0), "L0": float(L0)}


def flatness_certificate(mesh: TriMesh, tolerance,
                         k=DEFAULT_SUBDIVISIONS, n_levels=16,
                         core=(0.25, 0.75)) -> rp.CheckReport:
    """Constancy of cross-loop lengths and curvature over a core
    sub-tube.

    A complete stable tube under nonnegative ambient scalar curvature is
    flat with parallel geodesic loops, so a mesh proxying one must have
    level-loop lengths constant in the crossing distance and vanishing
    curvature.  Reports the worst relative length drift and the largest
    pointwise curvature; PASS when both are below ``tolerance``.
    """
    _require_tube(mesh)
    dfield = distance_field(mesh, SourceSet.from_loops(0), k=k)
    r = dfield.values
    depth = float(min(r[v] for v in mesh.boundary_loops_vertices[1]))
    lo, hi = core[0] * depth, core[1] * depth
    ts = np.linspace(lo, hi, n_levels)
    ls = np.array([level_length(mesh, r, t) for t in ts])
    drift = float(np.abs(ls - ls[0]).max() / max(ls[0], 1e-300))
    cf = gaussian_curvature(mesh)
    interior = ~mesh.is_boundary_vertex
    core_v = interior & (r >= lo) & (r <= hi)
    dens = np.zeros(mesh.n_vertices)
    dens[core_v] = cf.vertex_defect[core_v] / mesh.vertex_areas[core_v]
    max_curv = float(np.abs(dens).max())
    lhs = max(drift, max_curv * total_area(mesh) / (2.0 * math.pi))
    meta = {"length_drift": drift, "max_curvature": max_curv,
            "levels": [float(t) for t in ts],
            "lengths": [float(x) for x in ls]}
    return rp.make_report("flatness", lhs, float(tolerance), 0.0, meta)
