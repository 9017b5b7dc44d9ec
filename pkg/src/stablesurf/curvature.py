"""Discrete Gaussian curvature, geodesic curvature, first variation of length.

Curvature is concentrated at vertices as angle defects; curves carry their
curvature as turning angles, measured intrinsically by unfolding the faces
along the curve.  Sign convention: kappa_g > 0 when the curve turns toward
the chosen inward side, and the first variation of length under inward
displacement is l' = -integral of kappa_g ds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OpenCurve, SelfIntersectingCurve
from .geodesics import CurvePoint, face_layouts
from .mesh import TriMesh


@dataclass
class CurvatureField:
    mesh: TriMesh
    vertex_defect: np.ndarray    # 2*pi - angle sum (interior), pi - angle sum (boundary)
    vertex_area: np.ndarray

    @property
    def pointwise(self):
        return self.vertex_defect / self.vertex_area

    def total_interior_defect(self):
        return float(self.vertex_defect[~self.mesh.is_boundary_vertex].sum())

    def total_boundary_turning(self):
        return float(self.vertex_defect[self.mesh.is_boundary_vertex].sum())


def gaussian_curvature(mesh: TriMesh) -> CurvatureField:
    """Angle-defect curvature with barycentric vertex areas."""
    s = mesh.angle_sum()
    defect = np.where(mesh.is_boundary_vertex, math.pi - s, 2 * math.pi - s)
    return CurvatureField(mesh, defect, mesh.vertex_areas.copy())


def gauss_bonnet_residual(mesh: TriMesh):
    """Sum of defects and boundary turning minus 2*pi*chi (should vanish)."""
    cf = gaussian_curvature(mesh)
    return (cf.total_interior_defect() + cf.total_boundary_turning()
            - 2 * math.pi * mesh.euler_characteristic())


# -- vertex stars -------------------------------------------------------------

def vertex_star(mesh: TriMesh, v):
    """Neighbors of v in counterclockwise order with the face angles between
    them: (neighbors, wedge_angles) where wedge_angles[i] is the angle of the
    face between neighbors[i] and neighbors[i+1].

    For boundary vertices the star starts and ends at the two boundary
    neighbors; for interior vertices the ordering is cyclic.
    """
    succ = {}     # ccw: in face (v, a, b) at corner j, edge v->b follows v->a
    angles = {}
    for f in _incident_faces(mesh, v):
        vs = mesh.faces[f]
        j = int(np.where(vs == v)[0][0])
        a = int(vs[(j + 1) % 3])
        b = int(vs[(j + 2) % 3])
        succ[a] = b
        angles[a] = float(mesh.corner_angles[f, j])
    if not succ:
        return [], []
    starts = set(succ) - set(succ.values())
    start = min(starts) if starts else min(succ)
    order = [start]
    while True:
        nxt = succ.get(order[-1])
        if nxt is None or nxt == start:
            break
        order.append(nxt)
    wedges = [angles[u] for u in order if u in angles]
    if not starts:                      # interior vertex: cyclic
        return order, wedges
    return order + [succ[order[-1]]], wedges


def _incident_faces(mesh: TriMesh, v):
    faces = set()
    for e in range(mesh.n_edges):
        if mesh.edges[e, 0] == v or mesh.edges[e, 1] == v:
            faces.update(mesh.edge_faces[e])
    return sorted(faces)


class _StarIndex:
    """Caches incident faces per vertex for repeated star queries."""

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        self.incident = [[] for _ in range(mesh.n_vertices)]
        for f in range(mesh.n_faces):
            for v in mesh.faces[f]:
                self.incident[int(v)].append(f)

    def left_wedge(self, v_prev, v, v_next):
        """Interior angle at v on the left of the path v_prev -> v -> v_next."""
        mesh = self.mesh
        succ, angles = {}, {}
        for f in self.incident[v]:
            vs = mesh.faces[f]
            j = int(np.where(vs == v)[0][0])
            a = int(vs[(j + 1) % 3])
            b = int(vs[(j + 2) % 3])
            succ[a] = b
            angles[a] = float(mesh.corner_angles[f, j])
        # walk ccw from the outgoing edge to the incoming edge
        total = 0.0
        cur = v_next
        for _ in range(len(succ) + 1):
            if cur == v_prev:
                return total
            if cur not in angles:
                break
            total += angles[cur]
            cur = succ[cur]
        raise SelfIntersectingCurve(
            f"path through vertex {v} does not separate its star")


# -- geodesic curvature -------------------------------------------------------

def _unfold_next(mesh, layouts, f_from, e_shared, f_to):
    """Rigid map (R, t) taking face f_to's layout into f_from's plane so
    that the shared edge coincides and the faces lie on opposite sides."""
    def edge_coords(f, e):
        j = int(np.where(mesh.face_edges[f] == e)[0][0])
        a = layouts[f, j]
        b = layouts[f, (j + 1) % 3]
        va = int(mesh.faces[f, j])
        return (a, b) if va == mesh.edges[e, 0] else (b, a)

    a1, b1 = edge_coords(f_from, e_shared)
    a2, b2 = edge_coords(f_to, e_shared)
    d1 = b1 - a1
    d2 = b2 - a2
    n1 = d1 / np.linalg.norm(d1)
    n2 = d2 / np.linalg.norm(d2)
    # rotation mapping n2 to n1; consistently oriented layouts already put
    # the two faces on opposite sides of the matched edge
    c = n2[0] * n1[0] + n2[1] * n1[1]
    s = n2[0] * n1[1] - n2[1] * n1[0]
    R = np.array([[c, -s], [s, c]])

    def apply(p):
        return a1 + R @ (p - a2)

    return apply


def _point_in_face(mesh, layouts, f, pt: CurvePoint):
    if pt.kind == "vertex":
        j = int(np.where(mesh.faces[f] == pt.index)[0][0])
        return layouts[f, j]
    e = pt.index
    j = int(np.where(mesh.face_edges[f] == e)[0][0])
    a = layouts[f, j]
    b = layouts[f, (j + 1) % 3]
    s = pt.s if int(mesh.faces[f, j]) == mesh.edges[e, 0] else 1.0 - pt.s
    return a + s * (b - a)


def _edge_point_turning(mesh, layouts, prev_pt, pt, next_pt):
    """Signed (ccw positive) turning angle at an edge point of a polyline."""
    e = pt.index
    f_candidates = mesh.edge_faces[e]

    def face_containing(p):
        for f in f_candidates:
            if p.kind == "vertex" and p.index in mesh.faces[f]:
                return f
            if p.kind == "edge" and p.index in mesh.face_edges[f]:
                return f
        return None

    f_in = face_containing(prev_pt)
    f_out = face_containing(next_pt)
    if f_in is None or f_out is None:
        raise OpenCurve("consecutive polyline points do not share a face")
    q = _point_in_face(mesh, layouts, f_in, pt)
    p_prev = _point_in_face(mesh, layouts, f_in, prev_pt)
    if f_out == f_in:
        p_next = _point_in_face(mesh, layouts, f_in, next_pt)
    else:
        unfold = _unfold_next(mesh, layouts, f_in, e, f_out)
        p_next = unfold(_point_in_face(mesh, layouts, f_out, next_pt))
    u = q - p_prev
    w = p_next - q
    return math.atan2(u[0] * w[1] - u[1] * w[0], u[0] * w[0] + u[1] * w[1])


def curve_segment_lengths(mesh: TriMesh, curve):
    layouts = face_layouts(mesh)
    out = []
    for a, b in zip(curve[:-1], curve[1:]):
        if a.kind == "vertex" and b.kind == "vertex":
            out.append(float(mesh.edge_length(a.index, b.index)))
        else:
            # both points lie in a common face
            f = _common_face(mesh, a, b)
            pa = _point_in_face(mesh, layouts, f, a)
            pb = _point_in_face(mesh, layouts, f, b)
            out.append(float(np.hypot(*(pa - pb))))
    return np.array(out)


def _common_face(mesh, a, b):
    def faces_of(p):
        if p.kind == "vertex":
            return {f for f in range(mesh.n_faces) if p.index in mesh.faces[f]}
        return set(mesh.edge_faces[p.index])

    common = faces_of(a) & faces_of(b)
    if not common:
        raise OpenCurve("polyline points do not share a face")
    return min(common)


def geodesic_curvature(mesh: TriMesh, curve, side="left", closed=None,
                       star_index=None):
    """Per-interior-point geodesic curvature of a polyline.

    ``curve`` is a list of CurvePoint; a closed curve repeats its first
    point at the end (or pass closed=True for vertex cycles).  Returns
    (kappa_g, ds_dual, turning): turning angles are signed toward ``side``.
    """
    if closed is None:
        closed = len(curve) > 2 and _same_point(curve[0], curve[-1])
    pts = curve[:-1] if (closed and _same_point(curve[0], curve[-1])) else list(curve)
    n = len(pts)
    seq = pts + pts[:2] if closed else pts
    lens = curve_segment_lengths(mesh, seq if closed else pts)
    layouts = face_layouts(mesh)
    if star_index is None and any(p.kind == "vertex" for p in pts):
        star_index = _StarIndex(mesh)

    turnings, duals, idx = [], [], []
    rng = range(n) if closed else range(1, n - 1)
    for i in rng:
        prev_pt = pts[(i - 1) % n] if closed else pts[i - 1]
        pt = pts[i]
        next_pt = pts[(i + 1) % n] if closed else pts[i + 1]
        if pt.kind == "vertex":
            wedge = star_index.left_wedge(prev_pt.index, pt.index, next_pt.index)
            turn = math.pi - wedge          # ccw-positive (left) turning
        else:
            turn = _edge_point_turning(mesh, layouts, prev_pt, pt, next_pt)
        if side == "right":
            turn = -turn
        l_in = lens[(i - 1) % len(lens)] if closed else lens[i - 1]
        l_out = lens[i % len(lens)] if closed else lens[i]
        turnings.append(turn)
        duals.append(0.5 * (l_in + l_out))
        idx.append(i)
    turnings = np.array(turnings)
    duals = np.array(duals)
    return turnings / duals, duals, turnings


def _same_point(a: CurvePoint, b: CurvePoint):
    return a.kind == b.kind and a.index == b.index and abs(a.s - b.s) < 1e-12


def boundary_length_derivative(mesh: TriMesh, curve, side="left"):
    """First variation l' of the length of a closed curve displaced toward
    the inward side: l' = -sum of inward turning angles."""
    if not (_same_point(curve[0], curve[-1]) or curve_is_cycle(mesh, curve)):
        raise OpenCurve("boundary_length_derivative needs a closed curve")
    _, _, turning = geodesic_curvature(mesh, curve, side=side, closed=True)
    return -float(turning.sum())


def curve_is_cycle(mesh, curve):
    return len(curve) > 2 and _same_point(curve[0], curve[-1])


def boundary_loop_curve(mesh: TriMesh, loop_index):
    """Boundary loop as a closed CurvePoint cycle (first point repeated)."""
    loop = mesh.boundary_loops_vertices[loop_index]
    pts = [CurvePoint("vertex", v) for v in loop]
    return pts + [pts[0]]


def loop_length_derivative(mesh: TriMesh, loop_index):
    """l' of a boundary loop displaced into the surface (which lies to the
    left of the stored traversal)."""
    return boundary_length_derivative(mesh, boundary_loop_curve(mesh, loop_index),
                                      side="left")
