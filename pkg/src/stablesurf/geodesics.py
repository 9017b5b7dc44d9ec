"""Distance fields, metric balls, level sets, radii, complement components.

Distances are shortest paths on an intrinsically subdivided graph: every
mesh edge carries ``k`` extra nodes and all node pairs on the boundary of a
common face are joined by straight segments in the face's isometric planar
layout.  The scheme is exactly 1-Lipschitz on the graph and converges to
the intrinsic distance as the mesh and ``k`` are refined.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import EmptyRegion, EmptySource, NegativeRadius
from .mesh import TriMesh, corner_angle

DEFAULT_SUBDIVISIONS = 2

_graph_cache = weakref.WeakKeyDictionary()


@dataclass
class ScalarField:
    """Per-vertex real values with linear interpolation over faces."""
    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_vertices,):
            raise ValueError("one value per vertex required")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite field values")


def face_layouts(mesh: TriMesh) -> np.ndarray:
    """(F, 3, 2) isometric planar coordinates of every face (vectorized)."""
    L = mesh.edge_lengths[mesh.face_edges]
    l01, l12, l20 = L[:, 0], L[:, 1], L[:, 2]
    ang0 = corner_angle(l01, l20, l12)
    out = np.zeros((mesh.n_faces, 3, 2))
    out[:, 1, 0] = l01
    out[:, 2, 0] = l20 * np.cos(ang0)
    out[:, 2, 1] = l20 * np.sin(ang0)
    return out


class SubdividedGraph:
    """Edge-subdivided graph over a mesh, with intra-face chords."""

    def __init__(self, mesh: TriMesh, k: int = DEFAULT_SUBDIVISIONS):
        self.mesh = mesh
        self.k = int(k)
        nv, ne, nf = mesh.n_vertices, mesh.n_edges, mesh.n_faces
        self.n_nodes = nv + self.k * ne
        layouts = face_layouts(mesh)
        m = 3 + 3 * self.k

        node_ids = np.empty((nf, m), dtype=np.int64)
        node_pos = np.empty((nf, m, 2))
        node_ids[:, :3] = mesh.faces
        node_pos[:, :3, :] = layouts
        if self.k:
            s = (np.arange(self.k) + 1.0) / (self.k + 1.0)
            for j in range(3):
                e = mesh.face_edges[:, j]
                fwd = mesh.edges[e, 0] == mesh.faces[:, j]
                sj = np.where(fwd[:, None], s[None, :], 1.0 - s[None, :])
                a = layouts[:, j, :]
                b = layouts[:, (j + 1) % 3, :]
                cols = slice(3 + j * self.k, 3 + (j + 1) * self.k)
                node_ids[:, cols] = nv + e[:, None] * self.k + np.arange(self.k)[None, :]
                node_pos[:, cols, :] = a[:, None, :] + sj[:, :, None] * (b - a)[:, None, :]

        ii, jj = np.triu_indices(m, 1)
        src = node_ids[:, ii].ravel()
        dst = node_ids[:, jj].ravel()
        d = node_pos[:, ii, :] - node_pos[:, jj, :]
        w = np.sqrt((d * d).sum(axis=2)).ravel()
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        key = lo * self.n_nodes + hi
        _, first = np.unique(key, return_index=True)
        lo, hi, w = lo[first], hi[first], w[first]
        rows = np.concatenate([lo, hi])
        cols_ = np.concatenate([hi, lo])
        data = np.concatenate([w, w])
        self.matrix = csr_matrix((data, (rows, cols_)),
                                 shape=(self.n_nodes, self.n_nodes))

    def edge_nodes(self, e):
        """Graph node ids of the k interior nodes of mesh edge ``e``."""
        base = self.mesh.n_vertices + e * self.k
        return list(range(base, base + self.k))

    def node_location(self, node):
        """(kind, data): ('vertex', v) or ('edge', (e, s)) for a graph node."""
        nv = self.mesh.n_vertices
        if node < nv:
            return "vertex", int(node)
        e, slot = divmod(node - nv, self.k)
        return "edge", (int(e), (slot + 1.0) / (self.k + 1.0))


def subdivided_graph(mesh: TriMesh, k: int = DEFAULT_SUBDIVISIONS) -> SubdividedGraph:
    per_mesh = _graph_cache.setdefault(mesh, {})
    if k not in per_mesh:
        per_mesh[k] = SubdividedGraph(mesh, k)
    return per_mesh[k]


# -- source descriptors -------------------------------------------------------

@dataclass(frozen=True)
class SourceSet:
    """Distance source: a vertex set and/or a set of boundary loops."""
    vertices: tuple = ()
    loops: tuple = ()           # indices into mesh.boundary_loops_vertices

    @staticmethod
    def from_vertex(v):
        return SourceSet(vertices=(int(v),))

    @staticmethod
    def from_loops(*loop_ids):
        return SourceSet(loops=tuple(int(i) for i in loop_ids))


def _source_nodes(graph: SubdividedGraph, source: SourceSet):
    mesh = graph.mesh
    nodes = set(int(v) for v in source.vertices)
    for li in source.loops:
        loop = mesh.boundary_loops_vertices[li]
        n = len(loop)
        for i in range(n):
            u, v = loop[i], loop[(i + 1) % n]
            nodes.add(u)
            nodes.add(v)
            nodes.update(graph.edge_nodes(mesh.edge_id(u, v)))
    if not nodes:
        raise EmptySource("empty source descriptor")
    return np.array(sorted(nodes), dtype=np.int64)


@dataclass
class DistanceField:
    """Geodesic distance to a source set, on graph nodes and mesh vertices."""
    mesh: TriMesh
    source: SourceSet
    graph: SubdividedGraph
    node_values: np.ndarray
    predecessors: np.ndarray
    source_of: np.ndarray       # per node: the source node its path leaves from
    field: ScalarField = field(init=False)

    def __post_init__(self):
        self.field = ScalarField(self.mesh, self.node_values[:self.mesh.n_vertices])

    @property
    def values(self):
        return self.field.values

    def max_value(self):
        return float(self.values.max())


def distance_field(mesh: TriMesh, source, k: int = DEFAULT_SUBDIVISIONS) -> DistanceField:
    """Multi-source Dijkstra distance on the subdivided graph."""
    if isinstance(source, int):
        source = SourceSet.from_vertex(source)
    graph = subdivided_graph(mesh, k)
    src = _source_nodes(graph, source)
    dist, pred, sources = dijkstra(graph.matrix, directed=False, indices=src,
                                   return_predecessors=True, min_only=True)
    return DistanceField(mesh, source, graph, dist, pred, sources)


# -- level-set integration ----------------------------------------------------

def sublevel_area(mesh: TriMesh, values, t, face_mask=None):
    """Area of {interpolated field <= t}; exact per-face polygon clipping."""
    v = np.sort(values[mesh.faces], axis=1)
    a, b, c = v[:, 0], v[:, 1], v[:, 2]
    frac = np.zeros(mesh.n_faces)
    full = t >= c
    frac[full] = 1.0
    mid = (t >= b) & ~full
    with np.errstate(divide="ignore", invalid="ignore"):
        fm = 1.0 - (c - t) ** 2 / ((c - b) * (c - a))
    frac[mid] = np.nan_to_num(fm[mid], nan=1.0)
    low = (t > a) & (t < b)
    with np.errstate(divide="ignore", invalid="ignore"):
        fl = (t - a) ** 2 / ((b - a) * (c - a))
    frac[low] = np.nan_to_num(fl[low], nan=0.0)
    areas = frac * mesh.face_areas
    if face_mask is not None:
        areas = areas[face_mask]
    return float(areas.sum())


def _face_level_segments(mesh: TriMesh, values, t):
    """Per-face crossing segments of the level set {field == t}.

    Returns (faces, p0, p1, ep0, ep1): planar endpoints in each face layout
    and the (edge_id, s) location of each endpoint on the mesh.
    """
    layouts = face_layouts(mesh)
    # nudge near-ties off the level so the curve never passes through a
    # vertex; the resulting detour beside the vertex is the correct limit
    # geometry, and a not-too-small nudge keeps its turning angles
    # well-conditioned
    rel = values[mesh.faces] - t
    tiny = 1e-7 * (float(np.ptp(values)) + 1.0)
    rel = np.where(np.abs(rel) < tiny, tiny, rel)
    out_f, out_p0, out_p1, out_e0, out_e1 = [], [], [], [], []
    for f in range(mesh.n_faces):
        pts, eps_ = [], []
        for j in range(3):
            va, vb = rel[f, j], rel[f, (j + 1) % 3]
            if (va < 0.0 < vb) or (vb < 0.0 < va):
                s = -va / (vb - va)
                pa, pb = layouts[f, j], layouts[f, (j + 1) % 3]
                pts.append(pa + s * (pb - pa))
                e = mesh.face_edges[f, j]
                s_edge = s if mesh.edges[e, 0] == mesh.faces[f, j] else 1.0 - s
                eps_.append((int(e), float(s_edge)))
        if len(pts) == 2:
            out_f.append(f)
            out_p0.append(pts[0])
            out_p1.append(pts[1])
            out_e0.append(eps_[0])
            out_e1.append(eps_[1])
    return out_f, out_p0, out_p1, out_e0, out_e1


def level_length(mesh: TriMesh, values, t, face_mask=None):
    """Length of the level polyline {interpolated field == t}."""
    faces, p0, p1, _, _ = _face_level_segments(mesh, values, t)
    total = 0.0
    for f, a, b in zip(faces, p0, p1):
        if face_mask is not None and not face_mask[f]:
            continue
        total += float(np.hypot(*(a - b)))
    return total


@dataclass
class CurvePoint:
    """Point on the mesh: a vertex or an interior point of an edge."""
    kind: str                  # 'vertex' | 'edge'
    index: int                 # vertex id or edge id
    s: float = 0.0             # position along edge (from edges[e, 0])


def extract_level_polylines(mesh: TriMesh, values, t):
    """Chained level-set polylines as lists of CurvePoint; closed chains
    repeat the first point at the end."""
    faces, _, _, e0, e1 = _face_level_segments(mesh, values, t)
    # connect segments through shared crossing edges
    by_edge = {}
    segs = []
    for i, (f, a, b) in enumerate(zip(faces, e0, e1)):
        segs.append((a, b))
        by_edge.setdefault(a[0], []).append(i)
        by_edge.setdefault(b[0], []).append(i)
    used = [False] * len(segs)
    chains = []
    for start in range(len(segs)):
        if used[start]:
            continue
        chain = [segs[start][0], segs[start][1]]
        used[start] = True
        for endpos in (1, 0):
            while True:
                cur = chain[-1] if endpos == 1 else chain[0]
                cands = [i for i in by_edge.get(cur[0], []) if not used[i]]
                if not cands:
                    break
                i = cands[0]
                a, b = segs[i]
                nxt = b if a[0] == cur[0] else a
                used[i] = True
                if endpos == 1:
                    chain.append(nxt)
                else:
                    chain.insert(0, nxt)
                if nxt[0] == chain[-1 if endpos == 0 else 0][0] and len(chain) > 2:
                    break
        pts = [CurvePoint("edge", e, s) for e, s in chain]
        chains.append(_orient_sublevel_left(mesh, values, pts))
    return chains


def _orient_sublevel_left(mesh, values, pts):
    """Orient a level polyline so {field < level} lies to its left."""
    if len(pts) < 2:
        return pts
    a, b = pts[0], pts[1]
    common = set(mesh.edge_faces[a.index]) & set(mesh.edge_faces[b.index])
    if not common:
        return pts
    f = min(common)
    layouts = face_layouts(mesh)
    L = layouts[f]
    fv = values[mesh.faces[f]]
    # gradient of the linear interpolant in this face's layout
    M = np.column_stack([L[1] - L[0], L[2] - L[0]])
    grad = np.linalg.solve(M.T, fv[1:] - fv[0])

    def coords(p):
        j = int(np.where(mesh.face_edges[f] == p.index)[0][0])
        s = p.s if int(mesh.faces[f, j]) == mesh.edges[p.index, 0] else 1.0 - p.s
        return L[j] + s * (L[(j + 1) % 3] - L[j])

    d = coords(b) - coords(a)
    if d[0] * grad[1] - d[1] * grad[0] > 0:       # sublevel on the right: flip
        return pts[::-1]
    return pts


# -- regions and balls --------------------------------------------------------

@dataclass
class Region:
    """Face subset with the vertex set it covers."""
    mesh: TriMesh
    faces: np.ndarray
    vertices: np.ndarray


@dataclass
class BallReport:
    center: SourceSet
    radius: float
    area: float
    boundary_length: float
    boundary_length_derivative: float
    components: list
    rads: list
    field: DistanceField


def _vertex_components(mesh: TriMesh, vmask):
    """Connected components of the vertex subset ``vmask`` along mesh edges."""
    keep = np.where(vmask)[0]
    if keep.size == 0:
        return []
    emask = vmask[mesh.edges[:, 0]] & vmask[mesh.edges[:, 1]]
    sub = mesh.edges[emask]
    n = mesh.n_vertices
    data = np.ones(len(sub))
    adj = csr_matrix((data, (sub[:, 0], sub[:, 1])), shape=(n, n))
    ncomp, labels = connected_components(adj + adj.T, directed=False)
    comps = {}
    for v in keep:
        comps.setdefault(labels[v], []).append(v)
    return [np.array(sorted(vs), dtype=np.int64) for vs in comps.values()]


def _region_from_vertices(mesh: TriMesh, verts):
    vmask = np.zeros(mesh.n_vertices, dtype=bool)
    vmask[verts] = True
    fmask = vmask[mesh.faces].any(axis=1)
    return Region(mesh, np.where(fmask)[0], np.asarray(verts, dtype=np.int64))


def ball(mesh: TriMesh, dfield: DistanceField, r, fd_step=None) -> BallReport:
    """Metric ball B(source, r) with area, boundary data and components."""
    if r < 0:
        raise NegativeRadius("ball radius must be nonnegative")
    values = dfield.values
    area = sublevel_area(mesh, values, r)
    blen = level_length(mesh, values, r)
    h = fd_step if fd_step is not None else 0.5 * mesh.mean_edge_length()
    lp = level_length(mesh, values, r + h)
    lm = level_length(mesh, values, max(r - h, 0.0))
    dl = (lp - lm) / (r + h - max(r - h, 0.0))
    comps = _vertex_components(mesh, values <= r)
    regions = [_region_from_vertices(mesh, vs) for vs in comps]
    rads = [float(values[vs].max()) for vs in comps]
    return BallReport(dfield.source, float(r), area, blen, float(dl),
                      regions, rads, dfield)


def radius(mesh: TriMesh, region: Region, anchor_field: DistanceField):
    """Rad(anchor, region): supremum of anchor distance over the region."""
    if region.vertices.size == 0:
        raise EmptyRegion("empty region")
    vals = anchor_field.values[region.vertices]
    return float(vals.max())


def complement_components(mesh: TriMesh, report: BallReport):
    """Connected components of S minus the ball, with Rad and boundary length.

    Rad of a component is anchored at its interface with the ball: for a
    distance-field sublevel ball the anchor distance of p is r(p) - radius.
    """
    values = report.field.values
    r = report.radius
    comps = _vertex_components(mesh, values > r)
    out = []
    for vs in comps:
        region = _region_from_vertices(mesh, vs)
        rad = float(values[vs].max() - r)
        fmask = np.zeros(mesh.n_faces, dtype=bool)
        fmask[region.faces] = True
        blen = level_length(mesh, values, r, face_mask=fmask)
        out.append((region, rad, blen))
    return out


# -- diameter -----------------------------------------------------------------

def diameter(mesh: TriMesh, k: int = DEFAULT_SUBDIVISIONS, n_samples: int = 8):
    """Geodesic diameter by farthest-point sampling of distance fields."""
    seeds = [0]
    best = 0.0
    seen = set(seeds)
    for _ in range(n_samples):
        df = distance_field(mesh, SourceSet.from_vertex(seeds[-1]), k=k)
        best = max(best, df.max_value())
        far = int(np.argmax(df.values))
        if far in seen:
            break
        seen.add(far)
        seeds.append(far)
    return best
