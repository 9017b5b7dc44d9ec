"""Ridge (cut-locus) graphs of distance fields: extraction, the
edge-orientation procedure, and the oriented-sum certificate.

The locus of a distance field is where minimizing paths from different
directions meet.  On a mesh it is detected edge-by-edge: the restriction
of the distance to a crossed edge looks like a tent (both endpoints see
the crossing point from opposite sides), so interior subdivision-node
values sit well above the endpoint chord.  Crossing points are chained
through faces into segments; faces with three crossed edges carry
branch nodes.

A *regular* locus graph consists of non-closed segments meeting only at
endpoints, with interior angles summing to pi at every branch node,
angle pi at free ends inside the ball ("end" nodes), and zero trial
value at free ends on the ball sphere ("initial" nodes).  The
orientation procedure directs every segment so that each non-initial
node receives at least one incoming segment, which makes the signed sum

    sum over directed segments of 2 a_i f^2(tail) - 2 (pi - a_f) f^2(head)

non-positive (the certificate at the heart of the ball comparison).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IrregularLocus, NotRegular
from .geodesics import (CurvePoint, DistanceField, face_layouts,
                        sublevel_area)
from .mesh import TriMesh
from . import report as rp

END = "end"
INITIAL = "initial"
BIFURCATING = "bifurcating"

ANGLE_TOL = 1e-9

# Edge-graph subdivision level that gives distance fields accurate enough
# for crease detection; coarser graphs leave stretch artifacts near
# distance maxima that masquerade as crossings.
LOCUS_SUBDIVISIONS = 4


@dataclass
class LocusNode:
    index: int
    kind: str                      # bifurcating | end | initial
    f: float                       # trial value 1 - r/L at the node
    angles: dict = field(default_factory=dict)   # segment index -> alpha
    location: tuple = None         # optional (face, x, y) in face layout
    r: float = None


@dataclass
class LocusSegment:
    index: int
    a: int                         # node indices
    b: int
    length: float = 0.0
    polyline: list = None          # CurvePoints, locus trace on the mesh

    def other(self, n):
        return self.b if n == self.a else self.a


@dataclass
class CutLocusGraph:
    nodes: list
    segments: list

    def incident(self, n, alive=None):
        out = [s.index for s in self.segments if n in (s.a, s.b)]
        if alive is not None:
            out = [i for i in out if i in alive]
        return out

    def to_json(self, orientation=None):
        doc = {
            "nodes": [{"index": n.index, "kind": n.kind, "f": n.f,
                       "angles": {str(k): v for k, v in sorted(n.angles.items())}}
                      for n in self.nodes],
            "segments": [{"index": s.index, "a": s.a, "b": s.b,
                          "length": s.length} for s in self.segments],
        }
        if orientation is not None:
            doc["directions"] = {str(i): list(orientation.direction[i])
                                 for i in sorted(orientation.direction)}
            doc["arbitrary"] = sorted(orientation.arbitrary)
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def angle_term(alpha):
    """sin a - a cos a, nonnegative on [0, pi]."""
    if not (0.0 - ANGLE_TOL <= alpha <= math.pi + ANGLE_TOL):
        raise DomainError(f"angle {alpha} outside [0, pi]")
    return math.sin(alpha) - alpha * math.cos(alpha)


def validate_regular(graph: CutLocusGraph, angle_tol=1e-6):
    """Check the regular-locus structure; raises IrregularLocus."""
    degree = {n.index: 0 for n in graph.nodes}
    for s in graph.segments:
        if s.a == s.b:
            raise IrregularLocus(f"segment {s.index} is closed")
        degree[s.a] += 1
        degree[s.b] += 1
    for n in graph.nodes:
        d = degree[n.index]
        if n.kind in (END, INITIAL):
            if d != 1:
                raise IrregularLocus(
                    f"{n.kind} node {n.index} has valence {d}")
        elif n.kind == BIFURCATING:
            if d < 2:
                raise IrregularLocus(
                    f"branch node {n.index} has valence {d}")
            total = sum(n.angles.values())
            if abs(total - math.pi) > angle_tol:
                raise IrregularLocus(
                    f"angles at node {n.index} sum to {total}, not pi")
        else:
            raise IrregularLocus(f"unknown node kind {n.kind!r}")
        if n.kind == END and n.angles:
            for a in n.angles.values():
                if abs(a - math.pi) > angle_tol:
                    raise IrregularLocus(
                        f"end node {n.index} angle {a} != pi")
        if n.kind == INITIAL and abs(n.f) > angle_tol:
            raise IrregularLocus(f"initial node {n.index} has f != 0")
    _check_cactus(graph)


def _check_cactus(graph: CutLocusGraph):
    """No edge may be enclosed by a closed chain: every edge lies on at
    most one simple cycle.  Equivalent statement: within each biconnected
    block, edge count does not exceed vertex count."""
    adj = {}
    for s in graph.segments:
        adj.setdefault(s.a, []).append((s.b, s.index))
        adj.setdefault(s.b, []).append((s.a, s.index))
    index = {}
    low = {}
    stack = []
    counter = [0]

    def block_of(edges):
        vs = set()
        for (u, v, _e) in edges:
            vs.update((u, v))
        if len(edges) > len(vs):
            raise IrregularLocus(
                "locus graph has an edge enclosed by a closed chain")

    def dfs(root):
        work = [(root, None, iter(adj.get(root, [])))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        while work:
            v, parent_edge, it = work[-1]
            advanced = False
            for (w, e) in it:
                if e == parent_edge:
                    continue
                if w not in index:
                    stack.append((v, w, e))
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    work.append((w, e, iter(adj.get(w, []))))
                    advanced = True
                    break
                if index[w] < index[v]:
                    stack.append((v, w, e))
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
                if low[v] >= index[u]:
                    comp = []
                    while stack:
                        tri = stack.pop()
                        comp.append(tri)
                        if tri[0] == u and tri[1] == v:
                            break
                    block_of(comp)

    for n in adj:
        if n not in index:
            dfs(n)


@dataclass
class Orientation:
    """Direction per segment as (tail node, head node)."""
    direction: dict
    arbitrary: set = field(default_factory=set)

    def incoming(self, node):
        return [i for i, (t, h) in self.direction.items() if h == node]


def orient(graph: CutLocusGraph, keep=None) -> Orientation:
    """Direct every segment by the three-step pruning procedure.

    Step 1 repeatedly directs the unique segment of each end-vertex
    toward it and removes the segment, promoting non-initial vertices
    left with a single segment to new end-vertices.  Step 2 gives each
    remaining closed chain its disk-boundary direction and removes it.
    Step 3 directs segments at initial-vertices outward (isolated
    segments get an arbitrary recorded direction) and iterates.

    ``keep`` maps segment indices to already-fixed directions (shared
    segments of earlier graphs); they participate structurally but their
    direction is preserved.  Ties always break toward the lowest node
    index, then the lowest segment index.
    """
    direction = {}
    arbitrary = set()
    alive = {s.index for s in graph.segments}
    seg = {s.index: s for s in graph.segments}
    kind = {n.index: n.kind for n in graph.nodes}

    def degree(n):
        return len(graph.incident(n, alive))

    def assign(e, tail, head):
        if keep and e in keep:
            direction[e] = tuple(keep[e])
        else:
            direction[e] = (tail, head)
        alive.discard(e)

    # Step 1: consume end-vertices
    ends = sorted(n.index for n in graph.nodes
                  if kind[n.index] == END and degree(n.index) == 1)
    while ends:
        v = ends.pop(0)
        inc = graph.incident(v, alive)
        if len(inc) != 1:
            continue
        e = min(inc)
        assign(e, seg[e].other(v), v)
        u = seg[e].other(v)
        if kind[u] != INITIAL and degree(u) == 1 and u not in ends:
            ends.append(u)
            ends.sort()

    # Step 2: closed chains (edge-disjoint cycles of the remaining graph)
    for cycle in _find_cycles(graph, alive):
        # disk-boundary direction: start at the lowest node, leave along
        # its lowest-indexed cycle segment
        start = min(n for e in cycle for n in (seg[e].a, seg[e].b))
        at_start = sorted(e for e in cycle if start in (seg[e].a, seg[e].b))
        e0 = at_start[0]
        node = start
        e = e0
        for _ in range(len(cycle)):
            nxt = seg[e].other(node)
            assign(e, node, nxt)
            node = nxt
            options = [c for c in cycle if c in alive
                       and node in (seg[c].a, seg[c].b)]
            if not options:
                break
            e = min(options)

    # Step 3: initial-vertices outward; valence-1 leftovers are treated
    # as initial
    while alive:
        leaves = sorted(n.index for n in graph.nodes if degree(n.index) == 1)
        if not leaves:
            raise NotRegular("orientation procedure stalled; "
                             "graph is not a regular locus")
        progressed = False
        for v in leaves:
            inc = graph.incident(v, alive)
            if len(inc) != 1:
                continue
            e = min(inc)
            u = seg[e].other(v)
            if len(graph.incident(u, alive)) == 1:
                # isolated segment: arbitrary direction, lowest node first
                t, h = (v, u) if v < u else (u, v)
                assign(e, t, h)
                arbitrary.add(e)
            else:
                assign(e, v, u)
            progressed = True
        if not progressed:
            raise NotRegular("orientation procedure stalled; "
                             "graph is not a regular locus")

    return Orientation(direction, arbitrary)


def _find_cycles(graph: CutLocusGraph, alive):
    """Edge-disjoint cycles among the ``alive`` segments (the graph is a
    cactus, so every edge lies on at most one cycle and a DFS with
    back-edge parent walks recovers them all)."""
    seg = {s.index: s for s in graph.segments}
    adj = {}
    for e in alive:
        s = seg[e]
        adj.setdefault(s.a, []).append((s.b, e))
        adj.setdefault(s.b, []).append((s.a, e))
    cycles = []
    parent = {}
    order = {}
    cnt = [0]
    for root in sorted(adj):
        if root in order:
            continue
        parent[root] = (None, None)
        order[root] = cnt[0]
        cnt[0] += 1
        stack = [(root, iter(sorted(adj[root], key=lambda t: t[1])))]
        while stack:
            v, it = stack[-1]
            advanced = False
            for (w, e) in it:
                if e == parent[v][1]:
                    continue
                if w not in order:
                    parent[w] = (v, e)
                    order[w] = cnt[0]
                    cnt[0] += 1
                    stack.append((w, iter(sorted(adj[w], key=lambda t: t[1]))))
                    advanced = True
                    break
                if order[w] <= order[v]:
                    # back edge toward an ancestor: climb parents to w
                    cyc = [e]
                    x = v
                    while x != w:
                        cyc.append(parent[x][1])
                        x = parent[x][0]
                    cycles.append(cyc)
            if not advanced:
                stack.pop()
    return cycles


def sum_inequality(graph: CutLocusGraph, orientation: Orientation,
                   tol=1e-12) -> rp.CheckReport:
    """Oriented certificate sum; PASS iff it is <= tol.

    Each directed segment contributes 2 a f^2 at its tail and
    -2 (pi - a) f^2 at its head, where a is the segment's interior angle
    at that node (pi at end nodes).  Initial nodes contribute zero
    because f vanishes there.
    """
    fval = {n.index: n.f for n in graph.nodes}
    node_kind = {n.index: n.kind for n in graph.nodes}
    ang = {n.index: n.angles for n in graph.nodes}

    def alpha(node, e):
        if node_kind[node] == END:
            return math.pi
        return ang[node].get(e, math.pi)

    total = 0.0
    per_kind = {END: 0.0, INITIAL: 0.0, BIFURCATING: 0.0}
    for e, (t, h) in sorted(orientation.direction.items()):
        c_tail = 2.0 * alpha(t, e) * fval[t] ** 2
        c_head = -2.0 * (math.pi - alpha(h, e)) * fval[h] ** 2
        total += c_tail + c_head
        per_kind[node_kind[t]] += c_tail
        per_kind[node_kind[h]] += c_head
    meta = {"n_segments": len(graph.segments),
            "per_kind": {k: v for k, v in sorted(per_kind.items())}}
    return rp.make_report("locus_sum", total, 0.0, tol, meta)


# -- extraction ---------------------------------------------------------------

def _edge_tent_deviation(mesh: TriMesh, dfield: DistanceField):
    """Per-edge max positive deviation of interior subdivision-node
    distances above the endpoint chord, normalized by edge length.  Large
    values mean minimizing paths reach the edge from both sides."""
    nv = dfield.node_values
    dev = np.zeros(mesh.n_edges)
    tstar = np.full(mesh.n_edges, 0.5)
    r = dfield.values
    k = dfield.graph.k
    fracs = np.arange(1, k + 1) / (k + 1.0)
    for e in range(mesh.n_edges):
        nodes = dfield.graph.edge_nodes(e)
        if len(nodes) == 0:
            continue
        u, v = mesh.edges[e]
        le = mesh.edge_lengths[e]
        chord = (1.0 - fracs) * r[u] + fracs * r[v]
        d = (nv[nodes] - chord) / le
        dev[e] = float(d.max())
        tstar[e] = float(np.clip((le + r[v] - r[u]) / (2.0 * le), 0.05, 0.95))
    return dev, tstar


def extract_cut_locus(mesh: TriMesh, dfield: DistanceField, L,
                      threshold=0.1, validate=True) -> CutLocusGraph:
    """Trace the locus of ``dfield`` inside the ball of radius L.

    Edges whose tent deviation exceeds ``threshold`` (fraction of edge
    length) are crossed by the locus at parameter
    t* = (len + r(v) - r(u)) / (2 len); crossing points are chained
    through faces, faces with three crossed edges become branch nodes,
    free chain ends at distance < L  become end nodes and those at
    distance about L initial nodes.  Closed chains are split by two
    inserted valence-2 nodes so every segment is non-closed.
    """
    if L <= 0:
        raise DomainError("L must be positive")
    r = dfield.values
    dev, tstar = _edge_tent_deviation(mesh, dfield)
    inside = np.minimum(r[mesh.edges[:, 0]], r[mesh.edges[:, 1]]) < L
    interior = np.array([len(mesh.edge_faces[e]) == 2
                         for e in range(mesh.n_edges)])
    crossed = np.where((dev > threshold) & inside & interior)[0]
    crossed_set = set(int(e) for e in crossed)

    layouts = face_layouts(mesh)
    cell = mesh.mean_edge_length()

    def cross_point(e):
        return CurvePoint("edge", int(e), float(tstar[e]))

    def point_coords(f, p):
        j = int(np.where(mesh.face_edges[f] == p.index)[0][0])
        s = p.s if int(mesh.faces[f, j]) == mesh.edges[p.index, 0] else 1 - p.s
        a = layouts[f, j]
        b = layouts[f, (j + 1) % 3]
        return a + s * (b - a)

    def r_at(p):
        u, v = mesh.edges[p.index]
        return (1.0 - p.s) * r[u] + p.s * r[v]

    # face incidences: which crossed edges border each face
    by_face = {}
    for e in crossed_set:
        for f in mesh.edge_faces[e]:
            by_face.setdefault(int(f), []).append(e)

    # star nodes at faces with three crossings; in-face links otherwise
    links = {}          # crossed edge -> list of (face, partner)
    star_faces = {}
    for f, es in sorted(by_face.items()):
        es = sorted(es)
        if len(es) == 2:
            links.setdefault(es[0], []).append((f, es[1]))
            links.setdefault(es[1], []).append((f, es[0]))
        elif len(es) == 3:
            star_faces[f] = es

    nodes = []
    segments = []
    node_of_edgepoint = {}

    def new_node(kind, f_val, angles=None, location=None, r_val=None):
        n = LocusNode(len(nodes), kind, f_val, angles or {}, location, r_val)
        nodes.append(n)
        return n

    def f_of(rv):
        return max(0.0, 1.0 - rv / L)

    # branch nodes first (deterministic order)
    for f, es in sorted(star_faces.items()):
        pts = [point_coords(f, cross_point(e)) for e in es]
        center = np.mean(pts, axis=0)
        rv = float(np.mean([r_at(cross_point(e)) for e in es]))
        n = new_node(BIFURCATING, f_of(rv), location=(f, float(center[0]),
                                                      float(center[1])),
                     r_val=rv)
        for e in es:
            node_of_edgepoint[(e, f)] = n.index

    # walk chains of crossed edges through 2-crossing faces
    visited = set()

    def chain_from(e0, f0):
        """Follow links starting by leaving edge e0 through face f0."""
        chain = [e0]
        faces = []
        e, f = e0, f0
        for _ in range(4 * len(crossed_set) + 4):
            faces.append(f)
            if f in star_faces:
                break
            partner = None
            for (ff, p) in links.get(e, []):
                if ff == f:
                    partner = p
                    break
            if partner is None:
                break
            e = partner
            chain.append(e)
            if e == e0:     # closed chain came back around
                break
            nxts = [ff for (ff, p) in links.get(e, []) if ff != f] + \
                   [ff for ff in star_faces if e in star_faces[ff]]
            nxts = [ff for ff in nxts if ff != f]
            if not nxts:
                break
            f = nxts[0]
        return chain, faces

    def seg_length(chain, faces):
        total = 0.0
        for i in range(len(chain) - 1):
            # consecutive crossing points share the face between them
            shared = set(mesh.edge_faces[chain[i]]) & set(mesh.edge_faces[chain[i + 1]])
            if not shared:
                continue
            ff = min(shared)
            a = point_coords(ff, cross_point(chain[i]))
            b = point_coords(ff, cross_point(chain[i + 1]))
            total += float(np.hypot(*(a - b)))
        return total

    def endpoint_node(e, at_face):
        """Node for a chain endpoint leaving through edge e."""
        if at_face in star_faces:
            return node_of_edgepoint[(e, at_face)]
        p = cross_point(e)
        rv = r_at(p)
        kind = INITIAL if rv >= L - 0.75 * cell else END
        n = new_node(kind, 0.0 if kind == INITIAL else f_of(rv),
                     location=None, r_val=rv)
        if kind == END:
            n.angles = {}
        return n.index

    def add_segment(na, nb, chain, faces):
        s = LocusSegment(len(segments), na, nb, seg_length(chain, faces),
                         [cross_point(e) for e in chain])
        segments.append(s)
        return s

    # start chains at star faces and at free ends
    endpoints = []   # (edge, face) starts
    for e in sorted(crossed_set):
        fs = [int(f) for f in mesh.edge_faces[e]]
        deg = 0
        for f in fs:
            if f in star_faces or any(ff == f for (ff, _p) in links.get(e, [])):
                deg += 1
        if deg <= 1:
            # free end: start walking into the side that has a link
            start_face = None
            for f in fs:
                if any(ff == f for (ff, _p) in links.get(e, [])) or f in star_faces:
                    start_face = f
            if start_face is None:
                continue      # isolated crossing, noise
            endpoints.append((e, start_face, "free"))
    for f, es in sorted(star_faces.items()):
        for e in es:
            other = [ff for ff in mesh.edge_faces[e] if int(ff) != f]
            if other:
                endpoints.append((e, int(other[0]), ("star", f)))

    used_starts = set()
    for e, f, tag in endpoints:
        if (e, f) in used_starts:
            continue
        chain, faces = chain_from(e, f)
        last_e = chain[-1]
        last_f = faces[-1]
        used_starts.add((e, f))
        used_starts.add((last_e, last_f if last_f in star_faces else
                         _far_face(mesh, last_e, faces)))
        if tag == "free":
            na = endpoint_node(e, _near_face(mesh, e, f, star_faces))
        else:
            na = node_of_edgepoint[(e, tag[1])]
        if last_f in star_faces:
            nb = node_of_edgepoint[(last_e, last_f)]
        else:
            nb = endpoint_node(last_e,
                               _near_face(mesh, last_e, last_f, star_faces))
        if na == nb and len(chain) > 2:
            # closed chain: split with two inserted flat nodes
            third = max(1, len(chain) // 3)
            m1 = chain[third]
            m2 = chain[min(2 * third, len(chain) - 1)]
            rv1, rv2 = r_at(cross_point(m1)), r_at(cross_point(m2))
            n1 = new_node(BIFURCATING, f_of(rv1), r_val=rv1)
            n2 = new_node(BIFURCATING, f_of(rv2), r_val=rv2)
            c1 = chain[:third + 1]
            c2 = chain[third:min(2 * third, len(chain) - 1) + 1]
            c3 = chain[min(2 * third, len(chain) - 1):]
            s1 = add_segment(na, n1.index, c1, faces)
            s2 = add_segment(n1.index, n2.index, c2, faces)
            s3 = add_segment(n2.index, na, c3, faces)
            n1.angles = {s1.index: math.pi / 2, s2.index: math.pi / 2}
            n2.angles = {s2.index: math.pi / 2, s3.index: math.pi / 2}
        else:
            add_segment(na, nb, chain, faces)

    # purely closed chains have neither free ends nor branch nodes and
    # are not reached above; split each into two arcs between two
    # inserted flat nodes (angle pi/2 on both sides)
    used_edges = set()
    for s in segments:
        used_edges.update(int(p.index) for p in (s.polyline or []))
    for e in sorted(crossed_set - used_edges):
        if e in used_edges or len(links.get(e, [])) != 2:
            continue
        chain, faces = chain_from(e, links[e][0][0])
        if len(chain) < 4 or chain[0] != chain[-1]:
            continue
        cyc = chain[:-1]
        used_edges.update(cyc)
        i2 = len(cyc) // 2
        rv1, rv2 = r_at(cross_point(cyc[0])), r_at(cross_point(cyc[i2]))
        n1 = new_node(BIFURCATING, f_of(rv1), r_val=rv1)
        n2 = new_node(BIFURCATING, f_of(rv2), r_val=rv2)
        s1 = add_segment(n1.index, n2.index, cyc[:i2 + 1], faces)
        s2 = add_segment(n2.index, n1.index, cyc[i2:] + [cyc[0]], faces)
        n1.angles = {s1.index: math.pi / 2, s2.index: math.pi / 2}
        n2.angles = {s1.index: math.pi / 2, s2.index: math.pi / 2}

    # ridge chains that run along mesh edges (locus aligned with the
    # vertex lattice produces no crossed edges at all)
    strong_crossed = {e for e in crossed_set
                      if dev[e] > 2.0 * threshold}
    ridge = _ridge_vertices(mesh, dfield, L, threshold, strong_crossed)
    chains_v, special, radj = _ridge_edge_chains(mesh, ridge, crossed_set)
    vnode = {}

    def chain_len(cv):
        return sum(mesh.edge_lengths[mesh.edge_id(cv[i], cv[i + 1])]
                   for i in range(len(cv) - 1))

    def chain_points(cv):
        return [CurvePoint("edge", int(mesh.edge_id(cv[i], cv[i + 1])), 0.5)
                for i in range(len(cv) - 1)]

    def vertex_node(v):
        if v in vnode:
            return vnode[v]
        rv = float(r[v])
        if len(radj.get(v, [])) > 2:
            n = new_node(BIFURCATING, f_of(rv), r_val=rv)
        elif rv >= L - 0.75 * cell:
            n = new_node(INITIAL, 0.0, r_val=rv)
        else:
            n = new_node(END, f_of(rv), r_val=rv)
        vnode[v] = n.index
        return n.index

    vertex_chain_dirs = {}    # mesh vertex -> list of (first neighbor, seg idx)
    for cv in chains_v:
        if len(cv) < 2:
            continue
        if cv[0] == cv[-1]:
            if len(cv) < 4:
                continue
            mid = len(cv) // 2
            rvm = float(r[cv[mid]])
            nm = new_node(BIFURCATING, f_of(rvm), r_val=rvm)
            if cv[0] in radj and len(radj[cv[0]]) != 2:
                n0 = vertex_node(cv[0])
            else:
                # pure loop: split with a second flat node instead
                rv0 = float(r[cv[0]])
                n0 = new_node(BIFURCATING, f_of(rv0), r_val=rv0).index
            s1 = add_segment(n0, nm.index, [], None)
            s1.length = chain_len(cv[:mid + 1])
            s1.polyline = chain_points(cv[:mid + 1])
            s2 = add_segment(nm.index, n0, [], None)
            s2.length = chain_len(cv[mid:])
            s2.polyline = chain_points(cv[mid:])
            nm.angles = {s1.index: math.pi / 2, s2.index: math.pi / 2}
            if nodes[n0].kind == BIFURCATING and cv[0] not in vnode:
                nodes[n0].angles = {s1.index: math.pi / 2,
                                    s2.index: math.pi / 2}
            else:
                vertex_chain_dirs.setdefault(cv[0], []).append((cv[1], s1.index))
                vertex_chain_dirs.setdefault(cv[0], []).append((cv[-2], s2.index))
        else:
            na, nb = vertex_node(cv[0]), vertex_node(cv[-1])
            s = add_segment(na, nb, [], None)
            s.length = chain_len(cv)
            s.polyline = chain_points(cv)
            vertex_chain_dirs.setdefault(cv[0], []).append((cv[1], s.index))
            vertex_chain_dirs.setdefault(cv[-1], []).append((cv[-2], s.index))

    # sector-bisection angles at branch vertices of the ridge subgraph
    for v, nidx in vnode.items():
        n = nodes[nidx]
        if n.kind != BIFURCATING or n.angles:
            continue
        star, total = _vertex_star_geometry(mesh, v)
        theta = {nb: t for nb, t, _l in star}
        dirs = sorted((theta[nb], sidx)
                      for nb, sidx in vertex_chain_dirs.get(v, [])
                      if nb in theta)
        m = len(dirs)
        scale = 2.0 * math.pi / total
        for i, (t0, sidx) in enumerate(dirs):
            sector = (dirs[(i + 1) % m][0] - t0) % total
            n.angles[sidx] = n.angles.get(sidx, 0.0) + 0.5 * sector * scale

    _prune_small_components(nodes, segments, 1.5 * cell)
    _dedupe_segments(segments, nodes)
    _attach_branch_angles(mesh, layouts, nodes, segments, star_faces,
                          node_of_edgepoint, cross_point, point_coords)
    graph = CutLocusGraph(nodes, segments)
    if segments and validate:
        validate_regular(graph, angle_tol=0.3)
    return graph


def _prune_small_components(nodes, segments, min_length):
    """Distance-graph stretch can fire the crossing test on a few edges
    near genuine locus branch points; the resulting debris forms tiny
    components whose total length is far below a mesh cell."""
    parent = {n.index: n.index for n in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s in segments:
        ra, rb = find(s.a), find(s.b)
        if ra != rb:
            parent[ra] = rb
    comp_len = {}
    for s in segments:
        comp_len[find(s.a)] = comp_len.get(find(s.a), 0.0) + s.length
    drop = {c for c, le in comp_len.items() if le < min_length}
    segments[:] = [s for s in segments if find(s.a) not in drop]


def _near_face(mesh, e, walked_face, star_faces):
    others = [int(f) for f in mesh.edge_faces[e] if int(f) != walked_face]
    return others[0] if others else walked_face


def _far_face(mesh, e, faces):
    fs = [int(f) for f in mesh.edge_faces[e]]
    walked = faces[-1]
    others = [f for f in fs if f != walked]
    return others[0] if others else walked


def _dedupe_segments(segments, nodes):
    """Chains get walked from both free ends; drop exact duplicates and
    remap segment indices (including the angle keys held by nodes)."""
    seen = {}
    keep = []
    remap = {}
    for s in segments:
        # opposite walks of one chain mint distinct end nodes, so the
        # polyline itself (not the node pair) identifies a segment
        if s.polyline:
            key = frozenset(p.index for p in s.polyline)
        else:
            key = (min(s.a, s.b), max(s.a, s.b))
        if key in seen:
            remap[s.index] = seen[key].index
            continue
        seen[key] = s
        keep.append(s)
    for i, s in enumerate(keep):
        remap[s.index] = i
        s.index = i
    segments[:] = keep
    kept_nodes = set()
    for s in segments:
        kept_nodes.update((s.a, s.b))
    for n in nodes:
        n.angles = {remap[k]: v for k, v in n.angles.items() if k in remap}
    # duplicate walks can also have minted duplicate free-end nodes;
    # orphaned ones are dropped with their indices compacted
    node_map = {}
    live = [n for n in nodes if n.index in kept_nodes]
    for i, n in enumerate(live):
        node_map[n.index] = i
        n.index = i
    for s in segments:
        s.a = node_map[s.a]
        s.b = node_map[s.b]
    nodes[:] = live


def _attach_branch_angles(mesh, layouts, nodes, segments, star_faces,
                          node_of_edgepoint, cross_point, point_coords):
    """Interior angles at branch nodes: the directions of the incident
    segments split the neighborhood into sectors; each segment gets half
    of the sector counterclockwise from it, so the angles sum to pi."""
    by_node = {}
    for s in segments:
        by_node.setdefault(s.a, []).append(s)
        by_node.setdefault(s.b, []).append(s)
    for n in nodes:
        if n.kind != BIFURCATING or n.angles or n.location is None:
            continue
        f, cx, cy = n.location
        center = np.array([cx, cy])
        dirs = []
        for s in by_node.get(n.index, []):
            p = s.polyline[0] if s.a == n.index else s.polyline[-1]
            if int(p.index) not in [int(e) for e in star_faces.get(f, [])]:
                # pick whichever polyline end lies on this star face
                q = s.polyline[-1] if s.a == n.index else s.polyline[0]
                if int(q.index) in [int(e) for e in star_faces.get(f, [])]:
                    p = q
            try:
                xy = point_coords(f, p)
            except Exception:
                continue
            d = xy - center
            dirs.append((math.atan2(d[1], d[0]), s.index))
        if len(dirs) < 2:
            continue
        dirs.sort()
        m = len(dirs)
        for i, (ang, sidx) in enumerate(dirs):
            nxt = dirs[(i + 1) % m][0]
            sector = (nxt - ang) % (2.0 * math.pi)
            n.angles[sidx] = 0.5 * sector


def _vertex_star_geometry(mesh: TriMesh, v):
    """Ordered star of an interior vertex: lists of (neighbor, cumulative
    angle, edge length) walking the faces around v."""
    succ = {}
    for fi in mesh.vertex_faces[v]:
        a, b, c = mesh.faces[fi]
        tri = [int(a), int(b), int(c)]
        i = tri.index(v)
        succ[tri[(i + 1) % 3]] = (tri[(i + 2) % 3], fi)
    start = next(iter(succ))
    out = []
    theta = 0.0
    n = start
    for _ in range(len(succ)):
        nxt, fi = succ[n]
        le = mesh.edge_lengths[mesh.edge_id(v, n)]
        out.append((n, theta, le))
        tri = [int(x) for x in mesh.faces[fi]]
        theta += mesh.corner_angles[fi, tri.index(v)]
        n = nxt
        if n == start:
            break
    return out, theta


def _ridge_vertices(mesh: TriMesh, dfield: DistanceField, L, threshold,
                    crossed_set=()):
    """Vertices where the distance field has a crease: the value sits
    above the chord of some straight two-edge path through the vertex.

    Vertices touching an edge with a strong crossing are skipped: there
    the crease runs mid-cell and a straight two-edge chord spanning it
    fires spuriously one ring away.  Weak crossings (barely over the
    detection threshold, typical of diagonal artifacts near a distance
    maximum) do not suppress the ridge test."""
    r = dfield.values
    ridge = np.zeros(mesh.n_vertices, dtype=bool)
    cell = mesh.mean_edge_length()
    near_crossing = np.zeros(mesh.n_vertices, dtype=bool)
    for e in crossed_set:
        near_crossing[mesh.edges[e, 0]] = True
        near_crossing[mesh.edges[e, 1]] = True
    for v in range(mesh.n_vertices):
        if mesh.is_boundary_vertex[v] or near_crossing[v] \
                or r[v] >= L + cell:
            continue
        star, total = _vertex_star_geometry(mesh, v)
        if len(star) < 3:
            continue
        half = 0.5 * total
        best = 0.0
        for i in range(len(star)):
            ni, ti, li = star[i]
            for j in range(i + 1, len(star)):
                nj, tj, lj = star[j]
                gap = (tj - ti) % total
                if abs(gap - half) > 0.45:
                    continue
                chord = (lj * r[ni] + li * r[nj]) / (li + lj)
                best = max(best, (r[v] - chord) / (0.5 * (li + lj)))
        ridge[v] = best > 2.0 * threshold
    return ridge


def _ridge_edge_chains(mesh: TriMesh, ridge, crossed_set):
    """Edges joining two ridge vertices, pruned of face-diagonal
    artifacts, grouped into maximal chains between special vertices."""
    redges = set()
    for e in range(mesh.n_edges):
        u, v = mesh.edges[e]
        if ridge[u] and ridge[v] and int(e) not in crossed_set \
                and len(mesh.edge_faces[e]) == 2:
            redges.add(int(e))
    # a face with all three edges marked keeps only its two shortest:
    # the long diagonal joins two different branches, not the ridge
    for _ in range(4):
        changed = False
        for fi in range(mesh.n_faces):
            es = [int(mesh.face_edges[fi, j]) for j in range(3)]
            if all(e in redges for e in es):
                redges.discard(max(es, key=lambda e: mesh.edge_lengths[e]))
                changed = True
        if not changed:
            break
    adj = {}
    for e in redges:
        u, v = (int(x) for x in mesh.edges[e])
        adj.setdefault(u, []).append((v, e))
        adj.setdefault(v, []).append((u, e))
    special = sorted(v for v in adj if len(adj[v]) != 2)
    chains = []
    seen = set()

    def walk(v0, e0):
        chain_v = [v0]
        e, v = e0, v0
        while True:
            seen.add(e)
            v = int(mesh.edges[e, 0]) if int(mesh.edges[e, 1]) == v \
                else int(mesh.edges[e, 1])
            chain_v.append(v)
            if len(adj[v]) != 2:
                return chain_v
            nxt = [ee for (_w, ee) in adj[v] if ee != e]
            if not nxt or nxt[0] in seen:
                return chain_v
            e = nxt[0]

    for v0 in special:
        for (_w, e0) in sorted(adj[v0], key=lambda t: t[1]):
            if e0 in seen:
                continue
            chains.append(walk(v0, e0))
    # leftover pure loops
    for e0 in sorted(redges):
        if e0 in seen:
            continue
        u = int(mesh.edges[e0, 0])
        chains.append(walk(u, e0))
    return chains, special, adj


# -- region decomposition -----------------------------------------------------

def region_decomposition_check(mesh: TriMesh, dfield: DistanceField, L,
                               graph: CutLocusGraph, loops=None,
                               tol_rel=0.01) -> rp.CheckReport:
    """Ball decomposition bookkeeping.

    Splits the ball of radius L into face regions separated by the locus
    and verifies (a) the per-region sums of the stability integrand add
    up to the whole-ball value and (b) for every region all of whose
    geodesics reach depth L without hitting the locus ("type I"), the
    exact identity  integral = 2 l_k / L + l_k' - A_k / L^2.
    Additionally reports the two-sided cancellation of the locus line
    curvature computed independently from each side via the discrete
    Gauss-Bonnet balance of the adjacent regions.
    """
    from .curvature import gaussian_curvature, loop_length_derivative
    from .mesh import boundary_loops
    from .stability import face_gradient_sq

    r = dfield.values
    f = np.clip(1.0 - r / L, 0.0, 1.0)
    crossed = set()
    for s in graph.segments:
        for p in (s.polyline or []):
            crossed.add(int(p.index))

    in_ball = np.array([bool((r[mesh.faces[i]] < L).any())
                        for i in range(mesh.n_faces)])
    # face components not crossing the locus
    comp = np.full(mesh.n_faces, -1)
    cur = 0
    for f0 in range(mesh.n_faces):
        if not in_ball[f0] or comp[f0] >= 0:
            continue
        stack = [f0]
        comp[f0] = cur
        while stack:
            x = stack.pop()
            for j in range(3):
                e = mesh.face_edges[x, j]
                if int(e) in crossed:
                    continue
                for g in mesh.edge_faces[e]:
                    g = int(g)
                    if in_ball[g] and comp[g] < 0:
                        comp[g] = cur
                        stack.append(g)
        cur += 1

    grad2 = face_gradient_sq(mesh, f)
    cf = gaussian_curvature(mesh)
    interior = ~mesh.is_boundary_vertex

    def region_integral(mask):
        en = float((grad2[mask] * mesh.face_areas[mask]).sum())
        vmask = np.zeros(mesh.n_vertices, dtype=bool)
        vmask[mesh.faces[mask].ravel()] = True
        # vertices on crossed edges belong to the locus, not the region
        kv = float((cf.vertex_defect * f * f)[vmask & interior].sum())
        return en + kv

    total = region_integral(in_ball)
    parts = []
    all_loops = boundary_loops(mesh)
    lp_cache = {}
    meta = {"n_regions": int(cur), "L": float(L)}
    identity_errs = []
    for c in range(cur):
        mask = comp == c
        integ = region_integral(mask)
        # base loops: boundary loops fully inside this region's vertex set
        vset = set(mesh.faces[mask].ravel().tolist())
        l_k = 0.0
        lp_k = 0.0
        based = []
        for i, (lv, ll) in enumerate(all_loops):
            if loops is not None and i not in loops:
                continue
            if set(lv) <= vset:
                l_k += ll
                if i not in lp_cache:
                    lp_cache[i] = loop_length_derivative(mesh, i)
                lp_k += lp_cache[i]
                based.append(i)
        a_k = sublevel_area(mesh, r, L, face_mask=mask)
        touches_locus = any(int(mesh.face_edges[i, j]) in crossed
                            for i in np.where(mask)[0] for j in range(3))
        rec = {"integral": integ, "area": a_k, "l": l_k, "l_prime": lp_k,
               "base_loops": based, "touches_locus": touches_locus}
        if based and not touches_locus:
            ident = 2.0 * l_k / L + lp_k - a_k / L ** 2
            rec["identity_rhs"] = ident
            identity_errs.append(abs(integ - ident) /
                                 max(abs(integ), abs(ident), 1e-12))
        parts.append(rec)
    meta["regions"] = parts
    additivity = abs(total - sum(p["integral"] for p in parts))
    meta["additivity_residual"] = additivity

    # two-sided locus curvature cancellation via Gauss-Bonnet per side
    if crossed and cur >= 2:
        sides = []
        for c in range(cur):
            mask = comp == c
            if not any(int(mesh.face_edges[i, j]) in crossed
                       for i in np.where(mask)[0] for j in range(3)):
                continue
            sides.append(_side_locus_turning(mesh, mask, cf, crossed))
        if len(sides) == 2:
            meta["locus_turning_sides"] = sides
            meta["locus_turning_cancellation"] = sides[0] + sides[1]
    worst = max(identity_errs) if identity_errs else 0.0
    meta["worst_identity_rel_err"] = worst
    return rp.make_report("region_decomposition", worst, tol_rel,
                          0.0, meta)


def _side_locus_turning(mesh, face_mask, cf, crossed):
    """Total turning of the jagged locus-facing boundary of a face region,
    from the discrete Gauss-Bonnet balance of the region itself."""
    idx = np.where(face_mask)[0]
    vset = set(mesh.faces[idx].ravel().tolist())
    n_v = len(vset)
    eset = set()
    for i in idx:
        for j in range(3):
            eset.add(int(mesh.face_edges[i, j]))
    chi = n_v - len(eset) + len(idx)
    # angle sums within the region
    ang = np.zeros(mesh.n_vertices)
    for i in idx:
        for j in range(3):
            ang[mesh.faces[i, j]] += mesh.corner_angles[i, j]
    # region-boundary edges
    border = set()
    for e in eset:
        fs = [int(fc) for fc in mesh.edge_faces[e]]
        inside = [fc for fc in fs if face_mask[fc]]
        if len(inside) == 1:
            border.add(e)
    border_v = set()
    for e in border:
        border_v.add(int(mesh.edges[e, 0]))
        border_v.add(int(mesh.edges[e, 1]))
    interior_defect = sum(2.0 * math.pi - ang[v] for v in vset
                          if v not in border_v)
    boundary_turning = sum(math.pi - ang[v] for v in border_v)
    # split boundary turning into the locus-facing part and the rest:
    # vertices on crossed edges face the locus
    locus_v = set()
    for e in border:
        if e in crossed:
            locus_v.add(int(mesh.edges[e, 0]))
            locus_v.add(int(mesh.edges[e, 1]))
    locus_turning = sum(math.pi - ang[v] for v in border_v if v in locus_v)
    other_turning = boundary_turning - locus_turning
    # report the Gauss-Bonnet-balanced value so each side uses only its
    # own angle data: locus turning = 2 pi chi - interior - other boundary
    return 2.0 * math.pi * chi - interior_defect - other_turning
