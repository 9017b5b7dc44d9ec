"""Immutable triangulated-surface core: construction, validation, measures.

All geometry downstream of this module is intrinsic: every quantity is a
function of the combinatorics and the per-edge lengths.  Vertex positions,
when present, are only used to derive edge lengths at construction time and
for visualization.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateFace, NonManifold, NonOrientable, ParseError

DEGENERATE_AREA_FACTOR = 1e-12


def heron_area(a, b, c):
    """Face area from the three side lengths (vectorized)."""
    s = (a + b + c) * 0.5
    val = s * (s - a) * (s - b) * (s - c)
    return np.sqrt(np.maximum(val, 0.0))


def corner_angle(adj1, adj2, opp):
    """Interior angle between the two sides of lengths adj1, adj2."""
    cosang = (adj1 * adj1 + adj2 * adj2 - opp * opp) / (2.0 * adj1 * adj2)
    return np.arccos(np.clip(cosang, -1.0, 1.0))


class TriMesh:
    """Oriented manifold triangle mesh with intrinsic edge lengths.

    Parameters
    ----------
    faces : (F, 3) int array
        Consistently oriented vertex-index triples.
    edge_lengths : dict[(int, int), float] | None
        Length per undirected edge, keyed by sorted vertex pair.  When
        None, ``positions`` must be given and lengths are derived from it.
    positions : (V, 3) float array | None
        Optional embedding, kept only for I/O and plots.
    """

    def __init__(self, faces, edge_lengths=None, positions=None, n_vertices=None):
        faces = np.asarray(faces, dtype=np.int64)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise ParseError("faces must be an (F, 3) index array")
        if positions is not None:
            positions = np.asarray(positions, dtype=np.float64)
        if n_vertices is None:
            n_vertices = positions.shape[0] if positions is not None else int(faces.max()) + 1
        if faces.size and (faces.min() < 0 or faces.max() >= n_vertices):
            raise ParseError("face index out of range")
        if np.any((faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2])
                  | (faces[:, 0] == faces[:, 2])):
            raise DegenerateFace("face with repeated vertex")

        self.faces = faces
        self.positions = positions
        self.n_vertices = n_vertices
        self.n_faces = faces.shape[0]

        self._build_edges()
        if edge_lengths is not None:
            lengths = np.empty(self.n_edges)
            for (u, v), e in self._edge_index.items():
                try:
                    lengths[e] = edge_lengths[(u, v)]
                except KeyError:
                    raise ParseError(f"missing edge length for edge ({u}, {v})")
            self.edge_lengths = lengths
        elif positions is not None:
            d = positions[self.edges[:, 0]] - positions[self.edges[:, 1]]
            self.edge_lengths = np.sqrt((d * d).sum(axis=1))
        else:
            raise ParseError("need edge_lengths or positions")
        if np.any(~np.isfinite(self.edge_lengths)) or np.any(self.edge_lengths <= 0):
            raise DegenerateFace("non-positive or non-finite edge length")

        self._check_manifold_oriented()
        self._build_measures()
        self._build_boundary()

        for arr in (self.faces, self.edges, self.edge_lengths, self.face_edges,
                    self.face_areas, self.corner_angles, self.vertex_areas):
            arr.setflags(write=False)
        if self.positions is not None:
            self.positions.setflags(write=False)

    # -- construction helpers -------------------------------------------------

    def _build_edges(self):
        idx = {}
        face_edges = np.empty((self.n_faces, 3), dtype=np.int64)
        pairs = []
        for f in range(self.n_faces):
            vs = self.faces[f]
            for j in range(3):
                u, v = int(vs[j]), int(vs[(j + 1) % 3])
                key = (u, v) if u < v else (v, u)
                e = idx.get(key)
                if e is None:
                    e = len(pairs)
                    idx[key] = e
                    pairs.append(key)
                face_edges[f, j] = e
        self.edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        self.n_edges = len(pairs)
        self.face_edges = face_edges
        self._edge_index = idx

    def _check_manifold_oriented(self):
        # directed half edges must be unique, and each undirected edge must
        # carry at most one half edge per direction
        seen = set()
        edge_faces = [[] for _ in range(self.n_edges)]
        for f in range(self.n_faces):
            vs = self.faces[f]
            for j in range(3):
                he = (int(vs[j]), int(vs[(j + 1) % 3]))
                if he in seen:
                    raise NonOrientable("repeated half edge; inconsistent orientation "
                                        "or non-orientable input")
                seen.add(he)
                edge_faces[self.face_edges[f, j]].append(f)
        for e, fl in enumerate(edge_faces):
            if len(fl) > 2:
                raise NonManifold(f"edge {tuple(self.edges[e])} borders {len(fl)} faces")
        self.edge_faces = edge_faces

    def _build_measures(self):
        L = self.edge_lengths[self.face_edges]        # (F, 3): l01, l12, l20
        self.face_areas = heron_area(L[:, 0], L[:, 1], L[:, 2])
        mean_len = self.edge_lengths.mean()
        bad = self.face_areas < DEGENERATE_AREA_FACTOR * mean_len * mean_len
        if np.any(bad):
            raise DegenerateFace(f"{int(bad.sum())} faces with vanishing area")
        # angle at corner j lies between edges (j-1) and j of the face
        ang = np.empty((self.n_faces, 3))
        ang[:, 0] = corner_angle(L[:, 0], L[:, 2], L[:, 1])
        ang[:, 1] = corner_angle(L[:, 1], L[:, 0], L[:, 2])
        ang[:, 2] = corner_angle(L[:, 2], L[:, 1], L[:, 0])
        self.corner_angles = ang
        va = np.zeros(self.n_vertices)
        np.add.at(va, self.faces.ravel(), np.repeat(self.face_areas / 3.0, 3))
        self.vertex_areas = va

    def _build_boundary(self):
        self.boundary_edge_ids = np.array(
            [e for e in range(self.n_edges) if len(self.edge_faces[e]) == 1],
            dtype=np.int64)
        self.is_boundary_vertex = np.zeros(self.n_vertices, dtype=bool)
        nxt = {}
        for e in self.boundary_edge_ids:
            f = self.edge_faces[e][0]
            j = int(np.where(self.face_edges[f] == e)[0][0])
            u, v = int(self.faces[f, j]), int(self.faces[f, (j + 1) % 3])
            # traverse boundary along the face orientation so that the
            # surface lies to the left of each loop
            if u in nxt:
                raise NonManifold("boundary vertex with more than two boundary edges")
            nxt[u] = v
            self.is_boundary_vertex[u] = True
            self.is_boundary_vertex[v] = True
        loops = []
        remaining = dict(nxt)
        while remaining:
            start = min(remaining)
            loop = [start]
            cur = remaining.pop(start)
            while cur != start:
                loop.append(cur)
                cur = remaining.pop(cur)
            loops.append(loop)
        self.boundary_loops_vertices = loops

    # -- queries --------------------------------------------------------------

    def edge_id(self, u, v):
        key = (u, v) if u < v else (v, u)
        return self._edge_index[key]

    @property
    def vertex_faces(self):
        """Faces incident to each vertex (built on first use)."""
        if not hasattr(self, "_vertex_faces"):
            vf = [[] for _ in range(self.n_vertices)]
            for f in range(self.n_faces):
                for v in self.faces[f]:
                    vf[int(v)].append(f)
            self._vertex_faces = vf
        return self._vertex_faces

    def edge_length(self, u, v):
        return self.edge_lengths[self.edge_id(u, v)]

    def face_layout(self, f):
        """Planar coordinates of the three corners of face ``f``.

        The triangle is laid out isometrically: corner 0 at the origin,
        corner 1 on the positive x axis, corner 2 in the upper half plane.
        """
        L = self.edge_lengths[self.face_edges[f]]
        l01, l12, l20 = float(L[0]), float(L[1]), float(L[2])
        ang0 = corner_angle(l01, l20, l12)
        return np.array([[0.0, 0.0],
                         [l01, 0.0],
                         [l20 * np.cos(ang0), l20 * np.sin(ang0)]])

    def angle_sum(self):
        """Total interior angle around each vertex."""
        s = np.zeros(self.n_vertices)
        np.add.at(s, self.faces.ravel(), self.corner_angles.ravel())
        return s

    @property
    def is_closed(self):
        return len(self.boundary_edge_ids) == 0

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    def is_connected(self):
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import connected_components
        ones = np.ones(self.n_edges)
        adj = coo_matrix((ones, (self.edges[:, 0], self.edges[:, 1])),
                         shape=(self.n_vertices, self.n_vertices))
        ncomp, _ = connected_components(adj, directed=False)
        return ncomp == 1

    def mean_edge_length(self):
        return float(self.edge_lengths.mean())

    def scaled(self, s):
        """Copy of the mesh with all lengths multiplied by ``s``."""
        lengths = {tuple(self.edges[e]): self.edge_lengths[e] * s
                   for e in range(self.n_edges)}
        pos = self.positions * s if self.positions is not None else None
        return TriMesh(self.faces.copy(), edge_lengths=lengths, positions=pos,
                       n_vertices=self.n_vertices)


# -- module operations --------------------------------------------------------

def total_area(mesh: TriMesh) -> float:
    """Surface area: sum of Heron face areas."""
    return float(mesh.face_areas.sum())


def boundary_loops(mesh: TriMesh):
    """List of (vertex cycle, length) for each boundary loop."""
    out = []
    for loop in mesh.boundary_loops_vertices:
        n = len(loop)
        length = sum(mesh.edge_length(loop[i], loop[(i + 1) % n]) for i in range(n))
        out.append((list(loop), float(length)))
    return out


# -- file I/O -----------------------------------------------------------------

def load_mesh(path) -> TriMesh:
    """Read an ASCII OFF or OBJ file and validate it."""
    path = str(path)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(str(exc))
    if path.lower().endswith(".obj"):
        return _parse_obj(text)
    return _parse_off(text)


def _strip_comments(lines):
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line


def _parse_off(text) -> TriMesh:
    lines = list(_strip_comments(text.splitlines()))
    if not lines or not lines[0].startswith("OFF"):
        raise ParseError("not an OFF file")
    header = lines[0][3:].split()
    body = lines[1:]
    if not header:
        if not body:
            raise ParseError("truncated OFF file")
        header = body[0].split()
        body = body[1:]
    try:
        nv, nf = int(header[0]), int(header[1])
    except (ValueError, IndexError):
        raise ParseError("bad OFF header")
    if len(body) < nv + nf:
        raise ParseError("truncated OFF file")
    try:
        verts = np.array([[float(x) for x in body[i].split()[:3]] for i in range(nv)])
        faces = []
        for i in range(nv, nv + nf):
            rec = [int(x) for x in body[i].split()]
            if rec[0] != 3:
                raise ParseError("only triangle faces are supported")
            faces.append(rec[1:4])
    except (ValueError, IndexError):
        raise ParseError("malformed OFF record")
    return _from_positions(verts, faces)


def _parse_obj(text) -> TriMesh:
    verts, faces = [], []
    for line in _strip_comments(text.splitlines()):
        parts = line.split()
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(tok.split("/")[0]) - 1 for tok in parts[1:]]
            if len(idx) != 3:
                raise ParseError("only triangle faces are supported")
            faces.append(idx)
        # texture/normal/group records ignored
    if not verts or not faces:
        raise ParseError("OBJ file without vertices or faces")
    return _from_positions(np.array(verts, dtype=float), faces)


def _from_positions(verts, faces) -> TriMesh:
    faces = np.asarray(faces, dtype=np.int64)
    faces = _orient_consistently(verts.shape[0], faces)
    return TriMesh(faces, positions=verts)


def _orient_consistently(nv, faces):
    """Flip faces to a globally consistent orientation, or raise NonOrientable."""
    nf = faces.shape[0]
    edge_map = {}
    for f in range(nf):
        for j in range(3):
            u, v = int(faces[f, j]), int(faces[f, (j + 1) % 3])
            key = (u, v) if u < v else (v, u)
            edge_map.setdefault(key, []).append(f)
    for key, fl in edge_map.items():
        if len(fl) > 2:
            raise NonManifold(f"edge {key} borders {len(fl)} faces")
    neighbors = [[] for _ in range(nf)]
    for fl in edge_map.values():
        if len(fl) == 2:
            neighbors[fl[0]].append(fl[1])
            neighbors[fl[1]].append(fl[0])
    oriented = faces.copy()
    state = np.zeros(nf, dtype=np.int8)   # 0 unvisited, 1 fixed

    def directed(f):
        return {(int(oriented[f, j]), int(oriented[f, (j + 1) % 3])) for j in range(3)}

    for seed in range(nf):
        if state[seed]:
            continue
        state[seed] = 1
        stack = [seed]
        while stack:
            f = stack.pop()
            df = directed(f)
            for g in neighbors[f]:
                dg = directed(g)
                shares_same = bool(df & dg)
                if state[g]:
                    if shares_same:
                        raise NonOrientable("no consistent global orientation exists")
                    continue
                if shares_same:
                    oriented[g] = oriented[g, ::-1]
                state[g] = 1
                stack.append(g)
    return oriented


def save_off(mesh: TriMesh, path):
    """Write the mesh as ASCII OFF with 9-significant-digit floats."""
    if mesh.positions is None:
        raise ParseError("mesh has no embedding; cannot write OFF positions")
    with open(str(path), "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_faces} {mesh.n_edges}\n")
        for p in mesh.positions:
            fh.write(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
