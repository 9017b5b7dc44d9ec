"""Closed-form test-surface generators and their analytic oracles.

Generators produce intrinsic meshes: edge lengths are computed from the
surface metric directly, an embedding is attached only when an isometric
one exists.  Revolution surfaces use the warped-product metric
``dr^2 + phi(r)^2 dtheta^2``; edge lengths of coordinate-straight segments
are evaluated by Simpson quadrature in that metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParameter
from .mesh import TriMesh


@dataclass(frozen=True)
class RevolutionProfile:
    """Warping factor of a surface of revolution, phi > 0 on the open domain."""
    phi: object                 # callable r -> phi(r)
    r_min: float
    r_max: float
    cap_min: bool = False       # close the r_min end with an apex (phi -> 0 there)
    cap_max: bool = False


@dataclass
class GeneratedSurface:
    mesh: TriMesh
    kind: str
    params: dict
    oracles: dict = field(default_factory=dict)   # scalar analytic values
    profile: RevolutionProfile | None = None


# -- flat grid builders -------------------------------------------------------

def _grid_faces(nx, ny, wrap_x=False, wrap_y=False):
    """Triangulated structured grid; returns (vertex_id array, faces)."""
    mx = nx if wrap_x else nx + 1
    my = ny if wrap_y else ny + 1
    vid = np.arange(mx * my).reshape(my, mx)
    faces = []
    for j in range(ny):
        for i in range(nx):
            i1 = (i + 1) % mx
            j1 = (j + 1) % my
            a, b = vid[j, i], vid[j, i1]
            c, d = vid[j1, i1], vid[j1, i]
            faces.append((a, b, c))
            faces.append((a, c, d))
    return vid, np.array(faces, dtype=np.int64)


def _rectangle_mesh(width, height, nx, ny):
    vid, faces = _grid_faces(nx, ny)
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    pos = np.array([[x, y, 0.0] for y in ys for x in xs])
    return TriMesh(faces, positions=pos)


def _polar_mesh(r_in, r_out, n_r, n_theta):
    """Planar annulus (or disk when r_in == 0) on a polar grid."""
    rings = np.linspace(r_in, r_out, n_r + 1)
    thetas = np.linspace(0.0, 2 * math.pi, n_theta, endpoint=False)
    pts = []
    start = 0
    if r_in == 0.0:
        pts.append([0.0, 0.0, 0.0])
        rings = rings[1:]
        start = 1
    ring_ids = []
    for r in rings:
        ring_ids.append(list(range(len(pts), len(pts) + n_theta)))
        for t in thetas:
            pts.append([r * math.cos(t), r * math.sin(t), 0.0])
    faces = []
    if start:
        ring0 = ring_ids[0]
        for i in range(n_theta):
            faces.append((0, ring0[i], ring0[(i + 1) % n_theta]))
    for k in range(len(ring_ids) - 1):
        lo, hi = ring_ids[k], ring_ids[k + 1]
        for i in range(n_theta):
            i1 = (i + 1) % n_theta
            faces.append((lo[i], hi[i], hi[i1]))
            faces.append((lo[i], hi[i1], lo[i1]))
    return TriMesh(np.array(faces, dtype=np.int64), positions=np.array(pts))


# -- icosphere ----------------------------------------------------------------

def _icosphere(level):
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    verts = list(map(np.asarray, verts))
    for _ in range(level):
        cache = {}
        new_faces = []

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            m = cache.get(key)
            if m is None:
                p = verts[a] + verts[b]
                p /= np.linalg.norm(p)
                verts.append(p)
                m = len(verts) - 1
                cache[key] = m
            return m

        for f in faces:
            a, b, c = map(int, f)
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = np.array(new_faces, dtype=np.int64)
    return TriMesh(faces, positions=np.array(verts))


# -- revolution surfaces ------------------------------------------------------

_SIMPSON_N = 8


def _metric_segment_length(phi, r0, t0, r1, t1):
    """Length of the coordinate-straight segment in dr^2 + phi^2 dtheta^2."""
    dr = r1 - r0
    dt = t1 - t0
    if dt == 0.0:
        return abs(dr)
    xs = np.linspace(0.0, 1.0, _SIMPSON_N + 1)
    rs = r0 + dr * xs
    ph = np.asarray([phi(r) for r in rs], dtype=float)
    integrand = np.sqrt(dr * dr + ph * ph * dt * dt)
    w = np.ones(_SIMPSON_N + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float((integrand * w).sum() / (3.0 * _SIMPSON_N))


def revolution_mesh(profile: RevolutionProfile, n_r, n_theta) -> TriMesh:
    """Intrinsic mesh of a revolution surface on an (n_r x n_theta) grid."""
    phi = profile.phi
    rs = np.linspace(profile.r_min, profile.r_max, n_r + 1)
    dtheta = 2 * math.pi / n_theta
    ring_rs = list(rs)
    if profile.cap_min:
        ring_rs = ring_rs[1:]
    if profile.cap_max:
        ring_rs = ring_rs[:-1]

    pts = 0
    apex_min = apex_max = None
    if profile.cap_min:
        apex_min = pts
        pts += 1
    ring_ids = []
    for _ in ring_rs:
        ring_ids.append(list(range(pts, pts + n_theta)))
        pts += n_theta
    if profile.cap_max:
        apex_max = pts
        pts += 1

    faces = []
    lengths = {}

    def add_len(u, v, val):
        key = (u, v) if u < v else (v, u)
        lengths[key] = val

    if profile.cap_min:
        r1 = ring_rs[0]
        circ = phi(r1) * dtheta
        slant = _metric_segment_length(phi, profile.r_min, 0.0, r1, 0.0)
        ring = ring_ids[0]
        for i in range(n_theta):
            i1 = (i + 1) % n_theta
            faces.append((apex_min, ring[i], ring[i1]))
            add_len(apex_min, ring[i], slant)
            add_len(ring[i], ring[i1], circ)
    for k in range(len(ring_rs) - 1):
        r0, r1 = ring_rs[k], ring_rs[k + 1]
        lo, hi = ring_ids[k], ring_ids[k + 1]
        lr = _metric_segment_length(phi, r0, 0.0, r1, 0.0)
        ld = _metric_segment_length(phi, r0, 0.0, r1, dtheta)
        c0 = phi(r0) * dtheta
        c1 = phi(r1) * dtheta
        for i in range(n_theta):
            i1 = (i + 1) % n_theta
            faces.append((lo[i], hi[i], hi[i1]))
            faces.append((lo[i], hi[i1], lo[i1]))
            add_len(lo[i], lo[i1], c0)
            add_len(hi[i], hi[i1], c1)
            add_len(lo[i], hi[i], lr)
            add_len(lo[i], hi[i1], ld)
    if profile.cap_max:
        r0 = ring_rs[-1]
        circ = phi(r0) * dtheta
        slant = _metric_segment_length(phi, r0, 0.0, profile.r_max, 0.0)
        ring = ring_ids[-1]
        for i in range(n_theta):
            i1 = (i + 1) % n_theta
            faces.append((ring[i], apex_max, ring[i1]))
            add_len(ring[i], apex_max, slant)
            add_len(ring[i], ring[i1], circ)
    return TriMesh(np.array(faces, dtype=np.int64), edge_lengths=lengths,
                   n_vertices=pts)


def revolution_area(profile: RevolutionProfile, r_lo=None, r_hi=None, n=4096):
    """Area of the band r in [r_lo, r_hi]: 2*pi * integral of phi."""
    r_lo = profile.r_min if r_lo is None else r_lo
    r_hi = profile.r_max if r_hi is None else r_hi
    xs = np.linspace(r_lo, r_hi, n + 1)
    ph = np.asarray([profile.phi(r) for r in xs])
    return float(2 * math.pi * np.trapezoid(ph, xs))


# -- generators ---------------------------------------------------------------

def generate(kind, resolution, **params) -> GeneratedSurface:
    """Build a named test surface at the given resolution.

    ``resolution`` is the refinement level: grid surfaces use about
    ``2**resolution`` cells along their main direction, the sphere uses
    icosahedral subdivision depth ``resolution``.
    """
    if resolution < 3 and kind == "sphere" or resolution < 0:
        pass
    if kind not in _GENERATORS:
        raise BadParameter(f"unknown surface kind: {kind}")
    return _GENERATORS[kind](int(resolution), **params)


def _gen_plane_disk(level, radius=1.0):
    n = 2 ** level
    mesh = _polar_mesh(0.0, radius, n, max(3, 4 * n))
    return GeneratedSurface(mesh, "plane_disk", {"radius": radius},
                            {"area": math.pi * radius ** 2,
                             "boundary_length": 2 * math.pi * radius})


def _gen_annulus(level, r_in=1.0, r_out=2.0):
    if not 0 < r_in < r_out:
        raise BadParameter("need 0 < r_in < r_out")
    n = 2 ** level
    mesh = _polar_mesh(r_in, r_out, n, max(3, 4 * n))
    return GeneratedSurface(mesh, "annulus", {"r_in": r_in, "r_out": r_out},
                            {"area": math.pi * (r_out ** 2 - r_in ** 2),
                             "inner_length": 2 * math.pi * r_in,
                             "outer_length": 2 * math.pi * r_out})


def _gen_rectangle(level, width=1.0, height=1.0):
    n = 2 ** level
    nx = max(2, round(n * width / max(width, height)))
    ny = max(2, round(n * height / max(width, height)))
    mesh = _rectangle_mesh(width, height, nx, ny)
    return GeneratedSurface(mesh, "rectangle", {"width": width, "height": height},
                            {"area": width * height})


def _gen_sphere(level, radius=1.0):
    mesh = _icosphere(level)
    if radius != 1.0:
        mesh = mesh.scaled(radius)
    return GeneratedSurface(mesh, "sphere", {"radius": radius},
                            {"area": 4 * math.pi * radius ** 2,
                             "lambda1": 2.0 / radius ** 2,
                             "diameter": math.pi * radius})


def _gen_flat_cylinder(level, circumference=2 * math.pi, height=3.0):
    n = 2 ** level
    nx = max(3, n)
    ny = max(2, round(n * height / circumference))
    vid, faces = _grid_faces(nx, ny, wrap_x=True)
    dx = circumference / nx
    dy = height / ny
    lengths = {}
    my = ny + 1
    for j in range(my):
        for i in range(nx):
            a = vid[j, i]
            b = vid[j, (i + 1) % nx]
            lengths[(min(a, b), max(a, b))] = dx
    for j in range(ny):
        for i in range(nx):
            a, d = vid[j, i], vid[j + 1, i]
            lengths[(min(a, d), max(a, d))] = dy
            b = vid[j, (i + 1) % nx]
            c = vid[j + 1, (i + 1) % nx]
            lengths[(min(a, c), max(a, c))] = math.hypot(dx, dy)
    mesh = TriMesh(faces, edge_lengths=lengths, n_vertices=(ny + 1) * nx)
    return GeneratedSurface(mesh, "flat_cylinder",
                            {"circumference": circumference, "height": height},
                            {"area": circumference * height,
                             "loop_length": circumference})


def _gen_flat_torus(level, a=1.0, b=1.0):
    n = 2 ** level
    nx = max(3, n)
    ny = max(3, round(n * b / a))
    vid, faces = _grid_faces(nx, ny, wrap_x=True, wrap_y=True)
    dx, dy = a / nx, b / ny
    lengths = {}
    for j in range(ny):
        for i in range(nx):
            p = vid[j, i]
            q = vid[j, (i + 1) % nx]
            r = vid[(j + 1) % ny, i]
            s = vid[(j + 1) % ny, (i + 1) % nx]
            lengths[(min(p, q), max(p, q))] = dx
            lengths[(min(p, r), max(p, r))] = dy
            lengths[(min(p, s), max(p, s))] = math.hypot(dx, dy)
    mesh = TriMesh(faces, edge_lengths=lengths, n_vertices=nx * ny)
    return GeneratedSurface(mesh, "flat_torus", {"a": a, "b": b},
                            {"area": a * b,
                             "lambda1": (2 * math.pi / max(a, b)) ** 2})


def _gen_revolution(level, profile=None, n_theta=None):
    if profile is None:
        raise BadParameter("revolution requires a RevolutionProfile")
    n_r = 2 ** level
    span = profile.r_max - profile.r_min
    mid_phi = profile.phi(0.5 * (profile.r_min + profile.r_max))
    if n_theta is None:
        n_theta = max(8, round(n_r * 2 * math.pi * mid_phi / span))
    mesh = revolution_mesh(profile, n_r, n_theta)
    return GeneratedSurface(mesh, "revolution", {},
                            {"area": revolution_area(profile)}, profile=profile)


def _gen_yang_tube(level, eps=0.01, n_theta=None):
    if eps <= 0:
        raise BadParameter("yang_tube requires eps > 0")
    prof = RevolutionProfile(lambda r: (eps + r * r) ** 2, 0.0, 1.0)
    n_r = 2 ** level
    if n_theta is None:
        n_theta = max(8, 2 ** level)
    mesh = revolution_mesh(prof, n_r, n_theta)
    return GeneratedSurface(
        mesh, "yang_tube", {"eps": eps},
        {"area": revolution_area(prof),
         "loop_length_0": 2 * math.pi * eps ** 2,
         "loop_length_1": 2 * math.pi * (eps + 1.0) ** 2},
        profile=prof)


def dumbbell_profile(neck_width=0.05, bulb=1.0, neck_len=2.0, taper=None):
    """Two round bulbs joined by a thin waist; closed (caps at both ends).

    The warping factor is a sine cap of radius ``bulb`` at each end, a
    linear taper down to ``neck_width``, and a constant-width waist of
    length ``neck_len`` in the middle, so the neck is uniformly thin
    along its whole length.
    """
    if taper is None:
        taper = 1.5 * bulb
    cap = (math.pi / 2) * bulb
    span = 2 * (cap + taper) + neck_len

    def phi(r):
        r = min(r, span - r)
        if r < cap:
            return max(bulb * math.sin(r / bulb), 1e-12)
        if r < cap + taper:
            return bulb + (neck_width - bulb) * (r - cap) / taper
        return neck_width

    return RevolutionProfile(phi, 0.0, span, cap_min=True, cap_max=True)


def _gen_dumbbell(level, neck_width=0.05, bulb=1.0, neck_len=2.0,
                  taper=None, n_theta=None):
    if neck_width <= 0:
        raise BadParameter("dumbbell requires neck_width > 0")
    prof = dumbbell_profile(neck_width, bulb, neck_len, taper)
    n_r = max(2 ** level, 16)
    if n_theta is None:
        n_theta = max(12, 2 ** level)
    mesh = revolution_mesh(prof, n_r, n_theta)
    return GeneratedSurface(mesh, "dumbbell",
                            {"neck_width": neck_width, "bulb": bulb,
                             "neck_len": neck_len, "taper": taper},
                            {"area": revolution_area(prof)}, profile=prof)


def _gen_capsule(level, length=4.0, radius=1.0, n_theta=None):
    """Cylinder of the given length with spherical caps."""
    cap = math.pi / 2 * radius
    span = length + 2 * cap

    def phi(r):
        if r < cap:
            return radius * math.sin(r / radius)
        if r > span - cap:
            return radius * math.sin((span - r) / radius)
        return radius

    prof = RevolutionProfile(phi, 0.0, span, cap_min=True, cap_max=True)
    n_r = max(2 ** level, 16)
    if n_theta is None:
        n_theta = max(8, 2 ** level)
    mesh = revolution_mesh(prof, n_r, n_theta)
    return GeneratedSurface(mesh, "capsule", {"length": length, "radius": radius},
                            {"area": revolution_area(prof),
                             "diameter": span}, profile=prof)


_GENERATORS = {
    "plane_disk": _gen_plane_disk,
    "annulus": _gen_annulus,
    "rectangle": _gen_rectangle,
    "sphere": _gen_sphere,
    "flat_cylinder": _gen_flat_cylinder,
    "flat_torus": _gen_flat_torus,
    "revolution": _gen_revolution,
    "yang_tube": _gen_yang_tube,
    "dumbbell": _gen_dumbbell,
    "capsule": _gen_capsule,
}


# -- ambient Yang metric ------------------------------------------------------

def yang_ambient_scalar(r, eps):
    """Scalar curvature of dr^2 + r^2 dtheta^2 + (eps + r^2)^4 dtheta1^2.

    Closed form derived from the diagonal-metric identity
    R = -2 (a''/a + b''/b + a'b'/(a b)) with a = r, b = (eps + r^2)^2:

        R(r, eps) = -16 (eps + 2 r^2) / (eps + r^2)^2

    so the value on the central fiber is R(0, eps) = -16/eps, diverging to
    minus infinity as eps -> 0.
    """
    if eps <= 0:
        raise BadParameter("eps must be positive")
    r = float(r)
    if r < 0:
        raise BadParameter("r must be nonnegative")
    return -16.0 * (eps + 2.0 * r * r) / (eps + r * r) ** 2
