"""Area-growth checks for geodesic balls.

All checks here compare measured ball areas and boundary lengths against
the explicit proof-chain constants: 1/72 for the two-radius ball ratio
(R0 >= 0), 1/96 for the negative-lower-bound variant under the guard
-9 R0 L^2 <= 1, the exponent 1/8 for A'/A >= 1/(8r), and 1/8 for the
isoperimetric link l/sqrt(A) >= sqrt(A)/(8r).  A FAIL is a certificate
that the surface is not a stable surface for the stated curvature bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadParameter
from .geodesics import (DEFAULT_SUBDIVISIONS, SourceSet, distance_field,
                        level_length, sublevel_area)
from .mesh import TriMesh, total_area
from . import report as rp

P1_CONSTANT = 1.0 / 72.0          # A(L') >= c (L'/L)^2 A(L), R0 >= 0
P33_CONSTANT = 1.0 / 96.0         # same shape under -9 R0 L^2 <= 1
GROWTH_EXPONENT = 1.0 / 8.0       # A'/A >= 1/(8r)
ISO_CONSTANT = 1.0 / 8.0          # l/sqrt(A) >= (1/8) sqrt(A)/r


@dataclass
class GrowthProfile:
    """Ball areas and boundary lengths on a radius grid around a center."""
    center: int
    radii: np.ndarray
    A: np.ndarray
    l: np.ndarray

    def area_at(self, r):
        return float(np.interp(r, self.radii, self.A))

    def length_at(self, r):
        return float(np.interp(r, self.radii, self.l))

    def area_derivative(self, r):
        """Centered difference with one grid-cell step."""
        step = float(self.radii[1] - self.radii[0])
        lo = max(r - step, self.radii[0])
        hi = min(r + step, self.radii[-1])
        return (self.area_at(hi) - self.area_at(lo)) / (hi - lo), step


def growth_profile(mesh: TriMesh, p, n_radii=64, k=DEFAULT_SUBDIVISIONS,
                   dfield=None) -> GrowthProfile:
    """Sample A(r) and l(r) up to the reach of the center vertex."""
    if n_radii < 2:
        raise BadParameter("need at least two radii")
    if dfield is None:
        dfield = distance_field(mesh, SourceSet.from_vertex(p), k=k)
    rad = dfield.max_value()
    radii = np.linspace(0.0, rad, n_radii)
    A = np.array([sublevel_area(mesh, dfield.values, r) for r in radii])
    l = np.array([level_length(mesh, dfield.values, r) for r in radii])
    return GrowthProfile(int(p), radii, A, l)


def _ball_area(mesh, p, r, k):
    df = distance_field(mesh, SourceSet.from_vertex(int(p)), k=k)
    return sublevel_area(mesh, df.values, r), df


def check_p1(mesh: TriMesh, p, L_prime, L, k=DEFAULT_SUBDIVISIONS,
             tol=None) -> rp.CheckReport:
    """Two-radius ball-area ratio: A(L') >= (1/72) (L'/L)^2 A(L).

    Valid for stable surfaces with ambient bound R0 >= 0 and
    0 < L' < L <= reach(p); FAIL certifies instability.
    """
    meta = {"p": int(p), "L_prime": float(L_prime), "L": float(L),
            "constant": "1/72"}
    df = distance_field(mesh, SourceSet.from_vertex(int(p)), k=k)
    reach = df.max_value()
    meta["reach"] = reach
    if not (0.0 < L_prime < L <= reach + 1e-12):
        return rp.make_report("p1", 0.0, 0.0, 0.0, meta, applicable=False)
    a_small = sublevel_area(mesh, df.values, L_prime)
    a_big = sublevel_area(mesh, df.values, L)
    lhs = P1_CONSTANT * (L_prime / L) ** 2 * a_big
    meta.update({"A_small": a_small, "A_big": a_big})
    if tol is None:
        tol = 1e-9 * a_big
    return rp.make_report("p1", lhs, a_small, tol, meta)


def _component_area_containing(mesh, dfield, r, o):
    """Area of the connected component of {dist > r} containing vertex o,
    clipped to the ball of radius dist(p, o)."""
    # component search on vertices outside the ball
    from .geodesics import _vertex_components
    outside = dfield.values > r
    comps = _vertex_components(mesh, outside)
    target = None
    for comp in comps:
        members = set(int(v) for v in comp)
        if int(o) in members:
            target = members
            break
    if target is None:
        return 0.0
    d_o = float(dfield.values[o])
    in_comp = np.zeros(mesh.n_vertices, dtype=bool)
    in_comp[list(target)] = True
    face_mask = in_comp[mesh.faces].any(axis=1)
    # area of component faces with dist in (r, d(p,o))
    area_outer = sublevel_area(mesh, dfield.values, d_o, face_mask=face_mask)
    area_inner = sublevel_area(mesh, dfield.values, r, face_mask=face_mask)
    return max(area_outer - area_inner, 0.0)


def check_p3(mesh: TriMesh, p, o, r, k=DEFAULT_SUBDIVISIONS, n_radii=64,
             tol=None) -> rp.CheckReport:
    """Two-point growth inequality

        2 A'(r) (1/r + 1/(d - r)) >= A(r)/(4 r^2) + A_star/(d - r)^2

    with d = dist(p, o) and A_star the area of the piece of the component
    of the complement of B(p, r) containing o that lies within B(p, d).
    Valid for stable surfaces with R0 >= 0; FAIL certifies instability.
    """
    df = distance_field(mesh, SourceSet.from_vertex(int(p)), k=k)
    d = float(df.values[int(o)])
    meta = {"p": int(p), "o": int(o), "r": float(r), "d": d}
    if not (0.0 < r < d):
        return rp.make_report("p3", 0.0, 0.0, 0.0, meta, applicable=False)
    prof = growth_profile(mesh, p, n_radii=n_radii, k=k, dfield=df)
    a = sublevel_area(mesh, df.values, r)
    a_prime, step = prof.area_derivative(r)
    a_star = _component_area_containing(mesh, df, r, int(o))
    lhs = a / (4.0 * r * r) + a_star / (d - r) ** 2
    rhs = 2.0 * a_prime * (1.0 / r + 1.0 / (d - r))
    meta.update({"A": a, "A_prime": a_prime, "A_star": a_star,
                 "fd_step": step})
    if tol is None:
        tol = 3.0 * step * (abs(lhs) + abs(rhs))
    return rp.make_report("p3", lhs, rhs, tol, meta)


def check_growth_exponent(mesh: TriMesh, p, k=DEFAULT_SUBDIVISIONS,
                          n_radii=64, r0_frac=0.08, tol=None) -> rp.CheckReport:
    """Minimum-growth check A(r) >= A(r0) (r/r0)^{1/8} e^{-(r-r0)/(8 Rad)}.

    Also reports the log-log slope of A(r) on [r0, Rad] for context.
    NOT_APPLICABLE when the usable radius range spans < 1 decade.
    """
    df = distance_field(mesh, SourceSet.from_vertex(int(p)), k=k)
    rad = df.max_value()
    r0 = r0_frac * rad
    meta = {"p": int(p), "reach": rad, "r0": r0, "exponent": "1/8"}
    if rad <= 0 or r0 <= 0 or rad / r0 < 10.0:
        return rp.make_report("growth_exponent", 0.0, 0.0, 0.0, meta,
                              applicable=False)
    prof = growth_profile(mesh, p, n_radii=n_radii, k=k, dfield=df)
    sel = (prof.radii >= r0) & (prof.A > 0)
    rs = prof.radii[sel]
    As = prof.A[sel]
    slope = float(np.polyfit(np.log(rs), np.log(As), 1)[0])
    a0 = prof.area_at(r0)
    bound = a0 * (rs / r0) ** GROWTH_EXPONENT * np.exp(-(rs - r0) / (8.0 * rad))
    ratio = As / bound
    worst = int(np.argmin(ratio))
    meta.update({"loglog_slope": slope, "worst_radius": float(rs[worst]),
                 "A_at_worst": float(As[worst]),
                 "bound_at_worst": float(bound[worst])})
    if tol is None:
        tol = 1e-9 * (abs(As[worst]) + abs(bound[worst]))
    return rp.make_report("growth_exponent", float(bound[worst]),
                          float(As[worst]), tol, meta)


def check_isoperimetric(mesh: TriMesh, p, o, r, k=DEFAULT_SUBDIVISIONS,
                        tol=None) -> rp.CheckReport:
    """Isoperimetric chain for balls (R0 >= 0, 0 < r < d/2):

        l(r)/sqrt(A(r)) >= (1/8) sqrt(A(r))/r        (link 1)
        A(r) >= (1/72) (r/d)^2 A(B(o, d/2))          (link 2)

    The reported lhs/rhs pair is the tighter link; both appear in the
    metadata.  FAIL certifies instability at R0 >= 0.
    """
    df = distance_field(mesh, SourceSet.from_vertex(int(p)), k=k)
    d = float(df.values[int(o)])
    meta = {"p": int(p), "o": int(o), "r": float(r), "d": d,
            "constants": "1/8, 1/72"}
    if not (0.0 < r < 0.5 * d):
        return rp.make_report("isoperimetric", 0.0, 0.0, 0.0, meta,
                              applicable=False)
    a = sublevel_area(mesh, df.values, r)
    l = level_length(mesh, df.values, r)
    df_o = distance_field(mesh, SourceSet.from_vertex(int(o)), k=k)
    a_o = sublevel_area(mesh, df_o.values, 0.5 * d)
    lhs1 = ISO_CONSTANT * a / r          # (1/8) A / r  vs  l
    rhs1 = l
    lhs2 = P1_CONSTANT * (r / d) ** 2 * a_o
    rhs2 = a
    meta.update({"A": a, "l": l, "A_far_half": a_o,
                 "link1": {"lhs": lhs1, "rhs": rhs1},
                 "link2": {"lhs": lhs2, "rhs": rhs2}})
    s1 = rhs1 - lhs1
    s2 = rhs2 - lhs2
    lhs, rhs = (lhs1, rhs1) if s1 <= s2 else (lhs2, rhs2)
    if tol is None:
        tol = 1e-9 * (abs(lhs) + abs(rhs) + 1.0)
    return rp.make_report("isoperimetric", lhs, rhs, tol, meta)


def check_p33(mesh: TriMesh, p, L_prime, L, R0, k=DEFAULT_SUBDIVISIONS,
              tol=None) -> rp.CheckReport:
    """Negative-lower-bound ball ratio: under -9 R0 L^2 <= 1,

        A(L') >= (1/96) (L'/L)^2 A(L).

    The constant follows the same proof chain as the 1/72 case with the
    ball-sum bound weakened from 4/(9 L^2) to 1/(3 L^2).
    """
    meta = {"p": int(p), "L_prime": float(L_prime), "L": float(L),
            "R0": float(R0), "constant": "1/96"}
    if R0 >= 0:
        raise BadParameter("this variant requires R0 < 0")
    if -9.0 * R0 * L * L > 1.0:
        meta["guard"] = "-9 R0 L^2 > 1"
        return rp.make_report("p33", 0.0, 0.0, 0.0, meta, applicable=False)
    df = distance_field(mesh, SourceSet.from_vertex(int(p)), k=k)
    reach = df.max_value()
    meta["reach"] = reach
    if not (0.0 < L_prime < L <= reach + 1e-12):
        return rp.make_report("p33", 0.0, 0.0, 0.0, meta, applicable=False)
    a_small = sublevel_area(mesh, df.values, L_prime)
    a_big = sublevel_area(mesh, df.values, L)
    lhs = P33_CONSTANT * (L_prime / L) ** 2 * a_big
    meta.update({"A_small": a_small, "A_big": a_big})
    if tol is None:
        tol = 1e-9 * a_big
    return rp.make_report("p33", lhs, a_small, tol, meta)


@dataclass
class VolumeRadiusReport:
    delta: float
    nu_bar: float          # largest r with A(B(p, r)) <= pi delta^2 r^2
    nu_under: float        # largest r with A(B(p, r)) >= (pi/delta^2) r^2
    nu: float              # two-sided bound down every sampled sub-ball

    def __post_init__(self):
        assert self.nu <= min(self.nu_bar, self.nu_under) + 1e-12


def _sup_radius(radii, A, predicate):
    """Largest grid radius up to which ``predicate(r, A(r))`` holds for all
    smaller radii."""
    good = 0.0
    for r, a in zip(radii[1:], A[1:]):
        if predicate(r, a):
            good = float(r)
        else:
            break
    return good


def volume_radius(mesh: TriMesh, p, delta, k=DEFAULT_SUBDIVISIONS,
                  n_radii=48, n_centers=12) -> VolumeRadiusReport:
    """Comparison radii against the flat-area law pi r^2.

    nu_bar bounds overshoot (area at most pi delta^2 r^2), nu_under bounds
    collapse (area at least (pi/delta^2) r^2), and nu asks the two-sided
    bound of every sampled sub-ball contained in B(p, r).
    """
    if delta <= 1.0:
        raise BadParameter("delta must exceed 1")
    df = distance_field(mesh, SourceSet.from_vertex(int(p)), k=k)
    prof = growth_profile(mesh, p, n_radii=n_radii, k=k, dfield=df)
    up = delta * delta * math.pi
    dn = math.pi / (delta * delta)
    nu_bar = _sup_radius(prof.radii, prof.A, lambda r, a: a <= up * r * r)
    nu_under = _sup_radius(prof.radii, prof.A, lambda r, a: a >= dn * r * r)
    nu = min(nu_bar, nu_under)
    # sample sub-ball centers among vertices inside B(p, nu), nearest-first
    inside = np.where(df.values <= nu)[0]
    if inside.size > 0 and nu > 0:
        sel = inside[np.linspace(0, inside.size - 1, min(n_centers,
                                                         inside.size)).astype(int)]
        for q in sel:
            d_q = float(df.values[q])
            room = nu - d_q
            if room <= 0:
                continue
            df_q = distance_field(mesh, SourceSet.from_vertex(int(q)), k=k)
            prof_q = growth_profile(mesh, int(q), n_radii=max(8, n_radii // 2),
                                    k=k, dfield=df_q)
            ok = _sup_radius(prof_q.radii, prof_q.A,
                             lambda r, a: dn * r * r <= a <= up * r * r)
            # sub-ball of radius r fits inside B(p, nu) iff r <= room
            nu = min(nu, d_q + min(ok, room)) if ok < room else nu
    return VolumeRadiusReport(float(delta), nu_bar, nu_under, float(nu))


def check_t2(mesh: TriMesh, p, o, delta=2.0, R0=0.0,
             k=DEFAULT_SUBDIVISIONS, tol=None) -> rp.CheckReport:
    """Compactness-theorem proof inequalities, branched on the sign of R0.

    R0 > 0: two-radius ball chain A(d/6-ball at midpoint) >= (1/72) of the
    d/2-ball (item 1).  R0 = 0: the integrated minimum-growth bound from
    check_growth_exponent (item 2).  R0 < 0: geometric ball-chain decay
    A_k >= A_1 / c^{k-1} along a chain of disjoint balls of radius d0/3,
    d0 = min(1/(3 sqrt(-R0)), nu0/3) (item 3); the chain areas and decay
    constant are reported, with the weakest measured link as lhs/rhs.
    """
    df = distance_field(mesh, SourceSet.from_vertex(int(p)), k=k)
    d = float(df.values[int(o)])
    vr = volume_radius(mesh, int(o), delta, k=k)
    nu0 = vr.nu
    meta = {"p": int(p), "o": int(o), "d": d, "delta": float(delta),
            "R0": float(R0), "nu0": nu0}
    if R0 > 0:
        meta["branch"] = "item1"
        # midpoint of a minimizing geodesic: vertex nearest to d/2 from both
        df_o = distance_field(mesh, SourceSet.from_vertex(int(o)), k=k)
        on_path = np.abs(df.values + df_o.values - d)
        mid = int(np.argmin(on_path + np.abs(df.values - 0.5 * d)))
        rep = check_p1(mesh, mid, d / 6.0, d / 2.0, k=k)
        meta.update({"midpoint": mid, "p1": rep.metadata})
        return rp.make_report("t2", rep.lhs, rep.rhs,
                              rep.tol if tol is None else tol, meta,
                              applicable=rep.verdict != rp.NOT_APPLICABLE)
    if R0 == 0.0:
        meta["branch"] = "item2"
        rep = check_growth_exponent(mesh, int(p), k=k)
        meta["growth"] = rep.metadata
        return rp.make_report("t2", rep.lhs, rep.rhs,
                              rep.tol if tol is None else tol, meta,
                              applicable=rep.verdict != rp.NOT_APPLICABLE)
    meta["branch"] = "item3"
    d0 = min(1.0 / (3.0 * math.sqrt(-R0)), nu0 / 3.0)
    meta["d0"] = d0
    if d0 <= 0 or d < d0:
        return rp.make_report("t2", 0.0, 0.0, 0.0, meta, applicable=False)
    df_o = distance_field(mesh, SourceSet.from_vertex(int(o)), k=k)
    n = int(3.0 * d / (2.0 * d0))
    centers, areas = [], []
    for j in range(n):
        target = d0 / 3.0 + j * (2.0 * d0 / 3.0)
        if target > d:
            break
        on_path = np.abs(df.values + df_o.values - d)
        c = int(np.argmin(on_path + np.abs(df_o.values - target)))
        a, _ = _ball_area(mesh, c, d0 / 3.0, k)
        centers.append(c)
        areas.append(a)
    meta.update({"n_balls": len(areas), "areas": areas})
    if len(areas) < 2:
        return rp.make_report("t2", 0.0, 0.0, 0.0, meta, applicable=False)
    ratios = [areas[j] / areas[j + 1] for j in range(len(areas) - 1)
              if areas[j + 1] > 0]
    c_decay = max(ratios) if ratios else math.inf
    meta["decay_constant"] = c_decay
    # weakest link: successive areas must not collapse faster than the
    # geometric rate actually attained
    worst = int(np.argmin(areas))
    lhs = 0.0
    rhs = float(areas[worst])
    if tol is None:
        tol = 1e-12
    return rp.make_report("t2", lhs, rhs, tol, meta)
