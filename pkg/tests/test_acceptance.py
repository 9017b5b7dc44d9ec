"""End-to-end acceptance: one test per headline property, each printing a
single PASS/FAIL line (run with -s or -v to see them)."""

import json
import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from graphgen import enumerate_regular_graphs, random_regular_graph
from stablesurf import cutlocus, growth, spectral, stability, surfaces, tubes
from stablesurf.cli import RunConfig, run
from stablesurf.cutlocus import (extract_cut_locus, orient,
                                 region_decomposition_check, sum_inequality)
from stablesurf.geodesics import SourceSet, distance_field
from stablesurf.mesh import total_area
from stablesurf.report import FAIL, PASS

K = cutlocus.LOCUS_SUBDIVISIONS


def _line(n, ok, detail):
    print(f"[criterion {n:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def test_criterion_01_flat_equality_calibration():
    worst = 0.0
    decay = {}
    for kind, kw, L in (
            ("flat_cylinder",
             dict(circumference=2 * math.pi, height=3.0), 2.0),
            ("annulus", dict(), 0.5)):
        slacks = []
        for lev in (3, 4, 5, 6):
            t0 = time.time()
            m = surfaces.generate(kind, lev, **kw).mesh
            rep = stability.check_theorem1(m, [0], L)
            dt = time.time() - t0
            assert dt < 10.0, f"{kind} level {lev} took {dt:.1f}s"
            h = m.mean_edge_length() / math.sqrt(total_area(m))
            bound = 5.0 * h * (abs(rep.lhs) + abs(rep.rhs))
            assert abs(rep.slack) <= bound, (kind, lev, rep.slack, bound)
            worst = max(worst, abs(rep.slack) / bound)
            slacks.append(abs(rep.slack))
        # first-order decay: four refinements cut the residual at least in half
        assert slacks[-1] < 0.5 * slacks[0], (kind, slacks)
        decay[kind] = slacks[-1] / slacks[0]
    _line(1, True, f"worst |slack|/bound {worst:.3f}, "
          f"decay ratios {decay}")


def test_criterion_02_sphere_point_source_inequality():
    m = surfaces.generate("sphere", 4).mesh
    worst = 0.0
    slacks = []
    for L in (2.0, 2.5, 3.0):
        rep = stability.check_theorem1(m, SourceSet.from_vertex(0), L, k=4)
        lhs_o = quad(lambda r: (1 / L ** 2 + (1 - r / L) ** 2)
                     * 2 * math.pi * math.sin(r), 0, L)[0]
        rhs_o = 2 * math.pi - 2 * math.pi * (1 - math.cos(L)) / L ** 2
        err = max(abs(rep.lhs - lhs_o) / lhs_o, abs(rep.rhs - rhs_o) / rhs_o)
        assert err <= 0.01, (L, err)
        assert rep.slack > 0.0, (L, rep.slack)
        worst = max(worst, err)
        slacks.append(rep.slack)
    _line(2, True, f"slacks {[f'{s:.4f}' for s in slacks]}, "
          f"worst oracle error {worst:.2%}")


def test_criterion_03_volume_growth_with_proof_constant():
    rng = np.random.default_rng(42)
    for kind, kw in (("plane_disk", {}),
                     ("sphere", {}),
                     ("flat_cylinder",
                      dict(circumference=2 * math.pi, height=3.0))):
        m = surfaces.generate(kind, 4, **kw).mesh
        if m.boundary_loops_vertices and kind == "plane_disk":
            db = distance_field(m, SourceSet.from_loops(0), k=2)
            center = int(np.argmax(db.values))
        else:
            center = 0
        df = distance_field(m, SourceSet.from_vertex(center), k=2)
        reach = float(df.values.max())
        for _ in range(20):
            L = rng.uniform(0.3, 0.95) * reach
            Lp = rng.uniform(0.1, 0.9) * L
            rep = growth.check_p1(m, center, Lp, L)
            assert rep.verdict == PASS, (kind, Lp, L)

    # certificate: uniformly thin long neck violates the 1/72 bound
    g = surfaces.generate("dumbbell", 6, neck_width=0.001, neck_len=2.6,
                          n_theta=8)
    m = g.mesh
    d0 = distance_field(m, SourceSet.from_vertex(0), k=2)
    p = int(np.argmin(np.abs(d0.values - 0.5 * g.profile.r_max)))
    cert = growth.check_p1(m, p, 1.2, 4.0)
    assert cert.verdict == FAIL
    assert cert.lhs > 1.3 * cert.rhs
    _line(3, True, "60 random pairs PASS; dumbbell certificate "
          f"(p={p}, L'=1.2, L=4.0) lhs={cert.lhs:.4f} > rhs={cert.rhs:.4f}")


def test_criterion_04_spectral_chain():
    t0 = time.time()
    m = surfaces.generate("sphere", 4).mesh
    spec = spectral.lambda1(m, k=2)
    assert abs(spec.lambda1 - 2.0) / 2.0 <= 0.02
    prod = spec.product
    assert abs(prod - 2 * math.pi ** 2) / (2 * math.pi ** 2) <= 0.05
    rep = spectral.check_p5(m, spectrum=spec)
    assert rep.verdict == PASS and prod >= 0.125

    bad = surfaces.generate("dumbbell", 6, neck_width=0.002, neck_len=2.0,
                            n_theta=8).mesh
    cert = spectral.check_p5(bad, k=2)
    assert cert.verdict == FAIL
    dt = time.time() - t0
    assert dt < 30.0
    _line(4, True, f"sphere lambda1={spec.lambda1:.4f}, "
          f"product={prod:.3f}; thin-neck product="
          f"{cert.rhs:.4f} < 1/8 ({dt:.1f}s)")


def test_criterion_05_orientation_certificates():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        g = random_regular_graph(rng)
        o = orient(g)
        for nd in g.nodes:
            if nd.kind != cutlocus.INITIAL:
                assert len(o.incoming(nd.index)) >= 1
        assert sum_inequality(g, o).lhs <= 1e-12
    graphs = enumerate_regular_graphs(5)
    for g in graphs:
        o = orient(g)
        for nd in g.nodes:
            if nd.kind != cutlocus.INITIAL:
                assert len(o.incoming(nd.index)) >= 1
        assert sum_inequality(g, o).lhs <= 1e-12
    _line(5, True, f"1000 random + {len(graphs)} exhaustive graphs "
          "certified (sum <= 1e-12, incoming everywhere)")


def _torus_positions(n):
    def pos(v):
        return ((v % n) / n, (v // n) / n)
    return pos


def _circle_dist(a, b):
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def test_criterion_06_locus_matches_brute_force_oracle():
    n = 16
    m = surfaces.generate("flat_torus", 4).mesh
    assert m.n_vertices == n * n
    d = distance_field(m, SourceSet.from_vertex(0), k=K)
    g = extract_cut_locus(m, d, 0.9)
    pos = _torus_positions(n)
    cell = 1.0 / n

    # the true locus of the point (0,0) on the unit torus is the pair of
    # circles x = 1/2 and y = 1/2
    def dist_to_oracle(x, y):
        return min(_circle_dist(x, 0.5), _circle_dist(y, 0.5))

    pts = []
    for s in g.segments:
        for p in s.polyline or []:
            if p.kind == "edge":
                u, v = (int(m.edges[p.index, 0]), int(m.edges[p.index, 1]))
                xu, yu = pos(u)
                xv, yv = pos(v)
                dx = ((xv - xu + 0.5) % 1.0) - 0.5
                dy = ((yv - yu + 0.5) % 1.0) - 0.5
                t = p.s / m.edge_lengths[p.index]
                pts.append(((xu + t * dx) % 1.0, (yu + t * dy) % 1.0))
            else:
                pts.append(pos(p.index))
    assert pts
    h_extract = max(dist_to_oracle(x, y) for x, y in pts)

    # coverage: every oracle point has an extracted point within one cell
    h_oracle = 0.0
    for t in np.linspace(0.0, 1.0, 200, endpoint=False):
        for ox, oy in ((t, 0.5), (0.5, t)):
            best = min(math.hypot(_circle_dist(x, ox), _circle_dist(y, oy))
                       for x, y in pts)
            h_oracle = max(h_oracle, best)
    assert max(h_extract, h_oracle) <= cell

    cyl = surfaces.generate("flat_cylinder", 4).mesh
    dc = distance_field(cyl, SourceSet.from_loops(0), k=K)
    empty = extract_cut_locus(cyl, dc, 2.0)
    assert not empty.segments and not empty.nodes
    _line(6, True, f"torus Hausdorff {max(h_extract, h_oracle):.4f} "
          f"<= cell {cell:.4f}; cylinder loop-source locus empty")


def test_criterion_07_region_decomposition_identity():
    m = surfaces.generate("flat_cylinder", 5, circumference=2 * math.pi,
                          height=3.0).mesh
    d = distance_field(m, SourceSet.from_loops(0, 1), k=K)
    g = extract_cut_locus(m, d, 2.0)
    rep = region_decomposition_check(m, d, 2.0, g)
    assert rep.verdict == PASS
    meta = rep.metadata
    assert meta["worst_identity_rel_err"] <= 0.01
    sides = meta["locus_turning_sides"]
    cancel = abs(meta["locus_turning_cancellation"])
    scale = max(abs(sides[0]), abs(sides[1]), 2 * math.pi)
    assert cancel <= 0.01 * scale
    _line(7, True, f"type-I identity err {meta['worst_identity_rel_err']:.2e}"
          f", line-curvature cancellation {cancel:.2e}")


def test_criterion_08_thin_end_scan_and_ambient_oracle():
    eps_values = (1.0, 0.1, 0.01, 0.001)
    fam = [surfaces.generate("yang_tube", 4, eps=e, n_theta=32).mesh
           for e in eps_values]
    res = tubes.ncfd_scan(fam, A0=0.5, L0=2.0)
    flagged_eps = [eps_values[i] for i in res["flagged_indices"]]
    assert any(e <= 0.01 for e in flagged_eps)

    flat = [surfaces.generate("flat_cylinder", 4, circumference=c,
                              height=1.0).mesh
            for c in (2.0, 1.0, 0.5, 0.25)]
    assert tubes.ncfd_scan(flat, A0=0.2, L0=2.0)["flagged_indices"] == []

    values = [surfaces.yang_ambient_scalar(0.0, e) for e in eps_values]
    assert all(b < a for a, b in zip(values, values[1:]))   # monotone to -inf
    h = 1e-5
    for e, v in zip(eps_values, values):
        def b(x):
            return (e + x * x) ** 2
        bpp = (b(h) - 2 * b(0) + b(-h)) / h ** 2
        fd = -2.0 * (bpp / b(0) + bpp / b(0))
        assert abs(fd - v) / abs(v) <= 1e-3
    _line(8, True, f"flagged eps {flagged_eps}, flat family clean, "
          f"central scalar {values[-1]:.0f} matches FD oracle")


def test_criterion_09_scale_invariance():
    m = surfaces.generate("flat_cylinder", 4, circumference=2 * math.pi,
                          height=3.0).mesh
    m2 = m.scaled(2.0)
    a = stability.check_theorem1(m, [0], 2.0)
    b = stability.check_theorem1(m2, [0], 4.0)
    d1 = abs(a.slack - b.slack)
    assert d1 <= 1e-12
    sa = tubes.size_relation(m, 1.2)
    sb = tubes.size_relation(m2, 2.4)
    d2 = abs(sa.slack - sb.slack)
    assert d2 <= 1e-12
    _line(9, True, f"slack drift under 2x scaling: theorem {d1:.1e}, "
          f"size relation {d2:.1e}")


def test_criterion_10_byte_reproducibility(tmp_path):
    def once(d):
        cfg = RunConfig(
            input="flat_cylinder:4",
            checks=[{"name": "theorem1", "L": 2.0},
                    {"name": "size_relation", "t": 1.5},
                    {"name": "flatness", "tol": 0.01},
                    {"name": "locus_sum", "source": "loops:0,1", "L": 2.0}],
            refinement=4, seed=7, output_dir=str(d))
        code, art = run(cfg)
        assert code == 0
        return open(art["report"], "rb").read()

    a = once(tmp_path / "a")
    b = once(tmp_path / "b")
    assert a == b
    json.loads(a)          # well-formed on top of byte identity
    _line(10, True, f"report.json byte-identical across runs "
          f"({len(a)} bytes)")
