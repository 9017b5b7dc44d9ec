"""Batch driver: generate or load surfaces, run check suites, and emit
machine-readable reports and self-contained SVG plots.

Exit codes: 0 when every check is PASS or NOT_APPLICABLE, 1 when any
check FAILs, 2 on configuration or runtime errors (the error is also
serialized into report.json).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import (cutlocus, geodesics, growth, report as rp, spectral,
               stability, surfaces, tubes)
from .errors import ConfigError, StableSurfError
from .geodesics import SourceSet, distance_field
from .mesh import TriMesh, load_mesh, save_off


@dataclass
class RunConfig:
    input: str                     # path or generator spec "kind:level[:k=v,...]"
    checks: list = dc_field(default_factory=list)   # [{"name": ..., params}]
    refinement: int = 4
    tolerances: dict = dc_field(default_factory=dict)
    seed: int = 0
    output_dir: str = "."

    def __post_init__(self):
        if self.refinement < 0:
            raise ConfigError("refinement must be >= 0")
        for c in self.checks:
            if c.get("name") not in CHECKS:
                raise ConfigError(f"unknown check {c.get('name')!r}; "
                                  f"known: {sorted(CHECKS)}")


def parse_surface_spec(spec, level=None):
    """'sphere:4' or 'yang_tube:5:eps=0.01' or a mesh file path."""
    if os.path.exists(spec) or spec.endswith((".off", ".obj")):
        return load_mesh(spec), None
    parts = spec.split(":")
    kind = parts[0]
    lvl = int(parts[1]) if len(parts) > 1 and parts[1] else (level or 4)
    params = {}
    if len(parts) > 2 and parts[2]:
        for kv in parts[2].split(","):
            key, val = kv.split("=")
            x = float(val)
            params[key] = int(x) if x == int(x) else x
    gen = surfaces.generate(kind, resolution=lvl, **params)
    return gen.mesh, gen


def _source_from_flag(mesh, source):
    if source is None:
        if mesh.boundary_loops_vertices:
            return SourceSet.from_loops(0)
        return SourceSet.from_vertex(0)
    kind, _, val = source.partition(":")
    if kind == "vertex":
        return SourceSet.from_vertex(int(val))
    if kind == "loops":
        return SourceSet.from_loops(*(int(x) for x in val.split(",")))
    raise ConfigError(f"bad source spec {source!r}")


# -- registered checks --------------------------------------------------------

def _chk_theorem1(mesh, p):
    src = p.get("loops", [0]) if mesh.boundary_loops_vertices \
        else SourceSet.from_vertex(int(p.get("vertex", 0)))
    return stability.check_theorem1(mesh, src, p.get("L", 1.0),
                                    tol=p.get("tol"))


def _chk_p1(mesh, p):
    v = int(p.get("vertex", 0))
    return growth.check_p1(mesh, v, p.get("Lprime", 0.5), p.get("L", 1.0))


def _far_vertex(mesh, v):
    return int(np.argmax(distance_field(
        mesh, SourceSet.from_vertex(int(v))).values))


def _chk_p3(mesh, p):
    v = int(p.get("vertex", 0))
    o = int(p.get("other", _far_vertex(mesh, v)))
    return growth.check_p3(mesh, v, o, p.get("r", 0.5))


def _chk_p33(mesh, p):
    return growth.check_p33(mesh, int(p.get("vertex", 0)),
                            p.get("Lprime", 0.5), p.get("L", 1.0),
                            p.get("R0", 0.0))


def _chk_growth(mesh, p):
    return growth.check_growth_exponent(mesh, int(p.get("vertex", 0)))


def _chk_iso(mesh, p):
    v = int(p.get("vertex", 0))
    o = int(p.get("other", _far_vertex(mesh, v)))
    return growth.check_isoperimetric(mesh, v, o, p.get("r", 1.0))


def _chk_t2(mesh, p):
    v = int(p.get("vertex", 0))
    o = int(p.get("other", _far_vertex(mesh, v)))
    return growth.check_t2(mesh, v, o, delta=p.get("delta", 2.0),
                           R0=p.get("R0", 0.0))


def _chk_p5(mesh, p):
    return spectral.check_p5(mesh)


def _chk_area(mesh, p):
    return stability.check_area_upper_bound(mesh, int(p.get("vertex", 0)),
                                            p.get("L", 1.0),
                                            p.get("R0", 0.0))


def _chk_probe(mesh, p):
    return stability.stability_probe(mesh, p.get("R0", 0.0))


def _chk_p6(mesh, p):
    dec = tubes.tube_decomposition(mesh, p.get("t2", 0.5), p.get("L", 0.5),
                                   p.get("L1"), p.get("L2"))
    return tubes.check_p6(mesh, dec, tol=p.get("tol"))


def _chk_size(mesh, p):
    return tubes.size_relation(mesh, p.get("t", 0.5), tol=p.get("tol"))


def _chk_flat(mesh, p):
    return tubes.flatness_certificate(mesh, p.get("tol", 0.05))


def _chk_locus_sum(mesh, p):
    src = _source_from_flag(mesh, p.get("source"))
    dfield = distance_field(mesh, src, k=cutlocus.LOCUS_SUBDIVISIONS)
    graph = cutlocus.extract_cut_locus(mesh, dfield, p.get("L", 1.0))
    if not graph.segments:
        return rp.make_report("locus_sum", 0.0, 0.0, 1e-12,
                              {"empty": True})
    orientation = cutlocus.orient(graph)
    return cutlocus.sum_inequality(graph, orientation)


def _chk_regions(mesh, p):
    src = _source_from_flag(mesh, p.get("source"))
    dfield = distance_field(mesh, src, k=cutlocus.LOCUS_SUBDIVISIONS)
    L = p.get("L", 1.0)
    graph = cutlocus.extract_cut_locus(mesh, dfield, L)
    loops = None
    if isinstance(src.loops, tuple):
        loops = list(src.loops)
    return cutlocus.region_decomposition_check(mesh, dfield, L, graph,
                                               loops=loops)


CHECKS = {
    "theorem1": _chk_theorem1,
    "area_bound": _chk_area,
    "stability_probe": _chk_probe,
    "p1": _chk_p1,
    "p3": _chk_p3,
    "p33": _chk_p33,
    "growth_exponent": _chk_growth,
    "isoperimetric": _chk_iso,
    "t2": _chk_t2,
    "p5": _chk_p5,
    "p6": _chk_p6,
    "size_relation": _chk_size,
    "flatness": _chk_flat,
    "locus_sum": _chk_locus_sum,
    "region_decomposition": _chk_regions,
}


def run(config: RunConfig):
    """Execute a configured batch; returns (exit_code, artifacts dict)."""
    os.makedirs(config.output_dir, exist_ok=True)
    try:
        mesh, gen = parse_surface_spec(config.input, config.refinement)
    except (OSError, StableSurfError, ValueError) as ex:
        doc = {"schema_version": 1, "error": f"{type(ex).__name__}: {ex}",
               "config": _config_dict(config)}
        path = os.path.join(config.output_dir, "report.json")
        with open(path, "w") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
        return 2, {"report": path}

    rng = np.random.default_rng(config.seed)
    del rng  # seed recorded for reproducibility; checks are deterministic

    workers = int(os.environ.get("SSL_WORKERS", "0")) or None

    def one(entry):
        name = entry["name"]
        params = dict(entry)
        params.pop("name")
        if name in config.tolerances:
            params.setdefault("tol", config.tolerances[name])
        try:
            out = CHECKS[name](mesh, params)
            return name, out, None
        except (StableSurfError, TypeError, ValueError, KeyError) as ex:
            return name, None, f"{type(ex).__name__}: {ex}"

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, config.checks))
    else:
        results = [one(e) for e in config.checks]
    results.sort(key=lambda t: t[0])

    reports = [r for _n, r, _e in results if r is not None]
    errors = [{"check": n, "error": e} for n, _r, e in results if e]
    extra = {"config": _config_dict(config)}
    if errors:
        extra["errors"] = errors
    doc = rp.reports_to_json(reports, extra)
    path = os.path.join(config.output_dir, "report.json")
    with open(path, "w") as f:
        f.write(doc)
    artifacts = {"report": path}

    _write_profiles(mesh, config, artifacts)
    _write_plots(mesh, reports, config, artifacts)

    for r in reports:
        print(r.summary_line())
    if errors:
        return 2, artifacts
    if any(r.verdict == rp.FAIL for r in reports):
        return 1, artifacts
    return 0, artifacts


def _config_dict(config):
    return {"input": config.input, "checks": config.checks,
            "refinement": config.refinement,
            "tolerances": config.tolerances, "seed": config.seed}


def _write_profiles(mesh, config, artifacts):
    try:
        prof = growth.growth_profile(mesh, 0)
    except StableSurfError:
        return
    path = os.path.join(config.output_dir, "profiles.csv")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["r", "area", "boundary_length"])
        for r, a, l in zip(prof.radii, prof.A, prof.l):
            w.writerow([f"{r:.12g}", f"{a:.12g}", f"{l:.12g}"])
    artifacts["profiles"] = path


def _write_plots(mesh, reports, config, artifacts):
    plots_dir = os.path.join(config.output_dir, "plots")
    os.makedirs(plots_dir, exist_ok=True)
    try:
        prof = growth.growth_profile(mesh, 0)
        path = os.path.join(plots_dir, "area_growth.svg")
        svg_plot(path, list(prof.radii),
                 {"A(r)": list(prof.A), "l(r)": list(prof.l)},
                 title="ball area and boundary length",
                 xlabel="r", ylabel="value")
        artifacts["area_plot"] = path
    except StableSurfError:
        pass
    slacks = [(r.name, r.slack) for r in reports
              if r.verdict != rp.NOT_APPLICABLE and r.slack is not None
              and math.isfinite(r.slack)]
    if slacks:
        path = os.path.join(plots_dir, "slack.svg")
        svg_bars(path, [n for n, _s in slacks], [s for _n, s in slacks],
                 title="check slack (rhs - lhs)")
        artifacts["slack_plot"] = path


# -- plots --------------------------------------------------------------------

_SVG_HEAD = ('<svg xmlns="http://www.w3.org/2000/svg" width="{w}" '
             'height="{h}" viewBox="0 0 {w} {h}">'
             '<rect width="{w}" height="{h}" fill="white"/>')


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def svg_plot(path, xs, series, title="", xlabel="", ylabel="",
             width=640, height=420):
    """Self-contained polyline plot; one line per named series."""
    m = 60
    all_y = [y for ys in series.values() for y in ys if math.isfinite(y)]
    x0, x1 = min(xs), max(xs)
    y0, y1 = (min(all_y), max(all_y)) if all_y else (0.0, 1.0)
    if y1 <= y0:
        y1 = y0 + 1.0
    if x1 <= x0:
        x1 = x0 + 1.0

    def px(x):
        return m + (x - x0) / (x1 - x0) * (width - 2 * m)

    def py(y):
        return height - m - (y - y0) / (y1 - y0) * (height - 2 * m)

    colors = ["#1f6fb2", "#b2541f", "#3d9b44", "#8043a3", "#a31f33"]
    out = [_SVG_HEAD.format(w=width, h=height)]
    out.append(f'<text x="{width/2}" y="24" text-anchor="middle" '
               f'font-size="15">{title}</text>')
    out.append(f'<line x1="{m}" y1="{height-m}" x2="{width-m}" '
               f'y2="{height-m}" stroke="black"/>')
    out.append(f'<line x1="{m}" y1="{m}" x2="{m}" y2="{height-m}" '
               'stroke="black"/>')
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.1f}" y="{height-m+18}" '
                   f'text-anchor="middle" font-size="11">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{m-6}" y="{py(t):.1f}" text-anchor="end" '
                   f'font-size="11">{t:.3g}</text>')
    out.append(f'<text x="{width/2}" y="{height-12}" text-anchor="middle" '
               f'font-size="12">{xlabel}</text>')
    out.append(f'<text x="16" y="{height/2}" font-size="12" '
               f'transform="rotate(-90 16 {height/2})" '
               f'text-anchor="middle">{ylabel}</text>')
    for i, (name, ys) in enumerate(series.items()):
        pts = " ".join(f"{px(x):.1f},{py(y):.1f}"
                       for x, y in zip(xs, ys) if math.isfinite(y))
        c = colors[i % len(colors)]
        out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" '
                   'stroke-width="1.5"/>')
        out.append(f'<text x="{width-m+4}" y="{m+16*i+10}" font-size="11" '
                   f'fill="{c}">{name}</text>')
    out.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")


def svg_bars(path, labels, values, title="", width=640, height=420):
    m = 60
    lo, hi = min(values + [0.0]), max(values + [0.0])
    if hi <= lo:
        hi = lo + 1.0
    n = len(values)
    bw = (width - 2 * m) / max(n, 1)

    def py(y):
        return height - m - (y - lo) / (hi - lo) * (height - 2 * m)

    out = [_SVG_HEAD.format(w=width, h=height)]
    out.append(f'<text x="{width/2}" y="24" text-anchor="middle" '
               f'font-size="15">{title}</text>')
    out.append(f'<line x1="{m}" y1="{py(0):.1f}" x2="{width-m}" '
               f'y2="{py(0):.1f}" stroke="black"/>')
    for i, (lab, v) in enumerate(zip(labels, values)):
        x = m + i * bw + 0.15 * bw
        top, bot = min(py(v), py(0)), max(py(v), py(0))
        color = "#3d9b44" if v >= 0 else "#a31f33"
        out.append(f'<rect x="{x:.1f}" y="{top:.1f}" width="{0.7*bw:.1f}" '
                   f'height="{max(bot-top, 0.5):.1f}" fill="{color}"/>')
        out.append(f'<text x="{x+0.35*bw:.1f}" y="{height-m+16}" '
                   f'font-size="10" text-anchor="middle">{lab}</text>')
        out.append(f'<text x="{x+0.35*bw:.1f}" y="{top-4:.1f}" '
                   f'font-size="10" text-anchor="middle">{v:.3g}</text>')
    out.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")


def svg_locus(path, graph, orientation=None, width=480, height=480):
    """Schematic drawing of a locus graph: nodes on a circle."""
    n = max(len(graph.nodes), 1)
    cx, cy, rad = width / 2, height / 2, min(width, height) / 2 - 60
    pos = {nd.index: (cx + rad * math.cos(2 * math.pi * i / n),
                      cy + rad * math.sin(2 * math.pi * i / n))
           for i, nd in enumerate(graph.nodes)}
    out = [_SVG_HEAD.format(w=width, h=height)]
    for s in graph.segments:
        (xa, ya), (xb, yb) = pos[s.a], pos[s.b]
        out.append(f'<line x1="{xa:.1f}" y1="{ya:.1f}" x2="{xb:.1f}" '
                   f'y2="{yb:.1f}" stroke="#1f6fb2" stroke-width="1.5"/>')
        if orientation and s.index in orientation.direction:
            t, h = orientation.direction[s.index]
            (xt, yt), (xh, yh) = pos[t], pos[h]
            mx, my = 0.5 * (xt + xh), 0.5 * (yt + yh)
            dx, dy = xh - xt, yh - yt
            norm = math.hypot(dx, dy) or 1.0
            dx, dy = dx / norm * 8, dy / norm * 8
            out.append(f'<path d="M {mx-dx+dy/2:.1f} {my-dy-dx/2:.1f} '
                       f'L {mx+dx:.1f} {my+dy:.1f} '
                       f'L {mx-dx-dy/2:.1f} {my-dy+dx/2:.1f}" '
                       'fill="#1f6fb2"/>')
    fills = {"end": "#a31f33", "initial": "#3d9b44",
             "bifurcating": "#1f6fb2"}
    for nd in graph.nodes:
        x, y = pos[nd.index]
        out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="6" '
                   f'fill="{fills.get(nd.kind, "black")}"/>')
        out.append(f'<text x="{x+9:.1f}" y="{y-6:.1f}" font-size="11">'
                   f'{nd.index} ({nd.kind[0]}, f={nd.f:.2f})</text>')
    out.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")


# -- subcommands --------------------------------------------------------------

def _cmd_gen(args):
    _mesh, gen = parse_surface_spec(args.kind + ":" + str(args.level)
                                    + ((":" + args.params) if args.params
                                       else ""))
    mesh = _mesh
    if mesh.positions is None:
        raise ConfigError(
            f"{args.kind} has no isometric embedding; OFF output needs one")
    save_off(mesh, args.out)
    print(f"wrote {args.out}: {mesh.n_vertices} vertices, "
          f"{mesh.n_faces} faces")
    return 0


def _cmd_dist(args):
    mesh, _gen = parse_surface_spec(args.input, args.level)
    src = _source_from_flag(mesh, args.source)
    dfield = distance_field(mesh, src)
    out = args.out or "distances.csv"
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["vertex", "distance"])
        for v, d in enumerate(dfield.values):
            w.writerow([v, f"{d:.12g}"])
    print(f"wrote {out}; max distance {dfield.max_value():.6g}")
    return 0


def _cmd_check(args):
    params = {}
    for key in ("L", "Lprime", "R0", "delta", "eps", "tol"):
        val = getattr(args, key if key != "Lprime" else "Lprime")
        if val is not None:
            params[key] = val
    checks = [dict(params, name=name) for name in args.check]
    config = RunConfig(input=args.input, checks=checks,
                       refinement=args.level or 4, seed=args.seed,
                       output_dir=args.out or ".")
    code, _artifacts = run(config)
    return code


def _cmd_cutlocus(args):
    mesh, _gen = parse_surface_spec(args.input, args.level)
    src = _source_from_flag(mesh, args.source)
    dfield = distance_field(mesh, src, k=cutlocus.LOCUS_SUBDIVISIONS)
    L = args.L or 0.8 * dfield.max_value()
    graph = cutlocus.extract_cut_locus(mesh, dfield, L)
    orientation = cutlocus.orient(graph) if graph.segments else None
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    jpath = os.path.join(outdir, "locus.json")
    with open(jpath, "w") as f:
        f.write(graph.to_json(orientation))
    spath = os.path.join(outdir, "locus.svg")
    svg_locus(spath, graph, orientation)
    if graph.segments:
        rep = cutlocus.sum_inequality(graph, orientation)
        print(rep.summary_line())
        code = 0 if rep.verdict == rp.PASS else 1
    else:
        print("locus: empty graph")
        code = 0
    print(f"wrote {jpath}, {spath}")
    return code


def _cmd_spectrum(args):
    mesh, _gen = parse_surface_spec(args.input, args.level)
    spec = spectral.lambda1(mesh)
    rep = spectral.check_p5(mesh)
    print(f"lambda1 = {spec.lambda1:.8g}")
    print(f"diameter = {spec.diameter:.8g}")
    print(f"lambda1 * diam^2 = {spec.product:.8g}")
    print(rep.summary_line())
    if args.out:
        with open(args.out, "w") as f:
            f.write(rp.reports_to_json([rep], {
                "lambda1": rp._fmt(spec.lambda1),
                "diameter": rp._fmt(spec.diameter),
                "product": rp._fmt(spec.product)}))
    return 0 if rep.verdict != rp.FAIL else 1


def _cmd_report(args):
    with open(args.config) as f:
        raw = json.load(f)
    config = RunConfig(**raw)
    if args.out:
        config.output_dir = args.out
    if args.seed is not None:
        config.seed = args.seed
    code, artifacts = run(config)
    print(f"report: {artifacts.get('report')}")
    return code


def _cmd_converge(args):
    levels = [int(x) for x in args.levels.split(",")]
    parts = args.input.split(":")
    rows = []
    for lvl in levels:
        if len(parts) > 1:
            parts[1] = str(lvl)
        spec = ":".join(parts)
        mesh, _gen = parse_surface_spec(spec, lvl)
        params = {"L": args.L} if args.L else {}
        rep = CHECKS[args.check](mesh, params)
        h = mesh.mean_edge_length()
        rows.append((lvl, h, rep.lhs, rep.rhs, rep.slack, rep.verdict))
    out = args.out or "convergence.csv"
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["level", "h", "lhs", "rhs", "slack", "verdict"])
        for row in rows:
            w.writerow([row[0]] + [f"{x:.12g}" for x in row[1:5]]
                       + [row[5]])
    for row in rows:
        print(f"level {row[0]}: h={row[1]:.4g} slack={row[4]:+.6g} "
              f"{row[5]}")
    svg = os.path.splitext(out)[0] + ".svg"
    svg_plot(svg, [r[1] for r in rows], {"|slack|": [abs(r[4]) for r in rows]},
             title=f"{args.check}: slack vs mesh size h",
             xlabel="h", ylabel="|slack|")
    print(f"wrote {out}, {svg}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="stablesurf",
        description="discrete checks of stable-surface inequalities")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a surface, write OFF")
    g.add_argument("kind")
    g.add_argument("--level", type=int, default=4)
    g.add_argument("--params", default="")
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    d = sub.add_parser("dist", help="distance field to CSV")
    d.add_argument("--input", required=True)
    d.add_argument("--source")
    d.add_argument("--level", type=int)
    d.add_argument("--out")
    d.set_defaults(func=_cmd_dist)

    c = sub.add_parser("check", help="run named checks")
    c.add_argument("--input", required=True)
    c.add_argument("--check", action="append", required=True,
                   choices=sorted(CHECKS))
    c.add_argument("--L", type=float)
    c.add_argument("--Lprime", type=float)
    c.add_argument("--R0", type=float)
    c.add_argument("--delta", type=float)
    c.add_argument("--eps", type=float)
    c.add_argument("--tol", type=float)
    c.add_argument("--level", type=int)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.set_defaults(func=_cmd_check)

    cl = sub.add_parser("cutlocus", help="extract and orient a cut locus")
    cl.add_argument("--input", required=True)
    cl.add_argument("--source")
    cl.add_argument("--L", type=float)
    cl.add_argument("--level", type=int)
    cl.add_argument("--out")
    cl.set_defaults(func=_cmd_cutlocus)

    s = sub.add_parser("spectrum", help="first eigenvalue and diameter")
    s.add_argument("--input", required=True)
    s.add_argument("--level", type=int)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_spectrum)

    r = sub.add_parser("report", help="run a JSON config batch")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.set_defaults(func=_cmd_report)

    cv = sub.add_parser("converge", help="rerun a check across levels")
    cv.add_argument("--input", required=True)
    cv.add_argument("--check", required=True, choices=sorted(CHECKS))
    cv.add_argument("--levels", default="3,4,5")
    cv.add_argument("--L", type=float)
    cv.add_argument("--out")
    cv.set_defaults(func=_cmd_converge)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2
    except (OSError, StableSurfError) as ex:
        print(f"error: {type(ex).__name__}: {ex}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
