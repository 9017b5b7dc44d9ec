#!/usr/bin/env python3
"""Extract, orient, and certify the cut locus on a few standard
surfaces; writes locus JSON/SVG per case into an output directory."""

import argparse
import os
import sys

from stablesurf import cutlocus, surfaces
from stablesurf.cli import svg_locus
from stablesurf.geodesics import SourceSet, distance_field

CASES = [
    ("torus_point", "flat_torus:4", "vertex:0", 0.9),
    ("cylinder_medial", "flat_cylinder:5:circumference=6.283185,height=3.0",
     "loops:0,1", 2.0),
    ("sphere_point", "sphere:3", "vertex:0", 3.0),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="locus_gallery")
    args = ap.parse_args(argv)
    os.makedirs(args.out, exist_ok=True)

    from stablesurf.cli import parse_surface_spec, _source_from_flag
    for name, spec, source, L in CASES:
        mesh, _gen = parse_surface_spec(spec)
        src = _source_from_flag(mesh, source)
        d = distance_field(mesh, src, k=cutlocus.LOCUS_SUBDIVISIONS)
        g = cutlocus.extract_cut_locus(mesh, d, L)
        if g.segments:
            o = cutlocus.orient(g)
            rep = cutlocus.sum_inequality(g, o)
            line = rep.summary_line()
        else:
            o = None
            line = "empty locus"
        total = sum(s.length for s in g.segments)
        print(f"{name:>16}: {len(g.nodes)} nodes, {len(g.segments)} "
              f"segments, length {total:.4f} | {line}")
        with open(os.path.join(args.out, f"{name}.json"), "w") as f:
            f.write(g.to_json(o))
        svg_locus(os.path.join(args.out, f"{name}.svg"), g, o)
    return 0


if __name__ == "__main__":
    sys.exit(main())
