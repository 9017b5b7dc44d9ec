"""Laplacian spectrum, Cheeger-style cut sweeps, and the diameter-spectrum
certificate for sphere-like surfaces.

The operator is the cotangent-weight Laplacian built from edge lengths
alone, paired with barycentric lumped mass.  Negative cotangent weights
from obtuse triangles are kept (clamping spoils convergence of the first
eigenvalue); reports carry a flag when that happens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix, diags
from scipy.sparse.linalg import eigsh

from .errors import NotClosed, NotConnected
from .geodesics import (DEFAULT_SUBDIVISIONS, ScalarField, SourceSet,
                        diameter, distance_field, level_length, sublevel_area)
from .mesh import TriMesh, total_area
from . import report as rp

EIG_TOL = 1e-9


def cotan_weights(mesh: TriMesh):
    """Per-edge cotangent weights (cot a + cot b)/2 from corner angles."""
    w = np.zeros(mesh.n_edges)
    cots = 1.0 / np.tan(mesh.corner_angles)
    for j in range(3):
        opp = mesh.face_edges[:, (j + 1) % 3]
        np.add.at(w, opp, 0.5 * cots[:, j])
    return w


def stiffness_matrix(mesh: TriMesh):
    """Sparse Dirichlet-energy matrix: f.K.f = sum |grad f|^2 area."""
    w = cotan_weights(mesh)
    i = mesh.edges[:, 0]
    j = mesh.edges[:, 1]
    n = mesh.n_vertices
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    data = np.concatenate([-w, -w, w, w])
    return coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def mass_matrix(mesh: TriMesh):
    return diags(mesh.vertex_areas).tocsr()


@dataclass
class SpectrumReport:
    lambda1: float
    eigenfield: ScalarField
    diameter: float
    cheeger_upper: float = None
    m_matrix: bool = True

    @property
    def product(self):
        return self.lambda1 * self.diameter ** 2


def lambda1(mesh: TriMesh, k=DEFAULT_SUBDIVISIONS) -> SpectrumReport:
    """First nonzero eigenvalue of the Laplacian on a closed connected mesh.

    Shift-inverted Lanczos around a small negative shift keeps the constant
    mode in the computed pair and is deterministic for the fixed start
    vector.  The eigenfield is normalized to zero area-weighted mean and
    unit sup-norm.
    """
    if not mesh.is_closed:
        raise NotClosed("lambda1 needs a closed mesh")
    if not mesh.is_connected():
        raise NotConnected("lambda1 needs a connected mesh")
    K = stiffness_matrix(mesh)
    M = mass_matrix(mesh)
    scale = total_area(mesh)
    v0 = np.ones(mesh.n_vertices)
    w, vecs = eigsh(K.tocsc(), k=2, M=M.tocsc(), sigma=-1e-8 / scale,
                    which="LM", v0=v0, tol=EIG_TOL, maxiter=10 ** 4)
    order = np.argsort(w)
    lam = float(w[order[1]])
    field = vecs[:, order[1]]
    field = field - (mesh.vertex_areas * field).sum() / scale
    field = field / np.abs(field).max()
    diam = diameter(mesh, k=k)
    flag = bool((cotan_weights(mesh) > 0).all())
    return SpectrumReport(lam, ScalarField(mesh, field), diam,
                          m_matrix=flag)


def _sweep_field(mesh, values, n_levels=64):
    """Best length/min(area, co-area) ratio over level cuts of a field."""
    total = total_area(mesh)
    lo, hi = float(values.min()), float(values.max())
    best = math.inf
    for t in np.linspace(lo, hi, n_levels + 2)[1:-1]:
        cut = level_length(mesh, values, t)
        if cut <= 0:
            continue
        a = sublevel_area(mesh, values, t)
        small = min(a, total - a)
        if small <= 0:
            continue
        best = min(best, cut / small)
    return best


def cheeger_sweep(mesh: TriMesh, seeds=(), k=DEFAULT_SUBDIVISIONS,
                  n_levels=64, spectrum=None):
    """Upper bound on the isoperimetric cut constant
    inf_cuts length / min(area, co-area), from distance-field and
    eigenfield level sweeps."""
    best = math.inf
    for s in seeds:
        df = distance_field(mesh, SourceSet.from_vertex(int(s)), k=k)
        best = min(best, _sweep_field(mesh, df.values, n_levels))
    if spectrum is None and mesh.is_closed and mesh.is_connected():
        spectrum = lambda1(mesh, k=k)
    if spectrum is not None:
        best = min(best, _sweep_field(mesh, spectrum.eigenfield.values,
                                      n_levels))
    return best


def check_p5(mesh: TriMesh, k=DEFAULT_SUBDIVISIONS, tol=1e-6,
             spectrum=None) -> rp.CheckReport:
    """Certificate lambda1 * diam^2 >= 1/8 for sphere-topology surfaces.

    The lower bound comes from the cut constant xi >= 1/(2 diam) combined
    with lambda1 >= xi/4.  FAIL certifies the surface cannot be a stable
    sphere-like surface (ambient bound R0 >= 0).  The upper-bound direction
    has no named constant and is reported descriptively via the product.
    """
    meta = {}
    if mesh.euler_characteristic() != 2 or not mesh.is_closed:
        meta["chi"] = mesh.euler_characteristic()
        return rp.make_report("p5_lower", 0.0, 0.0, 0.0, meta,
                              applicable=False)
    if spectrum is None:
        spectrum = lambda1(mesh, k=k)
    prod = spectrum.product
    meta.update({"lambda1": spectrum.lambda1, "diameter": spectrum.diameter,
                 "product": prod, "m_matrix": spectrum.m_matrix,
                 "constant": "1/8 = (1/4)*(1/2)"})
    return rp.make_report("p5_lower", 0.125, prod, tol, meta)
