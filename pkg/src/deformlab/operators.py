"""Discrete differential operators on the rest surface.

The symmetric cotan matrix here uses the half-sum convention,
``Lc[v, w] = -(cot a + cot b) / 2`` (one cot for boundary edges), with
barycentric (or optionally mixed-Voronoi) lumped vertex areas, so that
``M^-1 Lc x`` is the mean-curvature vector: norm 2 on the unit sphere,
2/r at radius r.  The deformation energies elsewhere weight edges by the
raw cot sums; only this matrix carries the 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import TriMesh


class OperatorError(Exception):
    """Operator construction failed (degenerate geometry slipped through)."""


def halfedge_cotangents(mesh: TriMesh) -> np.ndarray:
    """Cotangent of the corner opposite each halfedge, shape ``(3 * n_faces,)``.

    Halfedge ``3 f + k`` runs along edge ``k`` of face ``f``; its opposite
    corner is vertex ``(k + 2) % 3`` of that face.  Cached on the mesh.
    """
    cached = getattr(mesh, "_he_cots", None)
    if cached is not None:
        return cached
    p = mesh.vertices[mesh.faces]  # (m, 3 corners, 3)
    cots = np.empty((mesh.n_faces, 3))
    for k in range(3):
        # corner (k+2)%3 spans edges to corners k and (k+1)%3
        a = p[:, k] - p[:, (k + 2) % 3]
        b = p[:, (k + 1) % 3] - p[:, (k + 2) % 3]
        cross = np.linalg.norm(np.cross(a, b), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            cots[:, k] = np.einsum("ij,ij->i", a, b) / cross
    flat = cots.reshape(-1)
    if not np.all(np.isfinite(flat)):
        bad = np.where(~np.isfinite(flat))[0][0] // 3
        raise OperatorError(f"degenerate face {bad} produced a non-finite cotangent")
    flat.setflags(write=False)
    mesh._he_cots = flat
    return flat


def edge_weights(mesh: TriMesh) -> tuple[np.ndarray, np.ndarray]:
    """Full cot-sum weight per undirected edge, aligned with ``mesh.edges``.

    Interior edges get ``cot a + cot b``; boundary edges the single cot.
    These are the raw weights the deformation energies use (no 1/2).
    """
    cached = getattr(mesh, "_edge_weights", None)
    if cached is not None:
        return mesh.edges, cached
    cots = halfedge_cotangents(mesh)
    h = np.arange(3 * mesh.n_faces)
    rep = (mesh.twin < 0) | (h < mesh.twin)
    w = cots[rep].copy()
    twins = mesh.twin[rep]
    has_twin = twins >= 0
    w[has_twin] += cots[twins[has_twin]]
    w.setflags(write=False)
    mesh._edge_weights = w
    return mesh.edges, w


def build_cotan_matrix(mesh: TriMesh) -> sp.csr_matrix:
    """Symmetric PSD cotan matrix with zero row sums.

    Off-diagonals are ``-(cot a + cot b) / 2``; on a unit right-isoceles
    grid the interior diagonal entry is the classic 5-point value 4.
    """
    edges, w = edge_weights(mesh)
    n = mesh.n_vertices
    i, j = edges[:, 0], edges[:, 1]
    off = -0.5 * w
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([off, off, -off, -off])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def build_mass_matrix(mesh: TriMesh, mode: str = "barycentric") -> np.ndarray:
    """Lumped per-vertex areas as a dense diagonal, summing to the surface area.

    ``barycentric`` assigns each triangle a third to each corner and is
    always positive.  ``mixed_voronoi`` uses the circumcentric cell areas
    with the standard obtuse-triangle fallback (half the area to the obtuse
    corner, a quarter to the others); it also partitions the surface area
    but tracks curvature integrals more closely on irregular meshes.
    """
    n = mesh.n_vertices
    areas = mesh.face_areas
    if mode == "barycentric":
        m = np.zeros(n)
        np.add.at(m, mesh.faces.reshape(-1), np.repeat(areas / 3.0, 3))
        return m
    if mode != "mixed_voronoi":
        raise ValueError(f"unknown mass mode {mode!r}")

    p = mesh.vertices[mesh.faces]
    cots = halfedge_cotangents(mesh).reshape(-1, 3)  # cots[:, k] opposite edge k
    sq = np.empty((mesh.n_faces, 3))
    for k in range(3):
        sq[:, k] = np.sum((p[:, (k + 1) % 3] - p[:, k]) ** 2, axis=1)
    obtuse_corner = np.full(mesh.n_faces, -1)
    for k in range(3):
        obtuse_corner[cots[:, k] < 0] = (k + 2) % 3
    m = np.zeros(n)
    contrib = np.empty((mesh.n_faces, 3))
    for c in range(3):
        # Voronoi area at corner c: (|e_a|^2 cot(opp e_a) + |e_b|^2 cot(opp e_b)) / 8
        # over the two edges incident to c (edges c and (c+2)%3).
        e1, e2 = c, (c + 2) % 3
        contrib[:, c] = (sq[:, e1] * cots[:, e1] + sq[:, e2] * cots[:, e2]) / 8.0
    has_obtuse = obtuse_corner >= 0
    for c in range(3):
        rows = has_obtuse & (obtuse_corner == c)
        contrib[rows] = areas[rows, None] / 4.0
        contrib[rows, c] = areas[rows] / 2.0
    np.add.at(m, mesh.faces.reshape(-1), contrib.reshape(-1))
    return m


def curvature_vectors(mesh: TriMesh, Lc: sp.csr_matrix, mass: np.ndarray) -> np.ndarray:
    """Pointwise Laplacian of the positions, ``(M^-1 Lc x)_v``, per vertex."""
    return (Lc @ mesh.vertices) / mass[:, None]


def mean_curvature_magnitudes(mesh: TriMesh, Lc: sp.csr_matrix,
                              mass: np.ndarray) -> np.ndarray:
    """Rest curvature magnitude ``|H_v|``; forced to 0 on boundary vertices.

    At a boundary vertex the cotan mean-curvature vector measures boundary
    turning rather than surface bending, so those rows are zeroed and the
    bending energy skips them.
    """
    h = np.linalg.norm(curvature_vectors(mesh, Lc, mass), axis=1)
    h[mesh.boundary_vertex] = 0.0
    return h


@dataclass(frozen=True)
class DiscreteOperators:
    """Bundle of rest-surface operators shared by the energies and solver."""

    mesh: TriMesh
    Lc: sp.csr_matrix
    mass: np.ndarray                 # (n,) lumped vertex areas
    H: np.ndarray                    # (n,) |H_v|, zero on the boundary
    boundary_vertex: np.ndarray      # (n,) bool
    interior: np.ndarray             # (n,) bool, complement of boundary
    rest_curvature_dirs: np.ndarray  # (n, 3) unit; +z fallback on flat rows
    mass_mode: str = "barycentric"
    diameter: float = field(default=0.0)


def build_operators(mesh: TriMesh, mass_mode: str = "barycentric") -> DiscreteOperators:
    Lc = build_cotan_matrix(mesh)
    mass = build_mass_matrix(mesh, mass_mode)
    if np.any(mass <= 0):
        raise OperatorError("non-positive lumped vertex area")
    H = mean_curvature_magnitudes(mesh, Lc, mass)

    vecs = curvature_vectors(mesh, Lc, mass)
    norms = np.linalg.norm(vecs, axis=1)
    dirs = np.zeros_like(vecs)
    dirs[:, 2] = 1.0
    ok = norms > 1e-12 / max(mesh.diameter, 1e-300)
    dirs[ok] = vecs[ok] / norms[ok, None]

    for arr in (mass, H, dirs):
        arr.setflags(write=False)
    return DiscreteOperators(
        mesh=mesh,
        Lc=Lc,
        mass=mass,
        H=H,
        boundary_vertex=mesh.boundary_vertex,
        interior=~mesh.boundary_vertex,
        rest_curvature_dirs=dirs,
        mass_mode=mass_mode,
        diameter=mesh.diameter,
    )
