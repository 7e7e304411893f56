"""Triangle mesh with half-edge connectivity, OBJ I/O, and test-surface generators.

Vertices are float64 ``(n, 3)`` arrays, faces int ``(m, 3)`` arrays with
counterclockwise orientation.  Half-edges are implicit: half-edge ``h`` is
edge ``k = h % 3`` of face ``f = h // 3``, running from ``faces[f, k]`` to
``faces[f, (k + 1) % 3]``.  ``next`` is therefore arithmetic and only the
twin table is stored.
"""

from __future__ import annotations

import io
import math

import numpy as np

DEGENERATE_AREA_FACTOR = 1e-12  # of squared mesh diameter


class MeshError(Exception):
    """Base class for mesh construction and I/O failures."""


class ObjParseError(MeshError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConnectivityError(MeshError):
    """Non-manifold or inconsistently oriented connectivity."""


class DegenerateFaceError(MeshError):
    """A face with (near-)zero area relative to the mesh diameter."""


class TriMesh:
    """Immutable triangle mesh.

    Parameters
    ----------
    vertices : (n, 3) array_like of float
        Rest positions.
    faces : (m, 3) array_like of int
        Vertex index triples, counterclockwise.
    validate : bool
        Run the full invariant check (index ranges, manifoldness,
        degenerate faces).  Disable only for meshes produced by code that
        already guarantees the invariants.
    """

    def __init__(self, vertices, faces, validate: bool = True):
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        f = np.ascontiguousarray(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError(f"faces must be (m, 3), got {f.shape}")
        self._vertices = v
        self._faces = f
        self._vertices.setflags(write=False)
        self._faces.setflags(write=False)

        if validate:
            self._check_indices()

        # Per-halfedge source/destination and the twin table.  Built even
        # when validation is off; twin construction is what detects
        # duplicate directed edges, so it doubles as the manifold check.
        k = np.arange(3)
        self.he_src = f[:, k].reshape(-1)
        self.he_dst = f[:, (k + 1) % 3].reshape(-1)
        self.twin = self._build_twins(validate)

        nb = np.zeros(len(v), dtype=bool)
        border = self.twin < 0
        nb[self.he_src[border]] = True
        nb[self.he_dst[border]] = True
        self.boundary_vertex = nb
        self.boundary_vertex.setflags(write=False)

        if validate:
            self._check_degenerate()

    # -- construction checks ------------------------------------------------

    def _check_indices(self):
        v, f = self._vertices, self._faces
        if not np.all(np.isfinite(v)):
            raise MeshError("non-finite vertex coordinate")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            bad = np.where((f < 0) | (f >= len(v)))[0][0]
            raise MeshError(f"face {bad} references out-of-range vertex")
        same = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])
        if same.any():
            raise MeshError(f"face {np.where(same)[0][0]} repeats a vertex")

    def _build_twins(self, validate: bool):
        nv = len(self._vertices)
        key = self.he_src.astype(np.int64) * nv + self.he_dst
        order = np.argsort(key, kind="stable")
        sk = key[order]
        dup = sk[1:] == sk[:-1]
        if dup.any():
            h = order[1:][dup][0]
            raise ConnectivityError(
                "duplicate directed edge "
                f"({self.he_src[h]}, {self.he_dst[h]}): non-manifold or "
                "inconsistently oriented faces"
            )
        # twin of (v, w) is the halfedge keyed (w, v), if present
        rev = self.he_dst.astype(np.int64) * nv + self.he_src
        pos = np.searchsorted(sk, rev)
        pos_c = np.clip(pos, 0, len(sk) - 1)
        found = sk[pos_c] == rev
        twin = np.where(found, order[pos_c], -1).astype(np.int64)
        twin.setflags(write=False)
        return twin

    def _check_degenerate(self):
        if self.n_faces == 0:
            return
        limit = DEGENERATE_AREA_FACTOR * self.diameter**2
        bad = self.face_areas < limit
        if bad.any():
            raise DegenerateFaceError(
                f"face {np.where(bad)[0][0]} has area below "
                f"{DEGENERATE_AREA_FACTOR} of the squared mesh diameter"
            )

    # -- basic accessors ----------------------------------------------------

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    @property
    def faces(self) -> np.ndarray:
        return self._faces

    @property
    def n_vertices(self) -> int:
        return len(self._vertices)

    @property
    def n_faces(self) -> int:
        return len(self._faces)

    @property
    def diameter(self) -> float:
        """Bounding-box diagonal of the rest positions."""
        d = getattr(self, "_diameter", None)
        if d is None:
            if self.n_vertices == 0:
                d = 0.0
            else:
                span = self._vertices.max(axis=0) - self._vertices.min(axis=0)
                d = float(np.linalg.norm(span))
            self._diameter = d
        return d

    @property
    def face_areas(self) -> np.ndarray:
        a = getattr(self, "_face_areas", None)
        if a is None:
            a = triangle_areas(self._vertices, self._faces)
            a.setflags(write=False)
            self._face_areas = a
        return a

    @property
    def surface_area(self) -> float:
        return float(self.face_areas.sum())

    def next_halfedge(self, h):
        return (h // 3) * 3 + (h % 3 + 1) % 3

    @property
    def edges(self) -> np.ndarray:
        """Undirected edges as an (E, 2) array, each edge once, src < dst
        not guaranteed; the representative is the halfedge with no twin or
        the smaller index of the twin pair."""
        e = getattr(self, "_edges", None)
        if e is None:
            h = np.arange(3 * self.n_faces)
            rep = (self.twin < 0) | (h < self.twin)
            e = np.stack([self.he_src[rep], self.he_dst[rep]], axis=1)
            e.setflags(write=False)
            self._edges = e
        return e

    def __repr__(self):
        return f"TriMesh({self.n_vertices} vertices, {self.n_faces} faces)"


def triangle_areas(vertices, faces) -> np.ndarray:
    p = vertices[faces]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def check_state(mesh: TriMesh, state) -> np.ndarray:
    """Validate a deformed-position array against a mesh; returns float64 view."""
    s = np.asarray(state, dtype=np.float64)
    if s.shape != (mesh.n_vertices, 3):
        raise ValueError(
            f"state shape {s.shape} does not match mesh ({mesh.n_vertices}, 3)"
        )
    if not np.all(np.isfinite(s)):
        raise ValueError("state contains non-finite coordinates")
    return s


# ---------------------------------------------------------------------------
# OBJ I/O
# ---------------------------------------------------------------------------

def load_obj(data) -> TriMesh:
    """Parse an ASCII OBJ byte-stream (or str / file object) into a TriMesh.

    Only ``v`` and ``f`` records are honored; normals, texcoords, groups,
    and materials are ignored.  Faces with more than three vertices are
    fan-triangulated around the first vertex.  OBJ indices are 1-based.
    """
    if isinstance(data, bytes):
        text = data.decode("utf-8", errors="replace")
    elif isinstance(data, str):
        text = data
    elif hasattr(data, "read"):
        raw = data.read()
        text = raw.decode("utf-8", errors="replace") if isinstance(raw, bytes) else raw
    else:
        raise TypeError("load_obj expects bytes, str, or a readable stream")

    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ObjParseError("vertex record needs 3 coordinates", lineno)
            try:
                verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError as exc:
                raise ObjParseError(f"bad vertex coordinate: {exc}", lineno) from None
        elif tag == "f":
            if len(parts) < 4:
                raise ObjParseError("face record needs at least 3 vertices", lineno)
            idx = []
            for token in parts[1:]:
                head = token.split("/")[0]
                try:
                    i = int(head)
                except ValueError:
                    raise ObjParseError(f"bad face index {token!r}", lineno) from None
                if i < 0:
                    # relative indexing counts back from the current vertex list
                    i = len(verts) + 1 + i
                if not (1 <= i <= len(verts)):
                    raise ObjParseError(f"face index {head} out of range", lineno)
                idx.append(i - 1)
            for a in range(1, len(idx) - 1):
                faces.append((idx[0], idx[a], idx[a + 1]))
        # every other record type is ignored

    if not faces:
        raise MeshError("OBJ stream contains no faces")
    try:
        return TriMesh(np.array(verts, dtype=np.float64).reshape(-1, 3),
                       np.array(faces, dtype=np.int64).reshape(-1, 3))
    except ConnectivityError:
        raise
    except MeshError as exc:
        raise MeshError(f"invalid mesh in OBJ stream: {exc}") from exc


def save_obj(mesh: TriMesh, state=None) -> bytes:
    """Serialize the mesh (or a deformed state of it) as an ASCII OBJ.

    Round-trips through :func:`load_obj` with positions reproduced to
    1e-9 relative and identical faces.
    """
    pos = mesh.vertices if state is None else check_state(mesh, state)
    if not np.all(np.isfinite(pos)):
        raise ValueError("cannot serialize non-finite coordinates")
    out = io.StringIO()
    for x, y, z in pos:
        out.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
    for a, b, c in mesh.faces:
        out.write(f"f {a + 1} {b + 1} {c + 1}\n")
    return out.getvalue().encode("ascii")


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def generate_grid(n: int, width: float = 1.0, alternating: bool = False) -> TriMesh:
    """Regular triangulated square ``[0, width]^2`` in the z = 0 plane.

    ``(n + 1)^2`` vertices, ``2 n^2`` triangles.  Every cell is split along
    the same diagonal unless ``alternating``, which flips the diagonal on a
    checkerboard for the symmetric pattern.
    """
    if n < 1:
        raise ValueError("grid resolution must be >= 1")
    lin = np.linspace(0.0, width, n + 1)
    u, v = np.meshgrid(lin, lin, indexing="xy")
    vertices = np.column_stack([u.reshape(-1), v.reshape(-1), np.zeros((n + 1) ** 2)])

    def vid(i, j):
        return j * (n + 1) + i

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    i = i.reshape(-1)
    j = j.reshape(-1)
    p00, p10, p11, p01 = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
    if alternating:
        flip = (i + j) % 2 == 1
    else:
        flip = np.zeros(len(i), dtype=bool)
    t1 = np.where(flip[:, None], np.stack([p00, p10, p01], axis=1),
                  np.stack([p00, p10, p11], axis=1))
    t2 = np.where(flip[:, None], np.stack([p10, p11, p01], axis=1),
                  np.stack([p00, p11, p01], axis=1))
    faces = np.concatenate([t1, t2])
    return TriMesh(vertices, faces, validate=False)


def generate_fold(n: int, angle: float = math.pi, width: float = 1.0) -> np.ndarray:
    """Deformed positions folding the ``generate_grid(n, width)`` sheet.

    Vertices with ``u > width/2`` rotate about the vertical center line by
    ``angle``; the center column (which requires even ``n``) and the left
    half stay put.  The map is a discrete isometry for every angle.
    """
    if n < 1:
        raise ValueError("grid resolution must be >= 1")
    if n % 2 != 0:
        raise ValueError("fold needs even n so the center line is a vertex column")
    rest = generate_grid(n, width).vertices
    half = width / 2.0
    pos = rest.copy()
    moving = rest[:, 0] > half + 1e-12 * width
    r = rest[moving, 0] - half
    pos[moving, 0] = half + r * math.cos(angle)
    pos[moving, 2] = r * math.sin(angle)
    return pos


def generate_cylinder_map(n: int, width: float = 1.0) -> np.ndarray:
    """Roll the ``generate_grid(n, width)`` sheet into a cylinder.

    The u-direction wraps once around a circle of circumference ``width``
    (radius ``width / 2pi``); v is unchanged.  The two seam columns land on
    identical positions but stay combinatorially distinct, so the result is
    a deformed state of the flat sheet, not a closed tube.
    """
    if n < 1:
        raise ValueError("grid resolution must be >= 1")
    rest = generate_grid(n, width).vertices
    rho = width / (2.0 * math.pi)
    phi = 2.0 * math.pi * rest[:, 0] / width
    pos = np.empty_like(rest)
    pos[:, 0] = rho * np.sin(phi)
    pos[:, 1] = rest[:, 1]
    pos[:, 2] = rho * (1.0 - np.cos(phi))
    return pos


_ICO_T = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    (-1, _ICO_T, 0), (1, _ICO_T, 0), (-1, -_ICO_T, 0), (1, -_ICO_T, 0),
    (0, -1, _ICO_T), (0, 1, _ICO_T), (0, -1, -_ICO_T), (0, 1, -_ICO_T),
    (_ICO_T, 0, -1), (_ICO_T, 0, 1), (-_ICO_T, 0, -1), (-_ICO_T, 0, 1),
], dtype=np.float64)
_ICO_FACES = np.array([
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
], dtype=np.int64)


def generate_icosphere(subdivisions: int, radius: float = 1.0) -> TriMesh:
    """Closed genus-0 sphere: subdivided icosahedron projected to ``radius``.

    ``20 * 4^s`` faces; subdivisions capped at 7 (1.3M faces) as a size guard.
    """
    if subdivisions < 0:
        raise ValueError("subdivisions must be >= 0")
    if subdivisions > 7:
        raise ValueError("subdivisions capped at 7")
    verts = _ICO_VERTS / np.linalg.norm(_ICO_VERTS[0])
    faces = _ICO_FACES
    for _ in range(subdivisions):
        verts, faces = _subdivide(verts, faces)
        verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    mesh = TriMesh(verts * radius, faces, validate=False)
    if signed_volume(mesh.vertices, mesh.faces) < 0:
        mesh = TriMesh(mesh.vertices, mesh.faces[:, ::-1], validate=False)
    return mesh


def _subdivide(verts, faces):
    """One 1-to-4 loop split with midpoint vertices shared across faces."""
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e_sorted = np.sort(e, axis=1)
    uniq, inverse = np.unique(e_sorted, axis=0, return_inverse=True)
    mids = 0.5 * (verts[uniq[:, 0]] + verts[uniq[:, 1]])
    mid_id = len(verts) + inverse.reshape(3, -1)  # (3, m): ids of m01, m12, m20
    m01, m12, m20 = mid_id
    f = faces
    new_faces = np.concatenate([
        np.stack([f[:, 0], m01, m20], axis=1),
        np.stack([f[:, 1], m12, m01], axis=1),
        np.stack([f[:, 2], m20, m12], axis=1),
        np.stack([m01, m12, m20], axis=1),
    ])
    return np.concatenate([verts, mids]), new_faces


def signed_volume(vertices, faces) -> float:
    """Divergence-theorem volume; positive for outward-oriented closed meshes."""
    p = vertices[faces]
    return float(np.einsum("ij,ij->", p[:, 0], np.cross(p[:, 1], p[:, 2]))) / 6.0


def generate_bar(nx: int, ny: int, nz: int,
                 dims: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> TriMesh:
    """Closed axis-aligned box surface with per-axis segment counts.

    All six sides are regular grids welded along the edges; faces are
    oriented outward (signed volume positive).
    """
    if min(nx, ny, nz) < 1:
        raise ValueError("segment counts must be >= 1")
    segs = (nx, ny, nz)
    vid: dict[tuple[int, int, int], int] = {}
    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []

    def get(i, j, k):
        key = (i, j, k)
        idx = vid.get(key)
        if idx is None:
            idx = len(verts)
            vid[key] = idx
            verts.append((dims[0] * i / nx, dims[1] * j / ny, dims[2] * k / nz))
        return idx

    # Each side: fixed axis at its low or high end; (a, b) run over the
    # other two axes.  Quad corners are emitted counterclockwise as seen
    # from outside, then split along a diagonal.
    for axis in range(3):
        a_axis, b_axis = (axis + 1) % 3, (axis + 2) % 3
        na, nb = segs[a_axis], segs[b_axis]
        for high in (False, True):
            fixed = segs[axis] if high else 0
            for a in range(na):
                for b in range(nb):
                    def lattice(da, db):
                        c = [0, 0, 0]
                        c[axis] = fixed
                        c[a_axis] = a + da
                        c[b_axis] = b + db
                        return get(*c)
                    q00, q10, q11, q01 = (lattice(0, 0), lattice(1, 0),
                                          lattice(1, 1), lattice(0, 1))
                    if high:
                        faces.append((q00, q10, q11))
                        faces.append((q00, q11, q01))
                    else:
                        faces.append((q00, q11, q10))
                        faces.append((q00, q01, q11))
    mesh = TriMesh(np.array(verts), np.array(faces), validate=False)
    if signed_volume(mesh.vertices, mesh.faces) < 0:
        mesh = TriMesh(mesh.vertices, mesh.faces[:, ::-1], validate=False)
    return mesh
