"""Local/global minimization of the hybrid and per-vertex rigidity energies.

The local phase fits the closed-form block variables (per-triangle or
per-vertex rotations via weighted Procrustes, per-vertex unit curvature
directions by normalization).  The global phase solves one sparse SPD system
for positions with constrained vertices eliminated; the factorization is
cached and reused while the constraint index set and lambda are unchanged.
Each phase minimizes its block exactly, so the recorded energy sequence is
non-increasing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energies import (
    EnergyBreakdown,
    VertexCells,
    arap_spoke_energy,
    arap_spoke_rim_energy,
    bending_energy,
    hybrid_energy,
    spoke_cells,
    spoke_rim_cells,
    stretch_energy,
)
from .mesh import TriMesh, check_state
from .operators import DiscreteOperators, build_operators, halfedge_cotangents

log = logging.getLogger(__name__)


class SingularSystemError(Exception):
    """The positional system has no unique solution (missing constraints)."""


class NumericalError(Exception):
    """Factorization or solve produced a singular/non-finite result."""


class StaleFactorizationError(Exception):
    """A FactoredSystem was used with a different constraint set or lambda."""


# ---------------------------------------------------------------------------
# Constraints
# ---------------------------------------------------------------------------

class Constraints:
    """Eliminated positional constraints: distinct vertex indices + targets."""

    def __init__(self, entries):
        if hasattr(entries, "items"):
            entries = list(entries.items())
        else:
            entries = list(entries)
        if entries:
            idx = np.array([int(i) for i, _ in entries], dtype=np.int64)
            pos = np.array([p for _, p in entries], dtype=np.float64).reshape(-1, 3)
        else:
            idx = np.empty(0, dtype=np.int64)
            pos = np.empty((0, 3))
        order = np.argsort(idx)
        self.indices = idx[order]
        self.targets = pos[order]
        if len(self.indices) > 1 and np.any(np.diff(self.indices) == 0):
            dup = self.indices[np.flatnonzero(np.diff(self.indices) == 0)[0]]
            raise ValueError(f"vertex {dup} constrained twice")
        if not np.all(np.isfinite(self.targets)):
            raise ValueError("constraint target is not finite")
        self.indices.setflags(write=False)
        self.targets.setflags(write=False)

    @classmethod
    def from_file_dict(cls, doc: dict) -> "Constraints":
        """Build from the ``{"fixed": [...], "handles": [...]}`` document.

        Both groups are eliminated identically; the split only matters to
        interactive front-ends.
        """
        entries = []
        for group in ("fixed", "handles"):
            for rec in doc.get(group, []):
                entries.append((rec["vertex"], rec["position"]))
        return cls(entries)

    def __len__(self):
        return len(self.indices)

    def index_key(self) -> bytes:
        return self.indices.tobytes()

    def check_range(self, mesh: TriMesh):
        if len(self.indices) and (self.indices[0] < 0
                                  or self.indices[-1] >= mesh.n_vertices):
            raise ValueError("constraint index out of range for mesh")

    def replace_targets(self, targets) -> "Constraints":
        """Same index set, new target positions (keeps factorizations valid)."""
        t = np.asarray(targets, dtype=np.float64).reshape(-1, 3)
        if t.shape != self.targets.shape:
            raise ValueError("target array shape mismatch")
        return Constraints(zip(self.indices.tolist(), t))


@dataclass
class SolverConfig:
    lam: float = 0.5
    max_iterations: int = 100
    rel_energy_tol: float = 1e-6
    scale_normalize: bool = False
    extrapolate: bool = True

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.rel_energy_tol <= 0:
            raise ValueError("rel_energy_tol must be positive")


@dataclass
class IterationReport:
    energies: list = field(default_factory=list)  # EnergyBreakdown per iteration
    converged: bool = False
    iterations: int = 0
    warnings: list = field(default_factory=list)

    @property
    def totals(self):
        return [e.total for e in self.energies]


# ---------------------------------------------------------------------------
# Local phase: rotation fits and unit-vector updates
# ---------------------------------------------------------------------------

def _scatter_rows(index, values, n):
    """Sum the rows of ``values`` (k, 3) into an (n, 3) array by index."""
    out = np.empty((n, 3))
    for c in range(3):
        out[:, c] = np.bincount(index, weights=values[:, c], minlength=n)
    return out


def _polar_rotations(C, scale):
    """Batched closest rotations to the covariance stack ``C`` (k, 3, 3).

    Near-zero covariance (relative to ``scale``) yields the identity and a
    raised degeneracy flag.  Reflections are repaired by flipping the
    singular vector of the smallest singular value, the optimal
    determinant-constrained fix.
    """
    C = np.asarray(C, dtype=np.float64)
    single = C.ndim == 2
    if single:
        C = C[None]
        scale = np.atleast_1d(scale)
    norm = np.linalg.norm(C, axis=(1, 2))
    degenerate = norm <= 1e-12 * np.maximum(scale, 1e-300)
    U, _, Vt = np.linalg.svd(np.where(degenerate[:, None, None], np.eye(3), C))
    det = np.linalg.det(U @ Vt)
    flip = det < 0
    U[flip, :, 2] *= -1.0
    R = U @ Vt
    R[degenerate] = np.eye(3)
    if single:
        return R[0], bool(degenerate[0])
    return R, degenerate


def fit_rotation(rest_tri, def_tri, corner_cots):
    """Best rotation for one triangle's stretch term.

    ``corner_cots[i]`` is the cotangent at corner i; edge i -> i+1 is
    weighted by the opposite corner's cot.  Returns ``(R, degenerate)``.
    """
    rest = np.asarray(rest_tri, dtype=np.float64)
    deformed = np.asarray(def_tri, dtype=np.float64)
    cots = np.asarray(corner_cots, dtype=np.float64)
    C = np.zeros((3, 3))
    scale = 0.0
    for k in range(3):
        e = rest[k] - rest[(k + 1) % 3]
        d = deformed[k] - deformed[(k + 1) % 3]
        w = cots[(k + 2) % 3]
        C += w * np.outer(d, e)
        scale += abs(w) * np.linalg.norm(d) * np.linalg.norm(e)
    return _polar_rotations(C, scale)


def fit_triangle_rotations(mesh: TriMesh, state):
    """Per-face optimal rotations, shape (n_faces, 3, 3), plus degeneracy mask."""
    x = check_state(mesh, state)
    cots = halfedge_cotangents(mesh).reshape(-1, 3)
    p = mesh.vertices[mesh.faces]
    q = x[mesh.faces]
    C = np.zeros((mesh.n_faces, 3, 3))
    scale = np.zeros(mesh.n_faces)
    for k in range(3):
        e = p[:, k] - p[:, (k + 1) % 3]
        d = q[:, k] - q[:, (k + 1) % 3]
        w = cots[:, k]  # cot opposite edge k
        C += w[:, None, None] * d[:, :, None] * e[:, None, :]
        scale += np.abs(w) * np.linalg.norm(d, axis=1) * np.linalg.norm(e, axis=1)
    return _polar_rotations(C, scale)


def _cells_for_mode(mesh: TriMesh, mode: str) -> VertexCells:
    if mode == "spoke":
        return spoke_cells(mesh)
    if mode == "spoke-rim":
        return spoke_rim_cells(mesh)
    raise ValueError(f"unknown mode {mode!r}; expected 'spoke' or 'spoke-rim'")


def fit_vertex_rotations(mesh: TriMesh, state, mode: str = "spoke"):
    """Per-vertex optimal rotations over the mode's cells; (n, 3, 3) + mask."""
    x = check_state(mesh, state)
    cells = _cells_for_mode(mesh, mode)
    rest = mesh.vertices[cells.src] - mesh.vertices[cells.dst]
    deformed = x[cells.src] - x[cells.dst]
    contrib = cells.weight[:, None, None] * deformed[:, :, None] * rest[:, None, :]
    n = mesh.n_vertices
    C = np.stack([
        np.bincount(cells.owner, weights=contrib[:, i, j], minlength=n)
        for i in range(3) for j in range(3)
    ], axis=1).reshape(n, 3, 3)
    scale = np.bincount(
        cells.owner,
        weights=np.abs(cells.weight) * np.linalg.norm(deformed, axis=1)
        * np.linalg.norm(rest, axis=1),
        minlength=n)
    return _polar_rotations(C, scale)


def fit_vertex_rotation(vertex: int, mesh: TriMesh, state, mode: str = "spoke"):
    """Single-vertex variant of :func:`fit_vertex_rotations`."""
    x = check_state(mesh, state)
    cells = _cells_for_mode(mesh, mode)
    mine = cells.owner == vertex
    if not mine.any():
        return np.eye(3), True
    rest = mesh.vertices[cells.src[mine]] - mesh.vertices[cells.dst[mine]]
    deformed = x[cells.src[mine]] - x[cells.dst[mine]]
    w = cells.weight[mine]
    C = np.einsum("t,ti,tj->ij", w, deformed, rest)
    scale = float(np.sum(np.abs(w) * np.linalg.norm(deformed, axis=1)
                         * np.linalg.norm(rest, axis=1)))
    return _polar_rotations(C, scale)


def update_unit_vectors(ops: DiscreteOperators, state, previous=None) -> np.ndarray:
    """Optimal unit directions: normalized pointwise Laplacian of the state.

    Rows whose curvature norm falls below ``1e-12 / diameter`` keep the
    previous direction (the rest curvature direction when no previous field
    is given, which itself falls back to +z on flat rows).
    """
    x = check_state(ops.mesh, state)
    r = (ops.Lc @ x) / ops.mass[:, None]
    norms = np.linalg.norm(r, axis=1)
    if previous is None:
        previous = ops.rest_curvature_dirs
    eps = 1e-12 / max(ops.diameter, 1e-300)
    ok = norms > eps
    out = np.array(previous, dtype=np.float64, copy=True)
    out[ok] = r[ok] / norms[ok, None]
    return out


# ---------------------------------------------------------------------------
# Global phase
# ---------------------------------------------------------------------------

@dataclass
class FactoredSystem:
    """Cached elimination + factorization of one quadratic position system.

    Valid while the constraint INDEX SET (not the targets) and the system
    tag (lambda / mode) are unchanged.
    """

    lu: object                  # SuperLU or None when every vertex is pinned
    free: np.ndarray
    constrained: np.ndarray
    A_fc: sp.spmatrix
    key: bytes
    tag: tuple

    def matches(self, constraints: Constraints, tag) -> bool:
        return self.key == constraints.index_key() and self.tag == tag


def _factor(A: sp.csr_matrix, constraints: Constraints, tag) -> FactoredSystem:
    n = A.shape[0]
    constrained = constraints.indices
    free = np.setdiff1d(np.arange(n), constrained)
    A_fc = A[free][:, constrained].tocsr()
    if len(free) == 0:
        return FactoredSystem(None, free, constrained, A_fc,
                              constraints.index_key(), tag)
    A_ff = A[free][:, free].tocsc()
    try:
        lu = spla.splu(A_ff)
    except RuntimeError as exc:
        raise NumericalError(f"factorization failed: {exc}") from exc
    piv = np.abs(lu.U.diagonal())
    if piv.min() <= 1e-14 * max(piv.max(), 1e-300):
        raise NumericalError(
            "system numerically singular after elimination "
            f"(pivot ratio {piv.min() / max(piv.max(), 1e-300):.2e}); "
            "the constraint set does not pin the remaining null space")
    return FactoredSystem(lu, free, constrained, A_fc,
                          constraints.index_key(), tag)


def _hybrid_matrix(ops: DiscreteOperators, lam: float) -> sp.csr_matrix:
    # Stationarity of the blended energy:
    #   2*lam*Lc + (1-lam) * Lc diag(interior/M) Lc
    # The interior mask keeps boundary rows of M^-1 Lc x (boundary turning,
    # not curvature) out of the bending block, mirroring the energy.
    Lc = ops.Lc
    A = (2.0 * lam) * Lc
    if lam < 1.0:
        D = sp.diags(np.where(ops.interior, 1.0 / ops.mass, 0.0))
        A = A + (1.0 - lam) * (Lc @ D @ Lc)
    return A.tocsr()


def assemble_system(ops: DiscreteOperators, lam: float,
                    constraints: Constraints) -> FactoredSystem:
    """Build and factor the hybrid position system for one constraint set."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    if len(constraints) == 0:
        raise SingularSystemError("system singular: translational null space "
                                  "(no constraints)")
    constraints.check_range(ops.mesh)
    return _factor(_hybrid_matrix(ops, lam), constraints, ("hybrid", lam))


def _cell_matrix(mesh: TriMesh, cells: VertexCells) -> sp.csr_matrix:
    """Graph Laplacian of the cell enumeration: edge (m, n) in k cells
    contributes k times its weight.  This is exactly half the Hessian of the
    cell energy, so sharing the enumeration guarantees descent."""
    n = mesh.n_vertices
    i, j, w = cells.src, cells.dst, cells.weight
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([-w, -w, w, w])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def assemble_arap_system(mesh: TriMesh, mode: str,
                         constraints: Constraints) -> FactoredSystem:
    if len(constraints) == 0:
        raise SingularSystemError("system singular: translational null space "
                                  "(no constraints)")
    constraints.check_range(mesh)
    A = _cell_matrix(mesh, _cells_for_mode(mesh, mode))
    return _factor(A, constraints, ("arap", mode))


def _solve_eliminated(sys_: FactoredSystem, rhs: np.ndarray,
                      targets: np.ndarray) -> np.ndarray:
    n = rhs.shape[0]
    x = np.empty((n, 3))
    x[sys_.constrained] = targets
    if len(sys_.free):
        reduced = rhs[sys_.free] - sys_.A_fc @ targets
        sol = sys_.lu.solve(reduced)
        if not np.all(np.isfinite(sol)):
            raise NumericalError("solve produced non-finite positions")
        x[sys_.free] = sol
    return x


def assemble_momentum(mesh: TriMesh, rotations: np.ndarray) -> np.ndarray:
    """Stretch right-hand side: b_v = sum over edges at v of
    (cot_a R(t_a) + cot_b R(t_b)) (x_v - x_w), assembled per halfedge."""
    cots = halfedge_cotangents(mesh)
    rest = mesh.vertices[mesh.he_src] - mesh.vertices[mesh.he_dst]
    face = np.repeat(np.arange(mesh.n_faces), 3)
    contrib = cots[:, None] * np.einsum("hij,hj->hi", rotations[face], rest)
    n = mesh.n_vertices
    return _scatter_rows(mesh.he_src, contrib, n) - _scatter_rows(
        mesh.he_dst, contrib, n)


def global_step(sys_: FactoredSystem, ops: DiscreteOperators, mesh: TriMesh,
                rotations: np.ndarray, units: np.ndarray, lam: float,
                constraints: Constraints) -> np.ndarray:
    """Minimize the hybrid energy over positions for fixed local variables."""
    if not sys_.matches(constraints, ("hybrid", lam)):
        raise StaleFactorizationError(
            "factorization was built for a different constraint set or lambda")
    rhs = np.zeros((mesh.n_vertices, 3))
    if lam > 0.0:
        rhs += lam * assemble_momentum(mesh, rotations)
    if lam < 1.0:
        rhs += (1.0 - lam) * (ops.Lc @ (ops.H[:, None] * units))
    return _solve_eliminated(sys_, rhs, constraints.targets)


def arap_global_step(sys_: FactoredSystem, mesh: TriMesh, mode: str,
                     rotations: np.ndarray,
                     constraints: Constraints) -> np.ndarray:
    if not sys_.matches(constraints, ("arap", mode)):
        raise StaleFactorizationError(
            "factorization was built for a different constraint set or mode")
    cells = _cells_for_mode(mesh, mode)
    rest = mesh.vertices[cells.src] - mesh.vertices[cells.dst]
    contrib = cells.weight[:, None] * np.einsum(
        "tij,tj->ti", rotations[cells.owner], rest)
    n = mesh.n_vertices
    rhs = _scatter_rows(cells.src, contrib, n) - _scatter_rows(cells.dst, contrib, n)
    return _solve_eliminated(sys_, rhs, constraints.targets)


# ---------------------------------------------------------------------------
# Iteration drivers
# ---------------------------------------------------------------------------

def _initial_state(mesh: TriMesh, constraints: Constraints, warm_start):
    if warm_start is None:
        x = mesh.vertices.copy()
    else:
        x = check_state(mesh, warm_start).copy()
    x[constraints.indices] = constraints.targets
    return x


def _relative_drop(prev: float, cur: float) -> float:
    return (prev - cur) / max(abs(prev), 1e-30)


ENERGY_INCREASE_SLACK = 1e-10

# Step multiples tried along the difference of successive global solves; the
# candidate is kept only when its refit energy beats the plain iterate.
EXTRAPOLATION_FACTORS = (1.0, 4.0)


def record_energy_transition(report: IterationReport, label: str, prev: float,
                             cur: float) -> None:
    """Log and record an energy increase beyond the monotonicity slack.

    Exact blockwise minimization makes every solver here non-increasing in
    exact arithmetic (the assembled quadratic forms are sums of per-triangle
    positive semidefinite forms), so this fires only on numerical trouble;
    it warns rather than asserts so long interactive runs survive it.
    """
    if cur > prev + ENERGY_INCREASE_SLACK:
        msg = (f"{label} energy increased at iteration "
               f"{report.iterations}: {prev:.6g} -> {cur:.6g}")
        report.warnings.append(msg)
        log.warning(msg)


class IterativeSolver:
    """Resumable hybrid solver: the interactive sessions drive this directly.

    Holds the current positions and unit-vector field; ``step`` advances
    whole local+global rounds deterministically, so N steps in one call and
    N steps across several calls produce bit-identical states.
    """

    def __init__(self, mesh: TriMesh, ops: DiscreteOperators,
                 constraints: Constraints, config: SolverConfig,
                 warm_start=None):
        self.mesh = mesh
        self.ops = ops
        self.config = config
        self.constraints = constraints
        self.x = _initial_state(mesh, constraints, warm_start)
        self.units = ops.rest_curvature_dirs
        self.system = None
        self.iteration = 0
        self._prev_global = None

    # -- constraint / config editing ---------------------------------------

    def set_constraints(self, constraints: Constraints) -> bool:
        """Replace the constraint set; returns True if the index set changed
        and any held factorization was dropped."""
        refactor = constraints.index_key() != self.constraints.index_key()
        self.constraints = constraints
        if refactor:
            self.system = None
        self.x[constraints.indices] = constraints.targets
        # Editing targets invalidates the extrapolation direction; dropping it
        # also keeps a warm resume bit-identical to a cold solve.
        self._prev_global = None
        return refactor

    def set_lambda(self, lam: float) -> bool:
        if lam == self.config.lam:
            return False
        self.config.lam = SolverConfig(lam=lam).lam  # reuse validation
        self.system = None
        self._prev_global = None
        return True

    def _ensure_system(self):
        if self.system is None:
            self.system = assemble_system(self.ops, self.config.lam,
                                          self.constraints)

    # -- iteration ----------------------------------------------------------

    def fit_locals(self):
        rotations, _ = fit_triangle_rotations(self.mesh, self.x)
        units = update_unit_vectors(self.ops, self.x, self.units)
        return rotations, units

    def current_energy(self) -> EnergyBreakdown:
        rotations, units = self.fit_locals()
        return hybrid_energy(self.mesh, self.ops, self.x, rotations, units,
                             self.config.lam)

    def _refit_total(self, y: np.ndarray) -> float:
        rotations, _ = fit_triangle_rotations(self.mesh, y)
        units = update_unit_vectors(self.ops, y, self.units)
        return hybrid_energy(self.mesh, self.ops, y, rotations, units,
                             self.config.lam).total

    def step(self, count: int = 1) -> None:
        self._ensure_system()
        for _ in range(count):
            rotations, self.units = self.fit_locals()
            star = global_step(self.system, self.ops, self.mesh, rotations,
                               self.units, self.config.lam, self.constraints)
            best = star
            if self.config.extrapolate and self._prev_global is not None:
                # Accelerate along the direction of successive global solves,
                # but only accept a candidate whose refit energy does not
                # exceed the plain iterate's, so descent stays monotone.
                best_total = self._refit_total(star)
                direction = star - self._prev_global
                for factor in EXTRAPOLATION_FACTORS:
                    candidate = star + factor * direction
                    total = self._refit_total(candidate)
                    if total < best_total:
                        best, best_total = candidate, total
            self._prev_global = star
            self.x = best
            self.iteration += 1

    def max_move(self, before: np.ndarray) -> float:
        return float(np.max(np.linalg.norm(self.x - before, axis=1)))


def solve(mesh: TriMesh, ops: DiscreteOperators, constraints: Constraints,
          config: SolverConfig | None = None, warm_start=None):
    """Run local/global alternation to convergence.

    Returns ``(positions, IterationReport)``; the report's energy sequence
    is recorded after each local fit and is non-increasing.
    """
    config = config or SolverConfig()
    if config.scale_normalize:
        return _solve_scaled(mesh, ops, constraints, config, warm_start)
    driver = IterativeSolver(mesh, ops, constraints, config, warm_start)
    report = IterationReport()
    prev = None
    for _ in range(config.max_iterations):
        e = driver.current_energy()
        report.energies.append(e)
        if prev is not None:
            record_energy_transition(report, "hybrid", prev, e.total)
            if _relative_drop(prev, e.total) < config.rel_energy_tol:
                report.converged = True
                break
        prev = e.total
        driver.step(1)
        report.iterations = driver.iteration
    else:
        report.energies.append(driver.current_energy())
    return driver.x, report


def _solve_scaled(mesh, ops, constraints, config, warm_start):
    """Scale-normalized variant: solve on the diameter-normalized rest mesh."""
    s = 1.0 / max(mesh.diameter, 1e-300)
    mesh_s = TriMesh(mesh.vertices * s, mesh.faces, validate=False)
    ops_s = build_operators(mesh_s, ops.mass_mode)
    cons_s = constraints.replace_targets(constraints.targets * s)
    warm_s = None if warm_start is None else np.asarray(warm_start) * s
    cfg = SolverConfig(lam=config.lam, max_iterations=config.max_iterations,
                       rel_energy_tol=config.rel_energy_tol,
                       extrapolate=config.extrapolate)
    x, report = solve(mesh_s, ops_s, cons_s, cfg, warm_s)
    return x / s, report


def solve_arap(mesh: TriMesh, constraints: Constraints,
               config: SolverConfig | None = None, mode: str = "spoke",
               warm_start=None):
    """Per-vertex rigidity baseline solver (one-ring or incident-triangle cells).

    The incident-triangle variant has a positive semidefinite quadratic form
    and descends monotonically; the one-ring variant can be indefinite on
    irregular meshes, so an energy increase there logs a warning instead of
    failing.
    """
    config = config or SolverConfig()
    energy_of = {"spoke": arap_spoke_energy,
                 "spoke-rim": arap_spoke_rim_energy}[mode]
    system = assemble_arap_system(mesh, mode, constraints)
    x = _initial_state(mesh, constraints, warm_start)
    report = IterationReport()
    prev = None
    for _ in range(config.max_iterations):
        rotations, _ = fit_vertex_rotations(mesh, x, mode)
        e = energy_of(mesh, x, rotations)
        report.energies.append(EnergyBreakdown(e, 0.0, e, 1.0))
        if prev is not None:
            record_energy_transition(report, mode, prev, e)
            if _relative_drop(prev, e) < config.rel_energy_tol:
                report.converged = True
                break
        prev = e
        x = arap_global_step(system, mesh, mode, rotations, constraints)
        report.iterations += 1
    else:
        rotations, _ = fit_vertex_rotations(mesh, x, mode)
        e = energy_of(mesh, x, rotations)
        report.energies.append(EnergyBreakdown(e, 0.0, e, 1.0))
    return x, report


# ---------------------------------------------------------------------------
# Fitted-variable energy evaluation (benchmarks, CLI)
# ---------------------------------------------------------------------------

def fitted_stretch_energy(mesh: TriMesh, state) -> float:
    rotations, _ = fit_triangle_rotations(mesh, state)
    return stretch_energy(mesh, state, rotations)


def fitted_spoke_energy(mesh: TriMesh, state) -> float:
    rotations, _ = fit_vertex_rotations(mesh, state, "spoke")
    return arap_spoke_energy(mesh, state, rotations)


def fitted_spoke_rim_energy(mesh: TriMesh, state) -> float:
    rotations, _ = fit_vertex_rotations(mesh, state, "spoke-rim")
    return arap_spoke_rim_energy(mesh, state, rotations)


def fitted_bending_energy(mesh: TriMesh, ops: DiscreteOperators, state) -> float:
    units = update_unit_vectors(ops, state)
    return bending_energy(mesh, ops, state, units)


def evaluate_energy(mesh: TriMesh, ops: DiscreteOperators, state, which: str,
                    lam: float = 0.5):
    """Evaluate a named energy with optimally fitted local variables."""
    if which == "stretch":
        return fitted_stretch_energy(mesh, state)
    if which == "spoke":
        return fitted_spoke_energy(mesh, state)
    if which == "spoke-rim":
        return fitted_spoke_rim_energy(mesh, state)
    if which == "bending":
        return fitted_bending_energy(mesh, ops, state)
    if which == "hybrid":
        rotations, _ = fit_triangle_rotations(mesh, state)
        units = update_unit_vectors(ops, state)
        return hybrid_energy(mesh, ops, state, rotations, units, lam).total
    raise ValueError(f"unknown energy {which!r}")
