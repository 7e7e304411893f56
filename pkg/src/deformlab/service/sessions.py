"""Session registry: one warm solver per mesh, serialized per session.

All mutating methods expect the session lock to be held by the caller; the
HTTP and WebSocket layers share that lock so a session only ever has one
writer at a time while the registry itself stays concurrent.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

import numpy as np

from deformlab.mesh import TriMesh, triangle_areas
from deformlab.operators import DiscreteOperators, build_operators
from deformlab.solver import Constraints, IterativeSolver, SolverConfig

# WS streaming counts a drag settled once an iteration moves nothing farther
# than this fraction of the mesh diameter.
CONVERGED_DELTA_FRACTION = 1e-6


class NoConstraintsError(Exception):
    """Iteration requested before any constraint was set."""


@dataclass
class Session:
    id: str
    mesh: TriMesh
    ops: DiscreteOperators
    config: SolverConfig
    driver: IterativeSolver | None = None
    revision: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def surface_area(self) -> float:
        return float(triangle_areas(self.mesh.vertices, self.mesh.faces).sum())

    @property
    def positions(self) -> np.ndarray:
        if self.driver is None:
            return self.mesh.vertices.copy()
        return self.driver.x.copy()

    @property
    def constrained_indices(self) -> list[int]:
        if self.driver is None:
            return []
        return [int(i) for i in self.driver.constraints.indices]

    def set_constraints(self, constraints: Constraints | None):
        """Returns (revision, refactored); an empty set drops the solver."""
        self.revision += 1
        if constraints is None:
            dropped = self.driver is not None
            self.driver = None
            return self.revision, dropped
        if self.driver is None:
            self.driver = IterativeSolver(self.mesh, self.ops, constraints,
                                          self.config,
                                          warm_start=self.mesh.vertices)
            return self.revision, True
        refactored = self.driver.set_constraints(constraints)
        return self.revision, refactored

    def set_config(self, lam=None, tol=None, max_iterations=None):
        self.revision += 1
        refactored = False
        if lam is not None and lam != self.config.lam:
            if self.driver is not None:
                refactored = self.driver.set_lambda(lam)
            else:
                SolverConfig(lam=lam)  # validate range
                self.config.lam = lam
                refactored = True
        if tol is not None:
            self.config.rel_energy_tol = tol
        if max_iterations is not None:
            self.config.max_iterations = max_iterations
        return self.revision, refactored

    def iterate(self, steps: int):
        """Advance the warm solver; returns (positions, energy, delta)."""
        if self.driver is None:
            raise NoConstraintsError("no constraints set")
        if steps > 0:
            before = self.driver.x.copy()
            self.driver.step(steps)
            delta = float(np.max(np.linalg.norm(self.driver.x - before,
                                                axis=1)))
            self.revision += 1
        else:
            delta = float("inf")
        energy = self.driver.current_energy()
        converged = delta <= CONVERGED_DELTA_FRACTION * self.ops.diameter
        return self.driver.x.copy(), energy, converged

    def drag(self, vertex: int, position) -> int:
        """Move one already-constrained vertex; returns the new revision."""
        if self.driver is None:
            raise NoConstraintsError("no constraints set")
        constraints = self.driver.constraints
        slot = int(np.searchsorted(constraints.indices, vertex))
        if (slot >= len(constraints.indices)
                or constraints.indices[slot] != vertex):
            raise KeyError(f"vertex {vertex} is not constrained")
        targets = constraints.targets.copy()
        targets[slot] = np.asarray(position, dtype=np.float64)
        self.driver.set_constraints(constraints.replace_targets(targets))
        self.revision += 1
        return self.revision


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()

    def create(self, mesh: TriMesh) -> Session:
        ops = build_operators(mesh)
        session = Session(id=str(uuid.uuid4()), mesh=mesh, ops=ops,
                          config=SolverConfig())
        with self._registry_lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session | None:
        with self._registry_lock:
            return self._sessions.get(session_id)

    def drop(self, session_id: str) -> bool:
        with self._registry_lock:
            return self._sessions.pop(session_id, None) is not None
