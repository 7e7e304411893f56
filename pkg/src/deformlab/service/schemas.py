"""Wire models for the session service.

JSON keys are camelCase on the wire; the ``lambda`` blend keeps its name
there and binds to ``lam`` in Python.  WebSocket frames come in two parts:
a JSON meta message of type ``frame`` followed by one binary message of
little-endian float32 xyz triplets in vertex order.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field
from pydantic.alias_generators import to_camel


class CamelModel(BaseModel):
    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True)


class GeneratorSpec(CamelModel):
    """Procedural mesh request; fields beyond the shape's are ignored."""

    shape: str = Field(pattern="^(grid|fold|cylinder|icosphere|bar)$")
    n: int = Field(default=10, ge=1, le=2048)
    width: float = Field(default=1.0, gt=0)
    angle: float = 3.141592653589793
    sub: int = Field(default=2, ge=0, le=6)
    radius: float = Field(default=1.0, gt=0)
    nx: int = Field(default=4, ge=1, le=256)
    ny: int = Field(default=2, ge=1, le=256)
    nz: int = Field(default=2, ge=1, le=256)
    dims: tuple[float, float, float] = (1.0, 1.0, 1.0)


class SessionSummary(CamelModel):
    id: str
    vertex_count: int
    face_count: int
    surface_area: float


class ConstraintEntry(CamelModel):
    vertex: int = Field(ge=0)
    position: tuple[float, float, float]


class ConstraintFile(CamelModel):
    """Fixed and handle pins; the solver treats both groups identically."""

    fixed: list[ConstraintEntry] = []
    handles: list[ConstraintEntry] = []


class RevisionResponse(CamelModel):
    revision: int
    refactored: bool


class ConfigUpdate(CamelModel):
    lam: float | None = Field(default=None, ge=0.0, le=1.0,
                              validation_alias="lambda",
                              serialization_alias="lambda")
    tol: float | None = Field(default=None, gt=0)
    max_iterations: int | None = Field(default=None, ge=1)


class IterateRequest(CamelModel):
    steps: int = Field(default=1, ge=0, le=10000)


class IterateResponse(CamelModel):
    positions: list[list[float]]
    energy: dict
    iteration: int
    revision: int
    converged: bool


class MeshPayload(CamelModel):
    vertex_count: int
    face_count: int
    faces: list[list[int]]
    rest_positions: list[list[float]]
    positions: list[list[float]]
    diameter: float
    constrained: list[int]
