"""HTTP + WebSocket endpoints for interactive deformation sessions.

HTTP handlers are synchronous and run in the framework's thread pool; the
WebSocket loop runs solver steps in a worker thread.  Both paths serialize
through the per-session lock, so each session has exactly one writer at a
time.  Stream protocol: client sends JSON ``drag`` / ``set-lambda``
messages; the server answers each solver iteration with a JSON ``frame``
meta message followed by one binary float32 xyz position buffer, emits
``refactored`` notices after lambda changes, ``error`` messages without
closing, and a single ``converged`` notice when a drag settles.
"""

from __future__ import annotations

import asyncio
import json

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response, WebSocket
from fastapi.middleware.cors import CORSMiddleware
from pydantic import ValidationError
from starlette.websockets import WebSocketDisconnect

from deformlab import mesh as meshmod
from deformlab.mesh import MeshError
from deformlab.solver import Constraints, NumericalError, SingularSystemError

from .schemas import (
    ConfigUpdate,
    ConstraintFile,
    GeneratorSpec,
    IterateRequest,
    IterateResponse,
    MeshPayload,
    RevisionResponse,
    SessionSummary,
)
from .sessions import NoConstraintsError, Session, SessionStore

WS_SUBPROTOCOL = "deformlab.v1"
LOCALHOST_ORIGIN_REGEX = r"^https?://(localhost|127\.0\.0\.1)(:\d+)?$"


def _build_from_spec(spec: GeneratorSpec):
    if spec.shape == "grid":
        return meshmod.generate_grid(spec.n, spec.width)
    if spec.shape == "icosphere":
        return meshmod.generate_icosphere(spec.sub, spec.radius)
    if spec.shape == "bar":
        return meshmod.generate_bar(spec.nx, spec.ny, spec.nz, spec.dims)
    # fold/cylinder sessions start at the flat rest sheet; the deformations
    # are solver targets, not initial states
    return meshmod.generate_grid(spec.n, spec.width)


def _parse_constraints(doc: ConstraintFile, session: Session) -> Constraints | None:
    entries = [(e.vertex, e.position) for e in (*doc.fixed, *doc.handles)]
    if not entries:
        return None
    constraints = Constraints(entries)
    constraints.check_range(session.mesh)
    return constraints


def create_app(store: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="deformlab service")
    app.state.store = store = store or SessionStore()
    app.add_middleware(
        CORSMiddleware,
        allow_origin_regex=LOCALHOST_ORIGIN_REGEX,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _session(session_id: str) -> Session:
        session = store.get(session_id)
        if session is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id}")
        return session

    @app.post("/sessions", status_code=201, response_model=SessionSummary)
    async def create_session(request: Request) -> SessionSummary:
        body = await request.body()
        content_type = request.headers.get("content-type", "")
        try:
            if "json" in content_type or body.lstrip()[:1] == b"{":
                spec = GeneratorSpec.model_validate_json(body)
                mesh = _build_from_spec(spec)
            else:
                mesh = meshmod.load_obj(body)
        except (MeshError, ValidationError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        session = store.create(mesh)
        return SessionSummary(id=session.id,
                              vertex_count=mesh.n_vertices,
                              face_count=mesh.n_faces,
                              surface_area=session.surface_area)

    @app.put("/sessions/{session_id}/constraints",
             response_model=RevisionResponse)
    def put_constraints(session_id: str, doc: ConstraintFile):
        session = _session(session_id)
        with session.lock:
            try:
                constraints = _parse_constraints(doc, session)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            revision, refactored = session.set_constraints(constraints)
        return RevisionResponse(revision=revision, refactored=refactored)

    @app.put("/sessions/{session_id}/config", response_model=RevisionResponse)
    def put_config(session_id: str, update: ConfigUpdate):
        session = _session(session_id)
        with session.lock:
            try:
                revision, refactored = session.set_config(
                    lam=update.lam, tol=update.tol,
                    max_iterations=update.max_iterations)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
        return RevisionResponse(revision=revision, refactored=refactored)

    @app.post("/sessions/{session_id}/iterate",
              response_model=IterateResponse)
    def iterate(session_id: str, body: IterateRequest):
        session = _session(session_id)
        with session.lock:
            try:
                positions, energy, converged = session.iterate(body.steps)
            except NoConstraintsError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            except SingularSystemError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            except NumericalError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            iteration = session.driver.iteration
            revision = session.revision
        return IterateResponse(positions=positions.tolist(),
                               energy=energy.as_dict(),
                               iteration=iteration,
                               revision=revision,
                               converged=converged)

    @app.get("/sessions/{session_id}/mesh", response_model=MeshPayload)
    def mesh_payload(session_id: str):
        session = _session(session_id)
        with session.lock:
            positions = session.positions
            constrained = session.constrained_indices
        return MeshPayload(
            vertex_count=session.mesh.n_vertices,
            face_count=session.mesh.n_faces,
            faces=session.mesh.faces.tolist(),
            rest_positions=session.mesh.vertices.tolist(),
            positions=positions.tolist(),
            diameter=session.ops.diameter,
            constrained=constrained)

    @app.delete("/sessions/{session_id}", status_code=204)
    def drop_session(session_id: str):
        if not store.drop(session_id):
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id}")
        return Response(status_code=204)

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        session = store.get(session_id)
        if session is None:
            # accept then close so the client sees a policy code, not a 500
            await websocket.accept()
            await websocket.close(code=1008, reason="unknown session")
            return
        await websocket.accept(subprotocol=WS_SUBPROTOCOL)

        inbox: asyncio.Queue = asyncio.Queue()

        async def receiver():
            try:
                while True:
                    await inbox.put(await websocket.receive_text())
            except WebSocketDisconnect:
                await inbox.put(None)

        task = asyncio.create_task(receiver())
        try:
            await _stream_loop(websocket, session, inbox)
        except WebSocketDisconnect:
            pass
        finally:
            task.cancel()

    async def _stream_loop(websocket: WebSocket, session: Session,
                           inbox: asyncio.Queue):
        idle = True  # nothing to do until the first client message
        previous = None
        while True:
            messages = []
            if idle:
                first = await inbox.get()
                if first is None:
                    return
                messages.append(first)
            # coalesce whatever queued up: latest drag per vertex wins
            while True:
                try:
                    messages.append(inbox.get_nowait())
                except asyncio.QueueEmpty:
                    break
            if any(m is None for m in messages):
                return

            drags: dict[int, list] = {}
            lam = None
            for raw in messages:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await websocket.send_json(
                        {"type": "error", "message": "bad json"})
                    continue
                kind = msg.get("type")
                if kind == "drag":
                    drags[int(msg["vertex"])] = msg["position"]
                elif kind == "set-lambda":
                    lam = float(msg["value"])
                else:
                    await websocket.send_json(
                        {"type": "error",
                         "message": f"unknown message type {kind!r}"})

            def apply_and_step():
                with session.lock:
                    notices = []
                    for vertex, position in drags.items():
                        try:
                            session.drag(vertex, position)
                        except (KeyError, NoConstraintsError) as exc:
                            notices.append(str(exc))
                    refactored = False
                    if lam is not None:
                        _, refactored = session.set_config(lam=lam)
                    if session.driver is None:
                        return None, notices, refactored
                    positions, energy, _ = session.iterate(1)
                    return ((positions, energy, session.driver.iteration,
                             session.revision), notices, refactored)

            try:
                result, notices, refactored = await asyncio.to_thread(
                    apply_and_step)
            except (SingularSystemError, NumericalError, ValueError) as exc:
                await websocket.send_json(
                    {"type": "error", "message": str(exc)})
                idle = True
                continue
            for note in notices:
                await websocket.send_json({"type": "error", "message": note})
            if refactored:
                await websocket.send_json(
                    {"type": "refactored", "revision": session.revision})
            if result is None:
                idle = True
                continue
            positions, energy, iteration, revision = result
            await websocket.send_json({
                "type": "frame",
                "iteration": iteration,
                "revision": revision,
                "energy": energy.as_dict(),
            })
            await websocket.send_bytes(
                np.asarray(positions, dtype="<f4").tobytes())

            delta = (float("inf") if previous is None
                     else float(np.max(np.abs(positions - previous))))
            previous = positions
            threshold = 1e-6 * session.ops.diameter
            if delta < threshold:
                await websocket.send_json(
                    {"type": "converged", "iteration": iteration})
                idle = True
                previous = None
            else:
                idle = False

    return app
