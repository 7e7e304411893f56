"""HTTP and WebSocket contract tests for the session service."""

import numpy as np
import pytest
from fastapi.testclient import TestClient
from starlette.websockets import WebSocketDisconnect

from deformlab.service import create_app

GRID_SPEC = {"shape": "grid", "n": 10, "width": 1.0}
GRID_VERTICES = 121
GRID_FACES = 200

# Two corners pinned at rest, two lifted: a gentle fold with a closed
# constraint hull, solvable at any lambda.
CONS = {
    "fixed": [{"vertex": 0, "position": [0.0, 0.0, 0.0]},
              {"vertex": 10, "position": [1.0, 0.0, 0.0]}],
    "handles": [{"vertex": 110, "position": [0.0, 1.0, 0.4]},
                {"vertex": 120, "position": [1.0, 1.0, 0.4]}],
}

SQUARE_OBJ = b"""
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
f 1 2 3
f 1 3 4
"""


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def new_session(client, spec=GRID_SPEC):
    response = client.post("/sessions", json=spec)
    assert response.status_code == 201, response.text
    return response.json()["id"]


def constrained_session(client, doc=CONS):
    sid = new_session(client)
    response = client.put(f"/sessions/{sid}/constraints", json=doc)
    assert response.status_code == 200, response.text
    return sid


class TestSessionCreation:
    def test_grid_generator_spec(self, client):
        response = client.post("/sessions", json=GRID_SPEC)
        assert response.status_code == 201
        body = response.json()
        assert body["vertexCount"] == GRID_VERTICES
        assert body["faceCount"] == GRID_FACES
        assert isinstance(body["id"], str) and body["id"]
        assert body["surfaceArea"] == pytest.approx(1.0, rel=1e-9)

    def test_icosphere_surface_area(self, client):
        response = client.post(
            "/sessions", json={"shape": "icosphere", "sub": 3, "radius": 1.0})
        assert response.status_code == 201
        area = response.json()["surfaceArea"]
        assert abs(area - 4 * np.pi) / (4 * np.pi) < 0.01

    def test_obj_body(self, client):
        response = client.post("/sessions", content=SQUARE_OBJ,
                               headers={"content-type": "text/plain"})
        assert response.status_code == 201
        body = response.json()
        assert body["vertexCount"] == 4
        assert body["faceCount"] == 2

    def test_garbage_body_rejected(self, client):
        response = client.post("/sessions", content=b"not a mesh at all",
                               headers={"content-type": "text/plain"})
        assert response.status_code == 422

    def test_unknown_shape_rejected(self, client):
        response = client.post("/sessions", json={"shape": "dodecahedron"})
        assert response.status_code == 422


class TestConstraints:
    def test_first_put_refactors(self, client):
        sid = new_session(client)
        response = client.put(f"/sessions/{sid}/constraints", json=CONS)
        assert response.status_code == 200
        assert response.json() == {"revision": 1, "refactored": True}

    def test_target_only_edit_keeps_factorization(self, client):
        sid = constrained_session(client)
        moved = {"fixed": CONS["fixed"],
                 "handles": [{"vertex": 110, "position": [0.0, 1.0, 0.5]},
                             {"vertex": 120, "position": [1.0, 1.0, 0.5]}]}
        response = client.put(f"/sessions/{sid}/constraints", json=moved)
        body = response.json()
        assert body["refactored"] is False
        assert body["revision"] == 2

    def test_index_change_refactors(self, client):
        sid = constrained_session(client)
        wider = {"fixed": CONS["fixed"] + [{"vertex": 5,
                                           "position": [0.5, 0.0, 0.0]}],
                 "handles": CONS["handles"]}
        response = client.put(f"/sessions/{sid}/constraints", json=wider)
        assert response.json()["refactored"] is True

    def test_clearing_constraints_drops_solver(self, client):
        sid = constrained_session(client)
        response = client.put(f"/sessions/{sid}/constraints",
                              json={"fixed": [], "handles": []})
        assert response.json()["refactored"] is True
        response = client.post(f"/sessions/{sid}/iterate", json={"steps": 1})
        assert response.status_code == 409

    def test_duplicate_vertex_rejected(self, client):
        sid = new_session(client)
        doc = {"fixed": [{"vertex": 0, "position": [0, 0, 0]},
                         {"vertex": 0, "position": [1, 0, 0]}],
               "handles": []}
        response = client.put(f"/sessions/{sid}/constraints", json=doc)
        assert response.status_code == 422

    def test_out_of_range_vertex_rejected(self, client):
        sid = new_session(client)
        doc = {"fixed": [{"vertex": 9999, "position": [0, 0, 0]}],
               "handles": []}
        response = client.put(f"/sessions/{sid}/constraints", json=doc)
        assert response.status_code == 422

    def test_unknown_session(self, client):
        response = client.put("/sessions/nope/constraints", json=CONS)
        assert response.status_code == 404


class TestConfig:
    def test_same_lambda_no_refactor(self, client):
        sid = constrained_session(client)
        response = client.put(f"/sessions/{sid}/config", json={"lambda": 0.5})
        assert response.json()["refactored"] is False

    def test_lambda_change_refactors(self, client):
        sid = constrained_session(client)
        response = client.put(f"/sessions/{sid}/config", json={"lambda": 0.7})
        assert response.json()["refactored"] is True

    def test_lambda_out_of_range_rejected(self, client):
        sid = new_session(client)
        response = client.put(f"/sessions/{sid}/config", json={"lambda": 1.5})
        assert response.status_code == 422

    def test_tolerance_update_no_refactor(self, client):
        sid = constrained_session(client)
        response = client.put(f"/sessions/{sid}/config",
                              json={"tol": 1e-7, "maxIterations": 64})
        assert response.status_code == 200
        assert response.json()["refactored"] is False


class TestIterate:
    def test_conflict_without_constraints(self, client):
        sid = new_session(client)
        response = client.post(f"/sessions/{sid}/iterate", json={"steps": 1})
        assert response.status_code == 409

    def test_zero_steps_echoes_state(self, client):
        sid = constrained_session(client)
        before = client.post(f"/sessions/{sid}/iterate",
                             json={"steps": 3}).json()
        echo = client.post(f"/sessions/{sid}/iterate",
                           json={"steps": 0}).json()
        assert echo["iteration"] == before["iteration"]
        assert echo["revision"] == before["revision"]
        assert echo["converged"] is False
        assert np.array_equal(echo["positions"], before["positions"])

    def test_split_iteration_matches_single_run(self, client):
        sid_a = constrained_session(client)
        sid_b = constrained_session(client)
        client.post(f"/sessions/{sid_a}/iterate", json={"steps": 5})
        split = client.post(f"/sessions/{sid_a}/iterate",
                            json={"steps": 5}).json()
        whole = client.post(f"/sessions/{sid_b}/iterate",
                            json={"steps": 10}).json()
        assert split["iteration"] == whole["iteration"] == 10
        assert np.array_equal(split["positions"], whole["positions"])

    def test_energy_non_increasing(self, client):
        sid = constrained_session(client)
        totals = [client.post(f"/sessions/{sid}/iterate",
                              json={"steps": 1}).json()["energy"]["total"]
                  for _ in range(12)]
        assert np.all(np.diff(totals) <= 1e-10)

    def test_energy_payload_terms(self, client):
        sid = constrained_session(client)
        energy = client.post(f"/sessions/{sid}/iterate",
                             json={"steps": 1}).json()["energy"]
        assert set(energy) == {"stretch", "bend", "total", "lambda"}
        assert energy["total"] == pytest.approx(
            0.5 * energy["stretch"] + 0.5 * energy["bend"])


class TestMeshEndpoint:
    def test_payload_shape(self, client):
        sid = constrained_session(client)
        body = client.get(f"/sessions/{sid}/mesh").json()
        assert set(body) == {"vertexCount", "faceCount", "faces",
                             "restPositions", "positions", "diameter",
                             "constrained"}
        assert body["vertexCount"] == GRID_VERTICES
        assert len(body["faces"]) == GRID_FACES
        assert len(body["positions"]) == GRID_VERTICES
        assert body["constrained"] == [0, 10, 110, 120]
        assert body["diameter"] > 1.0

    def test_positions_track_iteration(self, client):
        sid = constrained_session(client)
        stepped = client.post(f"/sessions/{sid}/iterate",
                              json={"steps": 4}).json()
        body = client.get(f"/sessions/{sid}/mesh").json()
        assert np.array_equal(body["positions"], stepped["positions"])
        assert not np.array_equal(body["positions"], body["restPositions"])


class TestDelete:
    def test_delete_then_gone(self, client):
        sid = new_session(client)
        assert client.delete(f"/sessions/{sid}").status_code == 204
        assert client.get(f"/sessions/{sid}/mesh").status_code == 404
        assert client.delete(f"/sessions/{sid}").status_code == 404


def drain_to_converged(ws, n_vertices, max_frames=3000):
    """Read frame/binary pairs until the converged notice; returns metas."""
    frames = []
    while True:
        msg = ws.receive_json()
        if msg["type"] == "frame":
            blob = ws.receive_bytes()
            assert len(blob) == 12 * n_vertices
            frames.append(msg)
            assert len(frames) <= max_frames, "no convergence notice"
        elif msg["type"] == "converged":
            return frames, msg
        else:
            raise AssertionError(f"unexpected message {msg}")


class TestStream:
    def test_subprotocol_negotiated(self, client):
        sid = constrained_session(client)
        with client.websocket_connect(
                f"/sessions/{sid}/stream",
                subprotocols=["deformlab.v1"]) as ws:
            assert ws.accepted_subprotocol == "deformlab.v1"

    def test_unknown_session_closed(self, client):
        with pytest.raises(WebSocketDisconnect) as exc_info:
            with client.websocket_connect(
                    "/sessions/nope/stream",
                    subprotocols=["deformlab.v1"]) as ws:
                ws.receive_text()
        assert exc_info.value.code == 1008

    def test_drag_streams_frames_to_convergence(self, client):
        sid = constrained_session(client)
        with client.websocket_connect(
                f"/sessions/{sid}/stream",
                subprotocols=["deformlab.v1"]) as ws:
            ws.send_json({"type": "drag", "vertex": 110,
                          "position": [0.0, 1.0, 0.45]})
            frames, converged = drain_to_converged(ws, GRID_VERTICES)
        assert frames
        revisions = [f["revision"] for f in frames]
        iterations = [f["iteration"] for f in frames]
        assert revisions == sorted(set(revisions))
        assert iterations == sorted(set(iterations))
        assert converged["iteration"] == iterations[-1]

    def test_frame_buffer_decodes_to_positions(self, client):
        sid = constrained_session(client)
        with client.websocket_connect(
                f"/sessions/{sid}/stream",
                subprotocols=["deformlab.v1"]) as ws:
            ws.send_json({"type": "drag", "vertex": 120,
                          "position": [1.0, 1.0, 0.45]})
            meta = ws.receive_json()
            assert meta["type"] == "frame"
            blob = ws.receive_bytes()
            positions = np.frombuffer(blob, dtype="<f4").reshape(-1, 3)
        assert positions.shape == (GRID_VERTICES, 3)
        # the dragged handle sits at its new target in the streamed state
        assert np.allclose(positions[120], [1.0, 1.0, 0.45], atol=1e-6)

    def test_set_lambda_emits_refactored_notice(self, client):
        sid = constrained_session(client)
        client.post(f"/sessions/{sid}/iterate", json={"steps": 50})
        with client.websocket_connect(
                f"/sessions/{sid}/stream",
                subprotocols=["deformlab.v1"]) as ws:
            ws.send_json({"type": "set-lambda", "value": 0.8})
            notice = ws.receive_json()
            assert notice["type"] == "refactored"
            assert isinstance(notice["revision"], int)
            frames, _ = drain_to_converged(ws, GRID_VERTICES)
        assert frames
        assert all(f["energy"]["lambda"] == 0.8 for f in frames)

    def test_errors_keep_connection_open(self, client):
        sid = new_session(client)  # no constraints: errors, never frames
        with client.websocket_connect(
                f"/sessions/{sid}/stream",
                subprotocols=["deformlab.v1"]) as ws:
            ws.send_text("{not json")
            msg = ws.receive_json()
            assert msg == {"type": "error", "message": "bad json"}
            ws.send_json({"type": "spin"})
            msg = ws.receive_json()
            assert msg["type"] == "error"
            assert "spin" in msg["message"]
            ws.send_json({"type": "drag", "vertex": 0,
                          "position": [0, 0, 0]})
            msg = ws.receive_json()
            assert msg["type"] == "error"
            assert "no constraints" in msg["message"]
            # still alive: a config change is acknowledged
            ws.send_json({"type": "set-lambda", "value": 0.9})
            msg = ws.receive_json()
            assert msg["type"] == "refactored"

    def test_drag_of_unconstrained_vertex_reports_error(self, client):
        sid = constrained_session(client)
        client.post(f"/sessions/{sid}/iterate", json={"steps": 400})
        with client.websocket_connect(
                f"/sessions/{sid}/stream",
                subprotocols=["deformlab.v1"]) as ws:
            ws.send_json({"type": "drag", "vertex": 55,
                          "position": [0.5, 0.5, 0.5]})
            msg = ws.receive_json()
            assert msg["type"] == "error"
            assert "not constrained" in msg["message"]
            # the wake still steps the converged state: frames then settle
            frames, _ = drain_to_converged(ws, GRID_VERTICES)
        assert frames
