// Application entry: boots a grid session against the service, streams
// solver frames into the viewer, and wires the lambda slider, handle
// editing, and the energy sparkline.

import { SessionClient, SessionStream } from "./client.js";
import { ConstraintDocument, Frame } from "./protocol.js";
import { EnergyHistory, drawSparkline } from "./sparkline.js";
import { Viewer } from "./viewer.js";

const GRID_N = 20;

function serverBase(): string {
  const override = new URLSearchParams(window.location.search).get("server");
  return override ?? "http://127.0.0.1:7878";
}

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (found === null) throw new Error(`missing element #${id}`);
  return found as T;
}

function cornerHandles(side: number, positions: number[][]): ConstraintDocument {
  const first = side * (side + 1); // first vertex of the top row
  const corners = [0, side, first, first + side];
  return {
    fixed: [],
    handles: corners.map((vertex) => ({
      vertex,
      position: positions[vertex] as [number, number, number],
    })),
  };
}

async function boot(): Promise<void> {
  const status = element<HTMLDivElement>("status");
  const info = element<HTMLDivElement>("session-info");
  const slider = element<HTMLInputElement>("lambda");
  const sliderValue = element<HTMLSpanElement>("lambda-value");
  const spark = element<HTMLCanvasElement>("spark");
  const note = (text: string) => {
    status.textContent = text;
  };

  const client = new SessionClient(serverBase());
  note(`connecting to ${client.baseUrl}`);

  const session = await client.createSession({ shape: "grid", n: GRID_N });
  const mesh = await client.getMesh(session.id);
  const doc = cornerHandles(GRID_N, mesh.positions);
  // lift one corner so the scene starts mid-deformation
  doc.handles[3].position = [
    doc.handles[3].position[0],
    doc.handles[3].position[1],
    0.35,
  ];
  const ack = await client.putConstraints(session.id, doc);
  info.textContent =
    `session ${session.id.slice(0, 8)} | ${session.vertexCount} vertices, ` +
    `${session.faceCount} faces`;

  const history = new EnergyHistory();
  const viewer = new Viewer(element<HTMLDivElement>("viewport"), {
    onPick: (pick) => {
      if (shiftHeld) void toggleHandle(pick.vertex);
    },
    onDragMove: (vertex, position) => queueDrag(vertex, position),
    onDragEnd: () => void persistHandle(),
  });
  viewer.loadMesh(mesh);
  viewer.setHandles(doc.handles);

  const stream = new SessionStream(
    client.streamUrl(session.id),
    (url, protocols) => new WebSocket(url, protocols),
    {
      onFrame: (frame: Frame) => {
        viewer.updatePositions(frame.positions);
        history.push(frame.meta.energy);
        drawSparkline(spark, history);
        note(
          `iteration ${frame.meta.iteration} | ` +
          `E=${frame.meta.energy.total.toExponential(3)}`,
        );
      },
      onConverged: (iteration) => note(`converged at iteration ${iteration}`),
      onRefactored: (revision) =>
        note(`system refactored (revision ${revision})`),
      onError: (message) => note(`server: ${message}`),
      onClose: () => note("stream closed"),
    },
  );
  stream.raiseRevisionFloor(ack.revision);
  await stream.ready();
  note("ready; drag a handle, shift-click to add or remove one");

  // Coalesce pointer moves to one drag message per animation frame.
  let pendingDrag: [number, [number, number, number]] | null = null;
  let dragScheduled = false;
  function queueDrag(vertex: number, position: [number, number, number]): void {
    pendingDrag = [vertex, position];
    const handle = doc.handles.find((h) => h.vertex === vertex);
    if (handle !== undefined) handle.position = position;
    if (dragScheduled) return;
    dragScheduled = true;
    requestAnimationFrame(() => {
      dragScheduled = false;
      if (pendingDrag === null) return;
      stream.drag(pendingDrag[0], pendingDrag[1]);
      pendingDrag = null;
    });
  }

  // Persist the dragged target; the ack revision gates out stale frames
  // and the marker set is rebuilt from the acknowledged document.
  async function persistHandle(): Promise<void> {
    const reply = await client.putConstraints(session.id, doc);
    stream.raiseRevisionFloor(reply.revision);
    viewer.setHandles(doc.handles);
    if (reply.refactored) note("constraint set changed; system refactored");
  }

  async function toggleHandle(vertex: number): Promise<void> {
    const existing = doc.handles.findIndex((h) => h.vertex === vertex);
    if (existing >= 0) {
      if (doc.handles.length <= 3) {
        note("keeping at least three handles");
        return;
      }
      doc.handles.splice(existing, 1);
    } else {
      doc.handles.push({ vertex, position: viewer.vertexPosition(vertex) });
    }
    const reply = await client.putConstraints(session.id, doc);
    stream.raiseRevisionFloor(reply.revision);
    viewer.setHandles(doc.handles);
    note(
      reply.refactored
        ? `handle set edited; refactored at revision ${reply.revision}`
        : `handle targets updated (revision ${reply.revision})`,
    );
  }

  let shiftHeld = false;
  window.addEventListener("keydown", (e) => {
    if (e.key === "Shift") shiftHeld = true;
  });
  window.addEventListener("keyup", (e) => {
    if (e.key === "Shift") shiftHeld = false;
  });

  slider.addEventListener("input", () => {
    sliderValue.textContent = Number(slider.value).toFixed(2);
  });
  slider.addEventListener("change", () => {
    stream.setLambda(Number(slider.value));
    history.clear();
  });
}

boot().catch((error) => {
  const status = document.getElementById("status");
  if (status !== null) status.textContent = String(error);
  console.error(error);
});
