// Protocol-level round trip against a live service instance: the suite
// spawns the python server, then drives it exactly as the browser app
// does, through SessionClient and SessionStream with the `ws` package
// standing in for the DOM WebSocket.

import { ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { SessionClient, SessionStream, ServiceError, WsLike } from "../src/client.js";
import { Frame } from "../src/protocol.js";
import { EnergyHistory } from "../src/sparkline.js";

const PORT = 7878;
const BASE = `http://127.0.0.1:${PORT}`;
const GRID_N = 10;
const V = (GRID_N + 1) * (GRID_N + 1);

let server: ChildProcess;

const wsFactory = (url: string, protocols: string[]): WsLike =>
  new WebSocket(url, protocols) as unknown as WsLike;

async function waitForService(): Promise<void> {
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    try {
      const probe = await fetch(`${BASE}/sessions`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ shape: "grid", n: 4 }),
      });
      if (probe.status === 201) {
        const { id } = (await probe.json()) as { id: string };
        await fetch(`${BASE}/sessions/${id}`, { method: "DELETE" });
        return;
      }
    } catch {
      // not listening yet
    }
    await sleep(250);
  }
  throw new Error("service did not come up on " + BASE);
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function until(
  predicate: () => boolean,
  what: string,
  timeoutMs = 60_000,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!predicate()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await sleep(20);
  }
}

function expectNonIncreasing(totals: number[]): void {
  const slack = 1e-9 * Math.max(1, Math.abs(totals[0] ?? 0));
  for (let i = 1; i < totals.length; i++) {
    expect(totals[i]).toBeLessThanOrEqual(totals[i - 1] + slack);
  }
}

beforeAll(async () => {
  server = spawn("python3", ["-m", "deformlab.cli", "serve", "--port", String(PORT)], {
    stdio: "ignore",
  });
  await waitForService();
});

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("session lifecycle over HTTP", () => {
  it("creates, iterates, and deletes a grid session", async () => {
    const client = new SessionClient(BASE);
    const session = await client.createSession({ shape: "grid", n: GRID_N });
    expect(session.vertexCount).toBe(V);
    expect(session.faceCount).toBe(2 * GRID_N * GRID_N);

    const mesh = await client.getMesh(session.id);
    expect(mesh.positions.length).toBe(V);
    expect(mesh.faces.length).toBe(2 * GRID_N * GRID_N);
    expect(mesh.diameter).toBeGreaterThan(1);
    expect(mesh.constrained).toEqual([]);

    const ack = await client.putConstraints(session.id, {
      fixed: [
        { vertex: 0, position: [0, 0, 0] },
        { vertex: GRID_N, position: [1, 0, 0] },
      ],
      handles: [{ vertex: V - 1, position: [1, 1, 0.3] }],
    });
    expect(ack).toEqual({ revision: 1, refactored: true });

    const run = await client.iterate(session.id, 5);
    expect(run.iteration).toBe(5);
    expect(run.positions.length).toBe(V);
    expect(run.energy.total).toBeGreaterThan(0);

    // moving only targets keeps the factorization
    const moved = await client.putConstraints(session.id, {
      fixed: [
        { vertex: 0, position: [0, 0, 0] },
        { vertex: GRID_N, position: [1, 0, 0] },
      ],
      handles: [{ vertex: V - 1, position: [1, 1, 0.35] }],
    });
    expect(moved.refactored).toBe(false);

    await client.deleteSession(session.id);
    await expect(client.getMesh(session.id)).rejects.toBeInstanceOf(ServiceError);
  });

  it("rejects bad inputs with typed failures", async () => {
    const client = new SessionClient(BASE);
    await expect(
      client.createSession({ shape: "grid", n: -1 }),
    ).rejects.toMatchObject({ status: 422 });
    const session = await client.createSession({ shape: "grid", n: 4 });
    await expect(client.iterate(session.id, 1)).rejects.toMatchObject({
      status: 409,
    });
    await expect(
      client.putConfig(session.id, { lambda: 1.5 }),
    ).rejects.toMatchObject({ status: 422 });
    await client.deleteSession(session.id);
  });
});

describe("interactive stream", () => {
  it("drags produce descending frames, lambda edits a refactor notice", async () => {
    const client = new SessionClient(BASE);
    const session = await client.createSession({ shape: "grid", n: GRID_N });
    const mesh = await client.getMesh(session.id);

    const corner = (v: number) =>
      mesh.positions[v] as [number, number, number];
    const handleVertex = V - 1;
    const doc = {
      fixed: [
        { vertex: 0, position: corner(0) },
        { vertex: GRID_N, position: corner(GRID_N) },
        { vertex: V - 1 - GRID_N, position: corner(V - 1 - GRID_N) },
      ],
      handles: [{ vertex: handleVertex, position: corner(handleVertex) }],
    };
    const ack = await client.putConstraints(session.id, doc);

    const frames: Frame[] = [];
    const converged: number[] = [];
    const refactors: number[] = [];
    const errors: string[] = [];
    const history = new EnergyHistory(10_000);
    const stream = new SessionStream(client.streamUrl(session.id), wsFactory, {
      onFrame: (frame) => {
        frames.push(frame);
        history.push(frame.meta.energy);
      },
      onConverged: (iteration) => converged.push(iteration),
      onRefactored: (revision) => refactors.push(revision),
      onError: (message) => errors.push(message),
    });
    stream.raiseRevisionFloor(ack.revision);
    await stream.ready();

    // first drag: lift the free corner, stream until settled
    const target1: [number, number, number] = [1, 1, 0.25];
    stream.drag(handleVertex, target1);
    await until(() => converged.length >= 1, "first convergence");
    expect(frames.length).toBeGreaterThan(0);
    const settled1 = frames[frames.length - 1];
    expect(settled1.positions.length).toBe(3 * V);
    for (let c = 0; c < 3; c++) {
      expect(
        Math.abs(settled1.positions[3 * handleVertex + c] - target1[c]),
      ).toBeLessThan(1e-5);
    }
    // the descent recorded by the sparkline history is non-increasing
    expectNonIncreasing(history.values("total"));

    // revisions never rewind across the stream
    const revisions = frames.map((f) => f.meta.revision);
    for (let i = 1; i < revisions.length; i++) {
      expect(revisions[i]).toBeGreaterThanOrEqual(revisions[i - 1]);
    }

    // second drag from the settled state: fresh descent, also monotone
    const before = frames.length;
    history.clear();
    stream.drag(handleVertex, [1, 1, 0.4]);
    await until(() => converged.length >= 2, "second convergence");
    expect(frames.length).toBeGreaterThan(before);
    expectNonIncreasing(history.values("total"));

    // persisting the dragged target acks without a refactor
    const persisted = await client.putConstraints(session.id, {
      ...doc,
      handles: [{ vertex: handleVertex, position: [1, 1, 0.4] }],
    });
    expect(persisted.refactored).toBe(false);
    stream.raiseRevisionFloor(persisted.revision);

    // lambda change must come back as a refactor notice, then settle
    stream.setLambda(0.8);
    await until(() => refactors.length >= 1, "refactor notice");
    await until(() => converged.length >= 3, "post-lambda convergence");
    const last = frames[frames.length - 1];
    expect(last.meta.energy.lambda).toBe(0.8);

    // server-side state agrees with the final frame (float32 rounding)
    const snapshot = await client.getMesh(session.id);
    for (let v = 0; v < V; v++) {
      for (let c = 0; c < 3; c++) {
        expect(
          Math.abs(snapshot.positions[v][c] - last.positions[3 * v + c]),
        ).toBeLessThan(1e-4);
      }
    }

    // a drag of an unconstrained vertex reports an error, not a close
    stream.drag(5, [0.5, 0, 0]);
    await until(() => errors.length >= 1, "error notice");
    expect(errors[0]).toContain("not constrained");

    expect(converged.length).toBeGreaterThanOrEqual(3);
    stream.close();
    await client.deleteSession(session.id);
  });
});
