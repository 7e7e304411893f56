// HTTP client and stream wrapper for one deformation session. The
// stream wrapper takes the WebSocket constructor as a parameter so the
// same code runs against the browser implementation and the `ws`
// package under node.

import {
  ClientMessage,
  ConstraintDocument,
  Frame,
  FrameAssembler,
  IterateResponse,
  MeshPayload,
  RevisionResponse,
  ServerMessage,
  SessionSummary,
  STREAM_SUBPROTOCOL,
  parseServerMessage,
} from "./protocol.js";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service replied ${status}: ${detail}`);
  }
}

async function expect<T>(response: Response, status: number): Promise<T> {
  if (response.status !== status) {
    const detail = await response.text();
    throw new ServiceError(response.status, detail);
  }
  return (await response.json()) as T;
}

export interface GeneratorSpec {
  shape: "grid" | "fold" | "cylinder" | "icosphere" | "bar";
  n?: number;
  width?: number;
  sub?: number;
  radius?: number;
}

export class SessionClient {
  constructor(readonly baseUrl: string) {}

  async createSession(spec: GeneratorSpec): Promise<SessionSummary> {
    const response = await fetch(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(spec),
    });
    return expect<SessionSummary>(response, 201);
  }

  async putConstraints(
    id: string,
    doc: ConstraintDocument,
  ): Promise<RevisionResponse> {
    const response = await fetch(`${this.baseUrl}/sessions/${id}/constraints`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
    });
    return expect<RevisionResponse>(response, 200);
  }

  async putConfig(
    id: string,
    update: { lambda?: number; tol?: number; maxIterations?: number },
  ): Promise<RevisionResponse> {
    const response = await fetch(`${this.baseUrl}/sessions/${id}/config`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(update),
    });
    return expect<RevisionResponse>(response, 200);
  }

  async iterate(id: string, steps: number): Promise<IterateResponse> {
    const response = await fetch(`${this.baseUrl}/sessions/${id}/iterate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ steps }),
    });
    return expect<IterateResponse>(response, 200);
  }

  async getMesh(id: string): Promise<MeshPayload> {
    const response = await fetch(`${this.baseUrl}/sessions/${id}/mesh`);
    return expect<MeshPayload>(response, 200);
  }

  async deleteSession(id: string): Promise<void> {
    const response = await fetch(`${this.baseUrl}/sessions/${id}`, {
      method: "DELETE",
    });
    if (response.status !== 204) {
      throw new ServiceError(response.status, await response.text());
    }
  }

  streamUrl(id: string): string {
    return `${this.baseUrl.replace(/^http/, "ws")}/sessions/${id}/stream`;
  }
}

// The subset of the WebSocket API the stream uses; satisfied by both the
// DOM WebSocket and the `ws` package with binaryType "arraybuffer".
export interface WsLike {
  binaryType: string;
  send(data: string): void;
  close(): void;
  addEventListener(type: "open", handler: () => void): void;
  addEventListener(type: "close", handler: () => void): void;
  addEventListener(
    type: "message",
    handler: (event: { data: unknown }) => void,
  ): void;
}

export type WsFactory = (url: string, protocols: string[]) => WsLike;

export interface StreamHandlers {
  onFrame?: (frame: Frame) => void;
  onConverged?: (iteration: number) => void;
  onRefactored?: (revision: number) => void;
  onError?: (message: string) => void;
  onClose?: () => void;
}

export class SessionStream {
  private readonly assembler = new FrameAssembler();
  private readonly socket: WsLike;
  private opened: Promise<void>;

  constructor(
    url: string,
    factory: WsFactory,
    private readonly handlers: StreamHandlers,
  ) {
    this.socket = factory(url, [STREAM_SUBPROTOCOL]);
    this.socket.binaryType = "arraybuffer";
    this.opened = new Promise((resolve) => {
      this.socket.addEventListener("open", resolve);
    });
    this.socket.addEventListener("message", (event) => this.receive(event.data));
    this.socket.addEventListener("close", () => this.handlers.onClose?.());
  }

  ready(): Promise<void> {
    return this.opened;
  }

  // Frames produced before this revision are dropped as stale.
  raiseRevisionFloor(revision: number): void {
    this.assembler.raiseFloor(revision);
  }

  drag(vertex: number, position: [number, number, number]): void {
    this.sendMessage({ type: "drag", vertex, position });
  }

  setLambda(value: number): void {
    this.sendMessage({ type: "set-lambda", value });
  }

  close(): void {
    this.socket.close();
  }

  private sendMessage(message: ClientMessage): void {
    this.socket.send(JSON.stringify(message));
  }

  private receive(data: unknown): void {
    if (typeof data === "string") {
      const message = parseServerMessage(data);
      if (message !== null) this.dispatch(message);
      return;
    }
    const buffer = toArrayBuffer(data);
    if (buffer === null) return;
    const frame = this.assembler.acceptBinary(buffer);
    if (frame !== null) this.handlers.onFrame?.(frame);
  }

  private dispatch(message: ServerMessage): void {
    switch (message.type) {
      case "frame":
        this.assembler.acceptMeta(message);
        break;
      case "converged":
        this.handlers.onConverged?.(message.iteration);
        break;
      case "refactored":
        this.assembler.raiseFloor(message.revision);
        this.handlers.onRefactored?.(message.revision);
        break;
      case "error":
        this.handlers.onError?.(message.message);
        break;
    }
  }
}

function toArrayBuffer(data: unknown): ArrayBuffer | null {
  if (data instanceof ArrayBuffer) return data;
  if (ArrayBuffer.isView(data)) {
    // node's ws may hand over a Buffer view into a larger allocation
    const copy = new Uint8Array(data.byteLength);
    copy.set(new Uint8Array(data.buffer, data.byteOffset, data.byteLength));
    return copy.buffer;
  }
  return null;
}
