// Wire types for the deformation session service. HTTP bodies are
// camelCase JSON; the stream pairs each frame meta message with one
// binary little-endian float32 xyz buffer.

export interface EnergyBreakdown {
  stretch: number;
  bend: number;
  total: number;
  lambda: number;
}

export interface FrameMeta {
  type: "frame";
  iteration: number;
  revision: number;
  energy: EnergyBreakdown;
}

export interface ConvergedMessage {
  type: "converged";
  iteration: number;
}

export interface RefactoredMessage {
  type: "refactored";
  revision: number;
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage =
  | FrameMeta
  | ConvergedMessage
  | RefactoredMessage
  | ErrorMessage;

export interface DragMessage {
  type: "drag";
  vertex: number;
  position: [number, number, number];
}

export interface SetLambdaMessage {
  type: "set-lambda";
  value: number;
}

export type ClientMessage = DragMessage | SetLambdaMessage;

export interface SessionSummary {
  id: string;
  vertexCount: number;
  faceCount: number;
  surfaceArea: number;
}

export interface RevisionResponse {
  revision: number;
  refactored: boolean;
}

export interface IterateResponse {
  positions: number[][];
  energy: EnergyBreakdown;
  iteration: number;
  revision: number;
  converged: boolean;
}

export interface MeshPayload {
  vertexCount: number;
  faceCount: number;
  faces: number[][];
  restPositions: number[][];
  positions: number[][];
  diameter: number;
  constrained: number[];
}

export interface ConstraintEntry {
  vertex: number;
  position: [number, number, number];
}

export interface ConstraintDocument {
  fixed: ConstraintEntry[];
  handles: ConstraintEntry[];
}

export const STREAM_SUBPROTOCOL = "deformlab.v1";

export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as Record<string, unknown>;
  switch (msg.type) {
    case "frame":
      if (
        typeof msg.iteration === "number" &&
        typeof msg.revision === "number" &&
        typeof msg.energy === "object" &&
        msg.energy !== null
      ) {
        return msg as unknown as FrameMeta;
      }
      return null;
    case "converged":
      return typeof msg.iteration === "number"
        ? (msg as unknown as ConvergedMessage)
        : null;
    case "refactored":
      return typeof msg.revision === "number"
        ? (msg as unknown as RefactoredMessage)
        : null;
    case "error":
      return typeof msg.message === "string"
        ? (msg as unknown as ErrorMessage)
        : null;
    default:
      return null;
  }
}

export interface Frame {
  meta: FrameMeta;
  positions: Float32Array; // x0 y0 z0 x1 y1 z1 ...
}

export function decodePositions(buffer: ArrayBuffer): Float32Array {
  if (buffer.byteLength % 12 !== 0) {
    throw new Error(`position buffer of ${buffer.byteLength} bytes is not a multiple of 12`);
  }
  // the wire format is little-endian; typed-array views use platform order
  if (!IS_LITTLE_ENDIAN) {
    const view = new DataView(buffer);
    const out = new Float32Array(buffer.byteLength / 4);
    for (let i = 0; i < out.length; i++) out[i] = view.getFloat32(4 * i, true);
    return out;
  }
  return new Float32Array(buffer);
}

const IS_LITTLE_ENDIAN =
  new Uint8Array(new Uint32Array([1]).buffer)[0] === 1;

// Pairs frame meta messages with the binary buffer that follows each one
// and drops frames older than the highest revision acknowledged so far,
// so a burst of stale frames after a constraint PUT never rewinds the view.
export class FrameAssembler {
  private pending: FrameMeta | null = null;
  private floor = 0;

  raiseFloor(revision: number): void {
    if (revision > this.floor) this.floor = revision;
  }

  get revisionFloor(): number {
    return this.floor;
  }

  acceptMeta(meta: FrameMeta): void {
    this.pending = meta;
  }

  acceptBinary(buffer: ArrayBuffer): Frame | null {
    const meta = this.pending;
    this.pending = null;
    if (meta === null) return null; // binary without a header, ignore
    if (meta.revision < this.floor) return null; // stale after an edit
    this.raiseFloor(meta.revision);
    return { meta, positions: decodePositions(buffer) };
  }
}
