/** Typed session protocol: JSON envelopes with per-direction sequence numbers. */

export interface Envelope<T = string, P = unknown> {
  type: T;
  seq: number;
  payload: P;
}

export interface ProfileJson {
  xLeft: number;
  xRight: number;
  zFront: number;
  zBack: number;
  yUpright: number;
  stanceOffset: number;
  xUpright?: number;
  zUpright?: number;
}

export interface StatePayload {
  t: number;
  x: number;
  z: number;
  heading: number;
  speed: number;
  yawRate: number;
  score: number;
  progress: number;
  phase: string;
}

export interface EventPayload {
  t: number;
  kind: "CUBE_COLLECTED" | "BOUNDARY_HIT" | "GOAL_REACHED";
  data: Record<string, unknown>;
}

export interface RunCompletePayload {
  finished: boolean;
  reason: string;
  finishTime: number | null;
  score: number;
  cubeCount: number;
  headPathLength: number;
  runlog?: string;
}

export interface ErrorPayload {
  code: string;
  message: string;
}

export type ServerMessage =
  | Envelope<"WELCOME", { protocol: string; version: string; levels: number[]; tickHz: number }>
  | Envelope<"CALIBRATION_RESULT", { profile: ProfileJson }>
  | Envelope<"STATE", StatePayload>
  | Envelope<"EVENT", EventPayload>
  | Envelope<"RUN_COMPLETE", RunCompletePayload>
  | Envelope<"ERROR", ErrorPayload>;

export interface HeadPosePayload {
  t: number;
  pos: [number, number, number];
  orient?: [number, number, number];
}

export type WindowName = "upright" | "left" | "right" | "front" | "back";

/** Builds outgoing envelopes with a strictly increasing sequence. */
export class Outbox {
  private seq = 0;

  next<P>(type: string, payload: P): Envelope<string, P> {
    this.seq += 1;
    return { type, seq: this.seq, payload };
  }

  get lastSeq(): number {
    return this.seq;
  }
}

/** Validates inbound ordering; returns the parsed message or throws. */
export class Inbox {
  private lastSeq = 0;

  accept(raw: string): ServerMessage {
    const obj = JSON.parse(raw) as ServerMessage;
    if (typeof obj.type !== "string" || typeof obj.seq !== "number") {
      throw new Error("malformed server envelope");
    }
    if (obj.seq <= this.lastSeq) {
      throw new Error(`server sequence went backward: ${obj.seq} after ${this.lastSeq}`);
    }
    this.lastSeq = obj.seq;
    return obj;
  }
}
