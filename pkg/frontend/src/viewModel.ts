/** Run view model: a pure reducer over server messages.
 *
 * The UI is stateless with respect to physics: the player marker comes only
 * from server-confirmed STATE snapshots (never extrapolated), and the
 * rendered score is the count of CUBE_COLLECTED events received. The avatar
 * flag affects rendering only and never produces outgoing messages.
 */

import type {
  EventPayload,
  RunCompletePayload,
  ServerMessage,
  StatePayload,
} from "./protocol.js";

export const EVENT_LOG_LIMIT = 10;

export interface ViewModel {
  connection: "connecting" | "open" | "closed";
  phase: string;
  player: StatePayload | null;
  cubesCollected: number[];
  events: EventPayload[]; // most recent last, capped at EVENT_LOG_LIMIT
  avatar: boolean;
  complete: RunCompletePayload | null;
  lastError: string | null;
  serverVersion: string | null;
  levels: number[];
}

export function vmInit(): ViewModel {
  return {
    connection: "connecting",
    phase: "idle",
    player: null,
    cubesCollected: [],
    events: [],
    avatar: true,
    complete: null,
    lastError: null,
    serverVersion: null,
    levels: [],
  };
}

export function vmConnection(vm: ViewModel, connection: ViewModel["connection"]): ViewModel {
  return { ...vm, connection };
}

/** Rendering-only toggle; the reducer emits nothing for it. */
export function vmToggleAvatar(vm: ViewModel): ViewModel {
  return { ...vm, avatar: !vm.avatar };
}

export function vmScore(vm: ViewModel): number {
  return vm.cubesCollected.length;
}

export function vmRunStarted(vm: ViewModel): ViewModel {
  return { ...vm, cubesCollected: [], events: [], complete: null, lastError: null };
}

export function vmReduce(vm: ViewModel, msg: ServerMessage): ViewModel {
  switch (msg.type) {
    case "WELCOME":
      return { ...vm, serverVersion: msg.payload.version, levels: msg.payload.levels };
    case "STATE":
      return { ...vm, player: msg.payload, phase: msg.payload.phase };
    case "EVENT": {
      const events = [...vm.events, msg.payload].slice(-EVENT_LOG_LIMIT);
      let cubes = vm.cubesCollected;
      if (msg.payload.kind === "CUBE_COLLECTED") {
        const idx = Number(msg.payload.data["cube"]);
        if (!cubes.includes(idx)) {
          cubes = [...cubes, idx];
        }
      }
      return { ...vm, events, cubesCollected: cubes };
    }
    case "RUN_COMPLETE":
      return { ...vm, complete: msg.payload, phase: "finished" };
    case "ERROR":
      return { ...vm, lastError: `${msg.payload.code}: ${msg.payload.message}` };
    case "CALIBRATION_RESULT":
      return vm; // the wizard consumes this one
    default:
      return vm;
  }
}
