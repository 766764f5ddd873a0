/** Browser wiring: connect, calibrate, pick a level, steer with the pointer.
 *
 * Configuration via query params: ?server=host:port&sensitivity=0.3
 */

import { defaultMapping, pointerToHead, type InputMapping } from "./mapping.js";
import type { ProfileJson, ServerMessage } from "./protocol.js";
import { connectSession, type SessionSocket } from "./socket.js";
import { makeThrottle } from "./throttle.js";
import { drawScene, hudText, makeScene, type Scene } from "./render.js";
import type { LevelJson } from "./track.js";
import {
  vmConnection,
  vmInit,
  vmReduce,
  vmRunStarted,
  vmToggleAvatar,
  type ViewModel,
} from "./viewModel.js";
import {
  wizardInit,
  wizardOnError,
  wizardOnResult,
  wizardReady,
  wizardStart,
  wizardTargetPointer,
  wizardTick,
  type WizardState,
} from "./wizard.js";

const params = new URLSearchParams(location.search);
const serverHost = params.get("server") ?? `${location.hostname || "127.0.0.1"}:8777`;
const sensitivity = Number(params.get("sensitivity") ?? "0.3");
const WIZARD_STEP_SECONDS = 2.4;
const POSE_MAX_HZ = 50;

const canvas = document.getElementById("stage") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const hud = document.getElementById("hud")!;
const statusLine = document.getElementById("status")!;
const calibrateBtn = document.getElementById("calibrate") as HTMLButtonElement;
const startBtn = document.getElementById("start") as HTMLButtonElement;
const levelSelect = document.getElementById("level") as HTMLSelectElement;
const avatarToggle = document.getElementById("avatar") as HTMLInputElement;
const overlay = document.getElementById("overlay")!;

let vm: ViewModel = vmInit();
let wizard: WizardState = wizardInit();
let mapping: InputMapping = defaultMapping(sensitivity);
let scene: Scene | null = null;
let profile: ProfileJson | null = null;
let pointer = { px: 0.5, py: 0.5 };
let crouched = false;
let runClock = 0; // seconds, advanced with outgoing poses
const throttle = makeThrottle(POSE_MAX_HZ);

const socket: SessionSocket = connectSession(`ws://${serverHost}/session`, {
  onOpen() {
    vm = vmConnection(vm, "open");
    overlay.classList.add("hidden");
    socket.send("HELLO", {});
  },
  onClose(willReconnect: boolean) {
    vm = vmConnection(vm, willReconnect ? "connecting" : "closed");
    wizard = wizardInit();
    overlay.textContent = willReconnect ? "connection lost - reconnecting" : "disconnected";
    overlay.classList.remove("hidden");
  },
  onMessage(msg: ServerMessage) {
    if (msg.type === "CALIBRATION_RESULT") {
      profile = msg.payload.profile;
      mapping = {
        ...mapping,
        headX: profile.xUpright ?? 0,
        headY: profile.yUpright,
        headZ: profile.zUpright ?? 0,
        crouchDepth: 1.2 * profile.stanceOffset,
      };
      wizard = wizardOnResult(wizard, profile);
      statusLine.textContent =
        `calibrated: left ${profile.xLeft.toFixed(2)} m, right ${profile.xRight.toFixed(2)} m, ` +
        `front ${profile.zFront.toFixed(2)} m, back ${profile.zBack.toFixed(2)} m`;
    } else if (msg.type === "ERROR") {
      wizard = wizardOnError(wizard, `${msg.payload.code}: ${msg.payload.message}`);
      statusLine.textContent = `${msg.payload.code}: ${msg.payload.message}`;
    }
    vm = vmReduce(vm, msg);
  },
});

async function fetchLevel(id: number): Promise<LevelJson> {
  const resp = await fetch(`http://${serverHost}/level?id=${id}&seed=0`);
  if (!resp.ok) {
    throw new Error(`level fetch failed: ${resp.status}`);
  }
  return (await resp.json()) as LevelJson;
}

calibrateBtn.addEventListener("click", () => {
  const [next, markers] = wizardStart(wizard, performance.now() / 1000);
  wizard = next;
  for (const m of markers) {
    socket.send("CALIBRATE_WINDOW", m);
  }
});

startBtn.addEventListener("click", () => {
  void (async () => {
    const levelId = Number(levelSelect.value);
    scene = makeScene(await fetchLevel(levelId), canvas.width, canvas.height);
    vm = vmRunStarted(vm);
    runClock = 0;
    socket.send("START_LEVEL", { level: levelId, seed: 0, avatar: vm.avatar });
  })();
});

avatarToggle.addEventListener("change", () => {
  vm = vmToggleAvatar(vm); // rendering only; no message leaves the client
});

canvas.addEventListener("pointermove", (ev: PointerEvent) => {
  const rect = canvas.getBoundingClientRect();
  pointer = {
    px: (ev.clientX - rect.left) / rect.width,
    py: (ev.clientY - rect.top) / rect.height,
  };
});
window.addEventListener("keydown", (ev) => {
  if (ev.code === "Space") crouched = true;
});
window.addEventListener("keyup", (ev) => {
  if (ev.code === "Space") crouched = false;
});
window.addEventListener("blur", () => {
  if (vm.phase === "running") {
    socket.send("PAUSE", { on: true });
  }
});

function frame(): void {
  const nowS = performance.now() / 1000;
  const nowMs = performance.now();

  const [wNext, markers] = wizardTick(wizard, nowS, WIZARD_STEP_SECONDS);
  wizard = wNext;
  for (const m of markers) {
    socket.send("CALIBRATE_WINDOW", m);
  }

  if (wizard.phase === "running" && throttle.allow(nowMs)) {
    // stream the guided lean so the server sees the prompted motion
    const target = wizardTargetPointer(wizard, nowS, WIZARD_STEP_SECONDS);
    const pose = pointerToHead(
      mapping,
      0.5 + 0.45 * target.dx,
      0.5 + 0.45 * target.dy,
      false,
      nowS,
    );
    socket.send("HEAD_POSE", pose);
  } else if (vm.phase === "running" && throttle.allow(nowMs)) {
    runClock += 1 / POSE_MAX_HZ;
    socket.send("HEAD_POSE", pointerToHead(mapping, pointer.px, pointer.py, crouched, runClock));
  }

  startBtn.disabled = !wizardReady(wizard) || vm.phase === "running";
  if (scene) {
    drawScene(ctx, scene, vm, canvas.width, canvas.height);
  }
  hud.textContent = hudText(vm);
  requestAnimationFrame(frame);
}

requestAnimationFrame(frame);
