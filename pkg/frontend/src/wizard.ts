/** Calibration wizard: sequential lean prompts as a pure state machine.
 *
 * The driver calls start() once and tick() per animation frame; the machine
 * answers with window markers to send and the pointer target the guide
 * overlay should animate toward. Server errors put it in "failed", from
 * which start() restarts cleanly.
 */

import type { ProfileJson, WindowName } from "./protocol.js";

export const WIZARD_STEPS: readonly WindowName[] = [
  "upright",
  "left",
  "right",
  "front",
  "back",
];

export interface WizardState {
  phase: "idle" | "running" | "awaiting" | "done" | "failed";
  step: number; // index into WIZARD_STEPS while running
  stepStartedAt: number;
  error: string | null;
  profile: ProfileJson | null;
}

export interface WindowMarker {
  window: WindowName;
  action: "start" | "end";
}

export function wizardInit(): WizardState {
  return { phase: "idle", step: 0, stepStartedAt: 0, error: null, profile: null };
}

export function wizardStart(state: WizardState, now: number): [WizardState, WindowMarker[]] {
  if (state.phase === "running" || state.phase === "awaiting") {
    return [state, []];
  }
  return [
    { phase: "running", step: 0, stepStartedAt: now, error: null, profile: null },
    [{ window: WIZARD_STEPS[0], action: "start" }],
  ];
}

export function wizardTick(
  state: WizardState,
  now: number,
  stepDuration: number,
): [WizardState, WindowMarker[]] {
  if (state.phase !== "running" || now - state.stepStartedAt < stepDuration) {
    return [state, []];
  }
  const ended = WIZARD_STEPS[state.step];
  if (state.step + 1 >= WIZARD_STEPS.length) {
    return [{ ...state, phase: "awaiting" }, [{ window: ended, action: "end" }]];
  }
  const next = WIZARD_STEPS[state.step + 1];
  return [
    { ...state, step: state.step + 1, stepStartedAt: now },
    [
      { window: ended, action: "end" },
      { window: next, action: "start" },
    ],
  ];
}

export function wizardOnResult(state: WizardState, profile: ProfileJson): WizardState {
  if (state.phase !== "awaiting") {
    return state;
  }
  return { ...state, phase: "done", profile };
}

export function wizardOnError(state: WizardState, message: string): WizardState {
  if (state.phase === "idle" || state.phase === "done") {
    return state;
  }
  return { ...state, phase: "failed", error: message };
}

/** True once calibration succeeded; gates the Start button. */
export function wizardReady(state: WizardState): boolean {
  return state.phase === "done" && state.profile !== null;
}

/** Pointer offset (fractions of full deflection) the guide asks for. */
export function wizardTargetPointer(
  state: WizardState,
  now: number,
  stepDuration: number,
): { dx: number; dy: number } {
  if (state.phase !== "running") {
    return { dx: 0, dy: 0 };
  }
  const phase01 = Math.min(1, (now - state.stepStartedAt) / stepDuration);
  const wave = Math.sin(Math.PI * phase01); // out and back, peak mid-window
  switch (WIZARD_STEPS[state.step]) {
    case "upright":
      return { dx: 0, dy: 0 };
    case "left":
      return { dx: -wave, dy: 0 };
    case "right":
      return { dx: wave, dy: 0 };
    case "front":
      return { dx: 0, dy: -wave }; // pointer up = lean forward
    case "back":
      return { dx: 0, dy: wave };
  }
}
