/** Pointer-as-head input: linear, origin-centered on the calibration-neutral
 * pointer position. The pointer replaces the headset as the pose source. */

import type { HeadPosePayload } from "./protocol.js";

export interface InputMapping {
  /** meters of simulated head travel per screen half-extent of pointer travel */
  sensitivity: number;
  /** pointer position (0..1 fractions of the stage) captured as neutral */
  neutralPx: number;
  neutralPy: number;
  /** upright head position in meters (world frame) */
  headX: number;
  headY: number;
  headZ: number;
  /** how far below upright the head sits while the crouch key is held */
  crouchDepth: number;
}

export function defaultMapping(sensitivity = 0.3): InputMapping {
  return {
    sensitivity,
    neutralPx: 0.5,
    neutralPy: 0.5,
    headX: 0.0,
    headY: 1.65,
    headZ: 0.0,
    crouchDepth: 0.12,
  };
}

/** Lateral head deviation (m) for a pointer x in [0, 1]. */
export function lateralDeviation(m: InputMapping, px: number): number {
  return (px - m.neutralPx) * 2 * m.sensitivity;
}

/** Forward-lean deviation (m, positive = forward) for a pointer y in [0, 1].
 * Pointer above neutral leans forward. */
export function forwardDeviation(m: InputMapping, py: number): number {
  return (m.neutralPy - py) * 2 * m.sensitivity;
}

export function pointerToHead(
  m: InputMapping,
  px: number,
  py: number,
  crouched: boolean,
  t: number,
): HeadPosePayload {
  const dx = lateralDeviation(m, px);
  const fwd = forwardDeviation(m, py);
  return {
    t,
    pos: [m.headX + dx, m.headY - (crouched ? m.crouchDepth : 0), m.headZ - fwd],
    orient: [0, 0, 0],
  };
}

/** Inverse of pointerToHead on the x/z axes (used by scripted tests). */
export function headToPointer(
  m: InputMapping,
  headX: number,
  headZ: number,
): { px: number; py: number } {
  const dx = headX - m.headX;
  const fwd = m.headZ - headZ;
  return {
    px: m.neutralPx + dx / (2 * m.sensitivity),
    py: m.neutralPy - fwd / (2 * m.sensitivity),
  };
}
