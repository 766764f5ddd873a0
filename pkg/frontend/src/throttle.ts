/** Rate limiter for outgoing pose frames (HEAD_POSE must stay <= 50 Hz). */

export interface Throttle {
  /** Returns true when an emission is allowed at time nowMs. */
  allow(nowMs: number): boolean;
}

export function makeThrottle(maxHz: number): Throttle {
  const minInterval = 1000 / maxHz;
  let last = Number.NEGATIVE_INFINITY;
  return {
    allow(nowMs: number): boolean {
      if (nowMs - last >= minInterval - 1e-9) {
        last = nowMs;
        return true;
      }
      return false;
    },
  };
}
