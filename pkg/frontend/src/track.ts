/** Level geometry helpers for the top-down renderer.
 *
 * Mirrors the server's track math: arcs are p(phi) = center + r*(cos, sin)
 * in the XZ plane; a heading h moves along (sin h, -cos h) and has
 * right-normal (cos h, sin h).
 */

export interface ArcJson {
  c: [number, number];
  r: number;
  a0: number;
  sweep: number;
}

export interface LevelJson {
  v: number;
  params: {
    corridor_half_width: number;
    track_length: number;
    [k: string]: unknown;
  };
  track: {
    start: [number, number];
    goal_arc_length: number;
    arcs: ArcJson[];
  };
  props: {
    poles: [number, number, number][];
    trees: [number, number, number][];
    cubes: { p: [number, number, number]; collected: boolean }[];
  };
}

export type XZ = [number, number];

function arcPointAt(arc: ArcJson, u: number): XZ {
  const len = arc.r * Math.abs(arc.sweep);
  const phi = arc.a0 + arc.sweep * (u / len);
  return [arc.c[0] + arc.r * Math.cos(phi), arc.c[1] + arc.r * Math.sin(phi)];
}

function arcHeadingAt(arc: ArcJson, u: number): number {
  const len = arc.r * Math.abs(arc.sweep);
  const phi = arc.a0 + arc.sweep * (u / len);
  return arc.sweep > 0 ? phi - Math.PI : phi;
}

/** Sampled centerline, roughly one point per `step` meters of arc. */
export function centerline(level: LevelJson, step = 1.0): XZ[] {
  const pts: XZ[] = [];
  for (const arc of level.track.arcs) {
    const len = arc.r * Math.abs(arc.sweep);
    const n = Math.max(2, Math.ceil(len / step));
    for (let i = 0; i < n; i++) {
      pts.push(arcPointAt(arc, (len * i) / n));
    }
  }
  const last = level.track.arcs[level.track.arcs.length - 1];
  pts.push(arcPointAt(last, last.r * Math.abs(last.sweep)));
  return pts;
}

/** Corridor edge polyline at signed lateral offset (positive = rider right). */
export function corridorEdge(level: LevelJson, offset: number, step = 1.0): XZ[] {
  const pts: XZ[] = [];
  for (const arc of level.track.arcs) {
    const len = arc.r * Math.abs(arc.sweep);
    const n = Math.max(2, Math.ceil(len / step));
    for (let i = 0; i <= n; i++) {
      const u = (len * i) / n;
      const [x, z] = arcPointAt(arc, u);
      const h = arcHeadingAt(arc, u);
      pts.push([x + offset * Math.cos(h), z + offset * Math.sin(h)]);
    }
  }
  return pts;
}

export interface Viewport {
  /** world -> canvas pixels */
  toScreen(x: number, z: number): [number, number];
  scale: number;
}

/** Fit the track bounding box (plus margin) into a canvas. */
export function fitViewport(
  level: LevelJson,
  width: number,
  height: number,
  margin = 20,
): Viewport {
  const pts = centerline(level, 2.0);
  const half = level.params.corridor_half_width;
  let minX = Infinity;
  let maxX = -Infinity;
  let minZ = Infinity;
  let maxZ = -Infinity;
  for (const [x, z] of pts) {
    minX = Math.min(minX, x - half);
    maxX = Math.max(maxX, x + half);
    minZ = Math.min(minZ, z - half);
    maxZ = Math.max(maxZ, z + half);
  }
  const scale = Math.min(
    (width - 2 * margin) / Math.max(maxX - minX, 1e-6),
    (height - 2 * margin) / Math.max(maxZ - minZ, 1e-6),
  );
  // downhill is -z; draw it toward the bottom of the canvas
  return {
    scale,
    toScreen(x: number, z: number): [number, number] {
      return [margin + (x - minX) * scale, margin + (maxZ - z) * scale];
    },
  };
}
