/** Top-down canvas rendering: slope corridor, cubes, player marker, HUD. */

import { centerline, corridorEdge, fitViewport, type LevelJson, type Viewport } from "./track.js";
import { vmScore, type ViewModel } from "./viewModel.js";

export interface Scene {
  level: LevelJson;
  viewport: Viewport;
}

export function makeScene(level: LevelJson, width: number, height: number): Scene {
  return { level, viewport: fitViewport(level, width, height) };
}

function polyline(ctx: CanvasRenderingContext2D, vp: Viewport, pts: [number, number][]): void {
  ctx.beginPath();
  pts.forEach(([x, z], i) => {
    const [sx, sy] = vp.toScreen(x, z);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  scene: Scene,
  vm: ViewModel,
  width: number,
  height: number,
): void {
  const { level, viewport: vp } = scene;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#eef4fb";
  ctx.fillRect(0, 0, width, height);

  const half = level.params.corridor_half_width;
  ctx.strokeStyle = "#9db8d2";
  ctx.lineWidth = 1.5;
  polyline(ctx, vp, corridorEdge(level, half));
  polyline(ctx, vp, corridorEdge(level, -half));
  ctx.strokeStyle = "#c8d8ea";
  ctx.setLineDash([6, 6]);
  polyline(ctx, vp, centerline(level));
  ctx.setLineDash([]);

  for (const p of level.props.poles) {
    const [sx, sy] = vp.toScreen(p[0], p[2]);
    ctx.fillStyle = "#b05a2a";
    ctx.fillRect(sx - 1.5, sy - 1.5, 3, 3);
  }
  for (const p of level.props.trees) {
    const [sx, sy] = vp.toScreen(p[0], p[2]);
    ctx.fillStyle = "#2f7d4f";
    ctx.beginPath();
    ctx.arc(sx, sy, 2.5, 0, 2 * Math.PI);
    ctx.fill();
  }
  level.props.cubes.forEach((cube, idx) => {
    const [sx, sy] = vp.toScreen(cube.p[0], cube.p[2]);
    const taken = vm.cubesCollected.includes(idx);
    ctx.fillStyle = taken ? "#b9c8d8" : "#2266dd";
    ctx.fillRect(sx - 4, sy - 4, 8, 8);
  });

  // start dot and goal line
  const [gx, gy] = vp.toScreen(...lastPoint(level));
  ctx.strokeStyle = "#2244aa";
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.moveTo(gx - 14, gy);
  ctx.lineTo(gx + 14, gy);
  ctx.stroke();
  const [sx0, sy0] = vp.toScreen(level.track.start[0], level.track.start[1]);
  ctx.fillStyle = "#cc2222";
  ctx.beginPath();
  ctx.arc(sx0, sy0, 4, 0, 2 * Math.PI);
  ctx.fill();

  if (vm.player) {
    const [px, py] = vp.toScreen(vm.player.x, vm.player.z);
    const h = vm.player.heading;
    ctx.save();
    ctx.translate(px, py);
    // heading 0 points downhill (-z), which the viewport maps to +screen-y
    ctx.rotate(Math.atan2(Math.sin(h), Math.cos(h)));
    if (vm.avatar) {
      ctx.fillStyle = "#d23f0f";
      ctx.beginPath();
      ctx.moveTo(0, 9);
      ctx.lineTo(-5, -6);
      ctx.lineTo(5, -6);
      ctx.closePath();
      ctx.fill();
    } else {
      ctx.strokeStyle = "#d23f0f";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(0, 0, 5, 0, 2 * Math.PI);
      ctx.stroke();
    }
    ctx.restore();
  }
}

function lastPoint(level: LevelJson): [number, number] {
  const pts = centerline(level, 2.0);
  return pts[pts.length - 1];
}

export function hudText(vm: ViewModel): string {
  const parts = [`phase ${vm.phase}`, `score ${vmScore(vm)}`];
  if (vm.player) {
    parts.push(`${vm.player.speed.toFixed(1)} m/s`, `t ${vm.player.t.toFixed(1)} s`);
  }
  if (vm.complete) {
    parts.push(
      vm.complete.finished ? "RUN COMPLETE" : `run ended (${vm.complete.reason})`,
      `head travel ${vm.complete.headPathLength.toFixed(2)} m`,
    );
  }
  return parts.join("  |  ");
}
