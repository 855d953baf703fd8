// Canvas rendering: world-to-pixel mapping, ellipse parameter extraction
// from shape matrices, and the 2-D scene (box, walls, door, targets,
// context-visible basins, robot and trail).
//
// The math lives in pure functions so tests can check pixel agreement with
// the artifact geometry without a DOM.

import { EllipseSpec, Geometry, RegionSpec } from './protocol.js';
import { ViewModel } from './viewmodel.js';

export interface Viewport {
  width: number;
  height: number;
  lo: number[];
  hi: number[];
}

export function worldToPixel(vp: Viewport, p: [number, number]): [number, number] {
  const sx = vp.width / (vp.hi[0] - vp.lo[0]);
  const sy = vp.height / (vp.hi[1] - vp.lo[1]);
  // canvas y grows downward
  return [(p[0] - vp.lo[0]) * sx, vp.height - (p[1] - vp.lo[1]) * sy];
}

export interface EllipseParams {
  cx: number;
  cy: number;
  rx: number;
  ry: number;
  // rotation of the first principal axis, in world coordinates (radians)
  angle: number;
}

// Principal axes of {x : (x-c)' S (x-c) <= 1}: the semiaxes are
// 1/sqrt(eigenvalue) along the corresponding eigenvectors.
export function ellipseParams(spec: EllipseSpec): EllipseParams {
  const [[a, b], [c, d]] = spec.shape;
  const tr = a + d;
  const det = a * d - b * c;
  const disc = Math.sqrt(Math.max((tr * tr) / 4 - det, 0));
  const l1 = tr / 2 + disc;
  const l2 = tr / 2 - disc;
  let angle: number;
  if (Math.abs(b) > 1e-12) {
    angle = Math.atan2(l1 - a, b);
  } else {
    angle = a >= d ? 0 : Math.PI / 2;
  }
  return {
    cx: spec.center[0],
    cy: spec.center[1],
    rx: 1 / Math.sqrt(l1),
    ry: 1 / Math.sqrt(l2),
    angle,
  };
}

export function ellipsePixels(vp: Viewport, spec: EllipseSpec): EllipseParams {
  const p = ellipseParams(spec);
  const [cx, cy] = worldToPixel(vp, [p.cx, p.cy]);
  const sx = vp.width / (vp.hi[0] - vp.lo[0]);
  const sy = vp.height / (vp.hi[1] - vp.lo[1]);
  // rx is along the rotated first axis; for the square viewports we use,
  // sx == sy and the rotation carries over unchanged (y flips the sign)
  return { cx, cy, rx: p.rx * sx, ry: p.ry * sy, angle: -p.angle };
}

const TARGET_COLORS: Record<string, string> = {
  T1: '#d64541',
  T2: '#2ecc71',
  T3: '#3498db',
};

function doorAtomOf(geometry: Geometry): string | null {
  for (const r of geometry.regions) {
    if (r.requires.length === 1) return r.requires[0];
  }
  return null;
}

export function renderScene(
  ctx: CanvasRenderingContext2D,
  vm: ViewModel,
  vp: Viewport,
): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  if (!vm.geometry) return;
  const geo = vm.geometry;

  // state box
  ctx.strokeStyle = '#222';
  ctx.lineWidth = 2;
  ctx.strokeRect(0, 0, vp.width, vp.height);

  // basins of the current context
  const visible = new Set(vm.visibleBasins());
  for (const basin of geo.basins) {
    if (!visible.has(basin.basin)) continue;
    const e = ellipsePixels(vp, basin);
    ctx.beginPath();
    ctx.ellipse(e.cx, e.cy, e.rx, e.ry, e.angle, 0, 2 * Math.PI);
    ctx.strokeStyle = TARGET_COLORS[basin.reach[0]] ?? '#999';
    ctx.setLineDash(basin.controller === vm.panel.controller ? [] : [6, 4]);
    ctx.lineWidth = basin.controller === vm.panel.controller ? 2.5 : 1;
    ctx.stroke();
  }
  ctx.setLineDash([]);

  // walls and targets
  const doorAtom = doorAtomOf(geo);
  const obs = new Set(vm.latest?.obs ?? []);
  for (const region of geo.regions) {
    if (region.kind === 'ellipse') {
      const e = ellipsePixels(vp, region as unknown as EllipseSpec);
      ctx.beginPath();
      ctx.ellipse(e.cx, e.cy, e.rx, e.ry, e.angle, 0, 2 * Math.PI);
      ctx.fillStyle = TARGET_COLORS[region.prop] ?? '#666';
      ctx.fill();
    } else if (isDoor(region)) {
      const closed = doorAtom !== null && obs.has(doorAtom);
      drawDoor(ctx, vp, region, closed);
    } else {
      drawWall(ctx, vp, region);
    }
  }

  // trail and robot
  ctx.beginPath();
  vm.trail.forEach((p, i) => {
    const [px, py] = worldToPixel(vp, p);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.strokeStyle = '#555';
  ctx.lineWidth = 1;
  ctx.stroke();
  if (vm.latest) {
    const [px, py] = worldToPixel(vp, [vm.latest.x[0], vm.latest.x[1]]);
    ctx.beginPath();
    ctx.arc(px, py, 6, 0, 2 * Math.PI);
    ctx.fillStyle = '#111';
    ctx.fill();
  }
}

function isDoor(region: RegionSpec): boolean {
  return region.requires.length > 0;
}

// The door renders as a line segment at its strip's center line: solid while
// the closing observation holds, dashed while open.
function drawDoor(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  region: RegionSpec,
  closed: boolean,
): void {
  const anchor = region.anchor ?? region.center ?? [0, 0];
  const [x0, y0] = worldToPixel(vp, [anchor[0], vp.lo[1]]);
  const [x1, y1] = worldToPixel(vp, [anchor[0], vp.hi[1]]);
  ctx.beginPath();
  ctx.moveTo(x0, y0);
  ctx.lineTo(x1, y1);
  ctx.setLineDash(closed ? [] : [4, 8]);
  ctx.strokeStyle = '#000';
  ctx.lineWidth = closed ? 4 : 1.5;
  ctx.stroke();
  ctx.setLineDash([]);
}

function drawWall(ctx: CanvasRenderingContext2D, vp: Viewport, region: RegionSpec): void {
  // axis-aligned wall strips come through as polytopes; draw their bounding
  // segment along the inner box edge
  const anchor = region.anchor ?? [0, 0];
  const [px, py] = worldToPixel(vp, [anchor[0], anchor[1]]);
  ctx.fillStyle = '#333';
  ctx.fillRect(px - 2, py - 2, 4, 4);
}
