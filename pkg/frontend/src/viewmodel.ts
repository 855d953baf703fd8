// The view model holds exactly what the renderer reads: the latest
// committed state frame, a trailing trajectory buffer, static geometry,
// the verdict panel and connection status.  Rendering never extrapolates
// beyond the last frame, and the only mutations come from applied frames.

import { Frame, Geometry, StateFrame } from './protocol.js';

export interface GamePanel {
  nu: number | null;
  controller: string;
  lastMove: string;
  liveGroup: string;
}

export class ViewModel {
  geometry: Geometry | null = null;
  latest: StateFrame | null = null;
  trail: Array<[number, number]> = [];
  verdicts = new Map<string, string>();
  connected = false;
  panel: GamePanel = { nu: null, controller: '-', lastMove: '-', liveGroup: '-' };
  errors: string[] = [];
  private trailLimit: number;

  constructor(trailLimit = 600) {
    this.trailLimit = trailLimit;
  }

  setGeometry(geometry: Geometry): void {
    this.geometry = geometry;
  }

  setConnected(up: boolean): void {
    this.connected = up;
  }

  reset(): void {
    this.trail = [];
    this.latest = null;
    this.verdicts.clear();
  }

  apply(frame: Frame): void {
    switch (frame.type) {
      case 'state': {
        if (this.latest && frame.t < this.latest.t) {
          // a reset happened server-side: drop the stale trail
          this.trail = [];
        }
        this.latest = frame;
        const p: [number, number] = [frame.x[0], frame.x[1]];
        const last = this.trail[this.trail.length - 1];
        if (!last || last[0] !== p[0] || last[1] !== p[1]) {
          this.trail.push(p);
          if (this.trail.length > this.trailLimit) this.trail.shift();
        }
        this.panel.nu = frame.nu;
        this.panel.controller = frame.controller;
        this.panel.liveGroup = frame.controller === '-' ? '-' : `persist(${frame.controller})`;
        break;
      }
      case 'event': {
        if (frame.kind === 'switch') {
          this.panel.lastMove = `switch -> ${JSON.stringify(frame.detail)}`;
        } else if (frame.kind === 'mode') {
          this.panel.lastMove = `mode ${JSON.stringify(frame.detail)}`;
        }
        break;
      }
      case 'verdict':
        this.verdicts.set(frame.clause, frame.status);
        break;
      case 'error':
        this.errors.push(frame.message);
        break;
    }
  }

  // Basins are displayed only when their context equals the context-relevant
  // part of the current observation set (context-dependent visibility).
  visibleBasins(): string[] {
    if (!this.geometry || !this.latest) return [];
    const relevant = new Set<string>();
    for (const b of this.geometry.basins) for (const a of b.context) relevant.add(a);
    const current = this.latest.obs.filter((a) => relevant.has(a)).sort().join(',');
    return this.geometry.basins
      .filter((b) => [...b.context].sort().join(',') === current)
      .map((b) => b.basin);
  }
}
