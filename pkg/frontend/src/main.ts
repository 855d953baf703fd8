// Entry point: fetch static geometry once, open the socket, wire the
// steering buttons (debounced to one message per frame window) and draw at
// the incoming frame rate.

import { Frame, Geometry, SteerClient, SocketLike } from './protocol.js';
import { renderScene, Viewport } from './render.js';
import { ViewModel } from './viewmodel.js';

const FRAME_WINDOW_MS = 33;

export function makeDebouncer(windowMs: number, now: () => number = () => Date.now()) {
  let last = -Infinity;
  let pending: string | null = null;
  return {
    // returns the message to send, or null when coalesced
    push(mode: string): string | null {
      const t = now();
      if (t - last >= windowMs) {
        last = t;
        pending = null;
        return mode;
      }
      pending = mode;
      return null;
    },
    flush(): string | null {
      const out = pending;
      pending = null;
      if (out !== null) last = now();
      return out;
    },
  };
}

async function boot(): Promise<void> {
  const vm = new ViewModel();
  const canvas = document.getElementById('scene') as HTMLCanvasElement;
  const ctx = canvas.getContext('2d')!;
  const statusEl = document.getElementById('status')!;
  const panelEl = document.getElementById('panel')!;
  const verdictsEl = document.getElementById('verdicts')!;
  const buttonsEl = document.getElementById('buttons')!;

  const geometry: Geometry = await (await fetch('/geometry')).json();
  vm.setGeometry(geometry);
  const vp: Viewport = {
    width: canvas.width,
    height: canvas.height,
    lo: geometry.box.lo,
    hi: geometry.box.hi,
  };

  const client = new SteerClient(
    () => new WebSocket(`ws://${location.host}/ws`) as unknown as SocketLike,
  );
  const debounce = makeDebouncer(FRAME_WINDOW_MS);
  let awaitingMode: string | null = null;

  const modeButtons = new Map<string, HTMLButtonElement>();
  for (const mode of geometry.modes) {
    const b = document.createElement('button');
    b.textContent = mode;
    b.onclick = () => {
      const msg = debounce.push(mode);
      if (msg) {
        client.send({ type: 'set_mode', mode: msg });
        awaitingMode = msg;
        b.disabled = true;
      }
    };
    modeButtons.set(mode, b);
    buttonsEl.appendChild(b);
  }
  for (const [label, msg] of [
    ['pause', { type: 'pause' } as const],
    ['resume', { type: 'resume' } as const],
    ['reset', { type: 'reset' } as const],
  ] as const) {
    const b = document.createElement('button');
    b.textContent = label;
    b.onclick = () => client.send(msg);
    buttonsEl.appendChild(b);
  }

  client.onStatus = (up) => {
    vm.setConnected(up);
    statusEl.textContent = up ? 'connected' : 'disconnected';
    if (!up) setTimeout(() => client.open(), 1000);
  };
  client.onFrame = (frame: Frame) => {
    vm.apply(frame);
    if (frame.type === 'state') {
      // ack-by-observation: re-enable the button once the mode shows up
      if (awaitingMode && frame.obs.includes(awaitingMode)) {
        modeButtons.get(awaitingMode)!.disabled = false;
        awaitingMode = null;
      }
      renderScene(ctx, vm, vp);
      panelEl.textContent =
        `nu=${vm.panel.nu}  controller=${vm.panel.controller}  ` +
        `${vm.panel.liveGroup}\nlast move: ${vm.panel.lastMove}`;
      const lines: string[] = [];
      vm.verdicts.forEach((status, clause) => lines.push(`${status.padEnd(13)} ${clause}`));
      verdictsEl.textContent = lines.join('\n');
    }
  };
  client.open();
}

if (typeof document !== 'undefined' && document.getElementById('scene')) {
  void boot();
}
