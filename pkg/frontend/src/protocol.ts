// Wire protocol types and the socket client.
//
// The server fans out one global frame sequence to every client; frames
// carry a seq number, so a reconnecting client can resume by dropping
// everything it has already applied.

export interface StateFrame {
  type: 'state';
  seq: number;
  t: number;
  x: number[];
  labels: string[];
  obs: string[];
  nu: number;
  controller: string;
}

export interface EventFrame {
  type: 'event';
  seq: number;
  t: number;
  kind: 'label' | 'mode' | 'switch';
  detail: unknown;
}

export interface VerdictFrame {
  type: 'verdict';
  seq: number;
  clause: string;
  status: 'sat' | 'viol' | 'inconclusive';
}

export interface ErrorFrame {
  type: 'error';
  seq: number;
  message: string;
}

export type Frame = StateFrame | EventFrame | VerdictFrame | ErrorFrame;

export interface EllipseSpec {
  center: number[];
  shape: number[][];
}

export interface RegionSpec extends Partial<EllipseSpec> {
  prop: string;
  kind: 'ellipse' | 'polytope';
  anchor?: number[];
  normals?: number[][];
  requires: string[];
  forbids: string[];
}

export interface BasinSpec extends EllipseSpec {
  controller: string;
  basin: string;
  context: string[];
  reach: string[];
}

export interface Geometry {
  box: { lo: number[]; hi: number[] };
  regions: RegionSpec[];
  basins: BasinSpec[];
  modes: string[];
}

export type ClientMessage =
  | { type: 'set_mode'; mode: string }
  | { type: 'pause' }
  | { type: 'resume' }
  | { type: 'reset'; x0?: number[] };

// Minimal socket interface so tests can substitute a mock.
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onopen: (() => void) | null;
}

export class SteerClient {
  private socket: SocketLike | null = null;
  private lastSeq = -1;
  onFrame: ((frame: Frame) => void) | null = null;
  onStatus: ((connected: boolean) => void) | null = null;

  constructor(private readonly connect: () => SocketLike) {}

  open(): void {
    const sock = this.connect();
    this.socket = sock;
    sock.onopen = () => this.onStatus?.(true);
    sock.onclose = () => {
      this.onStatus?.(false);
      this.socket = null;
    };
    sock.onmessage = (ev) => {
      const frame = JSON.parse(ev.data) as Frame;
      // resume semantics: the server replays the full sequence; frames the
      // client has already applied are dropped by seq
      if (frame.seq <= this.lastSeq) return;
      this.lastSeq = frame.seq;
      this.onFrame?.(frame);
    };
  }

  send(msg: ClientMessage): void {
    this.socket?.send(JSON.stringify(msg));
  }

  close(): void {
    this.socket?.close();
  }
}
