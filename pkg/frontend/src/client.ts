// Connection + instruction lifecycle. The console is stateless with respect
// to the simulation: every frame is self-contained, so reconnecting simply
// resumes from the next frame received.

import {
  decodeMessage,
  encodeInstruction,
  encodeSetTranslator,
  FrameModel,
  HelloMessage,
  InstructionStatusMessage,
  SchemaError,
  ServerMessage,
} from "./protocol.js";

export type DraftStatus = "pending" | "applied" | "failed";

export interface InstructionDraft {
  id: string;
  text: string;
  submittedAt: number;
  status: DraftStatus;
  detail: string | null;
}

export interface ClientHandlers {
  onFrame?: (frame: FrameModel) => void;
  onHello?: (hello: HelloMessage) => void;
  onStatus?: (draft: InstructionDraft) => void;
  onError?: (code: string, message: string) => void;
  onClose?: () => void;
}

interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  readyState: number;
}

type WebSocketCtor = new (url: string) => WebSocketLike;

const OPEN = 1;

export class ConsoleClient {
  private ws: WebSocketLike | null = null;
  private seq = 0;
  private readonly drafts = new Map<string, InstructionDraft>();
  private readonly waiters = new Map<string, { resolve: (d: InstructionDraft) => void; timer: ReturnType<typeof setTimeout> }>();
  readonly history: InstructionDraft[] = [];
  hello: HelloMessage | null = null;
  lastFrame: FrameModel | null = null;

  constructor(
    private readonly url: string,
    private readonly handlers: ClientHandlers = {},
    private readonly wsCtor: WebSocketCtor = (globalThis as { WebSocket?: WebSocketCtor }).WebSocket!,
    private readonly statusTimeoutMs = 10_000,
  ) {
    if (!this.wsCtor) {
      throw new Error("no WebSocket implementation available");
    }
  }

  connect(): Promise<void> {
    return new Promise((resolve, reject) => {
      const ws = new this.wsCtor(this.url);
      this.ws = ws;
      let settled = false;
      ws.onopen = () => {
        settled = true;
        resolve();
      };
      ws.onerror = (ev) => {
        if (!settled) {
          settled = true;
          reject(new Error(`websocket error: ${String(ev)}`));
        }
      };
      ws.onclose = () => {
        this.failAllPending("connection closed");
        this.handlers.onClose?.();
      };
      ws.onmessage = (ev) => this.handleMessage(String(ev.data));
    });
  }

  close(): void {
    this.ws?.close();
    this.ws = null;
  }

  get connected(): boolean {
    return this.ws !== null && this.ws.readyState === OPEN;
  }

  private handleMessage(raw: string): void {
    let msg: ServerMessage;
    try {
      msg = decodeMessage(raw);
    } catch (err) {
      if (err instanceof SchemaError) {
        this.handlers.onError?.("schema_mismatch", err.message);
        return;
      }
      throw err;
    }
    switch (msg.type) {
      case "hello":
        this.hello = msg;
        this.handlers.onHello?.(msg);
        break;
      case "frame":
        this.lastFrame = msg;
        this.handlers.onFrame?.(msg);
        break;
      case "instruction_status":
        this.resolveStatus(msg);
        break;
      case "error":
        this.handlers.onError?.(msg.code, msg.message);
        break;
      default:
        break;
    }
  }

  // Submitting empty text is rejected locally; every accepted submission
  // resolves to exactly one terminal status (applied, failed, or timeout).
  submitInstruction(text: string): Promise<InstructionDraft> {
    const trimmed = text.trim();
    if (!trimmed) {
      return Promise.reject(new Error("instruction text is empty"));
    }
    if (!this.connected) {
      return Promise.reject(new Error("not connected"));
    }
    const id = `c${this.seq++}-${Date.now()}`;
    const draft: InstructionDraft = {
      id,
      text: trimmed,
      submittedAt: Date.now(),
      status: "pending",
      detail: null,
    };
    this.drafts.set(id, draft);
    this.ws!.send(encodeInstruction(id, trimmed));
    return new Promise((resolve) => {
      const timer = setTimeout(() => {
        this.waiters.delete(id);
        this.finishDraft(draft, "failed", "timed out waiting for status");
        resolve(draft);
      }, this.statusTimeoutMs);
      this.waiters.set(id, { resolve, timer });
    });
  }

  setTranslator(kind: string): void {
    if (!this.connected) {
      throw new Error("not connected");
    }
    this.ws!.send(encodeSetTranslator(kind));
  }

  private resolveStatus(msg: InstructionStatusMessage): void {
    const draft = this.drafts.get(msg.id);
    if (!draft) {
      return;
    }
    const waiter = this.waiters.get(msg.id);
    if (waiter) {
      clearTimeout(waiter.timer);
      this.waiters.delete(msg.id);
    }
    this.finishDraft(draft, msg.status, msg.detail);
    waiter?.resolve(draft);
  }

  private finishDraft(draft: InstructionDraft, status: DraftStatus, detail: string | null): void {
    if (draft.status !== "pending") {
      return; // terminal transitions happen exactly once
    }
    draft.status = status;
    draft.detail = detail;
    this.history.push(draft);
    this.drafts.delete(draft.id);
    this.handlers.onStatus?.(draft);
  }

  private failAllPending(reason: string): void {
    for (const [id, waiter] of [...this.waiters]) {
      clearTimeout(waiter.timer);
      this.waiters.delete(id);
      const draft = this.drafts.get(id);
      if (draft) {
        this.finishDraft(draft, "failed", reason);
        waiter.resolve(draft);
      }
    }
  }
}
