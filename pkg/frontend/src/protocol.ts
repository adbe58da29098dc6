// Wire protocol shared with the live-session server. Every message carries a
// schema version; frames are self-contained so one frame fully restores the
// view after a reconnect.

export const PROTOCOL_VERSION = 1;

export interface AgentState {
  pos: [number, number];
  vel: [number, number];
  carrying: boolean;
  defended: boolean;
}

export interface RewardBreakdown {
  r_task: number;
  r_inst: number;
  r_pick: number;
  r_collect: number;
  r_defense: number;
  total: number;
  n_picks: number;
  n_collects: number;
  n_defenses: number;
  n_breaches: number;
}

export interface FrameModel {
  type: "frame";
  v: number;
  tick: number;
  episode: number;
  step: number;
  half_extent: number;
  agents: AgentState[];
  invader: { pos: [number, number]; active: boolean };
  resources: { pos: [number, number]; active: boolean }[];
  home: { pos: [number, number]; radius: number };
  waypoints: [number, number][][];
  reward: RewardBreakdown | null;
  cumulative: { reward: number; picks: number; collects: number; defenses: number; breaches: number };
  instruction: { source: string; text: string | null };
}

export interface HelloMessage {
  type: "hello";
  v: number;
  variant: string;
  tick_hz: number;
  n_waypoints: number;
  refresh_interval: number;
  scenario: Record<string, unknown>;
  translator: string;
}

export interface InstructionStatusMessage {
  type: "instruction_status";
  v: number;
  id: string;
  text: string;
  status: "applied" | "failed";
  detail: string | null;
  tick: number;
}

export interface ErrorMessage {
  type: "error";
  v: number;
  code: string;
  message: string;
}

export interface TranslatorMessage {
  type: "translator";
  v: number;
  kind: string;
  error: string | null;
}

export type ServerMessage =
  | FrameModel
  | HelloMessage
  | InstructionStatusMessage
  | ErrorMessage
  | TranslatorMessage
  | { type: "pong"; v: number; tick: number };

export class SchemaError extends Error {}

export function decodeMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new SchemaError("message is not valid JSON");
  }
  if (typeof data !== "object" || data === null) {
    throw new SchemaError("message is not an object");
  }
  const msg = data as { type?: unknown; v?: unknown };
  if (typeof msg.type !== "string") {
    throw new SchemaError("message has no type");
  }
  if (msg.v !== PROTOCOL_VERSION) {
    throw new SchemaError(`protocol version ${String(msg.v)} != ${PROTOCOL_VERSION}`);
  }
  if (msg.type === "frame") {
    const f = data as FrameModel;
    if (!Array.isArray(f.agents) || !Array.isArray(f.waypoints) || typeof f.tick !== "number") {
      throw new SchemaError("malformed frame");
    }
  }
  return data as ServerMessage;
}

export function encodeInstruction(id: string, text: string): string {
  return JSON.stringify({ type: "instruct", id, text });
}

export function encodeSetTranslator(kind: string): string {
  return JSON.stringify({ type: "set_translator", kind });
}
