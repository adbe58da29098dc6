// Instructor console: live field view, reward tickers, instruction box with
// a resolution-history panel, and a translator-source toggle.

import { ConsoleClient, InstructionDraft } from "./client.js";
import { FrameModel } from "./protocol.js";
import { Canvas2D, renderField, Trail, Viewport, pushTrail } from "./render.js";

const TRAIL_CAP = 200;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function fmt(x: number, digits = 1): string {
  return x.toFixed(digits);
}

export class ConsoleApp {
  private client: ConsoleClient | null = null;
  private trails: Trail[] = [];
  private lastEpisode = -1;

  start(): void {
    el<HTMLButtonElement>("connect").onclick = () => this.connect();
    el<HTMLButtonElement>("send").onclick = () => this.submit();
    el<HTMLInputElement>("instruction").addEventListener("keydown", (ev) => {
      if (ev.key === "Enter") this.submit();
    });
    el<HTMLSelectElement>("translator").onchange = () => {
      this.client?.setTranslator(el<HTMLSelectElement>("translator").value);
    };
    this.connect();
  }

  private wsUrl(): string {
    const input = el<HTMLInputElement>("server").value.trim();
    if (input) return input;
    const scheme = location.protocol === "https:" ? "wss" : "ws";
    return `${scheme}://${location.host}/ws`;
  }

  private connect(): void {
    this.client?.close();
    this.setBanner("connecting...", "");
    const client = new ConsoleClient(this.wsUrl(), {
      onHello: (hello) => {
        this.setBanner(`connected: variant ${hello.variant}, translator ${hello.translator}`, "ok");
        el<HTMLSelectElement>("translator").value = hello.translator;
      },
      onFrame: (frame) => this.onFrame(frame),
      onError: (code, message) => this.setBanner(`${code}: ${message}`, "err"),
      onClose: () => this.setBanner("disconnected - reconnect to resynchronize", "err"),
    });
    client
      .connect()
      .then(() => {
        this.client = client;
      })
      .catch((err) => this.setBanner(String(err), "err"));
  }

  private submit(): void {
    const box = el<HTMLInputElement>("instruction");
    const text = box.value;
    if (!text.trim() || !this.client) {
      return; // empty drafts never leave the client
    }
    box.value = "";
    const row = this.appendHistory(text, "pending", null);
    this.client.submitInstruction(text).then((draft: InstructionDraft) => {
      row.className = `draft ${draft.status}`;
      row.querySelector(".status")!.textContent = draft.status + (draft.detail ? ` (${draft.detail})` : "");
    });
  }

  private appendHistory(text: string, status: string, detail: string | null): HTMLElement {
    const row = document.createElement("div");
    row.className = `draft ${status}`;
    const label = document.createElement("span");
    label.textContent = text;
    const stat = document.createElement("span");
    stat.className = "status";
    stat.textContent = status + (detail ? ` (${detail})` : "");
    row.append(label, stat);
    const panel = el<HTMLDivElement>("history");
    panel.prepend(row);
    while (panel.childElementCount > 20) {
      panel.lastElementChild?.remove();
    }
    return row;
  }

  private onFrame(frame: FrameModel): void {
    if (frame.episode !== this.lastEpisode) {
      this.trails = frame.agents.map(() => ({ points: [], cap: TRAIL_CAP }));
      this.lastEpisode = frame.episode;
    }
    frame.agents.forEach((agent, i) => pushTrail(this.trails[i], agent.pos));

    const canvas = el<HTMLCanvasElement>("field");
    const ctx = canvas.getContext("2d") as unknown as Canvas2D;
    const vp: Viewport = {
      width: canvas.width,
      height: canvas.height,
      halfExtent: frame.half_extent,
      margin: 16,
    };
    renderField(ctx, frame, vp, this.trails);

    el("tick").textContent = `tick ${frame.tick} / episode ${frame.episode} step ${frame.step}`;
    const c = frame.cumulative;
    el("tickers").textContent =
      `reward ${fmt(c.reward)} | picks ${c.picks} | collects ${c.collects} | ` +
      `defenses ${c.defenses} | breaches ${c.breaches}`;
    if (frame.reward) {
      el("step-reward").textContent =
        `step: task ${fmt(frame.reward.r_task, 2)} instr ${fmt(frame.reward.r_inst, 2)}`;
    }
    const instr = frame.instruction;
    el("source").textContent = instr.text ? `"${instr.text}" (${instr.source})` : instr.source;
  }

  private setBanner(text: string, cls: string): void {
    const banner = el("banner");
    banner.textContent = text;
    banner.className = cls;
  }
}
