// End-to-end: a real served session (python backend, mock translator) driven
// through the console client. Skipped only if the backend cannot start.

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { WebSocket as NodeWebSocket } from "ws";

import { ConsoleClient } from "../src/client.js";
import { FrameModel } from "../src/protocol.js";

const PORT = 18000 + Math.floor(Math.random() * 20000);
const URL = `ws://127.0.0.1:${PORT}/ws`;
let server: ChildProcess;

function makeClient(handlers = {}): ConsoleClient {
  return new ConsoleClient(URL, handlers, NodeWebSocket as never, 20_000);
}

async function waitForHealthy(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`http://127.0.0.1:${PORT}/healthz`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("backend did not become healthy");
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "icco-ui-"));
  const ckpt = join(dir, "ckpt.pt");
  execFileSync("python3", [
    "-c",
    [
      "import torch",
      "from icco.checkpoint import save_checkpoint",
      "from icco.config import TrainConfig",
      "from icco.models import Models",
      "cfg = TrainConfig(variant='ICCO', seed=3, episodes=1)",
      "torch.manual_seed(3)",
      "m = Models(cfg); t = Models(cfg); t.sync_from(m)",
      `save_checkpoint(r'${ckpt}', m, t, None, {})`,
    ].join("\n"),
  ]);
  server = spawn(
    "python3",
    [
      "-m",
      "icco.cli",
      "serve",
      "--checkpoint",
      ckpt,
      "--bind",
      `127.0.0.1:${PORT}`,
      "--translator",
      "mock",
      "--tick-hz",
      "50",
    ],
    { stdio: ["ignore", "inherit", "inherit"] },
  );
  await waitForHealthy(60_000);
}, 90_000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("console against a served mock session", () => {
  it("streams self-describing frames", async () => {
    const frames: FrameModel[] = [];
    const client = makeClient({ onFrame: (f: FrameModel) => frames.push(f) });
    await client.connect();
    await new Promise((r) => setTimeout(r, 500));
    expect(client.hello?.translator).toBe("mock");
    expect(frames.length).toBeGreaterThan(3);
    expect(frames[1].tick).toBeGreaterThan(frames[0].tick);
    expect(frames[0].agents).toHaveLength(3);
    client.close();
  }, 30_000);

  it("applies each benchmark instruction with mock geometry within 4 ticks", async () => {
    const frames: FrameModel[] = [];
    const client = makeClient({ onFrame: (f: FrameModel) => frames.push(f) });
    await client.connect();
    const refresh = 4;

    const checks: Record<string, (f: FrameModel) => boolean> = {
      "Gather Center": (f) => f.waypoints.every((w) => w[w.length - 1][0] === 0 && w[w.length - 1][1] === 0),
      "Go Right": (f) => {
        const finals = f.waypoints.map((w) => w[w.length - 1]);
        const xs = new Set(finals.map((p) => p[0].toFixed(6)));
        const ys = new Set(finals.map((p) => p[1].toFixed(6)));
        return xs.size === 1 && Math.abs(finals[0][0] - 2.75) < 1e-9 && ys.size === finals.length;
      },
      "Move Top": (f) => {
        const finals = f.waypoints.map((w) => w[w.length - 1]);
        const ys = new Set(finals.map((p) => p[1].toFixed(6)));
        const xs = new Set(finals.map((p) => p[0].toFixed(6)));
        return ys.size === 1 && Math.abs(finals[0][1] - 2.75) < 1e-9 && xs.size === finals.length;
      },
      "Spread Out": (f) => {
        const finals = f.waypoints.map((w) => w[w.length - 1]);
        const angles = new Set(finals.map((p) => Math.atan2(p[1], p[0]).toFixed(4)));
        const radii = finals.map((p) => Math.hypot(p[0], p[1]));
        return angles.size === finals.length && radii.every((r) => r > 2.0);
      },
    };

    for (const [text, check] of Object.entries(checks)) {
      const draft = await client.submitInstruction(text);
      expect(draft.status).toBe("applied");
      const appliedAt = Date.now();
      let ok = false;
      while (Date.now() - appliedAt < 10_000) {
        const frame = client.lastFrame;
        if (frame && frame.instruction.text === text && check(frame)) {
          ok = true;
          break;
        }
        await new Promise((r) => setTimeout(r, 20));
      }
      expect(ok, `${text} geometry`).toBe(true);
      // instruction became visible within one refresh interval of frames
      const visible = frames.find((f) => f.instruction.text === text);
      expect(visible).toBeDefined();
    }
    expect(refresh).toBe(client.hello?.refresh_interval);
    client.close();
  }, 60_000);

  it("rejects unknown instructions with a failed status", async () => {
    const client = makeClient();
    await client.connect();
    const draft = await client.submitInstruction("Dance the tango");
    expect(draft.status).toBe("failed");
    expect(draft.detail ?? "").toContain("UnknownInstruction");
    client.close();
  }, 30_000);

  it("resynchronizes within one frame after reconnect", async () => {
    const first = makeClient();
    await first.connect();
    await new Promise((r) => setTimeout(r, 300));
    const before = first.lastFrame;
    expect(before).not.toBeNull();
    first.close();

    const frames: FrameModel[] = [];
    const second = makeClient({ onFrame: (f: FrameModel) => frames.push(f) });
    await second.connect();
    const deadline = Date.now() + 5_000;
    while (frames.length < 1 && Date.now() < deadline) {
      await new Promise((r) => setTimeout(r, 10));
    }
    expect(frames.length).toBeGreaterThanOrEqual(1);
    const resync = frames[0];
    // one frame carries the complete world: entities, waypoints, tickers
    expect(resync.tick).toBeGreaterThan(before!.tick);
    expect(resync.agents).toHaveLength(3);
    expect(resync.resources).toHaveLength(6);
    expect(resync.waypoints).toHaveLength(3);
    expect(resync.cumulative).toBeDefined();
    second.close();
  }, 30_000);
});
