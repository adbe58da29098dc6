"""Live rollout service: streams world frames over a websocket and accepts
free-text instructions routed through the configured translator.

One simulation loop drives the session at a fixed tick rate; subscribers get
self-contained JSON frames through per-connection bounded queues, so a slow
consumer drops its own frames without stalling the loop. Instructions apply
at the next refresh boundary (at most `refresh_interval` ticks of latency).
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .checkpoint import load_checkpoint
from .llm import TranslationResult, make_translator
from .env.world import ResourceWorld
from .rollout import ActingPolicy, RandomWalkInstructions, agent_conditioning

PROTOCOL_VERSION = 1
QUEUE_SIZE = 32


@dataclass
class PendingInstruction:
    id: str
    text: str
    result: TranslationResult | None = None
    error: str | None = None


class LiveSession:
    """Owns one world + policy and fans frames out to subscribers."""

    def __init__(
        self,
        checkpoint_path: str | Path,
        translator_kind: str = "mock",
        replay_dir: str | Path | None = None,
        tick_hz: float = 10.0,
        seed: int = 2024,
        translate_timeout: float = 20.0,
        env_backend: str = "auto",
    ):
        ckpt = load_checkpoint(checkpoint_path)
        self.cfg = ckpt.cfg
        self.models = ckpt.models.eval()
        self.policy = ActingPolicy(self.models)
        self.world = ResourceWorld(self.cfg.scenario, backend=env_backend)
        self.translator_kind = translator_kind
        self.replay_dir = replay_dir
        self.translator = make_translator(
            translator_kind, n_waypoints=self.cfg.n_waypoints, replay_dir=replay_dir
        )
        self.tick_hz = tick_hz
        self.translate_timeout = translate_timeout
        self.rng_seed = seed
        self.rng_env = np.random.default_rng(seed)
        self.walk = RandomWalkInstructions(self.cfg, np.random.default_rng(seed + 1))

        self.tick = 0
        self.episode = 0
        self.step_in_episode = 0
        self.source = "random-walk"
        self.current_text: str | None = None
        self.waypoints: np.ndarray | None = None
        self.z: np.ndarray | None = None
        self.cumulative = {"reward": 0.0, "picks": 0, "collects": 0, "defenses": 0, "breaches": 0}
        self.obs: np.ndarray | None = None
        self.last_breakdown = None

        self.subscribers: set[asyncio.Queue] = set()
        self.pending: list[PendingInstruction] = []
        self._lock = asyncio.Lock()
        self._stop = asyncio.Event()

    # -- subscriber plumbing -------------------------------------------------

    def subscribe(self) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue(maxsize=QUEUE_SIZE)
        self.subscribers.add(q)
        return q

    def unsubscribe(self, q: asyncio.Queue) -> None:
        self.subscribers.discard(q)

    def _broadcast(self, message: dict) -> None:
        payload = json.dumps(message)
        for q in list(self.subscribers):
            try:
                q.put_nowait(payload)
            except asyncio.QueueFull:
                try:
                    q.get_nowait()  # drop this subscriber's oldest frame
                except asyncio.QueueEmpty:
                    pass
                try:
                    q.put_nowait(payload)
                except asyncio.QueueFull:
                    pass

    # -- instruction intake ----------------------------------------------------

    async def submit_instruction(self, instruction_id: str, text: str) -> None:
        """Translate now; the waypoints install at the next refresh boundary."""
        item = PendingInstruction(instruction_id, text)
        loop = asyncio.get_running_loop()
        try:
            result = await asyncio.wait_for(
                loop.run_in_executor(None, self.translator.translate, text, self.world),
                timeout=self.translate_timeout,
            )
            item.result = result
        except asyncio.TimeoutError:
            item.error = "translator timeout"
            self._broadcast(
                {
                    "type": "error",
                    "v": PROTOCOL_VERSION,
                    "code": "translator_timeout",
                    "message": f"translation of {text!r} exceeded {self.translate_timeout}s",
                }
            )
        except Exception as exc:  # noqa: BLE001 - surfaced to the client as failed status
            item.error = f"{type(exc).__name__}: {exc}"
        if item.error is not None:
            self._broadcast(self._status(item, "failed"))
        else:
            async with self._lock:
                self.pending.append(item)

    def set_translator(self, kind: str) -> str | None:
        try:
            self.translator = make_translator(
                kind, n_waypoints=self.cfg.n_waypoints, replay_dir=self.replay_dir
            )
            self.translator_kind = kind
            return None
        except Exception as exc:  # noqa: BLE001
            return f"{type(exc).__name__}: {exc}"

    def _status(self, item: PendingInstruction, status: str) -> dict:
        return {
            "type": "instruction_status",
            "v": PROTOCOL_VERSION,
            "id": item.id,
            "text": item.text,
            "status": status,
            "detail": item.error,
            "tick": self.tick,
        }

    # -- simulation loop ----------------------------------------------------------

    def _reset_episode(self) -> None:
        self.obs = self.world.reset(int(self.rng_env.integers(2**63)))
        self.policy.reset()
        self.step_in_episode = 0

    async def _refresh_instructions(self) -> None:
        applied = None
        async with self._lock:
            if self.pending:
                applied = self.pending[-1]
                skipped = self.pending[:-1]
                self.pending = []
        if applied is not None:
            self.waypoints = applied.result.waypoints
            self.source = "instruction"
            self.current_text = applied.text
            for item in skipped:
                item.error = "superseded by a newer instruction"
                self._broadcast(self._status(item, "failed"))
            self._broadcast(self._status(applied, "applied"))
        elif self.source == "random-walk" or self.waypoints is None:
            self.waypoints = self.walk(self.world, self.step_in_episode)
            self.source = "random-walk" if self.current_text is None else self.source

    def _frame(self) -> dict:
        w = self.world
        bd = self.last_breakdown
        return {
            "type": "frame",
            "v": PROTOCOL_VERSION,
            "tick": self.tick,
            "episode": self.episode,
            "step": self.step_in_episode,
            "half_extent": w.half_extent,
            "agents": [
                {
                    "pos": [float(w.agent_pos[i, 0]), float(w.agent_pos[i, 1])],
                    "vel": [float(w.agent_vel[i, 0]), float(w.agent_vel[i, 1])],
                    "carrying": bool(w.carrying[i]),
                    "defended": bool(w.defended[i]),
                }
                for i in range(w.n_agents)
            ],
            "invader": {
                "pos": [float(w.invader_pos[0]), float(w.invader_pos[1])],
                "active": bool(w.invader_active),
            },
            "resources": [
                {"pos": [float(w.res_pos[j, 0]), float(w.res_pos[j, 1])], "active": bool(w.res_active[j])}
                for j in range(w.n_resources)
            ],
            "home": {"pos": [0.0, 0.0], "radius": w.scenario.home_radius},
            "waypoints": [[[float(x), float(y)] for x, y in wps] for wps in self.waypoints],
            "reward": bd.to_dict() if bd is not None else None,
            "cumulative": dict(self.cumulative),
            "instruction": {"source": self.source, "text": self.current_text},
        }

    async def run(self) -> None:
        self._reset_episode()
        interval = 1.0 / self.tick_hz
        loop = asyncio.get_running_loop()
        next_tick = loop.time()
        while not self._stop.is_set():
            if self.step_in_episode >= self.world.scenario.episode_steps:
                self.episode += 1
                self._reset_episode()
            if self.step_in_episode % self.cfg.refresh_interval == 0:
                await self._refresh_instructions()
                if self.policy.variant.use_coordinator:
                    state_vec = self.world.state_vector(self.waypoints)
                    self.z = self.policy.latent(
                        state_vec, self.waypoints, np.zeros(self.policy.dims.latent_total)
                    )
            state_vec = self.world.state_vector(self.waypoints)
            cond = agent_conditioning(self.policy, state_vec, self.waypoints, self.z)
            actions = self.policy.act(self.obs, cond, eps=0.0, rng=self.rng_env)
            bd, self.obs = self.world.step(actions, self.waypoints)
            self.last_breakdown = bd
            self.cumulative["reward"] += bd.total
            self.cumulative["picks"] += bd.n_picks
            self.cumulative["collects"] += bd.n_collects
            self.cumulative["defenses"] += bd.n_defenses
            self.cumulative["breaches"] += bd.n_breaches
            self.step_in_episode += 1
            self.tick += 1
            self._broadcast(self._frame())
            next_tick += interval
            delay = next_tick - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_tick = loop.time()  # fell behind; do not accumulate debt

    def stop(self) -> None:
        self._stop.set()

    def hello(self) -> dict:
        from dataclasses import asdict

        return {
            "type": "hello",
            "v": PROTOCOL_VERSION,
            "variant": self.cfg.variant,
            "tick_hz": self.tick_hz,
            "n_waypoints": self.cfg.n_waypoints,
            "refresh_interval": self.cfg.refresh_interval,
            "scenario": asdict(self.cfg.scenario),
            "translator": self.translator_kind,
        }


def build_app(session: LiveSession, static_dir: str | Path | None = None):
    """FastAPI app exposing /ws (frames + instructions) and the console UI."""
    app = FastAPI(title="icco live session")
    app.state.session = session

    @app.on_event("startup")
    async def _start():
        app.state.sim_task = asyncio.create_task(session.run())

    @app.on_event("shutdown")
    async def _stop():
        session.stop()
        task = getattr(app.state, "sim_task", None)
        if task is not None:
            task.cancel()

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "tick": session.tick}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        await ws.send_text(json.dumps(session.hello()))
        queue = session.subscribe()

        async def sender():
            while True:
                await ws.send_text(await queue.get())

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(
                        json.dumps(
                            {"type": "error", "v": PROTOCOL_VERSION, "code": "bad_message",
                             "message": "not valid JSON"}
                        )
                    )
                    continue
                kind = msg.get("type")
                if kind == "instruct":
                    text = (msg.get("text") or "").strip()
                    instruction_id = str(msg.get("id", f"i{session.tick}"))
                    if not text:
                        await ws.send_text(
                            json.dumps(
                                {"type": "error", "v": PROTOCOL_VERSION, "code": "empty_instruction",
                                 "message": "instruction text is empty"}
                            )
                        )
                        continue
                    asyncio.create_task(session.submit_instruction(instruction_id, text))
                elif kind == "set_translator":
                    error = session.set_translator(msg.get("kind", ""))
                    await ws.send_text(
                        json.dumps(
                            {"type": "translator", "v": PROTOCOL_VERSION,
                             "kind": session.translator_kind, "error": error}
                        )
                    )
                elif kind == "ping":
                    await ws.send_text(json.dumps({"type": "pong", "v": PROTOCOL_VERSION, "tick": session.tick}))
                else:
                    await ws.send_text(
                        json.dumps(
                            {"type": "error", "v": PROTOCOL_VERSION, "code": "unknown_type",
                             "message": f"unknown message type {kind!r}"}
                        )
                    )
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            session.unsubscribe(queue)

    if static_dir is not None and Path(static_dir).exists():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")
    return app


def serve(
    checkpoint_path: str | Path,
    bind: str = "127.0.0.1:8700",
    translator_kind: str = "mock",
    replay_dir: str | Path | None = None,
    tick_hz: float = 10.0,
    static_dir: str | Path | None = None,
    env_backend: str = "auto",
) -> None:
    import uvicorn

    host, _, port = bind.partition(":")
    session = LiveSession(
        checkpoint_path,
        translator_kind=translator_kind,
        replay_dir=replay_dir,
        tick_hz=tick_hz,
        env_backend=env_backend,
    )
    app = build_app(session, static_dir=static_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8700), log_level="warning")
