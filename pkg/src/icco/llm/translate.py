"""Model-backed translation: assemble prompt, query, parse, clip."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..env.world import ResourceWorld
from ..instruction import clip_to_field
from .clients import ChatClient
from .errors import ParseError, TranslationError, TransportError
from .parse import parse_response
from .prompts import PromptSpec, assemble_prompt


@dataclass
class TranslationResult:
    instruction: str
    waypoints: np.ndarray  # (n_agents, K, 2), clipped to the field
    raw_response: str
    strategy_text: str
    diagnostics: list[str] = field(default_factory=list)
    clipped: bool = False


def clip_result(result: TranslationResult, half_extent: float) -> TranslationResult:
    clipped = clip_to_field(result.waypoints, half_extent)
    if not np.array_equal(clipped, result.waypoints):
        result.clipped = True
        result.diagnostics.append("waypoints outside the field were clipped")
    result.waypoints = clipped
    return result


class LLMTranslator:
    """Translates free-text instructions into clipped per-agent waypoints.

    On a parse failure the same prompt is re-fed to the client up to
    `max_retries` more times before giving up.
    """

    def __init__(
        self,
        client: ChatClient,
        n_waypoints: int = 4,
        prompt_variant: str = "base",
        max_retries: int = 2,
    ):
        self.client = client
        self.n_waypoints = n_waypoints
        self.prompt_variant = prompt_variant
        self.max_retries = max_retries

    def build_spec(self, text: str, world: ResourceWorld) -> PromptSpec:
        task_kwargs = {}
        if self.prompt_variant == "task_aligned":
            rw = world.scenario.rewards
            task_kwargs = dict(
                resource_positions=[tuple(map(float, p)) for p in world.res_pos],
                invader_position=tuple(map(float, world.invader_pos)),
                reward_constants={
                    "pick": rw.pick,
                    "collect": rw.collect,
                    "defense": rw.defense,
                    "breach": rw.breach,
                },
            )
        return PromptSpec(
            variant=self.prompt_variant,
            n_agents=world.n_agents,
            half_extent=world.half_extent,
            agent_positions=[tuple(map(float, p)) for p in world.agent_pos],
            instruction_text=text,
            n_waypoints=self.n_waypoints,
            **task_kwargs,
        )

    def translate(self, text: str, world: ResourceWorld) -> TranslationResult:
        prompt = assemble_prompt(self.build_spec(text, world))
        last_error: Exception | None = None
        for attempt in range(1 + self.max_retries):
            try:
                raw = self.client.complete(prompt)
            except TransportError:
                raise
            try:
                parsed = parse_response(raw, world.n_agents, expect_waypoints=self.n_waypoints)
            except ParseError as exc:
                last_error = exc
                continue
            diagnostics = list(parsed.diagnostics)
            if attempt:
                diagnostics.append(f"parsed after {attempt} retr{'y' if attempt == 1 else 'ies'}")
            result = TranslationResult(
                instruction=text,
                waypoints=parsed.waypoints,
                raw_response=raw,
                strategy_text=parsed.strategy_text,
                diagnostics=diagnostics,
            )
            return clip_result(result, world.half_extent)
        raise TranslationError(
            f"no parsable response after {self.max_retries + 1} attempts: {last_error}"
        )
