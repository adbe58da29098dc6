"""Language-model bridge: prompts, clients, parsing, and the mock translator."""

from .clients import ENV_KEY, ENV_MODEL, ENV_URL, ChatClient, LiveChatClient, ReplayChatClient, prompt_key
from .errors import (
    BridgeError,
    ParseError,
    PromptError,
    TranslationError,
    TransportError,
    UnknownInstructionError,
)
from .mock import TABLE_INSTRUCTIONS, MockTranslator, mock_translate, mock_waypoints
from .parse import ParsedResponse, parse_response, serialize_waypoints
from .prompts import STRICT_COMPLY_PHRASE, PromptSpec, assemble_prompt
from .translate import LLMTranslator, TranslationResult

__all__ = [
    "BridgeError",
    "ChatClient",
    "ENV_KEY",
    "ENV_MODEL",
    "ENV_URL",
    "LLMTranslator",
    "LiveChatClient",
    "MockTranslator",
    "ParseError",
    "ParsedResponse",
    "PromptError",
    "PromptSpec",
    "ReplayChatClient",
    "STRICT_COMPLY_PHRASE",
    "TABLE_INSTRUCTIONS",
    "TranslationError",
    "TranslationResult",
    "TransportError",
    "UnknownInstructionError",
    "assemble_prompt",
    "mock_translate",
    "mock_waypoints",
    "parse_response",
    "prompt_key",
    "serialize_waypoints",
]


def make_translator(kind: str, n_waypoints: int = 4, replay_dir=None, prompt_variant: str = "base"):
    """Factory used by the CLI and server: kind in {mock, live, replay}."""
    if kind == "mock":
        return MockTranslator(n_waypoints=n_waypoints)
    if kind == "live":
        return LLMTranslator(LiveChatClient(), n_waypoints=n_waypoints, prompt_variant=prompt_variant)
    if kind == "replay":
        if replay_dir is None:
            raise ValueError("replay translator needs a response directory")
        return LLMTranslator(
            ReplayChatClient(replay_dir), n_waypoints=n_waypoints, prompt_variant=prompt_variant
        )
    raise ValueError(f"unknown translator kind {kind!r}")
