"""Instruction-conditioned coordination for cooperative multi-agent RL."""

__version__ = "0.1.0"

from .config import ScenarioConfig, TrainConfig, VariantConfig  # noqa: F401
