"""Environment package: world dynamics plus pluggable simulation kernels.

The hot per-step routines exist twice: a compiled Cython extension and a
pure-Python reference. The compiled kernel is used when importable unless
ICCO_PURE_PYTHON=1 forces the fallback. Both produce bit-identical results.
"""

from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _kernel_cy
except ImportError:
    _kernel_cy = None

if os.environ.get("ICCO_PURE_PYTHON") == "1" or _kernel_cy is None:
    DEFAULT_BACKEND = "python"
else:
    DEFAULT_BACKEND = "cython"


def available_backends() -> tuple[str, ...]:
    return ("python", "cython") if _kernel_cy is not None else ("python",)


def get_kernel(backend: str = "auto"):
    if backend == "auto":
        backend = DEFAULT_BACKEND
    if backend == "python":
        return _kernel_py
    if backend == "cython":
        if _kernel_cy is None:
            raise RuntimeError("cython kernel not built; install with the extension or use backend='python'")
        return _kernel_cy
    raise ValueError(f"unknown backend {backend!r}")


from .world import (  # noqa: E402
    ACTION_NAMES,
    N_ACTIONS,
    EpisodeExhausted,
    ResourceWorld,
    RewardBreakdown,
    WorldState,
    state_vector_slices,
)

__all__ = [
    "ACTION_NAMES",
    "N_ACTIONS",
    "DEFAULT_BACKEND",
    "EpisodeExhausted",
    "ResourceWorld",
    "RewardBreakdown",
    "WorldState",
    "available_backends",
    "get_kernel",
    "state_vector_slices",
]
