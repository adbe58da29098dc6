"""Regenerate the checked-in translator fixtures.

Writes, for a fixed world snapshot, one canonical response file per
benchmark instruction plus a replay directory keyed by prompt hash, so the
recorded-replay client can serve them. Run from the repo root:

    python3 scripts/make_golden_fixtures.py
"""

import json
from pathlib import Path

from icco.env import ResourceWorld
from icco.llm import TABLE_INSTRUCTIONS, prompt_key
from icco.llm.mock import mock_translate
from icco.llm.prompts import assemble_prompt
from icco.llm.translate import LLMTranslator

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "llm_responses"
WORLD_SEED = 42


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    replay_dir = FIXTURE_DIR / "replay"
    replay_dir.mkdir(exist_ok=True)

    world = ResourceWorld()
    world.reset(WORLD_SEED)
    index = {"world_seed": WORLD_SEED, "responses": {}}
    stub = LLMTranslator.__new__(LLMTranslator)
    stub.prompt_variant = "base"
    stub.n_waypoints = 4

    for tag in TABLE_INSTRUCTIONS:
        result = mock_translate(tag, world)
        slug = tag.lower().replace(" ", "_")
        path = FIXTURE_DIR / f"{slug}.txt"
        path.write_text(result.raw_response)

        prompt = assemble_prompt(stub.build_spec(tag, world))
        key = prompt_key(prompt)
        (replay_dir / f"{key}.txt").write_text(result.raw_response)
        index["responses"][tag] = {
            "file": path.name,
            "prompt_hash": key,
            "final_waypoints": result.waypoints[:, -1].tolist(),
        }

    (FIXTURE_DIR / "index.json").write_text(json.dumps(index, indent=2) + "\n")
    print(f"wrote fixtures for {len(TABLE_INSTRUCTIONS)} instructions to {FIXTURE_DIR}")


if __name__ == "__main__":
    main()
