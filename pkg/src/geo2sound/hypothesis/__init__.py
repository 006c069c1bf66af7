"""Caption expansion prompts, response parsing and candidate generation plans.

The expansion prompt templates are frozen text files shipped with the
package; golden tests pin them byte-for-byte. The language model and the
text-to-audio generators are external: this module owns only the payloads
sent to them, the parsing of their outputs and the deterministic plan of
(hypothesis, sample) pairs each scene generates.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol

import httpx

from ..errors import EmptyCaption, GeneratorUnavailable, MalformedResponse, PartialFailure

MODES = ("ours", "control", "basic")
DEFAULT_SAMPLES_PER_HYPOTHESIS = 2
DEFAULT_DURATION_S = 10.0

_TEMPLATE_FILES = {"ours": "expansion_ours.txt", "control": "expansion_control.txt"}


def _load_template(mode: str) -> str:
    return (
        resources.files("geo2sound.hypothesis")
        .joinpath("templates", _TEMPLATE_FILES[mode])
        .read_text(encoding="utf-8")
    )


def build_expansion_prompt(c0: str, mode: str = "ours") -> str:
    """Render the expansion prompt for a base caption; byte-deterministic."""
    if mode not in _TEMPLATE_FILES:
        raise ValueError(f"mode must be one of {tuple(_TEMPLATE_FILES)}, got {mode!r}")
    if not c0 or not c0.strip():
        raise EmptyCaption("base caption is empty")
    return _load_template(mode).replace("{C0}", c0)


_NUMBERED_LINE = re.compile(r"^\s*\((\d+)\)\s*(.*\S)\s*$")


def parse_hypotheses(llm_response: str) -> list[str]:
    """Extract the two numbered hypothesis lines, ignoring surrounding prose."""
    found: dict[int, str] = {}
    for line in llm_response.splitlines():
        match = _NUMBERED_LINE.match(line)
        if not match:
            continue
        num = int(match.group(1))
        if num in found or num not in (1, 2):
            raise MalformedResponse(f"unexpected numbered line ({num}) in response")
        found[num] = match.group(2).strip()
    if set(found) != {1, 2}:
        raise MalformedResponse(f"expected exactly lines (1) and (2), found {sorted(found)}")
    return [found[1], found[2]]


@dataclass
class HypothesisSet:
    """Base caption plus, except in basic mode, exactly two expansions."""

    c0: str
    expansions: list[str] = field(default_factory=list)
    mode: str = "ours"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not self.c0 or not self.c0.strip():
            raise EmptyCaption("base caption is empty")
        if self.mode == "basic":
            if self.expansions:
                raise ValueError("basic mode carries no expansions")
        elif len(self.expansions) != 2 or any(not e.strip() for e in self.expansions):
            raise ValueError("expected exactly 2 non-empty expansions")

    def texts(self) -> list[str]:
        """Hypotheses in index order: the base caption first, then expansions."""
        return [self.c0, *self.expansions]


def generation_seed(base_seed: int, scene_id: str, hypothesis_index: int, sample_index: int) -> int:
    """Stable 63-bit seed derived by hashing the plan coordinates."""
    key = f"{base_seed}|{scene_id}|{hypothesis_index}|{sample_index}".encode("utf-8")
    digest = hashlib.sha256(key).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFFFFFFFFFFFFFF


@dataclass
class PlanEntry:
    hypothesis_index: int  # 0 = base caption, 1/2 = expansions
    sample_index: int
    prompt_text: str
    generation_seed: int


@dataclass
class CandidatePlan:
    scene_id: str
    entries: list[PlanEntry]

    def to_json_obj(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "entries": [
                {
                    "hypothesis_index": e.hypothesis_index,
                    "sample_index": e.sample_index,
                    "prompt_text": e.prompt_text,
                    "generation_seed": e.generation_seed,
                }
                for e in self.entries
            ],
        }


def build_candidate_plan(
    scene_id: str,
    h: HypothesisSet,
    samples_per_hypothesis: int = DEFAULT_SAMPLES_PER_HYPOTHESIS,
    base_seed: int = 0,
) -> CandidatePlan:
    """Cross product of hypotheses and sample indices with deterministic seeds."""
    if samples_per_hypothesis < 1:
        raise ValueError("samples_per_hypothesis must be >= 1")
    entries = [
        PlanEntry(
            hypothesis_index=hi,
            sample_index=si,
            prompt_text=text,
            generation_seed=generation_seed(base_seed, scene_id, hi, si),
        )
        for hi, text in enumerate(h.texts())
        for si in range(samples_per_hypothesis)
    ]
    return CandidatePlan(scene_id=scene_id, entries=entries)


class GeneratorClient(Protocol):
    """Narrow interface to an external text-to-audio generation backend."""

    def generate(self, scene_id: str, entry: PlanEntry) -> str:
        """Return a reference (path or URL) to the generated audio embedding."""
        ...


class ReplayStubClient:
    """Serves pre-generated embedding files keyed by (scene, hypothesis, sample)."""

    def __init__(self, replay_dir: str | Path):
        self.replay_dir = Path(replay_dir)

    def artifact_path(self, scene_id: str, entry: PlanEntry) -> Path:
        return self.replay_dir / f"{scene_id}__h{entry.hypothesis_index}__s{entry.sample_index}.npy"

    def generate(self, scene_id: str, entry: PlanEntry) -> str:
        path = self.artifact_path(scene_id, entry)
        if not path.is_file():
            raise FileNotFoundError(str(path))
        return str(path)


class HttpGeneratorClient:
    """Client for a live generator endpoint (``GEO2SOUND_GENERATOR_URL``)."""

    def __init__(self, base_url: str, duration_s: float = DEFAULT_DURATION_S, transport=None):
        if not base_url:
            raise GeneratorUnavailable("no generator endpoint configured")
        self.duration_s = duration_s
        self._client = httpx.Client(base_url=base_url, timeout=120.0, transport=transport)

    def generate(self, scene_id: str, entry: PlanEntry) -> str:
        payload = {
            "prompt_text": entry.prompt_text,
            "seed": entry.generation_seed,
            "duration_s": self.duration_s,
        }
        try:
            response = self._client.post("/generate", json=payload)
        except httpx.TransportError as exc:
            raise GeneratorUnavailable(f"generator endpoint unreachable: {exc}") from exc
        if response.status_code != 200:
            raise RuntimeError(f"generator returned HTTP {response.status_code}")
        return str(response.json()["artifact"])


def submit_generation(plan: CandidatePlan, client: GeneratorClient) -> list[str]:
    """One artifact reference per plan entry, in plan order; failures never drop silently."""
    refs: list[str] = []
    failures: list[tuple[PlanEntry, str]] = []
    for entry in plan.entries:
        try:
            refs.append(client.generate(plan.scene_id, entry))
        except GeneratorUnavailable:
            raise
        except Exception as exc:  # noqa: BLE001 - per-entry failures are reported together
            failures.append((entry, str(exc)))
            refs.append("")
    if failures:
        detail = ", ".join(f"h{e.hypothesis_index}/s{e.sample_index}: {msg}" for e, msg in failures)
        raise PartialFailure(f"{len(failures)} of {len(plan.entries)} generations failed ({detail})", failures)
    return refs
