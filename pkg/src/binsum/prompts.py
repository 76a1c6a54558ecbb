"""Prompt pool construction and task-specific selection.

The pipeline has four steps: (1) let the model synthesize candidate
prompts in the task context (human-written seeds join the same pool),
(2) generate semantically similar variants of candidates, (3) have the
model rewrite candidates against an explicit optimization objective, and
(4) score every candidate on one seeded sample of dataset records and
rank by mean score. Only the top-1 generation is ever taken from the
model: black-box APIs expose no probabilities to weigh alternatives with.

Meta-instruction texts live in editable template files under
``binsum/templates/``; every function also accepts caller-supplied text.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .errors import EmptyPoolError, SelectionError, ValidationError
from .model import FunctionRecord


class Origin(str, Enum):
    HUMAN = "human"
    SYNTHESIZED = "synthesized"
    VARIANT = "variant"
    OPTIMIZED = "optimized"


@dataclass(frozen=True)
class PromptCandidate:
    id: str
    text: str
    origin: Origin
    parent_id: str | None = None
    score: float | None = None

    def validate(self) -> None:
        if not self.text:
            raise ValidationError("candidate text is empty")
        if self.origin in (Origin.VARIANT, Origin.OPTIMIZED) and not self.parent_id:
            raise ValidationError(f"{self.origin.value} candidate needs a parent_id")
        if self.score is not None and not -1.0 <= self.score <= 1.0:
            raise ValidationError(f"score {self.score} outside [-1, 1]")


def candidate_id(origin: Origin, text: str) -> str:
    return hashlib.sha1(f"{origin.value}:{text}".encode("utf-8")).hexdigest()[:12]


def make_candidate(text: str, origin: Origin, parent_id: str | None = None) -> PromptCandidate:
    cand = PromptCandidate(candidate_id(origin, text), text.strip(), origin, parent_id)
    cand.validate()
    return cand


@dataclass(frozen=True)
class SelectionConfig:
    sample_size: int = 50
    seed: int = 0
    metric: str = "semantic"

    def validate(self, dataset_size: int) -> None:
        if self.sample_size < 1:
            raise SelectionError("sample_size must be positive")
        if self.sample_size > dataset_size:
            raise SelectionError(
                f"sample_size {self.sample_size} exceeds dataset size {dataset_size}"
            )


_LINE_PREFIX = re.compile(r"^\s*(?:\d+\s*[.):\-]\s*|[-*•]\s*)?(.*?)\s*$")


def parse_prompt_lines(text: str) -> list[str]:
    """One prompt per line; numbering, bullets, and quotes stripped."""
    prompts = []
    for line in text.splitlines():
        m = _LINE_PREFIX.match(line)
        cleaned = m.group(1) if m else line.strip()
        if len(cleaned) >= 2 and cleaned[0] in "\"'" and cleaned[-1] == cleaned[0]:
            cleaned = cleaned[1:-1].strip()
        if cleaned:
            prompts.append(cleaned)
    return prompts


def _dedup_case_insensitive(texts: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for text in texts:
        key = text.lower()
        if key not in seen:
            seen.add(key)
            out.append(text)
    return out


def load_template(name: str) -> str:
    return (
        resources.files("binsum").joinpath("templates", f"{name}.txt").read_text(encoding="utf-8")
    )


def synthesize(llm: Callable[[str], str], meta_instruction: str, k: int) -> list[PromptCandidate]:
    """Ask the model for up to ``k`` candidate prompts.

    The model's reply is parsed one prompt per line; case-insensitive
    duplicates collapse. Zero parseable prompts is an error, not an empty
    pool.
    """
    if k < 1:
        raise ValueError("k must be positive")
    reply = llm(meta_instruction)
    prompts = _dedup_case_insensitive(parse_prompt_lines(reply))
    if not prompts:
        raise EmptyPoolError("model output contained no parseable prompts")
    return [make_candidate(text, Origin.SYNTHESIZED) for text in prompts[:k]]


def generate_variants(
    llm: Callable[[str], str],
    candidate: PromptCandidate,
    m: int,
    template: str | None = None,
) -> list[PromptCandidate]:
    """Up to ``m`` semantically similar rewrites of one candidate."""
    if m < 1:
        raise ValueError("m must be positive")
    template = template or load_template("variants")
    reply = llm(template.format(m=m, prompt=candidate.text))
    texts = _dedup_case_insensitive(parse_prompt_lines(reply))
    out = []
    for text in texts[:m]:
        if text.lower() == candidate.text.lower():
            continue  # a no-op variant adds nothing to the pool
        out.append(make_candidate(text, Origin.VARIANT, parent_id=candidate.id))
    return out


def optimize(
    llm: Callable[[str], str],
    candidates: list[PromptCandidate],
    meta_objective: str | None = None,
) -> list[PromptCandidate]:
    """Model-rewritten candidates under an explicit objective.

    Each candidate is rewritten independently; the first parseable line of
    the reply becomes the optimized prompt. Rewrites textually equal to
    their parent are dropped.
    """
    meta_objective = meta_objective or load_template("optimize")
    out = []
    for candidate in candidates:
        reply = llm(meta_objective.format(prompt=candidate.text))
        texts = parse_prompt_lines(reply)
        if not texts:
            raise EmptyPoolError(f"optimizer returned nothing for candidate {candidate.id}")
        text = texts[0]
        if text.lower() == candidate.text.lower():
            continue
        out.append(make_candidate(text, Origin.OPTIMIZED, parent_id=candidate.id))
    return out


def select(
    candidates: list[PromptCandidate],
    dataset: Iterable[FunctionRecord],
    cfg: SelectionConfig,
    llm: Callable[[str, FunctionRecord], str],
    metric: Callable[[str, str], float],
) -> list[PromptCandidate]:
    """Rank candidates by mean score over one seeded dataset sample.

    Every candidate is evaluated on the identical subset (same record ids,
    sampled once from ``cfg.seed``), so the ranking is an order-free argmax:
    permuting the candidate list cannot change the winner. Ties break by
    ascending candidate id.
    """
    records = list(dataset)
    if not records:
        raise SelectionError("dataset is empty")
    cfg.validate(len(records))
    subset = random.Random(cfg.seed).sample(records, cfg.sample_size)

    scored = []
    for candidate in candidates:
        values = [metric(llm(candidate.text, record), record.comment) for record in subset]
        scored.append(replace(candidate, score=sum(values) / len(values)))
    scored.sort(key=lambda c: (-(c.score or 0.0), c.id))
    return scored


def sample_records(dataset: Iterable[FunctionRecord], cfg: SelectionConfig) -> list[FunctionRecord]:
    """The exact subset :func:`select` evaluates on, for auditing."""
    records = list(dataset)
    cfg.validate(len(records))
    return random.Random(cfg.seed).sample(records, cfg.sample_size)


# --- pool persistence ---------------------------------------------------------

def save_pool(path: str | Path, candidates: list[PromptCandidate]) -> None:
    import json

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for candidate in candidates:
            candidate.validate()
            fh.write(json.dumps(
                {
                    "id": candidate.id,
                    "text": candidate.text,
                    "origin": candidate.origin.value,
                    "parent_id": candidate.parent_id,
                    "score": candidate.score,
                },
                ensure_ascii=False,
            ))
            fh.write("\n")


def load_pool(path: str | Path) -> list[PromptCandidate]:
    import json

    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            candidate = PromptCandidate(
                id=obj["id"],
                text=obj["text"],
                origin=Origin(obj["origin"]),
                parent_id=obj.get("parent_id"),
                score=obj.get("score"),
            )
            candidate.validate()
            out.append(candidate)
    return out


def iter_pool(path: str | Path) -> Iterator[PromptCandidate]:
    yield from load_pool(path)
