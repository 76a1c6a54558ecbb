"""End-to-end benchmark runs and score aggregation.

A run walks every (record, representation) task: assemble the request,
complete it through the gateway, score the summary against the record's
ground-truth comment, and append one structured line to the score file.
Results are gathered in deterministic task order before writing, so a
fixed seed plus a warm cache reproduces score and report files
byte-for-byte. Per-record failures are recorded and skipped; only
configuration problems abort a run.
"""

from __future__ import annotations

import hashlib
import json
import random
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError
from .gateway import CompletionParams, Gateway, PromptMode
from .metrics import EmbeddingProvider, MetricParams, SummaryPair, score_pair, tokenize
from .model import FunctionRecord, RepresentationKind, ScoreSet, read_records

METRIC_NAMES = ("semantic", "bleu1", "meteor", "rouge_l")

GROUP_KEYS = ("rep", "model", "mode", "arch", "opt", "project", "stripped", "prompt_id")


@dataclass
class RunConfig:
    dataset: Path
    output_dir: Path
    reps: list[RepresentationKind] = field(
        default_factory=lambda: [RepresentationKind.SOURCE]
    )
    model: str = "gpt-4"
    prompt_text: str = "Please explain the purpose and functionality of the code."
    prompt_id: str | None = None
    mode: PromptMode = field(default_factory=PromptMode.zero_shot)
    word_limit: int | str = "mean-of-ground-truth"
    metric_params: MetricParams = field(default_factory=MetricParams)
    seed: int = 0
    concurrency: int = 5

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        known = {
            "dataset", "output_dir", "reps", "model", "prompt_text",
            "prompt_id", "mode", "word_limit", "seed", "concurrency",
            "metric_params",
        }
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs: dict = {}
        if "dataset" not in obj or "output_dir" not in obj:
            raise ConfigError("config needs 'dataset' and 'output_dir'")
        kwargs["dataset"] = Path(obj["dataset"])
        kwargs["output_dir"] = Path(obj["output_dir"])
        if "reps" in obj:
            kwargs["reps"] = [RepresentationKind(r) for r in obj["reps"]]
        if "mode" in obj:
            kwargs["mode"] = PromptMode.parse(obj["mode"])
        if "metric_params" in obj:
            kwargs["metric_params"] = MetricParams(**obj["metric_params"])
        for key in ("model", "prompt_text", "prompt_id", "word_limit", "seed", "concurrency"):
            if key in obj:
                kwargs[key] = obj[key]
        return cls(**kwargs)

    def validate(self) -> None:
        if not self.dataset.exists():
            raise ConfigError(f"dataset not found: {self.dataset}")
        if not self.reps:
            raise ConfigError("at least one representation kind is required")
        if isinstance(self.word_limit, str) and self.word_limit != "mean-of-ground-truth":
            raise ConfigError(f"word_limit must be an integer or 'mean-of-ground-truth'")
        if isinstance(self.word_limit, int) and self.word_limit < 1:
            raise ConfigError("word_limit must be positive")
        if not self.prompt_text:
            raise ConfigError("prompt_text is empty")
        self.metric_params.validate()

    @property
    def resolved_prompt_id(self) -> str:
        if self.prompt_id:
            return self.prompt_id
        return hashlib.sha1(self.prompt_text.encode("utf-8")).hexdigest()[:12]


def resolve_word_limit(records: list[FunctionRecord], rule: int | str) -> int:
    """Fixed limit, or the rounded-half-up mean ground-truth word count."""
    if isinstance(rule, int):
        return rule
    lengths = [len(tokenize(r.comment)) for r in records]
    if not lengths:
        raise ConfigError("cannot take mean word count of an empty dataset")
    mean = sum(lengths) / len(lengths)
    return max(1, int(mean + 0.5))


def sample_demos(
    records: list[FunctionRecord],
    test_record: FunctionRecord,
    rep: RepresentationKind,
    shots: int,
    seed: int,
) -> list[tuple[str, str]]:
    """Seeded per-test-item demo sampling, never including the test record."""
    pool = [r for r in records if r.id != test_record.id and rep in r.reps]
    if len(pool) < shots:
        raise ConfigError(
            f"need {shots} demo records with a {rep.value} rep, have {len(pool)}"
        )
    rng = random.Random(f"{seed}:{test_record.id}")
    return [(r.reps[rep], r.comment) for r in rng.sample(pool, shots)]


@dataclass
class ScoreLine:
    record_id: str
    prompt_id: str
    model: str
    mode: str
    rep: str
    arch: str
    opt: str
    project: str
    stripped: bool
    scores: ScoreSet
    input_tokens: int
    output_tokens: int
    exact_usage: bool

    def encode(self) -> str:
        return json.dumps(
            {
                "id": self.record_id,
                "prompt_id": self.prompt_id,
                "model": self.model,
                "mode": self.mode,
                "rep": self.rep,
                "arch": self.arch,
                "opt": self.opt,
                "project": self.project,
                "stripped": self.stripped,
                "scores": self.scores.as_dict(),
                "usage": {
                    "input_tokens": self.input_tokens,
                    "output_tokens": self.output_tokens,
                    "exact": self.exact_usage,
                },
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )

    @staticmethod
    def decode(line: str) -> "ScoreLine":
        obj = json.loads(line)
        return ScoreLine(
            record_id=obj["id"],
            prompt_id=obj["prompt_id"],
            model=obj["model"],
            mode=obj["mode"],
            rep=obj["rep"],
            arch=obj["arch"],
            opt=obj["opt"],
            project=obj["project"],
            stripped=obj["stripped"],
            scores=ScoreSet(**obj["scores"]),
            input_tokens=obj["usage"]["input_tokens"],
            output_tokens=obj["usage"]["output_tokens"],
            exact_usage=obj["usage"]["exact"],
        )


def _score_line_for(
    record: FunctionRecord,
    rep: RepresentationKind,
    cfg: RunConfig,
    scores: ScoreSet,
    input_tokens: int,
    output_tokens: int,
    exact: bool,
) -> ScoreLine:
    return ScoreLine(
        record_id=record.id,
        prompt_id=cfg.resolved_prompt_id,
        model=cfg.model,
        mode=cfg.mode.label,
        rep=rep.value,
        arch=record.arch.value,
        opt=record.opt_level.value,
        project=record.project,
        stripped=record.stripped,
        scores=scores,
        input_tokens=input_tokens,
        output_tokens=output_tokens,
        exact_usage=exact,
    )


@dataclass
class RunResult:
    score_path: Path
    manifest_path: Path
    scored: int
    failed: int

    @property
    def fully_succeeded(self) -> bool:
        return self.failed == 0


def run_pipeline(cfg: RunConfig, gateway: Gateway, provider: EmbeddingProvider) -> RunResult:
    """Execute a full summarize-and-score run.

    Tasks run with bounded parallelism but results are written in task
    order, so reruns over a warm cache are byte-identical. The manifest
    records the configuration, resolved word limit, seed, token totals,
    and every failure.
    """
    cfg.validate()
    records = list(read_records(cfg.dataset))
    if not records:
        raise ConfigError(f"dataset {cfg.dataset} is empty")
    word_limit = resolve_word_limit(records, cfg.word_limit)
    params = CompletionParams(model=cfg.model)

    tasks = [
        (record, rep) for record in records for rep in cfg.reps
    ]

    def process(task: tuple[FunctionRecord, RepresentationKind]):
        record, rep = task
        if rep not in record.reps:
            raise KeyError(f"record has no {rep.value} representation")
        demos = None
        if cfg.mode.kind == "few_shot":
            demos = sample_demos(records, record, rep, cfg.mode.shots, cfg.seed)
        completion = gateway.summarize(
            cfg.prompt_text, record.reps[rep], cfg.mode, word_limit,
            demos=demos, rep=rep, params=params,
        )
        scores = score_pair(
            provider, cfg.metric_params, SummaryPair(completion.text, record.comment)
        )
        return _score_line_for(
            record, rep, cfg, scores,
            completion.usage.input_tokens, completion.usage.output_tokens,
            completion.usage.exact,
        )

    outcomes: list[ScoreLine | Exception] = [None] * len(tasks)  # type: ignore[list-item]

    def run_one(index: int) -> None:
        try:
            outcomes[index] = process(tasks[index])
        except ConfigError:
            raise
        except Exception as exc:  # per-record failure: record and continue
            outcomes[index] = exc

    if cfg.concurrency > 1:
        with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
            list(pool.map(run_one, range(len(tasks))))
    else:
        for index in range(len(tasks)):
            run_one(index)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    score_path = cfg.output_dir / "scores.jsonl"
    failures = []
    scored = 0
    input_tokens = output_tokens = 0
    approximate = False
    with open(score_path, "w", encoding="utf-8", newline="\n") as fh:
        for (record, rep), outcome in zip(tasks, outcomes):
            if isinstance(outcome, Exception):
                failures.append(
                    {"id": record.id, "rep": rep.value, "error": str(outcome)}
                )
                continue
            fh.write(outcome.encode())
            fh.write("\n")
            scored += 1
            input_tokens += outcome.input_tokens
            output_tokens += outcome.output_tokens
            approximate = approximate or not outcome.exact_usage

    manifest = {
        "config": {
            "dataset": str(cfg.dataset),
            "reps": [r.value for r in cfg.reps],
            "model": cfg.model,
            "prompt_id": cfg.resolved_prompt_id,
            "prompt_text": cfg.prompt_text,
            "mode": cfg.mode.label,
            "word_limit_rule": cfg.word_limit,
            "metric_params": asdict(cfg.metric_params),
        },
        "seed": cfg.seed,
        "word_limit": word_limit,
        "records": len(records),
        "tasks": len(tasks),
        "scored": scored,
        "failed": len(failures),
        "tokens": {
            "input": input_tokens,
            "output": output_tokens,
            "approximate": approximate,
        },
        "failures": failures,
    }
    manifest_path = cfg.output_dir / "run.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return RunResult(score_path, manifest_path, scored, len(failures))


def score_external_summaries(
    dataset_path: Path,
    summaries_path: Path,
    provider: EmbeddingProvider,
    params: MetricParams,
    rep: str,
    model: str = "external",
    mode: str = "external",
    prompt_id: str = "external",
) -> list[ScoreLine]:
    """Score a file of ``{"id": ..., "summary": ...}`` lines against a dataset."""
    records = {r.id: r for r in read_records(dataset_path)}
    lines = []
    with open(summaries_path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            obj = json.loads(raw)
            record = records.get(obj.get("id"))
            if record is None:
                raise ConfigError(f"summaries line {lineno}: unknown record id {obj.get('id')!r}")
            scores = score_pair(provider, params, SummaryPair(obj["summary"], record.comment))
            lines.append(
                ScoreLine(
                    record_id=record.id, prompt_id=prompt_id, model=model, mode=mode,
                    rep=rep, arch=record.arch.value, opt=record.opt_level.value,
                    project=record.project, stripped=record.stripped, scores=scores,
                    input_tokens=0, output_tokens=0, exact_usage=False,
                )
            )
    return lines


# --- aggregation ----------------------------------------------------------------

@dataclass(frozen=True)
class GroupStats:
    count: int
    mean: dict[str, float]
    median: dict[str, float]


@dataclass
class ReportTable:
    group_by: tuple[str, ...]
    rows: dict[tuple[str, ...], GroupStats]

    @property
    def total(self) -> int:
        return sum(stats.count for stats in self.rows.values())


def _line_key(line: ScoreLine, key: str) -> str:
    if key == "stripped":
        return "yes" if line.stripped else "no"
    return getattr(line, key)


def read_score_lines(path: str | Path) -> list[ScoreLine]:
    lines = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            raw = raw.strip()
            if raw:
                lines.append(ScoreLine.decode(raw))
    return lines


def aggregate(score_path: str | Path, group_by: list[str]) -> ReportTable:
    """Exact per-group count, mean, and median for every metric.

    Groups are a partition of the scored records: counts always sum to the
    total. An unknown group key is an error.
    """
    for key in group_by:
        if key not in GROUP_KEYS:
            raise ConfigError(f"unknown group key {key!r}; valid: {', '.join(GROUP_KEYS)}")
    lines = read_score_lines(score_path)
    groups: dict[tuple[str, ...], list[ScoreLine]] = {}
    for line in lines:
        key = tuple(_line_key(line, k) for k in group_by)
        groups.setdefault(key, []).append(line)
    rows = {}
    for key in sorted(groups):
        members = groups[key]
        mean = {}
        median = {}
        for metric in METRIC_NAMES:
            values = [getattr(m.scores, metric) for m in members]
            mean[metric] = sum(values) / len(values)
            median[metric] = statistics.median(values)
        rows[key] = GroupStats(count=len(members), mean=mean, median=median)
    return ReportTable(group_by=tuple(group_by), rows=rows)


def render_text(table: ReportTable) -> str:
    """Aligned plain-text rendering with mean and median per metric."""
    headers = list(table.group_by) + ["count"]
    for metric in METRIC_NAMES:
        headers += [f"mean_{metric}", f"med_{metric}"]
    body = []
    for key, stats in table.rows.items():
        row = list(key) + [str(stats.count)]
        for metric in METRIC_NAMES:
            row += [f"{stats.mean[metric]:.4f}", f"{stats.median[metric]:.4f}"]
        body.append(row)
    if not body:
        body = [["(no rows)"] + [""] * (len(headers) - 1)]
    widths = [max(len(h), *(len(r[i]) for r in body)) for i, h in enumerate(headers)]
    def fmt(row):
        return "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines += [fmt(row) for row in body]
    return "\n".join(lines) + "\n"


def render_csv(table: ReportTable) -> str:
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    headers = list(table.group_by) + ["count"]
    for metric in METRIC_NAMES:
        headers += [f"mean_{metric}", f"median_{metric}"]
    writer.writerow(headers)
    for key, stats in table.rows.items():
        row: list[object] = list(key) + [stats.count]
        for metric in METRIC_NAMES:
            row += [stats.mean[metric], stats.median[metric]]
        writer.writerow(row)
    return buf.getvalue()
