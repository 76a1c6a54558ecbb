"""Command-line interface for the benchmark pipeline.

Subcommands mirror the pipeline stages: parse-comments, extract, match,
ingest, strip, prompts {synth,variants,optimize,select}, run, score, and
report. Exit codes: 0 success, 1 partial success (some records failed),
2 configuration or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import yaml

from . import comments
from .ablation import StripKind, SymbolTable, derive_symbol_table, strip as strip_code
from .binextract import (
    BUNDLE_REP,
    BinFunc,
    BundleTool,
    ExternalCodeBundle,
    extract_functions,
    ingest_external,
    match_source_binary,
    attach_binary_reps,
)
from .disasm import ObjdumpDisassembler
from .errors import BinsumError, ConfigError
from .gateway import ENV_API_BASE, Gateway, HttpTransport, PromptMode
from .metrics import HashEmbedder, MetricParams, RemoteEmbedder, bleu, meteor, rouge_l, semantic_similarity, tokenize
from .model import (
    Arch,
    OptLevel,
    RepresentationKind,
    read_records,
    write_records,
)
from .pipeline import (
    GROUP_KEYS,
    RunConfig,
    aggregate,
    render_csv,
    render_text,
    resolve_word_limit,
    run_pipeline,
    score_external_summaries,
)
from .prompts import (
    Origin,
    SelectionConfig,
    generate_variants,
    load_pool,
    load_template,
    make_candidate,
    optimize as optimize_prompts,
    save_pool,
    select as select_prompts,
    synthesize,
)


def _make_gateway(args, endpoint: dict | None = None) -> Gateway:
    endpoint = endpoint or {}
    if getattr(args, "mock", False) or getattr(args, "llm", "") == "mock":
        from .testing import MockTransport

        transport = MockTransport()
    else:
        transport = HttpTransport(
            base_url=endpoint.get("api_base"), api_key=endpoint.get("api_key")
        )
    cache_dir = getattr(args, "cache_dir", None) or endpoint.get("cache_dir")
    return Gateway(
        transport,
        cache_dir=cache_dir,
        concurrency=getattr(args, "concurrency", 5),
    )


def _make_embedder(args):
    kind = getattr(args, "embedder", "hash")
    if kind == "hash":
        return HashEmbedder(dim=getattr(args, "embed_dim", 4096))
    if kind == "remote":
        base = getattr(args, "embed_base", None) or os.environ.get("BINSUM_EMBED_BASE", "")
        if not base:
            raise ConfigError("remote embedder needs --embed-base or BINSUM_EMBED_BASE")
        return RemoteEmbedder(
            base_url=base,
            model=getattr(args, "embed_model", "all-mpnet-base-v2"),
            api_key=os.environ.get("BINSUM_API_KEY", ""),
            dim=getattr(args, "embed_dim", 768),
        )
    raise ConfigError(f"unknown embedder {kind!r}")


def _metric_fn(name: str, embedder):
    if name == "semantic":
        return lambda generated, reference: semantic_similarity(embedder, generated, reference)
    if name == "bleu1":
        return lambda g, r: bleu(tokenize(g), tokenize(r), 1)
    if name == "meteor":
        return lambda g, r: meteor(tokenize(g), tokenize(r))
    if name == "rouge_l":
        return lambda g, r: rouge_l(tokenize(g), tokenize(r))
    raise ConfigError(f"unknown metric {name!r}")


# --- subcommand implementations --------------------------------------------------


def cmd_parse_comments(args) -> int:
    pairs = comments.parse_tree(args.source_dir, args.glob)
    sources = {}
    root = Path(args.source_dir)
    for pair in pairs:
        if pair.file not in sources:
            sources[pair.file] = (root / pair.file).read_text(encoding="utf-8", errors="replace")
    records = comments.pairs_to_records(
        pairs, sources, project=args.project,
        arch=Arch(args.arch), opt_level=OptLevel(args.opt),
    )
    count = write_records(args.output, records)
    print(f"wrote {count} cleaned function-comment records to {args.output}")
    return 0


def cmd_extract(args) -> int:
    data = Path(args.binary).read_bytes()
    funcs = extract_functions(data, binary_path=args.binary, opt_level=OptLevel(args.opt))
    out = sys.stdout if args.output is None else open(args.output, "w", encoding="utf-8", newline="\n")
    try:
        for func in funcs:
            out.write(json.dumps(
                {
                    "name": func.name,
                    "low_pc": f"{func.low_pc:#x}",
                    "high_pc": f"{func.high_pc:#x}",
                    "arch": func.arch.value,
                    "opt": func.opt_level.value,
                    "binary_path": func.binary_path,
                    "noncontiguous": func.noncontiguous,
                },
                ensure_ascii=False,
            ) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    print(f"extracted {len(funcs)} functions from {args.binary}", file=sys.stderr)
    return 0


def cmd_match(args) -> int:
    corpus_records = list(read_records(args.corpus))
    pairs = []
    source_texts = {}
    for r in corpus_records:
        text = r.reps.get(RepresentationKind.SOURCE, "")
        # corpus records store the function text itself; span all of it
        pairs.append(
            comments.SourceFunctionComment(
                name=r.name, sig="", comment=r.comment, file=r.id,
                func_lines=(1, text.count("\n") + 1),
            )
        )
        if text:
            source_texts[r.id] = text
    data = Path(args.binary).read_bytes()
    funcs = extract_functions(data, binary_path=args.binary, opt_level=OptLevel(args.opt))
    result = match_source_binary(
        pairs, funcs, project=args.project, stripped=args.stripped,
        sources=source_texts,
    )
    adapter = None if args.no_asm else ObjdumpDisassembler()
    records = attach_binary_reps(result.records, data, adapter)
    write_records(args.output, records)
    print(f"match report: {result.report}", file=sys.stderr)
    print(f"wrote {len(records)} records to {args.output}")
    return 0


def cmd_ingest(args) -> int:
    records = list(read_records(args.dataset))
    bundle = ExternalCodeBundle.from_dir(args.bundle_dir, args.tool)
    funcs = [
        BinFunc(
            name=r.name, low_pc=r.low_pc, high_pc=r.high_pc,
            binary_path=r.binary_path, arch=r.arch, opt_level=r.opt_level,
        )
        for r in records
    ]
    result = ingest_external(bundle, funcs)
    rep = BUNDLE_REP[BundleTool(args.tool)]
    by_key = {(f.name, f.low_pc): f for f in result.attached}
    out_records = []
    attached = 0
    for record in records:
        func = by_key.get((record.name, record.low_pc))
        if func is not None:
            out_records.append(record.with_rep(rep, result.attached[func]))
            attached += 1
        else:
            out_records.append(record)
    write_records(args.output, out_records)
    if result.unresolved:
        print(f"unresolved bundle keys: {', '.join(result.unresolved)}", file=sys.stderr)
    print(f"attached {attached} {rep.value} payloads; wrote {args.output}")
    return 0


_STRIP_KINDS = {"func": StripKind.FUNC_NAMES, "var": StripKind.VAR_NAMES,
                "type": StripKind.TYPES, "all": StripKind.ALL}
_STRIPPABLE = (
    RepresentationKind.DECOMPILED_GHIDRA,
    RepresentationKind.DECOMPILED_HEXRAYS,
    RepresentationKind.DECOMPILED_ANGR,
    RepresentationKind.IR,
    RepresentationKind.SOURCE,
)


def _load_tables(path: str | None) -> dict[str, SymbolTable]:
    if path is None:
        return {}
    tables = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            tables[obj["id"]] = SymbolTable(
                function_names={k: int(v, 16) if isinstance(v, str) else v
                                for k, v in obj.get("function_names", {}).items()},
                variable_names=tuple(obj.get("variable_names", ())),
                type_names=tuple(obj.get("type_names", ())),
            )
    return tables


def cmd_strip(args) -> int:
    kind = _STRIP_KINDS[args.kind]
    reps = (
        [RepresentationKind(r) for r in args.reps.split(",")]
        if args.reps else list(_STRIPPABLE)
    )
    tables = _load_tables(args.tables)
    out_records = []
    transformed = 0
    for record in read_records(args.dataset):
        for rep in reps:
            if rep not in record.reps:
                continue
            code = record.reps[rep]
            table = tables.get(record.id) or derive_symbol_table(
                code, {record.name: record.low_pc}
            )
            record = record.with_rep(rep, strip_code(code, table, kind))
            transformed += 1
        out_records.append(record)
    write_records(args.output, out_records)
    print(f"stripped {args.kind} symbols in {transformed} representations; wrote {args.output}")
    return 0


def cmd_prompts_synth(args) -> int:
    gateway = _make_gateway(args)
    template = Path(args.meta).read_text(encoding="utf-8") if args.meta else load_template("synthesize")
    meta = template.format(k=args.k, representation=args.rep)
    pool = synthesize(gateway.generate, meta, args.k)
    for path in args.human_seed or []:
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                pool.append(make_candidate(line.strip(), Origin.HUMAN))
    save_pool(args.output, pool)
    print(f"pool of {len(pool)} candidates written to {args.output}")
    return 0


def cmd_prompts_variants(args) -> int:
    gateway = _make_gateway(args)
    pool = load_pool(args.pool)
    template = Path(args.meta).read_text(encoding="utf-8") if args.meta else None
    new = []
    for candidate in pool:
        new.extend(generate_variants(gateway.generate, candidate, args.m, template))
    save_pool(args.output, pool + new)
    print(f"added {len(new)} variants; pool now {len(pool) + len(new)} candidates")
    return 0


def cmd_prompts_optimize(args) -> int:
    gateway = _make_gateway(args)
    pool = load_pool(args.pool)
    objective = Path(args.objective).read_text(encoding="utf-8") if args.objective else None
    optimized = optimize_prompts(gateway.generate, pool, objective)
    save_pool(args.output, pool + optimized)
    print(f"added {len(optimized)} optimized candidates; pool now {len(pool) + len(optimized)}")
    return 0


def cmd_prompts_select(args) -> int:
    gateway = _make_gateway(args)
    embedder = _make_embedder(args)
    pool = load_pool(args.pool)
    records = list(read_records(args.dataset))
    rep = RepresentationKind(args.rep)
    usable = [r for r in records if rep in r.reps]
    word_limit = resolve_word_limit(usable, args.word_limit if args.word_limit != "mean" else "mean-of-ground-truth")
    cfg = SelectionConfig(sample_size=args.sample_size, seed=args.seed, metric=args.metric)
    metric = _metric_fn(args.metric, embedder)

    def summarizer(prompt_text: str, record) -> str:
        return gateway.summarize(
            prompt_text, record.reps[rep], PromptMode.zero_shot(), word_limit, rep=rep
        ).text

    ranked = select_prompts(pool, usable, cfg, summarizer, metric)
    save_pool(args.output, ranked)
    best = ranked[0]
    print(f"best prompt [{best.id}] score={best.score:.4f}: {best.text}")
    return 0


def cmd_run(args) -> int:
    obj = {}
    if args.config:
        obj = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
    # endpoint settings live beside the run settings in the config file
    endpoint = {key: obj.pop(key, None) for key in ("api_base", "api_key", "cache_dir")}
    overrides = {
        "dataset": args.dataset,
        "output_dir": args.output_dir,
        "model": args.model,
        "prompt_text": args.prompt_text,
        "mode": args.mode,
        "seed": args.seed,
        "concurrency": args.concurrency,
    }
    for key, value in overrides.items():
        if value is not None:
            obj[key] = value
    if args.reps:
        obj["reps"] = args.reps.split(",")
    if args.word_limit is not None:
        obj["word_limit"] = (
            int(args.word_limit) if args.word_limit.isdigit() else args.word_limit
        )
    if args.prompt_pool:
        pool = load_pool(args.prompt_pool)
        if args.prompt_id:
            matches = [c for c in pool if c.id == args.prompt_id]
            if not matches:
                raise ConfigError(f"prompt id {args.prompt_id} not in {args.prompt_pool}")
            chosen = matches[0]
        else:
            scored = [c for c in pool if c.score is not None]
            if not scored:
                raise ConfigError("prompt pool has no scored candidates; run prompts select first")
            chosen = max(scored, key=lambda c: (c.score, c.id))
        obj["prompt_text"] = chosen.text
        obj["prompt_id"] = chosen.id
    cfg = RunConfig.from_dict(obj)
    gateway = _make_gateway(args, endpoint)
    embedder = _make_embedder(args)
    result = run_pipeline(cfg, gateway, embedder)
    print(f"scored {result.scored} tasks, {result.failed} failures")
    print(f"scores: {result.score_path}")
    print(f"manifest: {result.manifest_path}")
    return 0 if result.fully_succeeded else 1


def cmd_score(args) -> int:
    embedder = _make_embedder(args)
    lines = score_external_summaries(
        Path(args.dataset), Path(args.summaries), embedder, MetricParams(),
        rep=args.rep, model=args.model,
    )
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line.encode() + "\n")
    print(f"scored {len(lines)} summaries; wrote {args.output}")
    return 0


def cmd_report(args) -> int:
    group_by = [k for k in (args.group_by.split(",") if args.group_by else []) if k]
    table = aggregate(args.scores, group_by)
    text = render_text(table)
    print(text, end="")
    if args.output:
        prefix = Path(args.output)
        prefix.with_suffix(".txt").write_text(text, encoding="utf-8")
        prefix.with_suffix(".csv").write_text(render_csv(table), encoding="utf-8")
        print(f"wrote {prefix.with_suffix('.txt')} and {prefix.with_suffix('.csv')}", file=sys.stderr)
    return 0


# --- argument parsing ----------------------------------------------------------------


def _add_llm_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--llm", choices=["http", "mock"], default="http",
                        help=f"endpoint from {ENV_API_BASE} or a deterministic mock")
    parser.add_argument("--cache-dir", default=None, help="response cache directory")
    parser.add_argument("--concurrency", type=int, default=5)


def _add_embedder_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--embedder", choices=["hash", "remote"], default="hash")
    parser.add_argument("--embed-dim", type=int, default=4096)
    parser.add_argument("--embed-base", default=None)
    parser.add_argument("--embed-model", default="all-mpnet-base-v2")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binsum",
        description="Binary code summarization benchmark toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse-comments", help="harvest function-comment pairs from C sources")
    p.add_argument("source_dir")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--glob", default="**/*.c")
    p.add_argument("--project", default="")
    p.add_argument("--arch", choices=[a.value for a in Arch], default="x64")
    p.add_argument("--opt", choices=[o.value for o in OptLevel], default="O0")
    p.set_defaults(func=cmd_parse_comments)

    p = sub.add_parser("extract", help="list DWARF functions in an ELF binary")
    p.add_argument("binary")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--opt", choices=[o.value for o in OptLevel], default="O0")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("match", help="match a comment corpus against a binary")
    p.add_argument("corpus")
    p.add_argument("binary")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--project", default="")
    p.add_argument("--opt", choices=[o.value for o in OptLevel], default="O0")
    p.add_argument("--stripped", action="store_true")
    p.add_argument("--no-asm", action="store_true", help="skip the assembly representation")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("ingest", help="attach external decompiler/IR output")
    p.add_argument("dataset")
    p.add_argument("bundle_dir")
    p.add_argument("--tool", choices=[t.value for t in BundleTool], required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("strip", help="strip symbols from code representations")
    p.add_argument("dataset")
    p.add_argument("--kind", choices=list(_STRIP_KINDS), required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--reps", default=None, help="comma-separated representation kinds")
    p.add_argument("--tables", default=None,
                   help="JSONL of per-record symbol tables; default derives them")
    p.set_defaults(func=cmd_strip)

    prompts = sub.add_parser("prompts", help="prompt pool construction and selection")
    psub = prompts.add_subparsers(dest="prompts_command", required=True)

    p = psub.add_parser("synth", help="synthesize candidate prompts")
    p.add_argument("-k", type=int, default=20)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--meta", default=None, help="meta-instruction template file")
    p.add_argument("--rep", default="binary")
    p.add_argument("--human-seed", action="append", default=None,
                   help="file of human prompts to add, one per line")
    _add_llm_flags(p)
    p.set_defaults(func=cmd_prompts_synth)

    p = psub.add_parser("variants", help="generate variants of every candidate")
    p.add_argument("pool")
    p.add_argument("-m", type=int, default=2)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--meta", default=None)
    _add_llm_flags(p)
    p.set_defaults(func=cmd_prompts_variants)

    p = psub.add_parser("optimize", help="LLM-rewrite candidates against the objective")
    p.add_argument("pool")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--objective", default=None, help="objective template file")
    _add_llm_flags(p)
    p.set_defaults(func=cmd_prompts_optimize)

    p = psub.add_parser("select", help="rank candidates on a seeded dataset sample")
    p.add_argument("pool")
    p.add_argument("dataset")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--sample-size", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", choices=["semantic", "bleu1", "meteor", "rouge_l"],
                   default="semantic")
    p.add_argument("--rep", default="source")
    p.add_argument("--word-limit", default="mean")
    _add_llm_flags(p)
    _add_embedder_flags(p)
    p.set_defaults(func=cmd_prompts_select)

    p = sub.add_parser("run", help="summarize and score a dataset")
    p.add_argument("--config", default=None, help="YAML run configuration")
    p.add_argument("--dataset", default=None)
    p.add_argument("--output-dir", default=None)
    p.add_argument("--reps", default=None, help="comma-separated representation kinds")
    p.add_argument("--model", default=None)
    p.add_argument("--prompt-text", default=None)
    p.add_argument("--prompt-pool", default=None)
    p.add_argument("--prompt-id", default=None)
    p.add_argument("--mode", default=None, help="zero_shot | few_shot:N | chain_of_thought")
    p.add_argument("--word-limit", default=None, help="integer or mean-of-ground-truth")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mock", action="store_true", help="use the deterministic mock LLM")
    _add_llm_flags(p)
    _add_embedder_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="score externally generated summaries")
    p.add_argument("dataset")
    p.add_argument("summaries", help='JSONL of {"id": ..., "summary": ...}')
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--rep", required=True)
    p.add_argument("--model", default="external")
    _add_embedder_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="aggregate a score file into tables")
    p.add_argument("scores")
    p.add_argument("--group-by", default="", help=f"comma-separated keys from: {', '.join(GROUP_KEYS)}")
    p.add_argument("-o", "--output", default=None, help="prefix for .txt and .csv outputs")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BinsumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
