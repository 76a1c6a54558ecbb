#!/usr/bin/env python3
"""The four-step prompt pipeline with the deterministic mock model.

Synthesis, variants, optimization, and seeded task-specific selection,
end to end, offline.
"""

from binsum.gateway import Gateway
from binsum.metrics import HashEmbedder, semantic_similarity
from binsum.prompts import (
    Origin,
    SelectionConfig,
    generate_variants,
    load_template,
    make_candidate,
    optimize,
    select,
    synthesize,
)
from binsum.testing import MockTransport, make_demo_records

gateway = Gateway(MockTransport())

print("=== Step 1: in-context synthesis (plus a human seed) ===\n")


def scripted_llm(instruction: str) -> str:
    # A live endpoint would answer the meta-instruction; the script stands in.
    return (
        "1. Summarize what this binary function does in plain language.\n"
        "2. Explain the purpose of the given function briefly.\n"
        "3. Describe the behavior of this code in one sentence.\n"
    )


meta = load_template("synthesize").format(k=3, representation="decompiled")
pool = synthesize(scripted_llm, meta, k=3)
pool.append(
    make_candidate(
        "Imagine you are a skilled binary reverse engineer. Summarize the "
        "function I provide.",
        Origin.HUMAN,
    )
)
for cand in pool:
    print(f"[{cand.id}] ({cand.origin.value}) {cand.text}")

print("\n=== Step 2: variants stay linked to their parent ===\n")
variant_llm = lambda _: "Give a short summary of the function.\nState what the function accomplishes."
variants = generate_variants(variant_llm, pool[0], m=2)
for v in variants:
    print(f"[{v.id}] parent={v.parent_id} {v.text}")
pool.extend(variants)

print("\n=== Step 3: optimization rewrites under an objective ===\n")
optimizer_llm = lambda instr: "Precisely summarize the function's behavior, inputs, and side effects."
optimized = optimize(optimizer_llm, pool[:2])
for o in optimized:
    print(f"[{o.id}] parent={o.parent_id} {o.text}")
pool.extend(optimized)

print(f"\npool size: {len(pool)} candidates")

print("\n=== Step 4: selection on one seeded dataset sample ===\n")
records = make_demo_records(10)
embedder = HashEmbedder()
cfg = SelectionConfig(sample_size=5, seed=42, metric="semantic")


def summarize(prompt_text, record):
    from binsum.gateway import PromptMode
    from binsum.model import RepresentationKind

    return gateway.summarize(
        prompt_text, record.reps[RepresentationKind.SOURCE],
        PromptMode.zero_shot(), word_limit=10, rep=RepresentationKind.SOURCE,
    ).text


def metric(generated, reference):
    return semantic_similarity(embedder, generated, reference)


ranked = select(pool, records, cfg, summarize, metric)
print("ranking (every candidate scored on the identical 5 sampled records):")
for cand in ranked:
    print(f"  {cand.score:+.4f}  [{cand.id}] {cand.text[:60]}")
print(f"\nselected prompt: {ranked[0].text}")
