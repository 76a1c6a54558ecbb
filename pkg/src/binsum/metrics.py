"""Summary scoring: semantic embedding similarity plus n-gram metrics.

All metrics share one tokenization (lowercase, split on maximal runs of
non-alphanumeric characters) so their scores stay comparable. The semantic
metric mean-pools per-token embeddings from a pluggable provider and takes
the cosine of the pooled vectors; BLEU-1, METEOR, and ROUGE-L follow their
standard definitions with the parameter defaults fixed below.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .errors import DegenerateEmbeddingError, EmptySummaryError
from .model import ScoreSet

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Shared metric tokenization: lowercase, ASCII-alphanumeric runs."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


@dataclass(frozen=True)
class MetricParams:
    meteor_alpha: float = 0.9
    meteor_beta: float = 3.0
    meteor_gamma: float = 0.5
    rouge_beta: float = 1.2
    bleu_max_n: int = 1

    def validate(self) -> None:
        for name in ("meteor_alpha", "meteor_beta", "meteor_gamma", "rouge_beta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.bleu_max_n < 1:
            raise ValueError("bleu_max_n must be a positive integer")


@dataclass(frozen=True)
class SummaryPair:
    """A (generated, reference) pair awaiting scoring."""

    generated: str
    reference: str


class EmbeddingProvider(Protocol):
    """Per-token embedding source for the semantic metric."""

    dim: int

    def embed_tokens(self, tokens: Sequence[str]) -> np.ndarray:
        """Return an array of shape (len(tokens), dim), one finite vector per token."""
        ...


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


class HashEmbedder:
    """Deterministic feature-hashing embedder (hermetic test stand-in).

    Each token maps to a one-hot vector: index = FNV-1a-64(utf8) mod dim,
    value +1 or -1 from the hash's top bit. No model weights, no I/O.
    """

    def __init__(self, dim: int = 4096):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim

    def embed_tokens(self, tokens: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(tokens), self.dim), dtype=np.float64)
        for i, token in enumerate(tokens):
            h = fnv1a64(token.encode("utf-8"))
            sign = -1.0 if (h >> 63) & 1 else 1.0
            out[i, h % self.dim] = sign
        return out


class RemoteEmbedder:
    """Embedding-service client for production scoring.

    POSTs ``{"model": ..., "input": [tokens...]}`` to ``{base}/embeddings``
    and expects ``{"data": [{"embedding": [...]}, ...]}`` in input order.
    The encoder model is configurable; the service's own tokenizer decides
    sub-word structure, so token vectors here are per shared-tokenizer token.
    """

    def __init__(self, base_url: str, model: str, api_key: str = "", dim: int = 768, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.dim = dim
        self.timeout = timeout

    def embed_tokens(self, tokens: Sequence[str]) -> np.ndarray:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        resp = httpx.post(
            f"{self.base_url}/embeddings",
            json={"model": self.model, "input": list(tokens)},
            headers=headers,
            timeout=self.timeout,
        )
        resp.raise_for_status()
        data = resp.json()["data"]
        return np.asarray([row["embedding"] for row in data], dtype=np.float64)


def mean_pool(token_vectors: np.ndarray) -> np.ndarray:
    """Aggregate token embeddings into one sequence vector by arithmetic mean."""
    return token_vectors.mean(axis=0)


def semantic_similarity(provider: EmbeddingProvider, generated: str, reference: str) -> float:
    """Cosine similarity of the mean-pooled token embeddings, in [-1, 1]."""
    gen_tokens = tokenize(generated)
    ref_tokens = tokenize(reference)
    if not gen_tokens or not ref_tokens:
        raise EmptySummaryError("summary tokenized to zero tokens")
    e_gen = mean_pool(np.asarray(provider.embed_tokens(gen_tokens), dtype=np.float64))
    e_ref = mean_pool(np.asarray(provider.embed_tokens(ref_tokens), dtype=np.float64))
    norm_gen = float(np.linalg.norm(e_gen))
    norm_ref = float(np.linalg.norm(e_ref))
    if norm_gen == 0.0 or norm_ref == 0.0:
        raise DegenerateEmbeddingError("mean-pooled embedding has zero norm")
    sim = float(np.dot(e_gen, e_ref) / (norm_gen * norm_ref))
    return max(-1.0, min(1.0, sim))


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: Sequence[str], reference: Sequence[str], max_n: int = 1) -> float:
    """BLEU with clipped modified n-gram precision and brevity penalty.

    Precisions p_1..p_max_n are weighted uniformly (1/N) inside the
    exponentiated sum; any zero precision zeroes the score. BP is 1 when
    the candidate is longer than the reference, else exp(1 - r/c).
    """
    c, r = len(candidate), len(reference)
    if c == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_grams = _ngrams(candidate, n)
        total = sum(cand_grams.values())
        if total == 0:
            return 0.0
        ref_grams = _ngrams(reference, n)
        clipped = sum(min(count, ref_grams[g]) for g, count in cand_grams.items())
        if clipped == 0:
            return 0.0
        log_sum += math.log(clipped / total) / max_n
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return min(1.0, bp * math.exp(log_sum))


def align_unigrams(candidate: Sequence[str], reference: Sequence[str]) -> list[tuple[int, int]]:
    """Exact unigram alignment used by METEOR.

    Among maximum-cardinality matchings, each candidate token (left to
    right) maps to the earliest still-unmatched occurrence of the same
    token in the reference. Returns (candidate_index, reference_index)
    pairs in candidate order.
    """
    remaining: dict[str, list[int]] = {}
    for j, token in enumerate(reference):
        remaining.setdefault(token, []).append(j)
    pairs = []
    for i, token in enumerate(candidate):
        positions = remaining.get(token)
        if positions:
            pairs.append((i, positions.pop(0)))
    return pairs


def count_chunks(pairs: list[tuple[int, int]]) -> int:
    """Number of maximal pair runs contiguous in both sequences."""
    if not pairs:
        return 0
    chunks = 1
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if i1 != i0 + 1 or j1 != j0 + 1:
            chunks += 1
    return chunks


def meteor(candidate: Sequence[str], reference: Sequence[str], params: MetricParams = MetricParams()) -> float:
    """METEOR: fragmentation-penalized harmonic mean of unigram P and R."""
    pairs = align_unigrams(candidate, reference)
    matched = len(pairs)
    if matched == 0:
        return 0.0
    precision = matched / len(candidate)
    recall = matched / len(reference)
    f_mean = (precision * recall) / (
        params.meteor_alpha * precision + (1.0 - params.meteor_alpha) * recall
    )
    frag = count_chunks(pairs) / matched
    return (1.0 - params.meteor_gamma * frag ** params.meteor_beta) * f_mean


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[len(b)]


def rouge_l(candidate: Sequence[str], reference: Sequence[str], beta: float = 1.2) -> float:
    """ROUGE-L: F-measure over the longest common subsequence."""
    lcs = _lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    p_lcs = lcs / len(candidate)
    r_lcs = lcs / len(reference)
    return ((1.0 + beta * beta) * r_lcs * p_lcs) / (r_lcs + beta * beta * p_lcs)


def score_pair(
    provider: EmbeddingProvider,
    params: MetricParams,
    pair: SummaryPair,
) -> ScoreSet:
    """Score one pair with all four metrics over the shared tokenization."""
    gen_tokens = tokenize(pair.generated)
    ref_tokens = tokenize(pair.reference)
    if not gen_tokens or not ref_tokens:
        raise EmptySummaryError("summary tokenized to zero tokens")
    scores = ScoreSet(
        semantic=semantic_similarity(provider, pair.generated, pair.reference),
        bleu1=bleu(gen_tokens, ref_tokens, params.bleu_max_n),
        meteor=meteor(gen_tokens, ref_tokens, params),
        rouge_l=rouge_l(gen_tokens, ref_tokens, params.rouge_beta),
    )
    scores.validate()
    return scores
