"""BERT-style pre-training instance generation and sequence-length statistics.

Instances pair consecutive sentences of a document ([CLS] a [SEP] b [SEP]),
optionally swapping in a random sentence from another document as the NSP
negative. Masking is whole-word: all subword pieces of a selected word are
masked together, 15% of words by default, realized as 80% [MASK] / 10%
random token / 10% unchanged per piece. Generation is deterministic under a
fixed seed, with one RNG stream per document.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .wordpiece import CONTINUATION_PREFIX, TokenizerModel, tokenize

CLS, SEP, PAD, MASK = "[CLS]", "[SEP]", "[PAD]", "[MASK]"


class PrepError(Exception):
    pass


@dataclass(frozen=True)
class TrainingInstance:
    tokens: tuple[str, ...]
    masked_positions: tuple[int, ...]
    masked_labels: tuple[str, ...]
    is_random_next: bool
    seq_len: int

    def as_dict(self) -> dict:
        return {
            "tokens": list(self.tokens),
            "masked_positions": list(self.masked_positions),
            "masked_labels": list(self.masked_labels),
            "is_random_next": self.is_random_next,
            "seq_len": self.seq_len,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainingInstance":
        return cls(
            tokens=tuple(obj["tokens"]),
            masked_positions=tuple(obj["masked_positions"]),
            masked_labels=tuple(obj["masked_labels"]),
            is_random_next=bool(obj["is_random_next"]),
            seq_len=int(obj["seq_len"]),
        )


class LengthHistogram:
    """Exact sequence-length distribution with display buckets."""

    DEFAULT_EDGES = (16, 32, 64, 128, 256, 512, 1024)

    def __init__(self, lengths: Iterable[int],
                 bucket_edges: Sequence[int] = DEFAULT_EDGES):
        self._counts: Counter[int] = Counter(lengths)
        if not self._counts:
            raise PrepError("no sequences: cannot build a length histogram")
        self.total = sum(self._counts.values())
        self.bucket_edges = list(bucket_edges)
        self.counts = self._bucketize()

    def _bucketize(self) -> list[int]:
        # bucket i counts lengths in [edge_{i-1}, edge_i); final bucket is open
        buckets = [0] * (len(self.bucket_edges) + 1)
        for length, n in self._counts.items():
            for i, edge in enumerate(self.bucket_edges):
                if length < edge:
                    buckets[i] += n
                    break
            else:
                buckets[-1] += n
        return buckets

    def fraction_below(self, limit: int) -> float:
        """Fraction of sequences strictly shorter than ``limit``."""
        below = sum(n for length, n in self._counts.items() if length < limit)
        return below / self.total

    def quantile(self, q: float) -> int:
        """Smallest length L with at least q of the mass at or below L."""
        if not 0.0 <= q <= 1.0:
            raise PrepError(f"quantile must be in [0, 1], got {q}")
        target = q * self.total
        cum = 0
        for length in sorted(self._counts):
            cum += self._counts[length]
            if cum >= target:
                return length
        return max(self._counts)

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "bucket_edges": self.bucket_edges,
            "bucket_counts": self.counts,
            "length_counts": {str(k): v for k, v in sorted(self._counts.items())},
            "quantiles": {str(q): self.quantile(q)
                          for q in (0.5, 0.9, 0.95, 0.99, 1.0)},
        }


def _doc_rng(seed: int, doc_id: int) -> random.Random:
    # string seeding hashes via sha512 inside random.Random: stable across runs
    return random.Random(f"{seed}:{doc_id}")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _truncate_pair(a: list[str], b: list[str], budget: int) -> None:
    while len(a) + len(b) > budget:
        longer = a if len(a) >= len(b) else b
        longer.pop()


def _word_spans(tokens: list[str]) -> list[list[int]]:
    """Group token indices into whole words; specials are not maskable."""
    spans: list[list[int]] = []
    for i, tok in enumerate(tokens):
        if tok in (CLS, SEP, PAD):
            continue
        if tok.startswith(CONTINUATION_PREFIX) and spans and spans[-1][-1] == i - 1:
            spans[-1].append(i)
        else:
            spans.append([i])
    return spans


def mask_tokens(tokens: list[str], mask_prob: float, rng: random.Random,
                model: TokenizerModel) -> tuple[list[str], list[int], list[str]]:
    """Whole-word masking over one assembled sequence."""
    spans = _word_spans(tokens)
    if not spans:
        return tokens, [], []
    n_mask = max(1, _round_half_up(mask_prob * len(spans)))
    n_mask = min(n_mask, len(spans))
    chosen = sorted(rng.sample(range(len(spans)), n_mask))
    out = list(tokens)
    positions: list[int] = []
    labels: list[str] = []
    for span_idx in chosen:
        for pos in spans[span_idx]:
            positions.append(pos)
            labels.append(tokens[pos])
            r = rng.random()
            if r < 0.8:
                out[pos] = MASK
            elif r < 0.9:
                out[pos] = model.vocab.tokens[rng.randrange(model.vocab.size)]
            # else: keep the original token; the position still counts
    return out, positions, labels


def make_instances(corpus: Sequence[Sequence[str]], model: TokenizerModel,
                   max_seq_len: int = 128, dupe_factor: int = 5,
                   mask_prob: float = 0.15, seed: int = 0,
                   nsp_random_prob: float = 0.5) -> Iterator[TrainingInstance]:
    """Generate masked NSP instances from per-document sentence lists."""
    if not 0.0 < mask_prob < 1.0:
        raise PrepError(f"mask_prob must be in (0, 1), got {mask_prob}")
    if dupe_factor < 1:
        raise PrepError(f"dupe_factor must be >= 1, got {dupe_factor}")

    docs_tokens: list[list[list[str]]] = [
        [tokenize(model, s) for s in doc] for doc in corpus]

    for doc_id, sent_tokens in enumerate(docs_tokens):
        rng = _doc_rng(seed, doc_id)
        if not sent_tokens:
            continue
        if len(sent_tokens) == 1:
            pairs: list[tuple[list[str], list[str] | None]] = [
                (sent_tokens[0], None)]
        else:
            pairs = [(sent_tokens[i], sent_tokens[i + 1])
                     for i in range(len(sent_tokens) - 1)]

        for seg_a, seg_b in pairs:
            is_random = False
            if seg_b is not None and len(docs_tokens) > 1 \
                    and rng.random() < nsp_random_prob:
                other = rng.randrange(len(docs_tokens) - 1)
                if other >= doc_id:
                    other += 1
                if docs_tokens[other]:
                    seg_b = docs_tokens[other][
                        rng.randrange(len(docs_tokens[other]))]
                    is_random = True

            for _ in range(dupe_factor):
                a = list(seg_a)
                if seg_b is None:
                    del a[max(0, max_seq_len - 2):]
                    base = [CLS, *a, SEP]
                else:
                    b = list(seg_b)
                    _truncate_pair(a, b, max_seq_len - 3)
                    base = [CLS, *a, SEP, *b, SEP]
                tokens, positions, labels = mask_tokens(
                    base, mask_prob, rng, model)
                seq_len = len(tokens)
                tokens = tokens + [PAD] * (max_seq_len - seq_len)
                yield TrainingInstance(
                    tokens=tuple(tokens),
                    masked_positions=tuple(positions),
                    masked_labels=tuple(labels),
                    is_random_next=is_random,
                    seq_len=seq_len,
                )


def sequence_lengths(corpus: Sequence[Sequence[str]],
                     model: TokenizerModel) -> list[int]:
    """Unpadded, untruncated lengths of the NSP input sequences."""
    lengths = []
    for doc in corpus:
        sent_tokens = [tokenize(model, s) for s in doc]
        if not sent_tokens:
            continue
        if len(sent_tokens) == 1:
            lengths.append(2 + len(sent_tokens[0]))
        else:
            for a, b in zip(sent_tokens, sent_tokens[1:]):
                lengths.append(3 + len(a) + len(b))
    return lengths


def length_stats(corpus: Sequence[Sequence[str]],
                 model: TokenizerModel) -> LengthHistogram:
    """Histogram of training sequence lengths with exact quantiles."""
    lengths = sequence_lengths(corpus, model)
    if not lengths:
        raise PrepError("empty corpus: no sequences to measure")
    return LengthHistogram(lengths)


def write_instances_jsonl(instances: Iterable[TrainingInstance], path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for inst in instances:
            f.write(json.dumps(inst.as_dict(), ensure_ascii=False) + "\n")
            n += 1
    return n
