"""Quantitative comparison of WordPiece vocabularies.

Overlap and coverage are plain set computations over vocabulary entries
(special tokens and punctuation entries included); cross-tokenization
reports how whole words unique to one vocabulary decompose under the
other model's tokenizer.
"""

from __future__ import annotations

from dataclasses import dataclass

from .wordpiece import (
    CONTINUATION_PREFIX,
    TokenizerModel,
    Vocabulary,
    tokenize,
)


class AnalysisError(Exception):
    pass


@dataclass(frozen=True)
class OverlapReport:
    size_a: int
    size_b: int
    intersection: int
    overlap_pct: float
    hash_piece_count_a: int
    hash_piece_count_b: int
    only_in_a: tuple[str, ...]
    only_in_b: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "size_a": self.size_a,
            "size_b": self.size_b,
            "intersection": self.intersection,
            "overlap_pct": self.overlap_pct,
            "continuation_pieces_a": self.hash_piece_count_a,
            "continuation_pieces_b": self.hash_piece_count_b,
            "only_in_a": len(self.only_in_a),
            "only_in_b": len(self.only_in_b),
        }


@dataclass(frozen=True)
class CoverageReport:
    pct_of_b_in_a: float
    pct_of_a_in_b: float
    uncased_unique_b: int
    intersection: int

    def as_tuple(self) -> tuple[float, float, int, int]:
        return (self.pct_of_b_in_a, self.pct_of_a_in_b,
                self.uncased_unique_b, self.intersection)

    def as_dict(self) -> dict:
        return {
            "pct_of_b_in_a": self.pct_of_b_in_a,
            "pct_of_a_in_b": self.pct_of_a_in_b,
            "unique_b": self.uncased_unique_b,
            "intersection": self.intersection,
        }


@dataclass(frozen=True)
class CrossTokenization:
    word: str
    tokenized_by_other: tuple[str, ...]


def count_continuation_pieces(vocab: Vocabulary) -> int:
    """Number of vocabulary entries beginning with ##."""
    return sum(1 for t in vocab if t.startswith(CONTINUATION_PREFIX))


def overlap(a: Vocabulary, b: Vocabulary) -> OverlapReport:
    """Set overlap of two equally sized vocabularies, as a percentage."""
    if a.size != b.size:
        raise AnalysisError(
            f"vocabulary sizes differ ({a.size} vs {b.size}); use coverage() "
            f"for asymmetric comparison")
    set_a, set_b = set(a.tokens), set(b.tokens)
    inter = set_a & set_b
    return OverlapReport(
        size_a=a.size,
        size_b=b.size,
        intersection=len(inter),
        overlap_pct=100.0 * len(inter) / a.size,
        hash_piece_count_a=count_continuation_pieces(a),
        hash_piece_count_b=count_continuation_pieces(b),
        only_in_a=tuple(sorted(set_a - set_b)),
        only_in_b=tuple(sorted(set_b - set_a)),
    )


def coverage(a: Vocabulary, b: Vocabulary, uncase_b: bool = False) -> CoverageReport:
    """Asymmetric coverage ratios, optionally after lowercasing b."""
    set_a = set(a.tokens)
    if uncase_b:
        set_b = {t.lower() for t in b.tokens}
    else:
        set_b = set(b.tokens)
    inter = set_a & set_b
    return CoverageReport(
        pct_of_b_in_a=100.0 * len(inter) / len(set_b) if set_b else 0.0,
        pct_of_a_in_b=100.0 * len(inter) / len(set_a) if set_a else 0.0,
        uncased_unique_b=len(set_b),
        intersection=len(inter),
    )


def _is_whole_word(token: str) -> bool:
    return (not token.startswith(CONTINUATION_PREFIX)
            and bool(token) and all(c.isalnum() for c in token))


def cross_tokenize_oov(a: Vocabulary, b: Vocabulary,
                       tokenizer_b: TokenizerModel) -> list[CrossTokenization]:
    """Segment whole words present in a but absent from b with b's tokenizer."""
    set_b = set(b.tokens)
    result = []
    for word in sorted(set(a.tokens) - set_b):
        if not _is_whole_word(word):
            continue
        pieces = tokenize(tokenizer_b, word)
        if not pieces:
            continue
        result.append(CrossTokenization(word=word, tokenized_by_other=tuple(pieces)))
    return result


def render_cross_tokenization_markdown(rows: list[CrossTokenization],
                                       name_a: str, name_b: str) -> str:
    """Markdown table of out-of-vocabulary segmentations."""
    lines = [
        f"| Word (only in {name_a}) | Tokenization by {name_b} |",
        "| --- | --- |",
    ]
    for row in rows:
        lines.append(f"| {row.word} | {' '.join(row.tokenized_by_other)} |")
    return "\n".join(lines) + "\n"
