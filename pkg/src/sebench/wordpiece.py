"""WordPiece vocabulary training and greedy longest-match tokenization.

Training uses likelihood-style pair scoring: at every step the adjacent
piece pair maximizing ``freq(ab) / (freq(a) * freq(b))`` is merged, ties
broken lexicographically on the merged string so runs are reproducible.
Tokenization is greedy longest-prefix matching with ``##`` continuations,
byte-compatible with published BERT ``vocab.txt`` files.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

CONTINUATION_PREFIX = "##"
UNK_TOKEN = "[UNK]"

# Order matches the layout of trained vocab files: specials first.
SPECIAL_TOKENS = (
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "[HASH]", "[CODE]", "[USER]",
)


class VocabError(Exception):
    """Raised for malformed vocabularies or unreachable training targets."""


class Vocabulary:
    """Ordered token list; line number in the vocab file is the token id."""

    def __init__(self, tokens: Iterable[str]):
        self.tokens: tuple[str, ...] = tuple(tokens)
        self.token_to_id: dict[str, int] = {}
        for i, tok in enumerate(self.tokens):
            if tok in self.token_to_id:
                raise VocabError(f"duplicate token {tok!r} at ids "
                                 f"{self.token_to_id[tok]} and {i}")
            self.token_to_id[tok] = i

    @property
    def size(self) -> int:
        return len(self.tokens)

    @property
    def special(self) -> frozenset[str]:
        """Special tokens actually present (external vocabs may lack some)."""
        return frozenset(t for t in SPECIAL_TOKENS if t in self.token_to_id)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    @classmethod
    def from_file(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            tokens = [line.rstrip("\n") for line in f]
        if tokens and tokens[-1] == "":
            tokens.pop()
        if not tokens:
            raise VocabError(f"empty vocabulary file: {path}")
        return cls(tokens)

    def to_file(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for tok in self.tokens:
                f.write(tok + "\n")


@dataclass(frozen=True)
class TokenizerModel:
    """A vocabulary plus the fixed segmentation conventions."""

    vocab: Vocabulary
    max_word_chars: int = 100
    cased: bool = False
    continuation_prefix: str = field(default=CONTINUATION_PREFIX, init=False)
    unk_token: str = field(default=UNK_TOKEN, init=False)


# ---------------------------------------------------------------------------
# Pre-tokenization: whitespace + punctuation split with protected sentinels
# ---------------------------------------------------------------------------

_WORD_SPLIT = re.compile(
    "|".join([*(re.escape(t) for t in SPECIAL_TOKENS), r"[^\W_]+", r"\S"]))


def pretokenize(text: str, lowercase: bool = False) -> list[str]:
    """Split into words: alphanumeric runs, single punctuation, sentinels."""
    words = _WORD_SPLIT.findall(text)
    if lowercase:
        words = [w if w in SPECIAL_TOKENS else w.lower() for w in words]
    return words


# ---------------------------------------------------------------------------
# Greedy segmentation
# ---------------------------------------------------------------------------

def _match_word(word: str, vocab: Vocabulary, max_chars: int) -> Optional[list[str]]:
    if len(word) > max_chars:
        return None
    pieces: list[str] = []
    start = 0
    while start < len(word):
        end = len(word)
        found = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = CONTINUATION_PREFIX + piece
            if piece in vocab:
                found = piece
                break
            end -= 1
        if found is None:
            return None
        pieces.append(found)
        start = end
    return pieces


def tokenize(model: TokenizerModel, text: str) -> list[str]:
    """Segment ``text`` into vocabulary pieces; unmatchable words become [UNK]."""
    out: list[str] = []
    for word in pretokenize(text, lowercase=not model.cased):
        pieces = _match_word(word, model.vocab, model.max_word_chars)
        out.extend(pieces if pieces is not None else [model.unk_token])
    return out


def detokenize(tokens: Iterable[str]) -> str:
    """Inverse of tokenize: fuse ##-pieces, join words with spaces."""
    words: list[str] = []
    for tok in tokens:
        if tok.startswith(CONTINUATION_PREFIX):
            if not words:
                raise VocabError(f"continuation piece {tok!r} has no predecessor")
            words[-1] += tok[len(CONTINUATION_PREFIX):]
        else:
            words.append(tok)
    return " ".join(words)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _initial_split(word: str) -> tuple[str, ...]:
    return (word[0],) + tuple(CONTINUATION_PREFIX + c for c in word[1:])


def train_vocab(corpus: Iterable[str], target_size: int = 30522,
                min_frequency: int = 1) -> Vocabulary:
    """Learn a WordPiece vocabulary of exactly ``target_size`` tokens.

    Layout: special tokens, the single-character alphabet (bare and
    ##-prefixed forms of every character seen), then merged pieces in the
    order they were learned. Raises VocabError with the achievable size if
    the corpus cannot fill the target.
    """
    word_freq: Counter[str] = Counter()
    for sentence in corpus:
        for word in pretokenize(sentence):
            if word not in SPECIAL_TOKENS:
                word_freq[word] += 1
    if not word_freq:
        raise VocabError("empty corpus: nothing to train on")

    chars = sorted({c for w in word_freq for c in w})
    alphabet = [*chars, *(CONTINUATION_PREFIX + c for c in chars)]
    vocab: list[str] = [*SPECIAL_TOKENS, *alphabet]
    if target_size < len(vocab):
        raise VocabError(
            f"target size {target_size} below the {len(vocab)} tokens needed "
            f"for special tokens and the corpus alphabet")

    splits: dict[str, tuple[str, ...]] = {
        w: _initial_split(w) for w in word_freq}

    def merged_string(a: str, b: str) -> str:
        return a + b[len(CONTINUATION_PREFIX):]

    while len(vocab) < target_size:
        pair_freq: Counter[tuple[str, str]] = Counter()
        piece_freq: Counter[str] = Counter()
        for word, pieces in splits.items():
            freq = word_freq[word]
            for piece in pieces:
                piece_freq[piece] += freq
            for a, b in zip(pieces, pieces[1:]):
                pair_freq[(a, b)] += freq

        best_pair = None
        best_score = None
        for pair, freq in pair_freq.items():
            if freq < min_frequency:
                continue
            score = freq / (piece_freq[pair[0]] * piece_freq[pair[1]])
            if (best_score is None or score > best_score[0]
                    or (score == best_score[0]
                        and merged_string(*pair) < best_score[1])):
                best_score = (score, merged_string(*pair))
                best_pair = pair
        if best_pair is None:
            raise VocabError(
                f"corpus exhausted at {len(vocab)} tokens; cannot reach "
                f"target size {target_size}")

        new_piece = merged_string(*best_pair)
        vocab.append(new_piece)
        a, b = best_pair
        for word, pieces in splits.items():
            if a not in pieces:
                continue
            merged: list[str] = []
            i = 0
            while i < len(pieces):
                if i + 1 < len(pieces) and pieces[i] == a and pieces[i + 1] == b:
                    merged.append(new_piece)
                    i += 2
                else:
                    merged.append(pieces[i])
                    i += 1
            splits[word] = tuple(merged)

    return Vocabulary(vocab)
