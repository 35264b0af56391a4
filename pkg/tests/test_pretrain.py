"""Pre-training instance generation: pairing, whole-word masking, lengths."""

import pytest

from sebench.pretrain import (
    LengthHistogram,
    PrepError,
    length_stats,
    make_instances,
    sequence_lengths,
)
from sebench.wordpiece import SPECIAL_TOKENS, TokenizerModel, Vocabulary

WORDS = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta",
         "theta", "iota", "kappa"]
VOCAB = Vocabulary([
    *SPECIAL_TOKENS, *WORDS, "bug", "##zi", "##lla", ".",
])
MODEL = TokenizerModel(vocab=VOCAB)


def reconstruct_original(inst) -> list[str]:
    tokens = list(inst.tokens)
    for pos, label in zip(inst.masked_positions, inst.masked_labels):
        tokens[pos] = label
    return tokens


def word_spans(tokens) -> list[tuple[int, ...]]:
    """Independent regrouping of maskable positions into words."""
    spans, current = [], []
    for i, tok in enumerate(tokens):
        if tok in ("[CLS]", "[SEP]", "[PAD]"):
            if current:
                spans.append(tuple(current))
                current = []
            continue
        if tok.startswith("##") and current and current[-1] == i - 1:
            current.append(i)
        else:
            if current:
                spans.append(tuple(current))
            current = [i]
    if current:
        spans.append(tuple(current))
    return spans


class TestPairConstruction:
    def test_three_sentences_give_two_overlapping_pairs(self):
        corpus = [["alpha beta", "gamma delta", "epsilon zeta"]]
        instances = list(make_instances(
            corpus, MODEL, max_seq_len=16, dupe_factor=1, mask_prob=0.15,
            seed=1))
        assert len(instances) == 2
        firsts = [reconstruct_original(i)[:len(i.tokens)] for i in instances]
        a = [t for t in firsts[0] if t != "[PAD]"]
        b = [t for t in firsts[1] if t != "[PAD]"]
        assert a == ["[CLS]", "alpha", "beta", "[SEP]", "gamma", "delta", "[SEP]"]
        assert b == ["[CLS]", "gamma", "delta", "[SEP]", "epsilon", "zeta", "[SEP]"]
        assert all(not i.is_random_next for i in instances)

    def test_single_sentence_document_has_one_separator(self):
        corpus = [["alpha beta gamma"]]
        (inst,) = list(make_instances(
            corpus, MODEL, max_seq_len=8, dupe_factor=1, mask_prob=0.15, seed=0))
        body = [t for t in reconstruct_original(inst) if t != "[PAD]"]
        assert body[0] == "[CLS]"
        assert body.count("[SEP]") == 1

    def test_pair_instances_have_two_separators(self):
        corpus = [["alpha beta", "gamma delta"]]
        (inst,) = list(make_instances(
            corpus, MODEL, max_seq_len=16, dupe_factor=1, mask_prob=0.15, seed=0))
        assert inst.tokens[0] == "[CLS]"
        body = [t for t in reconstruct_original(inst) if t != "[PAD]"]
        assert body.count("[SEP]") == 2

    def test_dupe_factor_multiplies_instances(self):
        corpus = [["alpha beta", "gamma delta", "epsilon zeta"]]
        instances = list(make_instances(
            corpus, MODEL, max_seq_len=16, dupe_factor=5, mask_prob=0.15, seed=0))
        assert len(instances) == 10

    def test_nsp_negatives_marked_and_foreign(self):
        corpus = [[f"{w} {v}" for w, v in zip(WORDS, WORDS[1:])]
                  for _ in range(6)]
        instances = list(make_instances(
            corpus, MODEL, max_seq_len=16, dupe_factor=1, mask_prob=0.15,
            seed=3))
        flags = [i.is_random_next for i in instances]
        assert any(flags) and not all(flags)


class TestWholeWordMasking:
    def test_exact_masked_word_count_ten_words(self):
        corpus = [["alpha beta gamma delta epsilon",
                   "zeta eta theta iota kappa"]]
        for seed in range(10):
            (inst,) = list(make_instances(
                corpus, MODEL, max_seq_len=16, dupe_factor=1,
                mask_prob=0.15, seed=seed))
            original = reconstruct_original(inst)
            covered = {s for s in word_spans(original)
                       if set(s) <= set(inst.masked_positions)}
            # 10 maskable words, round(1.5) = 2
            assert len(covered) == 2
            assert len(inst.masked_positions) == 2

    def test_multi_piece_word_fully_masked(self):
        corpus = [["bugzilla alpha", "beta gamma"]] * 4
        instances = list(make_instances(
            corpus, MODEL, max_seq_len=16, dupe_factor=4, mask_prob=0.4,
            seed=2))
        saw_multi = False
        for inst in instances:
            original = reconstruct_original(inst)
            masked = set(inst.masked_positions)
            for span in word_spans(original):
                overlap = masked & set(span)
                assert overlap in (set(), set(span)), "partially masked word"
                if overlap and len(span) > 1:
                    saw_multi = True
        assert saw_multi

    def test_masked_count_formula(self):
        corpus = [[" ".join(WORDS[:n]), " ".join(WORDS[n:])]
                  for n in range(2, 9)]
        instances = list(make_instances(
            corpus, MODEL, max_seq_len=32, dupe_factor=2, mask_prob=0.15,
            seed=7))
        for inst in instances:
            original = reconstruct_original(inst)
            spans = word_spans(original)
            covered = {s for s in spans
                       if set(s) <= set(inst.masked_positions)}
            expected = max(1, int(0.15 * len(spans) + 0.5))
            assert len(covered) == expected

    def test_masked_positions_strictly_increasing(self):
        corpus = [["alpha beta gamma delta", "epsilon zeta eta theta"]] * 3
        for inst in make_instances(corpus, MODEL, max_seq_len=16,
                                   dupe_factor=3, mask_prob=0.3, seed=5):
            positions = inst.masked_positions
            assert all(a < b for a, b in zip(positions, positions[1:]))
            assert len(positions) == len(inst.masked_labels)


class TestPaddingAndDeterminism:
    def test_padding_invariant(self):
        corpus = [["alpha beta", "gamma delta epsilon zeta eta theta"]]
        for inst in make_instances(corpus, MODEL, max_seq_len=12,
                                   dupe_factor=3, mask_prob=0.15, seed=0):
            assert len(inst.tokens) == 12
            tail = inst.tokens[inst.seq_len:]
            head = inst.tokens[:inst.seq_len]
            assert all(t == "[PAD]" for t in tail)
            assert "[PAD]" not in head

    def test_truncation_respects_max_len(self):
        long_sentence = " ".join(WORDS * 4)
        corpus = [[long_sentence, long_sentence]]
        (inst,) = list(make_instances(
            corpus, MODEL, max_seq_len=16, dupe_factor=1, mask_prob=0.15,
            seed=0))
        assert len(inst.tokens) == 16
        assert inst.seq_len == 16
        assert inst.tokens.count("[SEP]") == 2

    def test_seeded_determinism(self):
        corpus = [["alpha beta", "gamma delta", "epsilon zeta"]] * 5
        run = lambda: [i.as_dict() for i in make_instances(
            corpus, MODEL, max_seq_len=16, dupe_factor=3, mask_prob=0.2,
            seed=42)]
        assert run() == run()

    def test_different_seed_differs(self):
        corpus = [["alpha beta gamma delta", "epsilon zeta eta theta"]] * 5
        one = [i.as_dict() for i in make_instances(
            corpus, MODEL, max_seq_len=16, dupe_factor=2, mask_prob=0.3, seed=1)]
        two = [i.as_dict() for i in make_instances(
            corpus, MODEL, max_seq_len=16, dupe_factor=2, mask_prob=0.3, seed=2)]
        assert one != two

    def test_bad_parameters_rejected(self):
        with pytest.raises(PrepError):
            list(make_instances([["a b"]], MODEL, mask_prob=0.0))
        with pytest.raises(PrepError):
            list(make_instances([["a b"]], MODEL, dupe_factor=0))


class TestLengthStats:
    def test_single_instance_quantile(self):
        corpus = [["alpha beta gamma"]]  # [CLS] + 3 tokens + [SEP] = 5
        hist = length_stats(corpus, MODEL)
        assert hist.quantile(1.0) == 5
        assert hist.total == 1

    def test_two_lengths_median(self):
        corpus = [["alpha beta", "gamma delta epsilon zeta eta theta"],
                  ["alpha beta", "gamma delta"]]
        lengths = sequence_lengths(corpus, MODEL)
        # doc1 pair: 3 + 2 + 6 = 11; doc2 pair: 3 + 2 + 2 = 7
        assert sorted(lengths) == [7, 11]
        hist = LengthHistogram(lengths)
        assert hist.quantile(0.5) == 7
        assert hist.quantile(1.0) == 11

    def test_fractions_match_brute_recount(self):
        corpus = [[" ".join(WORDS[: 2 + (i * j) % 8]) for j in range(4)]
                  for i in range(40)]
        lengths = sequence_lengths(corpus, MODEL)
        assert len(lengths) >= 100
        hist = length_stats(corpus, MODEL)
        for limit in (4, 8, 12, 16, 128):
            brute = sum(1 for n in lengths if n < limit) / len(lengths)
            assert hist.fraction_below(limit) == brute
        for q in (0.0, 0.25, 0.5, 0.9, 1.0):
            ordered = sorted(lengths)
            target = q * len(ordered)
            cum, expected = 0, ordered[-1]
            for value in ordered:
                cum += 1
                if cum >= target:
                    expected = value
                    break
            assert hist.quantile(q) == expected

    def test_bucket_counts_sum_to_total(self):
        corpus = [["alpha beta", "gamma delta epsilon"]] * 7
        hist = length_stats(corpus, MODEL)
        assert sum(hist.counts) == hist.total

    def test_empty_corpus_is_error(self):
        with pytest.raises(PrepError):
            length_stats([], MODEL)
