"""Subword training and Viterbi encoding, checked against brute force.

The oracle enumerates every composition of a string into vocabulary pieces
and ranks them with the documented key: highest score, then fewest pieces,
then leftmost-longest piece lengths.  Scores in these tests are multiples of
0.25, so sums are exact in binary floating point and the dynamic program and
the enumeration can never disagree by rounding.
"""

from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from arapipe import (ConfigError, Encoding, UnigramTokenizer, VocabConfig,
                     Vocabulary, decode, encode, train_vocab)
from arapipe.unigram import viterbi_segment
from arapipe.vocab import BOUNDARY, DEFAULT_SPECIALS
from tests.conftest import ROMAN_ALPHABET, zipf_sentences


def all_compositions(word: str, table: dict[str, float],
                     max_len: int) -> list[list[str]]:
    """Every way to write ``word`` as a concatenation of table keys."""
    if not word:
        return [[]]
    out = []
    for ln in range(1, min(len(word), max_len) + 1):
        head = word[:ln]
        if head not in table:
            continue
        for rest in all_compositions(word[ln:], table, max_len):
            out.append([head] + rest)
    return out


def oracle_segment(word: str, table: dict[str, float],
                   max_len: int) -> list[str] | None:
    options = all_compositions(word, table, max_len)
    if not options:
        return None
    return max(options, key=lambda segs: (
        sum(table[p] for p in segs),
        -len(segs),
        tuple(len(p) for p in segs),
    ))


def table_vocab(table: dict[str, float]) -> Vocabulary:
    learned = sorted(table.items(), key=lambda t: (-t[1], t[0]))
    return Vocabulary(DEFAULT_SPECIALS, 0, learned)


def random_dyadic_table(rng, alphabet: str, extra: int,
                        max_len: int) -> dict[str, float]:
    """Singles for the whole alphabet plus ``extra`` random longer pieces,
    all scored with multiples of -0.25."""
    def score():
        return -0.25 * int(rng.integers(1, 17))

    table = {ch: score() for ch in alphabet}
    while len(table) < len(alphabet) + extra:
        length = int(rng.integers(2, max_len + 1))
        piece = "".join(rng.choice(list(alphabet), size=length))
        table.setdefault(piece, score())
    return table


class TestViterbiOracle:
    def test_exhaustive_two_letter_alphabet(self):
        """Agreement with brute force on every string of length <= 7."""
        table = {"a": -0.75, "b": -1.0, "aa": -1.5, "ab": -1.25,
                 "ba": -2.0, "bb": -1.75, "aab": -2.25, "abab": -3.0}
        vocab = table_vocab(table)
        checked = 0
        for length in range(1, 8):
            for bits in range(2 ** length):
                word = "".join("ab"[(bits >> k) & 1] for k in range(length))
                assert viterbi_segment(vocab, word) == oracle_segment(
                    word, table, vocab.max_piece_len), word
                checked += 1
        assert checked == 254

    def test_random_tables_fuzz(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            # Drop one letter's single piece sometimes so the no-path case
            # (oracle None) gets exercised too.
            table = random_dyadic_table(rng, "abcd", extra=12, max_len=5)
            if rng.random() < 0.4:
                del table["d"]
            vocab = table_vocab(table)
            for _ in range(40):
                length = int(rng.integers(1, 11))
                word = "".join(rng.choice(list("abcd"), size=length))
                assert viterbi_segment(vocab, word) == oracle_segment(
                    word, table, vocab.max_piece_len), (word, table)

    def test_merged_piece_beats_character_split(self):
        # One piece at -1.5 outscores two at -1.0 each.
        vocab = table_vocab({"a": -1.0, "b": -1.0, "ab": -1.5})
        assert viterbi_segment(vocab, "ab") == ["ab"]
        assert viterbi_segment(vocab, "aab") == ["a", "ab"]

    def test_fewer_pieces_wins_score_tie(self):
        vocab = table_vocab({"a": -1.0, "b": -1.0, "ab": -2.0})
        assert viterbi_segment(vocab, "ab") == ["ab"]

    def test_leftmost_longest_wins_count_tie(self):
        # "aab" as aa+b or a+ab: same score, same piece count.
        vocab = table_vocab({"a": -1.0, "b": -1.0, "aa": -2.0, "ab": -2.0})
        assert viterbi_segment(vocab, "aab") == ["aa", "b"]

    def test_no_segmentation_returns_none(self):
        vocab = table_vocab({"a": -1.0})
        assert viterbi_segment(vocab, "ab") is None

    def test_empty_pretoken(self):
        vocab = table_vocab({"a": -1.0})
        assert viterbi_segment(vocab, "") == []


class TestTrainVocab:
    def test_exact_size_and_layout(self, small_vocab):
        assert len(small_vocab) == 260
        assert small_vocab.pieces[:5] == list(DEFAULT_SPECIALS)
        assert small_vocab.pieces[5:17] == [f"[unused{i}]" for i in range(12)]
        assert len(small_vocab.learned_items()) == 260 - 12 - 5

    def test_learned_probabilities_form_distribution(self, small_vocab):
        lps = np.array([lp for _, lp in small_vocab.learned_items()])
        assert np.all(lps <= 0.0)
        np.testing.assert_allclose(np.exp(lps).sum(), 1.0, rtol=1e-9)

    def test_single_characters_survive_pruning(self, small_vocab):
        for ch in ROMAN_ALPHABET + BOUNDARY:
            assert ch in small_vocab

    def test_training_corpus_has_no_unk(self, small_vocab):
        corpus = zipf_sentences(7, 500, n_types=150, alphabet=ROMAN_ALPHABET)
        unk = small_vocab.unk_id
        for sentence in corpus:
            assert unk not in encode(small_vocab, sentence).ids

    def test_em_likelihood_never_decreases_within_round(self):
        corpus = zipf_sentences(12, 300, n_types=120, alphabet=ROMAN_ALPHABET)
        history: list[tuple[int, int, float]] = []
        train_vocab(corpus, VocabConfig(target_size=300, unused_count=8,
                                        em_iters_per_round=4),
                    ll_history=history)
        assert history
        by_round: dict[int, list[float]] = {}
        for rnd, _, ll in history:
            by_round.setdefault(rnd, []).append(ll)
        for rnd, lls in by_round.items():
            for prev, cur in zip(lls, lls[1:]):
                assert cur >= prev - 1e-9 * abs(prev), (rnd, lls)

    def test_deterministic_across_runs_and_threads(self):
        corpus = zipf_sentences(13, 200, n_types=100, alphabet=ROMAN_ALPHABET)
        config = VocabConfig(target_size=280, unused_count=10)
        a = train_vocab(corpus, config, threads=1)
        b = train_vocab(corpus, config, threads=4)
        c = train_vocab(corpus, config, seed=99)
        assert a.learned_items() == b.learned_items() == c.learned_items()

    def test_whole_words_learned_from_tiny_corpus(self):
        vocab = train_vocab(["ab cd ab cd", "ab cd"],
                            VocabConfig(target_size=12, unused_count=0))
        pieces = {p for p, _ in vocab.learned_items()}
        assert {"▁ab", "▁cd"} <= pieces
        assert encode(vocab, "ab cd").pieces == ["▁ab", "▁cd"]

    def test_empty_corpus_rejected(self):
        with pytest.raises(ConfigError, match="no tokens"):
            train_vocab(["   ", ""], VocabConfig(target_size=10,
                                                 unused_count=0))

    def test_charset_larger_than_budget_rejected(self):
        with pytest.raises(ConfigError, match="distinct characters"):
            train_vocab(["abcdefgh"], VocabConfig(target_size=8,
                                                  unused_count=0))

    def test_bad_thread_count_rejected(self):
        with pytest.raises(ConfigError):
            train_vocab(["ab ab"], VocabConfig(target_size=9,
                                               unused_count=0), threads=0)


class TestEncodeDecode:
    def test_round_trip_on_corpus(self, small_vocab, small_corpus):
        for sentence in small_corpus:
            enc = encode(small_vocab, sentence)
            assert decode(small_vocab, enc.ids) == sentence

    def test_reserved_ids_are_dropped_in_decode(self, small_vocab):
        enc = encode(small_vocab, "da da")
        framed = [small_vocab.cls_id] + enc.ids + [small_vocab.sep_id]
        assert decode(small_vocab, framed) == "da da"

    def test_unseen_character_maps_to_unk(self, small_vocab):
        enc = encode(small_vocab, "zebra")
        assert enc.pieces == ["[UNK]"]
        assert enc.ids == [small_vocab.unk_id]
        assert enc.word_ids == [0]

    def test_raw_word_ids_index_whitespace_tokens(self, small_vocab):
        enc = encode(small_vocab, "da din dun")
        assert enc.word_ids == sorted(enc.word_ids)
        assert set(enc.word_ids) == {0, 1, 2}

    def test_segmented_word_ids_group_clitics(self, small_vocab):
        enc = encode(small_vocab, "da+ din +dun kit", mode="segmented")
        assert set(enc.word_ids) == {0, 1}
        first_word_pieces = [p for p, w in zip(enc.pieces, enc.word_ids)
                             if w == 0]
        assert len(first_word_pieces) >= 3

    def test_segmented_mode_validates_markers(self, small_vocab):
        from arapipe import FormatError
        with pytest.raises(FormatError):
            encode(small_vocab, "da+", mode="segmented")

    def test_unknown_mode_rejected(self, small_vocab):
        with pytest.raises(ConfigError):
            encode(small_vocab, "da", mode="chars")

    def test_empty_sentence(self, small_vocab):
        enc = encode(small_vocab, "   ")
        assert enc == Encoding()

    def test_encoding_alignment_invariant(self, small_vocab, small_corpus):
        rng = np.random.default_rng(3)
        for _ in range(50):
            sentence = small_corpus[int(rng.integers(0, len(small_corpus)))]
            enc = encode(small_vocab, sentence)
            assert len(enc.pieces) == len(enc.ids) == len(enc.word_ids)
            # Boundary pieces open words: word_ids change exactly there.
            starts = [i for i, p in enumerate(enc.pieces)
                      if p.startswith(BOUNDARY) or p == "[UNK]"]
            assert starts[0] == 0
            assert len(starts) == len(sentence.split())


class TestUnigramTokenizerEstimator:
    def test_fit_transform(self, small_corpus):
        tok = UnigramTokenizer(target_size=280, unused_count=10)
        encodings = tok.fit(small_corpus).transform(small_corpus[:5])
        assert len(encodings) == 5
        assert all(isinstance(e, Encoding) for e in encodings)
        assert len(tok.vocabulary_) == 280
        assert tok.ll_history_

    def test_matches_function_api(self, small_corpus):
        tok = UnigramTokenizer(target_size=280, unused_count=10)
        tok.fit(small_corpus)
        direct = train_vocab(small_corpus,
                             VocabConfig(target_size=280, unused_count=10))
        assert tok.vocabulary_.learned_items() == direct.learned_items()

    def test_encode_decode_methods(self, small_corpus):
        tok = UnigramTokenizer(target_size=280, unused_count=10)
        tok.fit(small_corpus)
        assert tok.decode(tok.encode("da din").ids) == "da din"

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            UnigramTokenizer().transform(["x"])

    def test_from_vocab_file(self, small_vocab, tmp_path):
        path = str(tmp_path / "v.txt")
        small_vocab.save(path)
        tok = UnigramTokenizer.from_vocab_file(path)
        assert tok.vocabulary_.learned_items() == small_vocab.learned_items()
        assert tok.decode(tok.encode("da din").ids) == "da din"

    def test_clone_keeps_params(self):
        tok = UnigramTokenizer(target_size=300, unused_count=8, threads=2,
                               mode="segmented")
        assert clone(tok).get_params() == tok.get_params()
