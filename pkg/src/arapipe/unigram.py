"""Unigram language-model subword training and Viterbi encoding.

Training follows the classic recipe: seed a large piece inventory from
frequent substrings, fit piece probabilities with EM over the segmentation
lattice of every pretoken, then alternate EM with utility-based pruning until
exactly the budgeted number of learned pieces remains.  Single characters are
never pruned, which guarantees every string over the training alphabet stays
segmentable and ``[UNK]`` only ever covers unseen characters.

EM details.  Pretokens are the whitespace tokens of the corpus, each prefixed
with the word-boundary marker; the lattice of one pretoken has a node per
character gap and an edge per vocabulary piece matching at that position.
The E-step computes expected piece counts with forward/backward passes over
the lattice, carried out entirely in log space: edges are grouped by
character position, sorted by target node once at build time, and each pass
is a handful of segment-wise ``logsumexp`` reductions.  Log space matters —
piece probabilities spread over hundreds of orders of magnitude as EM
sharpens, and linear-space path products underflow long before the
distribution converges.  The M-step is the maximum-likelihood update
``theta = counts / sum(counts)``.  Each EM iteration can only raise the
corpus marginal log-likelihood, a property the test suite pins down.

Pruning.  A piece's utility is the likelihood it would cost to re-segment
the piece's own occurrences with the remaining inventory:
``count * (log_theta(piece) - best_alternative_score(piece))``.  The lowest
utilities are dropped each round, keeping ``prune_keep_ratio`` of the live
inventory (never dropping below the budget, never dropping single
characters).

Work is split over fixed blocks of pretokens: the block partition and the
reduction order do not depend on the thread count, so results are identical
for any ``threads`` value.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import ArapipeError, ConfigError
from .segment import marker_word_groups
from .validation import as_text_list
from .vocab import (BOUNDARY, DEFAULT_SPECIALS, LOG_PROB_FLOOR, Encoding,
                    VocabConfig, Vocabulary)

#: Adaptive seed-inventory cap: the substring frequency floor (normally 2)
#: rises until the candidate set fits, and drops to 1 when a small corpus
#: cannot otherwise fill the learned budget.
SEED_SIZE_CAP = 500_000

_WORDS_PER_BLOCK = 2048


def _pretoken_counts(sentences) -> Counter:
    counts: Counter = Counter()
    for sentence in sentences:
        for token in sentence.split():
            counts[BOUNDARY + token] += 1
    return counts


def _seed_inventory(word_counts: Counter, config: VocabConfig,
                    ) -> tuple[list[str], np.ndarray, int]:
    """Pick seed pieces and their occurrence counts.

    Returns (pieces, counts, n_singles); single characters come first.
    """
    charset = sorted({ch for w in word_counts for ch in w})
    budget = config.learned_budget()
    if len(charset) > budget:
        raise ConfigError(
            f"corpus uses {len(charset)} distinct characters but only "
            f"{budget} learned ids are available")

    char_counts: Counter = Counter()
    substr_counts: Counter = Counter()
    max_len = config.seed_max_piece_len
    for word, freq in word_counts.items():
        length = len(word)
        for i in range(length):
            char_counts[word[i]] += freq
            for j in range(i + 2, min(length, i + max_len) + 1):
                substr_counts[word[i:j]] += freq

    reserved = set(config.specials)
    floor = 2
    multi = [(p, c) for p, c in substr_counts.items()
             if c >= floor and p not in reserved]
    while len(multi) > SEED_SIZE_CAP:
        floor += 1
        multi = [(p, c) for p, c in multi if c >= floor]
    if len(multi) + len(charset) < budget and floor == 2:
        floor = 1
        multi = [(p, c) for p, c in substr_counts.items() if p not in reserved]
    if len(multi) + len(charset) < budget:
        raise ConfigError(
            f"corpus yields only {len(multi) + len(charset)} candidate pieces "
            f"for a learned budget of {budget}; lower target_size or add text")

    multi.sort()  # deterministic piece order regardless of dict history
    pieces = list(charset) + [p for p, _ in multi]
    counts = np.array([char_counts[c] for c in charset]
                      + [c for _, c in multi], dtype=np.float64)
    return pieces, counts, len(charset)


@dataclass
class _Scatter:
    """One position group's edges, pre-sorted by target node.

    ``idx`` are edge indices; ``targets`` the distinct node each contiguous
    run feeds; ``starts``/``lens`` delimit the runs for ``reduceat``.
    """

    idx: np.ndarray
    targets: np.ndarray
    starts: np.ndarray
    lens: np.ndarray


@dataclass
class _Block:
    """Lattices of one block of pretokens, flattened into arrays."""

    freq: np.ndarray
    start_nodes: np.ndarray
    end_nodes: np.ndarray
    n_nodes: int
    e_start: np.ndarray
    e_end: np.ndarray
    e_piece: np.ndarray
    e_word: np.ndarray
    fwd_groups: list[_Scatter]
    bwd_groups: list[_Scatter]


def _scatter_group(edge_idx: np.ndarray, target_nodes: np.ndarray) -> _Scatter:
    order = np.argsort(target_nodes[edge_idx], kind="stable")
    idx = edge_idx[order]
    tgt = target_nodes[idx]
    starts = np.nonzero(np.r_[True, tgt[1:] != tgt[:-1]])[0]
    lens = np.diff(np.r_[starts, len(idx)])
    return _Scatter(idx=idx, targets=tgt[starts], starts=starts, lens=lens)


def _build_block(words: list[tuple[str, int]], piece_index: dict[str, int],
                 max_len: int) -> _Block:
    e_start: list[int] = []
    e_end: list[int] = []
    e_piece: list[int] = []
    e_word: list[int] = []
    local_start: list[int] = []
    local_end: list[int] = []
    start_nodes: list[int] = []
    end_nodes: list[int] = []
    node = 0
    for wi, (word, _) in enumerate(words):
        length = len(word)
        base = node
        node += length + 1
        start_nodes.append(base)
        end_nodes.append(base + length)
        for i in range(length):
            top = min(length, i + max_len)
            for j in range(i + 1, top + 1):
                pid = piece_index.get(word[i:j])
                if pid is None:
                    continue
                e_start.append(base + i)
                e_end.append(base + j)
                e_piece.append(pid)
                e_word.append(wi)
                local_start.append(i)
                local_end.append(j)

    es = np.asarray(e_start, dtype=np.int64)
    ee = np.asarray(e_end, dtype=np.int64)
    ls = np.asarray(local_start, dtype=np.int64)
    le = np.asarray(local_end, dtype=np.int64)
    max_pos = max((len(w) for w, _ in words), default=0)
    fwd = [np.nonzero(le == p)[0] for p in range(1, max_pos + 1)]
    bwd = [np.nonzero(ls == p)[0] for p in range(max_pos - 1, -1, -1)]
    return _Block(
        freq=np.array([c for _, c in words], dtype=np.float64),
        start_nodes=np.asarray(start_nodes, dtype=np.int64),
        end_nodes=np.asarray(end_nodes, dtype=np.int64),
        n_nodes=node,
        e_start=es,
        e_end=ee,
        e_piece=np.asarray(e_piece, dtype=np.int64),
        e_word=np.asarray(e_word, dtype=np.int64),
        fwd_groups=[_scatter_group(g, ee) for g in fwd if len(g)],
        bwd_groups=[_scatter_group(g, es) for g in bwd if len(g)],
    )


def _scatter_logsumexp(out: np.ndarray, group: _Scatter,
                       log_contrib: np.ndarray) -> None:
    """``out[target] = logsumexp(contributions)`` for one position group.

    Every edge into a given node lives in exactly one group, so this is a
    plain write, not an accumulate.
    """
    m = np.maximum.reduceat(log_contrib, group.starts)
    shift = np.where(np.isfinite(m), m, 0.0)
    terms = np.exp(log_contrib - np.repeat(shift, group.lens))
    with np.errstate(divide="ignore"):
        out[group.targets] = np.log(np.add.reduceat(terms, group.starts)) + shift


def _estep_block(block: _Block, log_theta: np.ndarray,
                 ) -> tuple[np.ndarray, float]:
    """Expected piece counts and log-likelihood contribution of one block."""
    edge_lt = log_theta[block.e_piece]

    log_fwd = np.full(block.n_nodes, -np.inf)
    log_fwd[block.start_nodes] = 0.0
    for grp in block.fwd_groups:
        _scatter_logsumexp(log_fwd, grp,
                           log_fwd[block.e_start[grp.idx]] + edge_lt[grp.idx])
    log_z = log_fwd[block.end_nodes]
    if np.any(np.isneginf(log_z)):
        bad = int(np.nonzero(np.isneginf(log_z))[0][0])
        raise ArapipeError(
            f"pretoken has no segmentation mass (block word {bad})")

    log_bwd = np.full(block.n_nodes, -np.inf)
    log_bwd[block.end_nodes] = 0.0
    for grp in block.bwd_groups:
        _scatter_logsumexp(log_bwd, grp,
                           edge_lt[grp.idx] + log_bwd[block.e_end[grp.idx]])

    posterior = np.exp(log_fwd[block.e_start] + edge_lt
                       + log_bwd[block.e_end] - log_z[block.e_word])
    counts = np.bincount(block.e_piece,
                         weights=posterior * block.freq[block.e_word],
                         minlength=len(log_theta))
    ll = float(np.dot(block.freq, log_z))
    return counts, ll


def _estep(blocks: list[_Block], theta: np.ndarray, threads: int,
           ) -> tuple[np.ndarray, float]:
    with np.errstate(divide="ignore"):
        log_theta = np.log(theta)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda b: _estep_block(b, log_theta),
                                    blocks))
    else:
        results = [_estep_block(b, log_theta) for b in blocks]
    total = np.zeros_like(theta)
    ll = 0.0
    # Fixed reduction order: results arrive in block order whatever the pool did.
    for counts, part in results:
        total += counts
        ll += part
    return total, ll


def _best_alternative(piece: str, log_theta: dict[str, float], max_len: int,
                      ) -> float:
    """Best segmentation score of ``piece`` without using the piece itself."""
    length = len(piece)
    best = [-math.inf] * (length + 1)
    best[length] = 0.0
    for i in range(length - 1, -1, -1):
        top = min(length, i + max_len)
        acc = -math.inf
        for j in range(i + 1, top + 1):
            if i == 0 and j == length:
                continue  # the full span is the piece being scored
            lp = log_theta.get(piece[i:j])
            if lp is None:
                continue
            cand = lp + best[j]
            if cand > acc:
                acc = cand
        best[i] = acc
    return best[0]


def train_vocab(corpus, config: VocabConfig | None = None, *, seed: int = 0,
                threads: int = 1,
                ll_history: list[tuple[int, int, float]] | None = None,
                ) -> Vocabulary:
    """Train a unigram vocabulary on an iterable of sentences.

    ``seed`` is accepted for interface stability but has no effect: seeding
    from corpus counts plus deterministic tie-breaking makes the whole
    procedure deterministic.  ``ll_history``, when given, collects
    ``(round, iteration, log_likelihood)`` tuples, one per EM iteration.
    """
    if config is None:
        config = VocabConfig()
    config.validate()
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")

    sentences = getattr(corpus, "sentences", corpus)
    word_counts = _pretoken_counts(sentences)
    if not word_counts:
        raise ConfigError("training corpus contains no tokens")

    pieces, counts, n_singles = _seed_inventory(word_counts, config)
    piece_index = {p: i for i, p in enumerate(pieces)}
    budget = config.learned_budget()

    words = sorted(word_counts.items())
    blocks = [_build_block(words[i:i + _WORDS_PER_BLOCK], piece_index,
                           config.seed_max_piece_len)
              for i in range(0, len(words), _WORDS_PER_BLOCK)]

    theta = counts / counts.sum()
    alive = np.ones(len(pieces), dtype=bool)
    is_single = np.zeros(len(pieces), dtype=bool)
    is_single[:n_singles] = True

    def run_em(round_idx: int) -> np.ndarray:
        nonlocal theta
        expected = None
        for it in range(config.em_iters_per_round):
            expected, ll = _estep(blocks, theta, threads)
            if ll_history is not None:
                ll_history.append((round_idx, it, ll))
            # Keep live pieces representable: a count that underflowed to
            # zero would turn log(theta) into -inf and freeze the piece out
            # of every path.  The clamp sits far below one ulp of any real
            # count, so measured likelihoods are unaffected.
            expected = np.maximum(expected, np.finfo(float).tiny)
            expected[~alive] = 0.0
            theta = expected / expected.sum()
        return expected

    round_idx = 0
    expected = run_em(round_idx)
    while int(alive.sum()) > budget:
        n_active = int(alive.sum())
        keep_total = max(budget, int(n_active * config.prune_keep_ratio))
        n_drop = n_active - keep_total

        log_theta = {pieces[i]: math.log(theta[i])
                     for i in np.nonzero(alive)[0] if theta[i] > 0.0}
        scored = []
        for i in np.nonzero(alive & ~is_single)[0]:
            if theta[i] <= 0.0:
                utility = -math.inf
            else:
                alt = _best_alternative(pieces[i], log_theta,
                                        config.seed_max_piece_len)
                utility = expected[i] * (math.log(theta[i]) - alt)
            scored.append((utility, expected[i], pieces[i], i))
        scored.sort(key=lambda t: (t[0], t[1], t[2]))
        for _, _, _, i in scored[:n_drop]:
            alive[i] = False
        theta[~alive] = 0.0

        round_idx += 1
        expected = run_em(round_idx)

    if int(alive.sum()) != budget:
        raise ArapipeError(
            f"pruning finished with {int(alive.sum())} pieces, expected {budget}")

    total = theta[alive].sum()
    learned = []
    for i in np.nonzero(alive)[0]:
        p = theta[i] / total
        lp = math.log(p) if p > 0.0 else LOG_PROB_FLOOR
        learned.append((pieces[i], min(lp, 0.0)))
    learned.sort(key=lambda t: (-t[1], t[0]))
    return Vocabulary(config.specials, config.unused_count, learned)


def viterbi_segment(vocab: Vocabulary, pretoken: str) -> list[str] | None:
    """Maximum-probability segmentation of one boundary-marked pretoken.

    Ties are broken toward fewer pieces, then the leftmost-longest length
    sequence.  Returns ``None`` when no segmentation over learned pieces
    exists (the caller maps the whole pretoken to ``[UNK]``).
    """
    length = len(pretoken)
    if length == 0:
        return []
    index = vocab._learned_index
    log_probs = vocab.log_probs
    max_len = vocab.max_piece_len

    neg = -math.inf
    score = [neg] * (length + 1)
    count = [0] * (length + 1)
    first_len = [0] * (length + 1)
    nxt = [-1] * (length + 1)
    score[length] = 0.0
    for i in range(length - 1, -1, -1):
        top = min(length, i + max_len)
        for j in range(i + 1, top + 1):
            pid = index.get(pretoken[i:j])
            if pid is None or score[j] == neg:
                continue
            s = log_probs[pid] + score[j]
            c = count[j] + 1
            f = j - i
            if (s, -c, f) > (score[i], -count[i], first_len[i]):
                score[i], count[i], first_len[i], nxt[i] = s, c, f, j
    if nxt[0] < 0:
        return None
    out = []
    i = 0
    while i < length:
        j = nxt[i]
        out.append(pretoken[i:j])
        i = j
    return out


def encode(vocab: Vocabulary, sentence: str, mode: str = "raw") -> Encoding:
    """Encode one sentence to pieces/ids with word alignment.

    ``raw`` treats each whitespace token as a word; ``segmented`` expects
    marker-format input and groups clitic tokens with their stem, so a
    whole-word unit downstream spans the full segmented word.
    """
    if mode not in ("raw", "segmented"):
        raise ConfigError(f"mode must be 'raw' or 'segmented', got {mode!r}")
    tokens = sentence.split()
    if not tokens:
        return Encoding()
    if mode == "segmented":
        groups = marker_word_groups(tokens)
    else:
        groups = list(range(len(tokens)))

    pieces: list[str] = []
    ids: list[int] = []
    word_ids: list[int] = []
    for token, group in zip(tokens, groups):
        segs = viterbi_segment(vocab, BOUNDARY + token)
        if segs is None:
            pieces.append("[UNK]")
            ids.append(vocab.unk_id)
            word_ids.append(group)
        else:
            for p in segs:
                pieces.append(p)
                ids.append(vocab._learned_index[p])
                word_ids.append(group)
    return Encoding(pieces, ids, word_ids)


def decode(vocab: Vocabulary, ids) -> str:
    """Invert :func:`encode`: drop reserved rows, stitch pieces, restore spaces.

    Reconstructs the pre-tokenized text exactly whenever the ids contain no
    ``[UNK]``.
    """
    parts = []
    for idx in ids:
        piece = vocab.id_to_piece(int(idx))
        if int(idx) < vocab.learned_start:
            continue
        parts.append(piece)
    text = "".join(parts).replace(BOUNDARY, " ")
    if text.startswith(" "):
        text = text[1:]
    return text


class UnigramTokenizer(TransformerMixin, BaseEstimator):
    """Trainable subword tokenizer with the fit/transform surface.

    ``fit`` learns ``vocabulary_`` from an iterable of sentences and records
    ``ll_history_``; ``transform`` maps sentences to :class:`Encoding`
    objects.  Use :meth:`from_vocab_file` to load a trained vocabulary
    without fitting.
    """

    def __init__(self, target_size: int = 64000, unused_count: int = 4000,
                 specials: tuple[str, ...] = DEFAULT_SPECIALS,
                 seed_max_piece_len: int = 8, prune_keep_ratio: float = 0.75,
                 em_iters_per_round: int = 2, min_char_coverage: float = 1.0,
                 mode: str = "raw", seed: int = 0, threads: int = 1):
        self.target_size = target_size
        self.unused_count = unused_count
        self.specials = specials
        self.seed_max_piece_len = seed_max_piece_len
        self.prune_keep_ratio = prune_keep_ratio
        self.em_iters_per_round = em_iters_per_round
        self.min_char_coverage = min_char_coverage
        self.mode = mode
        self.seed = seed
        self.threads = threads

    def _config(self) -> VocabConfig:
        return VocabConfig(
            target_size=self.target_size,
            unused_count=self.unused_count,
            specials=tuple(self.specials),
            seed_max_piece_len=self.seed_max_piece_len,
            prune_keep_ratio=self.prune_keep_ratio,
            em_iters_per_round=self.em_iters_per_round,
            min_char_coverage=self.min_char_coverage,
        )

    def fit(self, X, y=None):
        history: list[tuple[int, int, float]] = []
        self.vocabulary_ = train_vocab(as_text_list(X), self._config(),
                                       seed=self.seed, threads=self.threads,
                                       ll_history=history)
        self.ll_history_ = history
        return self

    def _check_fitted(self) -> Vocabulary:
        if not hasattr(self, "vocabulary_"):
            raise NotFittedError(
                "UnigramTokenizer is not fitted; call fit or from_vocab_file")
        return self.vocabulary_

    def transform(self, X) -> list[Encoding]:
        vocab = self._check_fitted()
        return [encode(vocab, s, self.mode) for s in as_text_list(X)]

    def encode(self, sentence: str) -> Encoding:
        return encode(self._check_fitted(), sentence, self.mode)

    def decode(self, ids) -> str:
        return decode(self._check_fitted(), ids)

    @classmethod
    def from_vocab_file(cls, path: str, mode: str = "raw") -> "UnigramTokenizer":
        tok = cls(mode=mode)
        tok.vocabulary_ = Vocabulary.load(path)
        tok.ll_history_ = []
        return tok
