"""MLM + NSP pretraining-example generation and its binary record format.

The generator re-processes the corpus ``dup_factor`` times with fresh masks.
Per duplication and document, sentences are packed greedily into chunks of at
most ``max_seq_len - 3`` pieces; each chunk becomes one ``[CLS] A [SEP] B
[SEP]`` pair where, with probability ``random_next_prob``, B is drawn from a
uniformly random *other* document (next_sentence_label=1, "not next") and
otherwise B is the true continuation (label=0).  Overflow is trimmed from
the end of whichever segment is longer (from B on ties).

Masking selects whole words: the candidate words of a pair are shuffled, then
taken until the token budget ``min(max_predictions, max(1, round(p * N)))``
is met, skipping words that would overshoot.  If the greedy pass cannot land
on the budget exactly, a deterministic subset-sum repair picks an exact-fit
word set when one exists — word atomicity is never traded for the budget.
Each selected word gets ONE category draw applied to all its pieces: 80%
``[MASK]``, 10% a uniform random learned piece, 10% left unchanged.

Every random choice flows from an :class:`~arapipe.rng.RngStream` keyed by
``(seed, dup_index, doc_index)``, so output is a pure function of inputs and
parameters regardless of thread count or scheduling.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator

from .errors import ArapipeError, ConfigError, FormatError
from .records import crc32, read_exact
from .rng import RngStream
from .vocab import Encoding, Vocabulary

MAGIC = b"ABPD"
VERSION = 1
_HEADER = struct.Struct("<4sIIIQ")


@dataclass
class PretrainParams:
    """Knobs of the example generator.

    ``max_predictions`` defaults to ``ceil(masked_lm_prob * max_seq_len)``,
    which lands on the conventional caps (20 at length 128, 77 at 512).
    ``whole_word_unit`` records which word notion the encodings carry:
    ``word`` groups all pieces of a whitespace word (segment markers
    included), ``segment`` treats each marker-format segment as its own
    unit; the choice is realized upstream by the encoder's mode.
    """

    max_seq_len: int = 128
    masked_lm_prob: float = 0.15
    max_predictions: int | None = None
    dup_factor: int = 10
    seed: int = 34
    random_next_prob: float = 0.5
    whole_word_unit: str = "word"

    def __post_init__(self) -> None:
        if self.max_predictions is None:
            self.max_predictions = math.ceil(self.masked_lm_prob * self.max_seq_len)

    def validate(self) -> None:
        if self.max_seq_len < 8:
            raise ConfigError(f"max_seq_len must be >= 8, got {self.max_seq_len}")
        if not 0.0 < self.masked_lm_prob < 1.0:
            raise ConfigError(
                f"masked_lm_prob must be in (0, 1), got {self.masked_lm_prob}")
        if not 1 <= self.max_predictions <= self.max_seq_len:
            raise ConfigError(
                f"max_predictions must be in [1, max_seq_len], got {self.max_predictions}")
        if self.dup_factor < 1:
            raise ConfigError(f"dup_factor must be >= 1, got {self.dup_factor}")
        if not 0.0 <= self.random_next_prob <= 1.0:
            raise ConfigError(
                f"random_next_prob must be in [0, 1], got {self.random_next_prob}")
        if self.whole_word_unit not in ("word", "segment"):
            raise ConfigError(
                f"whole_word_unit must be 'word' or 'segment', got {self.whole_word_unit!r}")


@dataclass
class PretrainingExample:
    input_ids: list[int]
    input_mask: list[int]
    segment_ids: list[int]
    masked_lm_positions: list[int]
    masked_lm_ids: list[int]
    masked_lm_weights: list[int]
    next_sentence_label: int

    def n_real_tokens(self) -> int:
        return sum(self.input_mask)

    def n_masked(self) -> int:
        return sum(self.masked_lm_weights)

    def validate(self, params: PretrainParams, vocab: Vocabulary) -> None:
        """Assert the structural invariants of one example."""
        L, P = params.max_seq_len, params.max_predictions
        if not (len(self.input_ids) == len(self.input_mask)
                == len(self.segment_ids) == L):
            raise ArapipeError("sequence arrays must have length max_seq_len")
        if not (len(self.masked_lm_positions) == len(self.masked_lm_ids)
                == len(self.masked_lm_weights) == P):
            raise ArapipeError("prediction arrays must have length max_predictions")
        if self.input_ids[0] != vocab.cls_id:
            raise ArapipeError("input_ids[0] must be [CLS]")
        n = self.n_real_tokens()
        if self.input_mask != [1] * n + [0] * (L - n):
            raise ArapipeError("input_mask must be ones then zeros")
        seps = [i for i in range(n) if self.input_ids[i] == vocab.sep_id]
        if len(seps) != 2 or seps[1] != n - 1:
            raise ArapipeError("exactly two [SEP] expected, the second last")
        expect_seg = ([0] * (seps[0] + 1) + [1] * (n - seps[0] - 1) + [0] * (L - n))
        if self.segment_ids != expect_seg:
            raise ArapipeError("segment_ids do not follow the 0/1/pad pattern")
        k = self.n_masked()
        if self.masked_lm_weights != [1] * k + [0] * (P - k):
            raise ArapipeError("masked_lm_weights must be ones then zeros")
        pos = self.masked_lm_positions[:k]
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ArapipeError("masked positions must be strictly increasing")
        special = {0, seps[0], n - 1}
        if any(p in special or p >= n for p in pos):
            raise ArapipeError("masked position points at a special or padding")


def _mask_budget(n_real: int, params: PretrainParams) -> int:
    return min(params.max_predictions,
               max(1, round(params.masked_lm_prob * n_real)))


def _exact_fill(sizes: list[int], budget: int) -> list[int] | None:
    """Indices of a word subset whose sizes sum exactly to ``budget``.

    Deterministic subset-sum DP in the given order; None when unreachable.
    """
    parent: dict[int, tuple[int, int] | None] = {0: None}
    for wi, size in enumerate(sizes):
        if size > budget:
            continue
        # Iterate a snapshot: each word used at most once.
        for total in sorted(parent, reverse=True):
            new = total + size
            if new <= budget and new not in parent:
                parent[new] = (total, wi)
                if new == budget:
                    break
        if budget in parent:
            break
    if budget not in parent:
        return None
    picked = []
    at = budget
    while parent[at] is not None:
        prev, wi = parent[at]
        picked.append(wi)
        at = prev
    picked.reverse()
    return picked


def whole_word_mask(token_ids: list[int], word_keys: list,
                    params: PretrainParams, rng: RngStream, vocab: Vocabulary,
                    ) -> tuple[list[int], list[int], list[int]]:
    """Apply whole-word masking to one assembled token sequence.

    ``word_keys[i]`` is a hashable word key, or None for positions excluded
    from candidacy ([CLS]/[SEP]).  Returns (masked_ids, positions,
    original_ids) with positions strictly increasing.
    """
    budget = _mask_budget(len(token_ids), params)

    words: list[list[int]] = []
    prev_key = None
    for pos, key in enumerate(word_keys):
        if key is None:
            prev_key = None
            continue
        if key != prev_key:
            words.append([])
        words[-1].append(pos)
        prev_key = key
    if not words:
        return list(token_ids), [], []

    order = list(range(len(words)))
    rng.shuffle(order)

    selected: list[int] = []
    total = 0
    for wi in order:
        size = len(words[wi])
        if total + size > budget:
            continue
        selected.append(wi)
        total += size
    if total < budget:
        exact = _exact_fill([len(words[wi]) for wi in order], budget)
        if exact is not None:
            selected = [order[k] for k in exact]

    selected_set = set(selected)
    masked = list(token_ids)
    chosen: list[tuple[int, int, int]] = []
    n_learned = len(vocab) - vocab.learned_start
    for wi in order:
        if wi not in selected_set:
            continue
        # One draw per word: all its pieces get the same treatment, and a
        # random-replaced word gets one replacement token, not one per piece.
        draw = rng.random()
        random_rep = None
        if 0.8 <= draw < 0.9:
            random_rep = vocab.learned_start + rng.randint(0, n_learned - 1)
        for pos in words[wi]:
            if draw < 0.8:
                rep = vocab.mask_id
            elif draw < 0.9:
                rep = random_rep
            else:
                rep = token_ids[pos]
            chosen.append((pos, token_ids[pos], rep))
    chosen.sort(key=lambda t: t[0])
    for pos, _, rep in chosen:
        masked[pos] = rep
    return masked, [c[0] for c in chosen], [c[1] for c in chosen]


def _sentence_units(enc: Encoding, ordinal: int) -> list[tuple[int, tuple[int, int]]]:
    """(id, word_key) pairs of one encoded sentence.

    The key carries the sentence ordinal so identical word indices in
    neighbouring sentences never fuse into one masking unit.
    """
    return [(i, (ordinal, w)) for i, w in zip(enc.ids, enc.word_ids)]


def _truncate_pair(tokens_a: list, tokens_b: list, target: int) -> None:
    while len(tokens_a) + len(tokens_b) > target:
        longer = tokens_a if len(tokens_a) > len(tokens_b) else tokens_b
        longer.pop()


def _build_example(tokens_a: list[tuple[int, tuple]],
                   tokens_b: list[tuple[int, tuple]], label: int,
                   params: PretrainParams, rng: RngStream, vocab: Vocabulary,
                   ) -> PretrainingExample:
    ids = ([vocab.cls_id] + [t[0] for t in tokens_a] + [vocab.sep_id]
           + [t[0] for t in tokens_b] + [vocab.sep_id])
    keys = ([None] + [t[1] for t in tokens_a] + [None]
            + [t[1] for t in tokens_b] + [None])
    masked, positions, originals = whole_word_mask(ids, keys, params, rng, vocab)

    L, P = params.max_seq_len, params.max_predictions
    n = len(ids)
    first_sep = 1 + len(tokens_a)
    pad = L - n
    k = len(positions)
    return PretrainingExample(
        input_ids=masked + [vocab.pad_id] * pad,
        input_mask=[1] * n + [0] * pad,
        segment_ids=[0] * (first_sep + 1) + [1] * (n - first_sep - 1) + [0] * pad,
        masked_lm_positions=positions + [0] * (P - k),
        masked_lm_ids=originals + [0] * (P - k),
        masked_lm_weights=[1] * k + [0] * (P - k),
        next_sentence_label=label,
    )


def _doc_examples(docs: list[list[list[tuple[int, tuple]]]], doc_index: int,
                  dup_index: int, params: PretrainParams, vocab: Vocabulary,
                  ) -> list[PretrainingExample]:
    """All examples of one (dup, doc) work unit, in chunk order."""
    rng = RngStream(params.seed, dup_index, doc_index)
    document = docs[doc_index]
    target = params.max_seq_len - 3
    out: list[PretrainingExample] = []

    chunk: list[list[tuple[int, tuple]]] = []
    chunk_len = 0
    i = 0
    while i < len(document):
        sentence = document[i]
        chunk.append(sentence)
        chunk_len += len(sentence)
        if i == len(document) - 1 or chunk_len >= target:
            a_end = 1
            if len(chunk) >= 2:
                a_end = rng.randint(1, len(chunk) - 1)
            tokens_a = [t for s in chunk[:a_end] for t in s]

            is_random = len(chunk) == 1 or rng.random() < params.random_next_prob
            if is_random:
                label = 1
                if len(docs) < 2:
                    raise ConfigError(
                        "cannot draw a random next segment: corpus has a "
                        "single non-empty document")
                target_b = target - len(tokens_a)
                other = rng.randint(0, len(docs) - 2)
                if other >= doc_index:
                    other += 1
                other_doc = docs[other]
                start = rng.randint(0, len(other_doc) - 1)
                tokens_b = []
                for j in range(start, len(other_doc)):
                    tokens_b.extend(other_doc[j])
                    if len(tokens_b) >= target_b:
                        break
                # Unused tail sentences go back to the stream.
                i -= len(chunk) - a_end
            else:
                label = 0
                tokens_b = [t for s in chunk[a_end:] for t in s]

            _truncate_pair(tokens_a, tokens_b, target)
            if tokens_a and tokens_b:
                out.append(_build_example(tokens_a, tokens_b, label,
                                          params, rng, vocab))
            chunk = []
            chunk_len = 0
        i += 1
    return out


def create_examples(documents: list[list[Encoding]], params: PretrainParams,
                    vocab: Vocabulary, threads: int = 1,
                    skipped_docs: list[int] | None = None,
                    ) -> Iterator[PretrainingExample]:
    """Generate examples over ``dup_factor`` passes in (dup, doc, chunk) order.

    ``documents`` is a list of documents, each a list of sentence Encodings.
    Documents with zero sentences are skipped (their indices are appended to
    ``skipped_docs`` when given).  Output is deterministic for any
    ``threads`` value.
    """
    params.validate()
    if vocab.cls_id is None or vocab.sep_id is None or vocab.mask_id is None \
            or vocab.pad_id is None:
        raise ConfigError("vocabulary must define [PAD], [CLS], [SEP], [MASK]")

    docs = []
    skipped: list[int] = []
    for di, doc in enumerate(documents):
        units = [_sentence_units(enc, si) for si, enc in enumerate(doc)]
        units = [u for u in units if u]
        if units:
            docs.append(units)
        else:
            skipped.append(di)
    if skipped_docs is not None:
        skipped_docs.extend(skipped)
    if docs and params.random_next_prob > 0.0 and len(docs) < 2:
        raise ConfigError(
            "random next-sentence sampling needs at least two non-empty "
            "documents")

    keys = [(dup, di) for dup in range(params.dup_factor)
            for di in range(len(docs))]

    def stream() -> Iterator[PretrainingExample]:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for batch in pool.map(
                        lambda k: _doc_examples(docs, k[1], k[0], params, vocab),
                        keys):
                    yield from batch
        else:
            for dup, di in keys:
                yield from _doc_examples(docs, di, dup, params, vocab)

    return stream()


def record_size(params: PretrainParams) -> int:
    return 6 * params.max_seq_len + 9 * params.max_predictions + 1


def _pack_example(ex: PretrainingExample, params: PretrainParams) -> bytes:
    L, P = params.max_seq_len, params.max_predictions
    body = struct.pack(
        f"<{L}I{L}B{L}B{P}I{P}I{P}BB",
        *ex.input_ids, *ex.input_mask, *ex.segment_ids,
        *ex.masked_lm_positions, *ex.masked_lm_ids, *ex.masked_lm_weights,
        ex.next_sentence_label)
    return body + struct.pack("<I", crc32(body))


def serialize(examples: Iterable[PretrainingExample], params: PretrainParams,
              fh: BinaryIO) -> int:
    """Write the record file; returns the example count.

    The stream must be seekable: the count is patched into the header once
    the example stream is exhausted.
    """
    params.validate()
    fh.write(_HEADER.pack(MAGIC, VERSION, params.max_seq_len,
                          params.max_predictions, 0))
    count = 0
    for ex in examples:
        fh.write(_pack_example(ex, params))
        count += 1
    fh.seek(16)
    fh.write(struct.pack("<Q", count))
    fh.seek(0, 2)
    return count


@dataclass
class RecordHeader:
    max_seq_len: int
    max_predictions: int
    example_count: int


def read_header(fh: BinaryIO) -> RecordHeader:
    raw = read_exact(fh, _HEADER.size, "header")
    magic, version, max_seq_len, max_predictions, count = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    return RecordHeader(max_seq_len, max_predictions, count)


def deserialize(fh: BinaryIO) -> tuple[RecordHeader, Iterator[PretrainingExample]]:
    """Read the header and return a validating example iterator."""
    header = read_header(fh)
    L, P = header.max_seq_len, header.max_predictions
    body_fmt = struct.Struct(f"<{L}I{L}B{L}B{P}I{P}I{P}BB")

    def examples() -> Iterator[PretrainingExample]:
        for _ in range(header.example_count):
            offset = fh.tell()
            body = read_exact(fh, body_fmt.size, "example record")
            stored, = struct.unpack("<I", read_exact(fh, 4, "record checksum"))
            if stored != crc32(body):
                raise FormatError("record checksum mismatch", offset=offset)
            vals = body_fmt.unpack(body)
            at = 0
            def take(n):
                nonlocal at
                part = list(vals[at:at + n])
                at += n
                return part
            yield PretrainingExample(
                input_ids=take(L), input_mask=take(L), segment_ids=take(L),
                masked_lm_positions=take(P), masked_lm_ids=take(P),
                masked_lm_weights=take(P), next_sentence_label=vals[at])
        tail = fh.read(1)
        if tail:
            raise FormatError("trailing data after final record",
                              offset=fh.tell() - 1)

    return header, examples()


def read_examples(path: str) -> tuple[RecordHeader, list[PretrainingExample]]:
    with open(path, "rb") as fh:
        header, stream = deserialize(fh)
        return header, list(stream)


@dataclass
class PretrainStats:
    """Aggregate statistics of a record file, as printed by the CLI."""

    example_count: int = 0
    not_next_fraction: float = 0.0
    mean_masked: float = 0.0
    budget_violations: int = 0
    mask_fraction: float = 0.0
    random_fraction: float = 0.0
    unchanged_fraction: float = 0.0
    inferred_mask_id: int | None = None

    def report_lines(self) -> list[str]:
        out = [f"examples\t{self.example_count}",
               f"not_next_fraction\t{self.not_next_fraction!r}",
               f"mean_masked_per_example\t{self.mean_masked!r}",
               f"budget_violations\t{self.budget_violations}",
               f"mask_fraction\t{self.mask_fraction!r}",
               f"random_fraction\t{self.random_fraction!r}",
               f"unchanged_fraction\t{self.unchanged_fraction!r}"]
        if self.inferred_mask_id is not None:
            out.append(f"inferred_mask_id\t{self.inferred_mask_id}")
        return out


def compute_stats(header: RecordHeader,
                  examples: Iterable[PretrainingExample],
                  masked_lm_prob: float = 0.15,
                  mask_id: int | None = None) -> PretrainStats:
    """Masking/NSP statistics; infers the mask id when not supplied.

    The record format does not name its vocabulary, so without ``mask_id``
    the modal replacement id over changed masked positions stands in for
    ``[MASK]`` (it dominates at the 80/10/10 mix).
    """
    params = PretrainParams(max_seq_len=header.max_seq_len,
                            masked_lm_prob=masked_lm_prob,
                            max_predictions=header.max_predictions)
    count = 0
    not_next = 0
    masked_total = 0
    violations = 0
    rep_counter: dict[int, int] = {}
    events: list[tuple[int, int]] = []  # (replacement, original)
    for ex in examples:
        count += 1
        not_next += ex.next_sentence_label
        k = ex.n_masked()
        masked_total += k
        if k != _mask_budget(ex.n_real_tokens(), params):
            violations += 1
        for pos, orig in zip(ex.masked_lm_positions[:k], ex.masked_lm_ids[:k]):
            rep = ex.input_ids[pos]
            events.append((rep, orig))
            if rep != orig:
                rep_counter[rep] = rep_counter.get(rep, 0) + 1

    inferred = None
    if mask_id is None and rep_counter:
        inferred = max(rep_counter.items(), key=lambda kv: (kv[1], -kv[0]))[0]
        mask_id = inferred
    n_mask = n_rand = n_keep = 0
    for rep, orig in events:
        if mask_id is not None and rep == mask_id:
            n_mask += 1
        elif rep == orig:
            n_keep += 1
        else:
            n_rand += 1
    total_events = max(1, len(events))
    return PretrainStats(
        example_count=count,
        not_next_fraction=not_next / count if count else 0.0,
        mean_masked=masked_total / count if count else 0.0,
        budget_violations=violations,
        mask_fraction=n_mask / total_events,
        random_fraction=n_rand / total_events,
        unchanged_fraction=n_keep / total_events,
        inferred_mask_id=inferred,
    )
