"""Subword vocabulary: id layout, file format, Viterbi encoding, decoding.

Id layout is fixed and position-coded: special tokens sit at ids
``0..len(specials)-1`` in configuration order, ``[unused0]..[unusedK-1]``
placeholders follow, and learned pieces fill the rest up to exactly
``target_size``.  Special and placeholder rows carry log-probability 0.0 and
never participate in segmentation; learned pieces carry their unigram
log-probabilities (always <= 0).

The file format is one ``piece<TAB>log_prob`` line per id, UTF-8, LF; the
line number is the id.  Log-probabilities are written with ``repr`` so a
save/load round trip reproduces the exact float.

Word-boundary convention: each pretoken is prefixed with U+2581 (lower one
eighth block) before matching, so a piece that starts with the marker can
only match word-initially.  Decoding turns the marker back into a space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError, FormatError

BOUNDARY = "▁"
DEFAULT_SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")

#: Finite stand-in for log(0) when a kept piece's probability underflowed;
#: keeps the vocab file round-trippable and can never win a Viterbi path.
LOG_PROB_FLOOR = -1000.0


@dataclass
class VocabConfig:
    """Training-time shape of the vocabulary."""

    target_size: int = 64000
    unused_count: int = 4000
    specials: tuple[str, ...] = DEFAULT_SPECIALS
    seed_max_piece_len: int = 8
    prune_keep_ratio: float = 0.75
    em_iters_per_round: int = 2
    min_char_coverage: float = 1.0

    def learned_budget(self) -> int:
        return self.target_size - self.unused_count - len(self.specials)

    def validate(self) -> None:
        if len(set(self.specials)) != len(self.specials):
            raise ConfigError("specials must be distinct")
        if "[UNK]" not in self.specials:
            raise ConfigError("specials must include [UNK]")
        if self.unused_count < 0:
            raise ConfigError(f"unused_count must be >= 0, got {self.unused_count}")
        if self.learned_budget() < 1:
            raise ConfigError(
                f"target_size {self.target_size} leaves no room for learned pieces "
                f"after {self.unused_count} placeholders and {len(self.specials)} specials")
        if self.seed_max_piece_len < 1:
            raise ConfigError("seed_max_piece_len must be >= 1")
        if not 0.0 < self.prune_keep_ratio < 1.0:
            raise ConfigError(
                f"prune_keep_ratio must be in (0, 1), got {self.prune_keep_ratio}")
        if self.em_iters_per_round < 1:
            raise ConfigError("em_iters_per_round must be >= 1")
        if self.min_char_coverage != 1.0:
            raise ConfigError("only full character coverage is supported")


def _unused_name(i: int) -> str:
    return f"[unused{i}]"


class Vocabulary:
    """Immutable piece table with the fixed id layout."""

    def __init__(self, specials: tuple[str, ...], unused_count: int,
                 learned: list[tuple[str, float]]):
        if "[UNK]" not in specials:
            raise ConfigError("vocabulary must define [UNK]")
        self.specials = tuple(specials)
        self.unused_count = unused_count
        pieces: list[str] = list(specials)
        log_probs: list[float] = [0.0] * len(specials)
        pieces.extend(_unused_name(i) for i in range(unused_count))
        log_probs.extend([0.0] * unused_count)
        for piece, lp in learned:
            if lp > 0.0:
                raise ConfigError(f"learned piece {piece!r} has log_prob {lp} > 0")
            pieces.append(piece)
            log_probs.append(lp)
        if len(set(pieces)) != len(pieces):
            raise ConfigError("duplicate piece in vocabulary")
        self.pieces = pieces
        self.log_probs = log_probs
        self.learned_start = len(specials) + unused_count
        self._index = {p: i for i, p in enumerate(pieces)}
        self._learned_index = {p: i for i, p in enumerate(pieces)
                               if i >= self.learned_start}
        self.max_piece_len = max(
            (len(p) for p in pieces[self.learned_start:]), default=0)
        self.unk_id = self._index["[UNK]"]
        for name, attr in (("[PAD]", "pad_id"), ("[CLS]", "cls_id"),
                           ("[SEP]", "sep_id"), ("[MASK]", "mask_id")):
            setattr(self, attr, self._index.get(name))

    def __len__(self) -> int:
        return len(self.pieces)

    def piece_to_id(self, piece: str) -> int:
        try:
            return self._index[piece]
        except KeyError:
            raise KeyError(f"piece not in vocabulary: {piece!r}")

    def id_to_piece(self, idx: int) -> str:
        if not 0 <= idx < len(self.pieces):
            raise FormatError(f"id {idx} out of range [0, {len(self.pieces)})")
        return self.pieces[idx]

    def __contains__(self, piece: str) -> bool:
        return piece in self._index

    def learned_items(self) -> list[tuple[str, float]]:
        return [(self.pieces[i], self.log_probs[i])
                for i in range(self.learned_start, len(self.pieces))]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for piece, lp in zip(self.pieces, self.log_probs):
                fh.write(f"{piece}\t{lp!r}\n")

    @classmethod
    def load(cls, path: str) -> "Vocabulary":
        rows: list[tuple[str, float]] = []
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line:
                    raise FormatError(f"{path}:{lineno}: empty vocab line")
                parts = line.split("\t")
                if len(parts) != 2:
                    raise FormatError(
                        f"{path}:{lineno}: expected 'piece<TAB>log_prob'")
                try:
                    lp = float(parts[1])
                except ValueError:
                    raise FormatError(
                        f"{path}:{lineno}: bad log_prob {parts[1]!r}")
                rows.append((parts[0], lp))
        if not rows:
            raise FormatError(f"{path}: empty vocabulary file")
        # Reconstruct the layout: a leading run of bracketed names, with the
        # [unusedN] block starting at the first placeholder.
        n_specials = 0
        while (n_specials < len(rows)
               and rows[n_specials][0].startswith("[")
               and rows[n_specials][0].endswith("]")
               and rows[n_specials][1] == 0.0
               and not rows[n_specials][0].startswith("[unused")):
            n_specials += 1
        unused = 0
        while (n_specials + unused < len(rows)
               and rows[n_specials + unused][0] == _unused_name(unused)):
            unused += 1
        specials = tuple(p for p, _ in rows[:n_specials])
        if "[UNK]" not in specials:
            raise FormatError(f"{path}: no [UNK] row at the head of the file")
        for p, lp in rows[:n_specials + unused]:
            if lp != 0.0:
                raise FormatError(f"{path}: non-zero log_prob on reserved row {p!r}")
        return cls(specials, unused, rows[n_specials + unused:])


@dataclass
class Encoding:
    """Piece-level encoding of one sentence.

    ``word_ids[i]`` is the index of the word (or marker-format word group)
    that piece ``i`` belongs to.
    """

    pieces: list[str] = field(default_factory=list)
    ids: list[int] = field(default_factory=list)
    word_ids: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not (len(self.pieces) == len(self.ids) == len(self.word_ids)):
            raise ConfigError("pieces, ids and word_ids must align")
