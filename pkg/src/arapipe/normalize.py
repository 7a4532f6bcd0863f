"""Text normalization, sentence splitting and corpus deduplication.

The cleaning profile is deliberately light: Arabic text keeps its hamza and
ta-marbuta distinctions by default, embedded Latin runs survive verbatim, and
the only unconditional edits are tatweel removal, diacritic removal and
whitespace collapsing.  Every step is idempotent, so re-running a prepared
corpus through the normalizer is a no-op.

Steps applied by :func:`normalize_text`, in order:

1. drop tatweel (U+0640) unless ``strip_tatweel`` is off;
2. drop the eight harakat diacritics (U+064B..U+0652) unless
   ``strip_diacritics`` is off;
3. optionally fold alef variants to bare alef and alef maqsura to ya;
4. collapse each maximal whitespace run to a single newline if the run
   contains one, else a single space, and trim the ends.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ConfigError
from .validation import as_text_list

TATWEEL = "ـ"
#: Fathatan through sukun — the short-vowel and nunation marks.
DIACRITICS = frozenset(chr(c) for c in range(0x064B, 0x0653))

#: Alef with madda/hamza above/hamza below/wasla, folded to bare alef.
_ALEF_FOLD = {"آ": "ا", "أ": "ا",
              "إ": "ا", "ٱ": "ا"}
#: Alef maqsura folded to ya.
_YA_FOLD = {"ى": "ي"}

_WS_RUN = re.compile(r"\s+")

#: Sentence terminators: ASCII ``.!?``, Arabic question mark, newline.
SENTENCE_TERMINATORS = frozenset({".", "!", "?", "؟", "\n"})


@dataclass
class NormalizationConfig:
    """Switches for :func:`normalize_text`.

    ``preserve_latin`` is part of the profile's contract and fixed on: the
    normalizer never touches non-Arabic characters, so Latin-script runs
    (product names, code, URLs) come through byte-identical.
    """

    strip_tatweel: bool = True
    strip_diacritics: bool = True
    normalize_alef_ya: bool = False
    preserve_latin: bool = True
    collapse_whitespace: bool = True

    def validate(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, bool):
                raise ConfigError(f"{f.name} must be a bool, got {value!r}")
        if not self.preserve_latin:
            raise ConfigError("preserve_latin is fixed in this profile")

    # The CLI exposes deviations from the defaults only, so a config
    # round-trips through the exact flag set a user would type.
    def to_flags(self) -> list[str]:
        flags = []
        if not self.strip_tatweel:
            flags.append("--keep-tatweel")
        if not self.strip_diacritics:
            flags.append("--keep-diacritics")
        if self.normalize_alef_ya:
            flags.append("--normalize-alef-ya")
        if not self.collapse_whitespace:
            flags.append("--no-collapse-whitespace")
        return flags

    @classmethod
    def from_flags(cls, flags: list[str]) -> "NormalizationConfig":
        known = {"--keep-tatweel", "--keep-diacritics", "--normalize-alef-ya",
                 "--no-collapse-whitespace"}
        unknown = [f for f in flags if f not in known]
        if unknown:
            raise ConfigError(f"unknown normalization flag(s): {unknown}")
        return cls(
            strip_tatweel="--keep-tatweel" not in flags,
            strip_diacritics="--keep-diacritics" not in flags,
            normalize_alef_ya="--normalize-alef-ya" in flags,
            collapse_whitespace="--no-collapse-whitespace" not in flags,
        )


def _collapse_run(match: re.Match) -> str:
    return "\n" if "\n" in match.group() else " "


def normalize_text(raw: str, config: NormalizationConfig | None = None) -> str:
    """Normalize one document according to ``config`` (defaults apply)."""
    if config is None:
        config = NormalizationConfig()
    config.validate()
    out = []
    for ch in raw:
        if config.strip_tatweel and ch == TATWEEL:
            continue
        if config.strip_diacritics and ch in DIACRITICS:
            continue
        if config.normalize_alef_ya:
            ch = _ALEF_FOLD.get(ch, ch)
            ch = _YA_FOLD.get(ch, ch)
        out.append(ch)
    text = "".join(out)
    if config.collapse_whitespace:
        text = _WS_RUN.sub(_collapse_run, text).strip()
    return text


def split_sentences(document: str) -> list[str]:
    """Split a normalized document into sentences.

    A sentence ends at ``. ! ?``, the Arabic question mark, or a newline.
    Terminator characters stay attached to their sentence; surrounding
    whitespace is trimmed; segments containing no content (only terminators
    and whitespace) are dropped.
    """
    sentences: list[str] = []
    buf: list[str] = []

    def flush() -> None:
        s = "".join(buf).strip()
        buf.clear()
        if s and not all(c in SENTENCE_TERMINATORS or c.isspace() for c in s):
            sentences.append(s)

    for ch in document:
        buf.append(ch)
        if ch in SENTENCE_TERMINATORS:
            flush()
    flush()
    return sentences


def dedup_sentences(sentences: list[str],
                    source_ids: list[int] | None = None,
                    ) -> tuple[list[str], list[int]]:
    """Drop exact repeats, keeping the first occurrence of each sentence.

    Comparison is on the exact post-normalization string.  Returns the kept
    sentences and their aligned source ids (zeros if none were given).
    """
    if source_ids is None:
        source_ids = [0] * len(sentences)
    if len(source_ids) != len(sentences):
        raise ConfigError("source_ids length does not match sentences")
    seen: set[str] = set()
    kept: list[str] = []
    kept_ids: list[int] = []
    for sent, sid in zip(sentences, source_ids):
        if sent in seen:
            continue
        seen.add(sent)
        kept.append(sent)
        kept_ids.append(sid)
    return kept, kept_ids


@dataclass
class SentenceCorpus:
    """A deduplicated list of sentences with their source-document ids."""

    sentences: list[str] = field(default_factory=list)
    source_ids: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.sentences) != len(self.source_ids):
            raise ConfigError("sentences and source_ids must align")

    def __len__(self) -> int:
        return len(self.sentences)

    @classmethod
    def from_documents(cls, documents: list[str],
                       config: NormalizationConfig | None = None,
                       threads: int = 1) -> "SentenceCorpus":
        """Normalize, split and deduplicate a batch of raw documents.

        Documents are independent, so they may be processed in parallel;
        results are merged in document order, making the output identical
        for every ``threads`` value.
        """
        if threads < 1:
            raise ConfigError(f"threads must be >= 1, got {threads}")

        def prep(doc: str) -> list[str]:
            return split_sentences(normalize_text(doc, config))

        if threads == 1 or len(documents) <= 1:
            per_doc = [prep(doc) for doc in documents]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                per_doc = list(pool.map(prep, documents))
        sentences: list[str] = []
        source_ids: list[int] = []
        for doc_id, sents in enumerate(per_doc):
            sentences.extend(sents)
            source_ids.extend([doc_id] * len(sents))
        sentences, source_ids = dedup_sentences(sentences, source_ids)
        return cls(sentences, source_ids)

    def documents(self) -> list[list[str]]:
        """Group sentences back into per-source lists, in corpus order."""
        docs: dict[int, list[str]] = {}
        for sent, sid in zip(self.sentences, self.source_ids):
            docs.setdefault(sid, []).append(sent)
        return [docs[k] for k in sorted(docs)]

    def save(self, path: str) -> None:
        """Write one sentence per line (UTF-8, LF), blank line between docs."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            previous_sid: int | None = None
            for sent, sid in zip(self.sentences, self.source_ids):
                if previous_sid is not None and sid != previous_sid:
                    fh.write("\n")
                previous_sid = sid
                fh.write(sent + "\n")

    @classmethod
    def load(cls, path: str) -> "SentenceCorpus":
        """Read the line format back; blank lines separate documents."""
        sentences: list[str] = []
        source_ids: list[int] = []
        sid = 0
        in_doc = False
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line.strip():
                    if in_doc:
                        sid += 1
                        in_doc = False
                    continue
                sentences.append(line)
                source_ids.append(sid)
                in_doc = True
        return cls(sentences, source_ids)


class TextNormalizer(TransformerMixin, BaseEstimator):
    """Stateless transformer applying :func:`normalize_text` per document.

    Fits nothing; exists so normalization slots into a pipeline next to the
    tokenizer.
    """

    def __init__(self, strip_tatweel: bool = True, strip_diacritics: bool = True,
                 normalize_alef_ya: bool = False, collapse_whitespace: bool = True):
        self.strip_tatweel = strip_tatweel
        self.strip_diacritics = strip_diacritics
        self.normalize_alef_ya = normalize_alef_ya
        self.collapse_whitespace = collapse_whitespace

    def _config(self) -> NormalizationConfig:
        return NormalizationConfig(
            strip_tatweel=self.strip_tatweel,
            strip_diacritics=self.strip_diacritics,
            normalize_alef_ya=self.normalize_alef_ya,
            collapse_whitespace=self.collapse_whitespace,
        )

    def fit(self, X, y=None):
        self._config().validate()
        return self

    def transform(self, X) -> list[str]:
        config = self._config()
        return [normalize_text(doc, config) for doc in as_text_list(X)]
