"""Task metrics: accuracy, entity-level NER P/R/F1, and extractive-QA scores.

NER evaluation decodes IOB2 tag sequences into entity spans and matches on
exact boundaries plus exact label.  Macro-F1 averages over the classes
present in the gold data; spurious classes (predicted but absent from gold)
still show up in the per-class report with zero scores.

QA evaluation normalizes answers before comparison: diacritics and tatweel
are stripped, punctuation characters are deleted in place (so a hyphenated
token stays one token), Latin letters are lowercased, and whitespace is
collapsed.  Exact Match is string equality after normalization; F1 is the
best token-multiset overlap against any gold answer; Sentence Match checks
whether the predicted span touches any sentence a gold answer touches.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass

from .errors import AlignmentError, ConfigError, FormatError
from .normalize import DIACRITICS, SENTENCE_TERMINATORS, TATWEEL


@dataclass(frozen=True)
class EntitySpan:
    """One decoded entity: class label plus inclusive word span."""

    label: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if not self.label:
            raise ConfigError("entity label must be non-empty")
        if self.start > self.end:
            raise ConfigError(f"entity span start {self.start} > end {self.end}")


def split_iob2_tag(tag: str) -> tuple[str, str | None]:
    """Split a tag into (kind, class): "B-PER" -> ("B", "PER"), "O" -> ("O", None)."""
    if tag == "O":
        return "O", None
    if len(tag) > 2 and tag[1] == "-" and tag[0] in ("B", "I"):
        return tag[0], tag[2:]
    raise FormatError(f"malformed IOB2 tag: {tag!r}")


def continuation_tag(tag: str) -> str:
    """The tag a continuation piece of the same word would carry."""
    kind, cls = split_iob2_tag(tag)
    return f"I-{cls}" if kind == "B" else tag


def extract_entities(tags: list[str]) -> set[EntitySpan]:
    """Decode IOB2 tags to entity spans.

    A dangling ``I-X`` (no preceding ``B-X``/``I-X`` of the same class)
    starts a new entity — the conventional repair for noisy data.
    """
    spans: set[EntitySpan] = set()
    open_label: str | None = None
    open_start = 0
    for i, tag in enumerate(tags):
        kind, cls = split_iob2_tag(tag)
        if open_label is not None and (kind != "I" or cls != open_label):
            spans.add(EntitySpan(open_label, open_start, i - 1))
            open_label = None
        if kind == "B" or (kind == "I" and open_label is None):
            open_label = cls
            open_start = i
    if open_label is not None:
        spans.add(EntitySpan(open_label, open_start, len(tags) - 1))
    return spans


def render_tags(spans: set[EntitySpan], length: int) -> list[str]:
    """Inverse of :func:`extract_entities` for non-overlapping span sets."""
    tags = ["O"] * length
    for span in sorted(spans, key=lambda s: s.start):
        if span.end >= length:
            raise ConfigError(f"span {span} exceeds sentence length {length}")
        if any(tags[i] != "O" for i in range(span.start, span.end + 1)):
            raise ConfigError(f"span {span} overlaps another span")
        tags[span.start] = f"B-{span.label}"
        for i in range(span.start + 1, span.end + 1):
            tags[i] = f"I-{span.label}"
    return tags


def accuracy(preds, golds) -> float:
    preds, golds = list(preds), list(golds)
    if len(preds) != len(golds):
        raise AlignmentError(
            f"length mismatch: {len(preds)} predictions vs {len(golds)} golds")
    if not preds:
        raise ConfigError("accuracy of an empty prediction list is undefined")
    return sum(p == g for p, g in zip(preds, golds)) / len(preds)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def ner_macro_f1(pred_tags: list[list[str]], gold_tags: list[list[str]],
                 level: str = "entity",
                 ) -> tuple[dict[str, tuple[float, float, float]], float]:
    """Per-class (P, R, F1) plus macro-F1 over gold-present classes.

    ``level="entity"`` (default) matches decoded spans on exact boundaries
    and label; ``level="token"`` compares per-token class labels (B/I
    collapsed), for corpora scored that way.
    """
    if level not in ("entity", "token"):
        raise ConfigError(f"level must be 'entity' or 'token', got {level!r}")
    if len(pred_tags) != len(gold_tags):
        raise AlignmentError(
            f"{len(pred_tags)} predicted sentences vs {len(gold_tags)} gold")
    tp: Counter = Counter()
    fp: Counter = Counter()
    fn: Counter = Counter()
    gold_classes: set[str] = set()
    for si, (pred, gold) in enumerate(zip(pred_tags, gold_tags)):
        if len(pred) != len(gold):
            raise AlignmentError(
                f"sentence {si}: {len(pred)} predicted tags vs {len(gold)} gold")
        if level == "entity":
            pred_spans = extract_entities(pred)
            gold_spans = extract_entities(gold)
            for span in gold_spans:
                gold_classes.add(span.label)
                if span in pred_spans:
                    tp[span.label] += 1
                else:
                    fn[span.label] += 1
            for span in pred_spans - gold_spans:
                fp[span.label] += 1
        else:
            for ptag, gtag in zip(pred, gold):
                pcls = split_iob2_tag(ptag)[1]
                gcls = split_iob2_tag(gtag)[1]
                if gcls is not None:
                    gold_classes.add(gcls)
                if pcls == gcls:
                    if gcls is not None:
                        tp[gcls] += 1
                else:
                    if pcls is not None:
                        fp[pcls] += 1
                    if gcls is not None:
                        fn[gcls] += 1

    per_class = {}
    for cls in sorted(set(tp) | set(fp) | set(fn) | gold_classes):
        per_class[cls] = _prf(tp[cls], fp[cls], fn[cls])
    if gold_classes:
        # Sum in sorted order: set iteration varies with hash randomization,
        # which would let the last bit of the macro drift across processes.
        macro = sum(per_class[c][2]
                    for c in sorted(gold_classes)) / len(gold_classes)
    else:
        macro = 0.0
    return per_class, macro


# --- extractive QA ---------------------------------------------------------

#: Characters deleted during answer normalization.  ASCII punctuation plus
#: the Arabic question mark, comma, semicolon and ornamental quotes.
PUNCTUATION = frozenset(string.punctuation) | frozenset("؟،؛«»…")


def normalize_answer(text: str) -> str:
    out = []
    for ch in text:
        if ch in DIACRITICS or ch == TATWEEL or ch in PUNCTUATION:
            continue
        out.append(ch.lower())
    return " ".join("".join(out).split())


def _check_golds(gold_texts) -> list[str]:
    golds = list(gold_texts)
    if not golds:
        raise ConfigError("gold answer list must be non-empty")
    return golds


def qa_exact_match(pred_text: str, gold_texts) -> int:
    pred = normalize_answer(pred_text)
    return int(any(pred == normalize_answer(g) for g in _check_golds(gold_texts)))


def _token_f1(pred: str, gold: str) -> float:
    pred_tokens = pred.split()
    gold_tokens = gold.split()
    if not pred_tokens or not gold_tokens:
        return float(pred_tokens == gold_tokens)
    overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def qa_f1(pred_text: str, gold_texts) -> float:
    pred = normalize_answer(pred_text)
    return max(_token_f1(pred, normalize_answer(g))
               for g in _check_golds(gold_texts))


@dataclass
class QaInstance:
    """One QA item with everything Sentence Match needs."""

    context: str
    gold_answers: list[tuple[str, int]]
    prediction: tuple[str, int]
    sentence_bounds: list[tuple[int, int]]

    def validate(self) -> None:
        n = len(self.context)
        for text, start in [self.prediction, *self.gold_answers]:
            if start < 0 or start + len(text) > n:
                raise FormatError(
                    f"answer span [{start}, {start + len(text)}) outside "
                    f"context of length {n}")
        covered = 0
        for s, e in self.sentence_bounds:
            if s != covered or e <= s:
                raise FormatError("sentence_bounds must partition the context")
            covered = e
        if covered != n:
            raise FormatError("sentence_bounds must cover the whole context")


def sentence_char_bounds(context: str) -> list[tuple[int, int]]:
    """Partition a context into sentence intervals by terminator characters."""
    bounds = []
    start = 0
    for i, ch in enumerate(context):
        if ch in SENTENCE_TERMINATORS:
            bounds.append((start, i + 1))
            start = i + 1
    if start < len(context):
        bounds.append((start, len(context)))
    return bounds


def _span_sentences(start: int, length: int,
                    bounds: list[tuple[int, int]]) -> set[int]:
    end = start + length
    return {i for i, (s, e) in enumerate(bounds) if start < e and end > s}


def sentence_match(instance: QaInstance) -> int:
    """1 iff the prediction shares a sentence with any gold answer."""
    instance.validate()
    pred_sents = _span_sentences(instance.prediction[1],
                                 len(instance.prediction[0]),
                                 instance.sentence_bounds)
    for text, start in instance.gold_answers:
        if pred_sents & _span_sentences(start, len(text),
                                        instance.sentence_bounds):
            return 1
    return 0
