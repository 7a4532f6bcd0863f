"""Arabic pre-training text pipeline and desk-scale task-head toolkit.

The package covers the path from raw text to model-ready artifacts and back:

- :mod:`arapipe.normalize` — Arabic-aware cleaning, sentence splitting,
  corpus deduplication;
- :mod:`arapipe.segment` — rule-based clitic segmentation in a reversible
  marker format;
- :mod:`arapipe.unigram` / :mod:`arapipe.vocab` — unigram subword
  vocabularies, Viterbi encoding, lossless decoding;
- :mod:`arapipe.pretrain` — whole-word-masking + next-sentence example
  generation with bit-exact binary records;
- :mod:`arapipe.heads` / :mod:`arapipe.metrics` — classification-head math,
  label alignment, span decoding, and task metrics;
- :mod:`arapipe.cli` — the ``arapipe`` executable tying it together.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (AlignmentError, ArapipeError, ConfigError, DecodeError,
                     FormatError)
from .heads import (ClsHeadClassifier, HashingEncoder, HeadWeights,
                    SpanPrediction, align_ner_labels, cls_forward,
                    cls_nll_and_grad, initial_head,
                    project_labels_to_segments, qa_decode_span, softmax,
                    train_head)
from .metrics import (EntitySpan, QaInstance, accuracy, extract_entities,
                      ner_macro_f1, normalize_answer, qa_exact_match, qa_f1,
                      sentence_char_bounds, sentence_match)
from .normalize import (NormalizationConfig, SentenceCorpus, TextNormalizer,
                        dedup_sentences, normalize_text, split_sentences)
from .pretrain import (PretrainParams, PretrainingExample, PretrainStats,
                       compute_stats, create_examples, deserialize,
                       read_examples, serialize, whole_word_mask)
from .rng import RngStream
from .segment import (ARABIC_RULES, BUILTIN_RULES, ROMANIZED_RULES,
                      MorphSegmenter, RuleTable, SegmentedWord, desegment,
                      segment_text, segment_text_aligned, segment_word)
from .unigram import (UnigramTokenizer, decode, encode, train_vocab,
                      viterbi_segment)
from .vocab import BOUNDARY, Encoding, Vocabulary, VocabConfig

__all__ = [
    "__version__",
    # errors
    "ArapipeError", "ConfigError", "FormatError", "AlignmentError",
    "DecodeError",
    # normalize
    "NormalizationConfig", "SentenceCorpus", "TextNormalizer",
    "normalize_text", "split_sentences", "dedup_sentences",
    # segment
    "SegmentedWord", "RuleTable", "MorphSegmenter", "segment_word",
    "segment_text", "segment_text_aligned", "desegment",
    "ARABIC_RULES", "ROMANIZED_RULES", "BUILTIN_RULES",
    # vocab / unigram
    "BOUNDARY", "VocabConfig", "Vocabulary", "Encoding", "UnigramTokenizer",
    "train_vocab", "viterbi_segment", "encode", "decode",
    # pretrain
    "PretrainParams", "PretrainingExample", "PretrainStats",
    "whole_word_mask", "create_examples", "serialize", "deserialize",
    "read_examples", "compute_stats",
    # heads
    "HeadWeights", "SpanPrediction", "HashingEncoder", "ClsHeadClassifier",
    "softmax", "cls_forward", "cls_nll_and_grad", "initial_head",
    "train_head", "align_ner_labels", "project_labels_to_segments",
    "qa_decode_span",
    # metrics
    "EntitySpan", "QaInstance", "accuracy", "extract_entities",
    "ner_macro_f1", "normalize_answer", "qa_exact_match", "qa_f1",
    "sentence_char_bounds", "sentence_match",
    # rng
    "RngStream",
]
