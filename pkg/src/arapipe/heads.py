"""Task-head math at desk scale: a linear softmax classifier trained by
full-batch gradient descent, label/piece alignment for tagging tasks, and
answer-span decoding for extractive QA.

The classifier here is the final projection layer one would put on top of a
sentence encoder, isolated so its gradients and training dynamics can be
checked exactly.  Everything is deterministic given a seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, ConfigError, DecodeError, FormatError
from .metrics import continuation_tag, split_iob2_tag
from .records import crc32, read_exact
from .rng import _GOLDEN, _MASK64, _mix
from .segment import SegmentedWord, marker_word_groups
from .validation import check_array_2d

HEAD_MAGIC = b"ABHW"
HEAD_VERSION = 1
_HEAD_HEADER = struct.Struct("<4sIII")


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax; accepts a single logit vector too."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim == 1:
        return softmax(z[None, :])[0]
    if z.ndim != 2:
        raise ConfigError(f"logits must be 1-d or 2-d, got {z.ndim}-d")
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class HeadWeights:
    """Weights of a linear classification head: logits = x @ w + b."""

    w: np.ndarray  # (dim, n_classes)
    b: np.ndarray  # (n_classes,)

    def validate(self) -> None:
        if self.w.ndim != 2:
            raise ConfigError(f"weight matrix must be 2-d, got {self.w.ndim}-d")
        if self.b.shape != (self.w.shape[1],):
            raise ConfigError(
                f"bias shape {self.b.shape} does not match {self.w.shape[1]} classes")
        if not (np.isfinite(self.w).all() and np.isfinite(self.b).all()):
            raise ConfigError("head weights must be finite")

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    @property
    def n_classes(self) -> int:
        return self.w.shape[1]

    def save(self, path: str) -> None:
        """Write the binary weight format (magic ABHW, version 1).

        Layout: magic, version u32, dim u32, n_classes u32, then the weight
        matrix row-major and the bias vector as little-endian float64, then
        a CRC-32 (u32) of all preceding bytes.
        """
        self.validate()
        header = _HEAD_HEADER.pack(HEAD_MAGIC, HEAD_VERSION,
                                   self.dim, self.n_classes)
        payload = (np.ascontiguousarray(self.w, dtype="<f8").tobytes()
                   + np.ascontiguousarray(self.b, dtype="<f8").tobytes())
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
            fh.write(struct.pack("<I", crc32(header + payload)))

    @classmethod
    def load(cls, path: str) -> "HeadWeights":
        with open(path, "rb") as fh:
            header = read_exact(fh, _HEAD_HEADER.size, "weight header")
            magic, version, dim, n_classes = _HEAD_HEADER.unpack(header)
            if magic != HEAD_MAGIC:
                raise FormatError(f"bad magic {magic!r}, expected {HEAD_MAGIC!r}",
                                  offset=0)
            if version != HEAD_VERSION:
                raise FormatError(f"unsupported weight format version {version}",
                                  offset=4)
            n_floats = dim * n_classes + n_classes
            payload = read_exact(fh, n_floats * 8, "weight payload")
            stored_offset = _HEAD_HEADER.size + len(payload)
            (stored,) = struct.unpack("<I", read_exact(fh, 4, "weight checksum"))
            if stored != crc32(header + payload):
                raise FormatError("weight checksum mismatch", offset=stored_offset)
            if fh.read(1):
                raise FormatError("trailing data after weight record",
                                  offset=stored_offset + 4)
        flat = np.frombuffer(payload, dtype="<f8")
        weights = cls(w=flat[:dim * n_classes].reshape(dim, n_classes).copy(),
                      b=flat[dim * n_classes:].copy())
        weights.validate()
        return weights


def _check_batch(x: np.ndarray, y: np.ndarray,
                 weights: HeadWeights) -> tuple[np.ndarray, np.ndarray]:
    x = check_array_2d(x, "x")
    y = np.asarray(y)
    if x.shape[0] == 0:
        raise ConfigError("batch must contain at least one example")
    if y.shape != (x.shape[0],):
        raise AlignmentError(
            f"{x.shape[0]} feature rows vs {y.shape} labels")
    if x.shape[1] != weights.dim:
        raise ConfigError(
            f"feature dim {x.shape[1]} does not match head dim {weights.dim}")
    y = y.astype(np.int64, copy=False)
    if y.min() < 0 or y.max() >= weights.n_classes:
        raise ConfigError(
            f"label out of range [0, {weights.n_classes}): {y.min()}..{y.max()}")
    return x, y


def cls_forward(x: np.ndarray, weights: HeadWeights) -> np.ndarray:
    """Class probabilities for one feature vector or a batch of them."""
    weights.validate()
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != weights.dim:
        raise ConfigError(
            f"feature dim {x.shape[1]} does not match head dim {weights.dim}")
    probs = softmax(x @ weights.w + weights.b)
    return probs[0] if single else probs


def cls_nll_and_grad(x: np.ndarray, y: np.ndarray, weights: HeadWeights,
                     ) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean negative log-likelihood and its gradient w.r.t. (w, b)."""
    weights.validate()
    x, y = _check_batch(x, y, weights)
    n = x.shape[0]
    probs = softmax(x @ weights.w + weights.b)
    nll = float(-np.mean(np.log(probs[np.arange(n), y])))
    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    return nll, x.T @ dlogits, dlogits.sum(axis=0)


def initial_head(dim: int, n_classes: int, seed: int = 0) -> HeadWeights:
    """Small seeded Gaussian init (scale 0.01), zero bias."""
    if dim < 1 or n_classes < 2:
        raise ConfigError(
            f"head needs dim >= 1 and n_classes >= 2, got {dim}, {n_classes}")
    rng = np.random.default_rng(seed)
    return HeadWeights(w=rng.normal(0.0, 0.01, size=(dim, n_classes)),
                       b=np.zeros(n_classes))


def train_head(x: np.ndarray, y: np.ndarray, n_classes: int | None = None,
               lr: float = 0.5, epochs: int = 200, seed: int = 0,
               ) -> tuple[HeadWeights, list[float]]:
    """Train by full-batch gradient descent; returns (weights, loss history).

    ``epochs=0`` returns the seeded initial weights untouched.  The loss
    history holds the mean NLL *before* each update, so its length equals
    ``epochs``.
    """
    if lr <= 0:
        raise ConfigError(f"learning rate must be positive, got {lr}")
    if epochs < 0:
        raise ConfigError(f"epochs must be >= 0, got {epochs}")
    x = check_array_2d(x, "x")
    y = np.asarray(y, dtype=np.int64)
    if n_classes is None:
        if y.size == 0:
            raise ConfigError("cannot infer class count from an empty batch")
        n_classes = int(y.max()) + 1
    weights = initial_head(x.shape[1], n_classes, seed=seed)
    history: list[float] = []
    for _ in range(epochs):
        nll, grad_w, grad_b = cls_nll_and_grad(x, y, weights)
        history.append(nll)
        weights.w -= lr * grad_w
        weights.b -= lr * grad_b
    return weights, history


# --- feature hashing + sklearn-style wrappers ------------------------------


class HashingEncoder:
    """Hashed bag-of-pieces features: token-id lists -> fixed-dim vectors.

    Each token id is hashed to one of ``dim`` buckets with a +/-1 sign; the
    resulting count vector is L2-normalized (all-zero rows stay zero).  This
    stands in for a sentence encoder when exercising head training.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def get_params(self, deep: bool = True) -> dict:
        return {"dim": self.dim, "seed": self.seed}

    def set_params(self, **params) -> "HashingEncoder":
        for key, value in params.items():
            if key not in ("dim", "seed"):
                raise ConfigError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, X=None, y=None) -> "HashingEncoder":
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        return self

    def transform(self, X) -> np.ndarray:
        self.fit()
        base = _mix((self.seed + _GOLDEN) & _MASK64)
        out = np.zeros((len(X), self.dim))
        for row, item in enumerate(X):
            ids = item.ids if hasattr(item, "ids") else item
            for token_id in ids:
                h = _mix((base ^ _mix((int(token_id) + 1) * _GOLDEN & _MASK64))
                         & _MASK64)
                sign = 1.0 if (h >> 63) & 1 else -1.0
                out[row, h % self.dim] += sign
            norm = float(np.linalg.norm(out[row]))
            if norm > 0:
                out[row] /= norm
        return out

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X, y).transform(X)


class ClsHeadClassifier:
    """sklearn-style wrapper around :func:`train_head`.

    fit(X, y) takes a 2-d feature matrix and arbitrary hashable labels;
    predict/predict_proba use the trained linear head.
    """

    def __init__(self, lr: float = 0.5, epochs: int = 200, seed: int = 0):
        self.lr = lr
        self.epochs = epochs
        self.seed = seed

    def get_params(self, deep: bool = True) -> dict:
        return {"lr": self.lr, "epochs": self.epochs, "seed": self.seed}

    def set_params(self, **params) -> "ClsHeadClassifier":
        for key, value in params.items():
            if key not in ("lr", "epochs", "seed"):
                raise ConfigError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, X, y) -> "ClsHeadClassifier":
        X = check_array_2d(X, "X")
        labels = list(y)
        if len(labels) != X.shape[0]:
            raise AlignmentError(f"{X.shape[0]} feature rows vs {len(labels)} labels")
        self.classes_ = sorted(set(labels))
        if len(self.classes_) < 2:
            raise ConfigError("need at least two distinct classes to fit")
        index = {c: i for i, c in enumerate(self.classes_)}
        y_idx = np.array([index[label] for label in labels], dtype=np.int64)
        self.weights_, self.loss_history_ = train_head(
            X, y_idx, n_classes=len(self.classes_),
            lr=self.lr, epochs=self.epochs, seed=self.seed)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "weights_"):
            from sklearn.exceptions import NotFittedError
            raise NotFittedError(
                "This ClsHeadClassifier instance is not fitted yet. "
                "Call 'fit' before using this estimator.")

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        return cls_forward(check_array_2d(X, "X"), self.weights_)

    def predict(self, X) -> list:
        probs = self.predict_proba(X)
        return [self.classes_[i] for i in probs.argmax(axis=1)]

    def score(self, X, y) -> float:
        preds = self.predict(X)
        golds = list(y)
        return sum(p == g for p, g in zip(preds, golds)) / len(golds)


# --- tagging-task alignment -------------------------------------------------


def align_ner_labels(words: list[str], word_labels: list[str], encoding,
                     ) -> tuple[list[str], list[int]]:
    """Project word-level IOB2 labels onto subword pieces.

    The first piece of each word keeps the word's label and gets loss mask 1;
    continuation pieces get the I- continuation of that label and mask 0, so
    exactly one piece per word is scored.
    """
    if len(words) != len(word_labels):
        raise AlignmentError(
            f"{len(words)} words vs {len(word_labels)} labels")
    for tag in word_labels:
        split_iob2_tag(tag)
    piece_labels: list[str] = []
    loss_mask: list[int] = []
    seen: set[int] = set()
    for wid in encoding.word_ids:
        if not 0 <= wid < len(words):
            raise AlignmentError(
                f"piece refers to word {wid}, but only {len(words)} words given")
        if wid in seen:
            piece_labels.append(continuation_tag(word_labels[wid]))
            loss_mask.append(0)
        else:
            seen.add(wid)
            piece_labels.append(word_labels[wid])
            loss_mask.append(1)
    if len(seen) != len(words):
        missing = next(i for i in range(len(words)) if i not in seen)
        raise AlignmentError(f"word {missing} ({words[missing]!r}) produced no pieces")
    return piece_labels, loss_mask


def project_labels_to_segments(word_labels: list[str],
                               segmentation) -> list[str]:
    """Expand word-level IOB2 labels over morphological segments.

    ``segmentation`` is either a list of :class:`SegmentedWord` or a marked
    segmented string; a B- label covers the word's first segment and its
    remaining segments continue as I- of the same class.
    """
    if isinstance(segmentation, str):
        indices = marker_word_groups(segmentation.split())
        counts = [0] * (indices[-1] + 1 if indices else 0)
        for g in indices:
            counts[g] += 1
    else:
        counts = []
        for word in segmentation:
            if not isinstance(word, SegmentedWord):
                raise ConfigError(
                    "segmentation must be a marked string or SegmentedWord list")
            counts.append(len(word.tokens()))
    if len(word_labels) != len(counts):
        raise AlignmentError(
            f"{len(word_labels)} labels vs {len(counts)} segmented words")
    out: list[str] = []
    for label, count in zip(word_labels, counts):
        out.append(label)
        out.extend([continuation_tag(label)] * (count - 1))
    return out


# --- extractive-QA span decoding --------------------------------------------


@dataclass(frozen=True)
class SpanPrediction:
    """Decoded answer span: inclusive token indices and the joint score."""

    start: int
    end: int
    score: float


def qa_decode_span(start_scores, end_scores, valid=None,
                   max_answer_len: int = 30) -> SpanPrediction:
    """Best (start, end) pair by joint score under the validity mask.

    Maximizes ``start_scores[i] + end_scores[j]`` over pairs with
    ``i <= j < i + max_answer_len`` and both positions valid.  Ties resolve
    to the smaller start, then the smaller end.
    """
    s = np.asarray(start_scores, dtype=np.float64)
    e = np.asarray(end_scores, dtype=np.float64)
    if s.ndim != 1 or s.shape != e.shape:
        raise ConfigError(
            f"score vectors must be 1-d and equal length, got {s.shape} and {e.shape}")
    if s.size == 0:
        raise ConfigError("score vectors must be non-empty")
    if not (np.isfinite(s).all() and np.isfinite(e).all()):
        raise ConfigError("scores must be finite")
    if max_answer_len < 1:
        raise ConfigError(f"max_answer_len must be >= 1, got {max_answer_len}")
    if valid is None:
        mask = np.ones(s.size, dtype=bool)
    else:
        mask = np.asarray(valid).astype(bool)
        if mask.shape != s.shape:
            raise ConfigError(
                f"validity mask shape {mask.shape} does not match scores {s.shape}")
    best: SpanPrediction | None = None
    n = s.size
    for i in range(n):
        if not mask[i]:
            continue
        stop = min(n, i + max_answer_len)
        for j in range(i, stop):
            if not mask[j]:
                continue
            score = float(s[i] + e[j])
            if best is None or score > best.score:
                best = SpanPrediction(i, j, score)
    if best is None:
        raise DecodeError("no valid (start, end) pair under the mask")
    return best
