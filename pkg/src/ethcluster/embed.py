"""Word embeddings over the token corpus.

Skip-gram or CBOW with negative sampling, trained by plain SGD with a linear
learning-rate decay. All randomness (window shrinking, noise words) comes
from one seeded numpy generator drawn outside the hot loops, so training with
``workers=1`` is bit-reproducible and independent of whether the numba or the
fallback kernel path runs.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import EmptyVocab, FormatError, InvalidInput, VersionError

SKIP_GRAM = 1
CBOW = 0

_FORMAT_NAME = "ethcluster-embedding"
_FORMAT_VERSION = 1

#: Floor of the linear learning-rate decay.
MIN_LEARNING_RATE = 1e-4

#: Exponent flattening the unigram noise distribution.
NOISE_POWER = 0.75


@dataclass(frozen=True)
class EmbeddingConfig:
    vector_size: int = 100
    window: int = 5
    min_count: int = 1
    workers: int = 1
    sg: int = SKIP_GRAM
    epochs: int = 5
    seed: int = 1
    negative: int = 5
    initial_learning_rate: float = 0.025

    def __post_init__(self):
        if self.vector_size < 1 or self.window < 1 or self.epochs < 1:
            raise InvalidInput("vector_size, window and epochs must all be >= 1")
        if self.min_count < 0 or self.negative < 0:
            raise InvalidInput("min_count and negative must be >= 0")
        if self.workers < 1:
            raise InvalidInput("workers must be >= 1")
        if self.sg not in (SKIP_GRAM, CBOW):
            raise InvalidInput("sg must be 0 (CBOW) or 1 (skip-gram)")
        if self.initial_learning_rate <= 0:
            raise InvalidInput("initial_learning_rate must be positive")


class EmbeddingModel:
    """Immutable word -> vector lookup produced by training."""

    def __init__(self, vocab: dict[str, int], vectors: np.ndarray, config: EmbeddingConfig):
        self.vocab = vocab
        self.vectors = vectors
        self.vectors.setflags(write=False)
        self.config = config
        self._words = [None] * len(vocab)
        for word, idx in vocab.items():
            self._words[idx] = word

    def __contains__(self, word: str) -> bool:
        return word in self.vocab

    def vector(self, word: str) -> np.ndarray | None:
        """The trained vector for ``word``, or None when out of vocabulary."""
        idx = self.vocab.get(word)
        if idx is None:
            return None
        return self.vectors[idx]

    def words(self) -> list[str]:
        return list(self._words)


def _clamped_sigmoid(x: float) -> float:
    if x > 30.0:
        x = 30.0
    elif x < -30.0:
        x = -30.0
    return 1.0 / (1.0 + np.exp(-x))


def negative_sampling_loss(w_in: np.ndarray, w_out: np.ndarray,
                           pairs: Iterable[tuple[int, int, Sequence[int]]]) -> float:
    """Loss of the negative-sampling objective over (center, target, noise) pairs.

    Noise words colliding with the target are skipped, matching the training
    kernels. This is the function the SGD steps descend; the gradient check
    differentiates it numerically.
    """
    loss = 0.0
    for center, target, negatives in pairs:
        loss -= np.log(_clamped_sigmoid(float(np.dot(w_in[center], w_out[target]))))
        for neg in negatives:
            if neg == target:
                continue
            loss -= np.log(1.0 - _clamped_sigmoid(float(np.dot(w_in[center], w_out[neg]))))
    return float(loss)


def negative_sampling_gradients(w_in: np.ndarray, w_out: np.ndarray,
                                pairs: Iterable[tuple[int, int, Sequence[int]]]
                                ) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of :func:`negative_sampling_loss` w.r.t. both matrices."""
    g_in = np.zeros_like(w_in)
    g_out = np.zeros_like(w_out)
    for center, target, negatives in pairs:
        sig = _clamped_sigmoid(float(np.dot(w_in[center], w_out[target])))
        g_in[center] += (sig - 1.0) * w_out[target]
        g_out[target] += (sig - 1.0) * w_in[center]
        for neg in negatives:
            if neg == target:
                continue
            sig = _clamped_sigmoid(float(np.dot(w_in[center], w_out[neg])))
            g_in[center] += sig * w_out[neg]
            g_out[neg] += sig * w_in[center]
    return g_in, g_out


def _build_vocab(docs: Sequence[Sequence[str]], min_count: int) -> tuple[dict[str, int], np.ndarray]:
    counts: dict[str, int] = {}
    for doc in docs:
        for word in doc:
            counts[word] = counts.get(word, 0) + 1
    # stable order: frequency descending, first-seen breaking ties
    kept = [w for w in counts if counts[w] >= max(min_count, 1)]
    kept.sort(key=lambda w: -counts[w])
    vocab = {w: i for i, w in enumerate(kept)}
    freqs = np.array([counts[w] for w in kept], dtype=np.float64)
    return vocab, freqs


def _noise_cdf(freqs: np.ndarray) -> np.ndarray:
    weights = freqs ** NOISE_POWER
    return np.cumsum(weights / weights.sum())


def train_embedding(docs: Sequence[Sequence[str]], config: EmbeddingConfig) -> EmbeddingModel:
    """Train word vectors over tokenized documents.

    With ``workers=1`` the result is a pure function of (docs, config).
    ``workers > 1`` dispatches documents to threads whose in-place updates
    interleave without locking; that run is fast but not reproducible.
    """
    if not docs:
        raise InvalidInput("document list is empty")
    vocab, freqs = _build_vocab(docs, config.min_count)
    if not vocab:
        raise EmptyVocab(f"no word reaches min_count={config.min_count}")

    encoded = []
    for doc in docs:
        idx = [vocab[w] for w in doc if w in vocab]
        if idx:
            encoded.append(np.array(idx, dtype=np.int64))
    cdf = _noise_cdf(freqs)
    vocab_size = len(vocab)
    dim = config.vector_size

    rng = np.random.default_rng(config.seed)
    bound = 0.5 / dim
    w_in = rng.uniform(-bound, bound, size=(vocab_size, dim))
    w_out = np.zeros((vocab_size, dim))

    total_positions = config.epochs * sum(len(d) for d in encoded)
    kernel = _kernels.skipgram_doc if config.sg == SKIP_GRAM else _kernels.cbow_doc
    a0 = config.initial_learning_rate
    amin = min(MIN_LEARNING_RATE, a0)

    def doc_tasks(epoch: int):
        position = epoch * sum(len(d) for d in encoded)
        for doc in encoded:
            n = len(doc)
            b = rng.integers(1, config.window + 1, size=n)
            pos = np.arange(n)
            lo = np.maximum(0, pos - b)
            hi = np.minimum(n - 1, pos + b)
            if config.sg == SKIP_GRAM:
                n_rows = int((hi - lo).sum())
            else:
                n_rows = n
            if config.negative > 0 and n_rows > 0:
                u = rng.random((n_rows, config.negative))
                negs = np.minimum(np.searchsorted(cdf, u, side="right"), vocab_size - 1)
                negs = negs.astype(np.int64)
            else:
                negs = np.zeros((n_rows, config.negative), dtype=np.int64)
            alphas = a0 - (a0 - amin) * ((position + pos) / max(1, total_positions))
            alphas = np.maximum(amin, alphas)
            position += n
            yield doc, lo, hi, negs, alphas

    for epoch in range(config.epochs):
        if config.workers == 1:
            for doc, lo, hi, negs, alphas in doc_tasks(epoch):
                kernel(w_in, w_out, doc, lo, hi, negs, alphas)
        else:
            tasks = list(doc_tasks(epoch))
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                futures = [
                    pool.submit(kernel, w_in, w_out, doc, lo, hi, negs, alphas)
                    for doc, lo, hi, negs, alphas in tasks
                ]
                for fut in futures:
                    fut.result()

    return EmbeddingModel(vocab=vocab, vectors=w_in, config=config)


def save_model(model: EmbeddingModel, path: str | Path) -> None:
    """Write the model as a versioned UTF-8 text file, losslessly."""
    cfg = json.dumps(asdict(model.config), sort_keys=True)
    lines = [f"{_FORMAT_NAME} {_FORMAT_VERSION} {model.config.vector_size} {len(model.vocab)} {cfg}"]
    for word in model.words():
        vec = model.vectors[model.vocab[word]]
        lines.append(word + " " + " ".join(repr(float(x)) for x in vec))
    Path(path).write_text("\n".join(lines) + "\n", "utf-8")


def load_model(path: str | Path) -> EmbeddingModel:
    """Read a model written by :func:`save_model`; bit-exact round trip."""
    text = Path(path).read_text("utf-8")
    lines = text.splitlines()
    if not lines:
        raise FormatError(f"{path}: empty model file")
    head = lines[0].split(" ", 4)
    if len(head) != 5 or head[0] != _FORMAT_NAME:
        raise FormatError(f"{path}: not an embedding model file")
    if head[1] != str(_FORMAT_VERSION):
        raise VersionError(f"{path}: unsupported format version {head[1]!r}")
    try:
        dim = int(head[2])
        vocab_size = int(head[3])
        config = EmbeddingConfig(**json.loads(head[4]))
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: bad header: {exc}") from exc
    if len(lines) - 1 < vocab_size:
        raise FormatError(f"{path}: expected {vocab_size} vector lines, found {len(lines) - 1}")
    vocab: dict[str, int] = {}
    vectors = np.empty((vocab_size, dim))
    for i in range(vocab_size):
        parts = lines[1 + i].split(" ")
        if len(parts) != dim + 1:
            raise FormatError(f"{path}: line {i + 2} has {len(parts) - 1} components, expected {dim}")
        vocab[parts[0]] = i
        try:
            vectors[i] = [float(x) for x in parts[1:]]
        except ValueError as exc:
            raise FormatError(f"{path}: line {i + 2}: {exc}") from exc
    return EmbeddingModel(vocab=vocab, vectors=vectors, config=config)
