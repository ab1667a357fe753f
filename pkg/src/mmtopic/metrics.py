"""Topic quality metrics over keywords and image descriptors.

Keyword-side: NPMI coherence against a reference corpus, word-embedding
coherence, topic diversity, and inverted rank-biased overlap. Image-side:
embedding coherence within a topic's image set (IEC) and pairwise image-set
similarity across topics (IEPS). Cosine-based scores keep their
mathematical range [-1, 1]; embeddings are arbitrary vectors, not
necessarily nonnegative.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, asdict
from itertools import combinations
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

_NPMI_EPS = 1e-12


def _sliding_windows(tokens, window: int):
    """Contiguous spans of length ``window`` with step 1; a document shorter
    than the window yields itself as a single window."""
    n = len(tokens)
    if n <= window:
        yield tokens
        return
    for i in range(n - window + 1):
        yield tokens[i:i + window]


def _window_counts(reference_docs, window: int, relevant: set[str]):
    """Boolean presence counts per window for the relevant terms and their
    co-occurring pairs. Returns (word_counts, pair_counts, total_windows)."""
    word_counts: dict[str, int] = {}
    pair_counts: dict[tuple[str, str], int] = {}
    total = 0
    for tokens in reference_docs:
        for span in _sliding_windows(tokens, window):
            total += 1
            present = relevant.intersection(span)
            for w in present:
                word_counts[w] = word_counts.get(w, 0) + 1
            if len(present) > 1:
                for a, b in combinations(sorted(present), 2):
                    pair_counts[(a, b)] = pair_counts.get((a, b), 0) + 1
    return word_counts, pair_counts, total


def _pair_npmi(p_i: float, p_j: float, p_ij: float) -> float:
    if p_ij >= 1.0:
        # Both words in every window: perfect association by convention,
        # since the normalizer log(p_ij) vanishes.
        return 1.0
    if p_ij == 0.0:
        p_ij = _NPMI_EPS
    return float(np.log(p_ij / (p_i * p_j)) / -np.log(p_ij))


def _npmi_per_topic(topics, reference_docs, window: int = 10) -> list[float]:
    if window < 1:
        raise ValueError("window must be >= 1")
    if not topics or any(len(t) < 2 for t in topics):
        raise ValueError("each topic needs at least two words")
    reference_docs = list(reference_docs)
    if not reference_docs:
        raise ValueError("reference corpus is empty")
    relevant = set()
    for t in topics:
        relevant.update(t)
    word_counts, pair_counts, total = _window_counts(reference_docs, window, relevant)

    scores = []
    for t_idx, topic in enumerate(topics):
        pair_scores = []
        for a, b in combinations(topic, 2):
            c_a, c_b = word_counts.get(a, 0), word_counts.get(b, 0)
            if c_a == 0 or c_b == 0:
                continue  # word absent from the reference corpus
            key = (a, b) if a <= b else (b, a)
            c_ab = pair_counts.get(key, 0)
            pair_scores.append(_pair_npmi(c_a / total, c_b / total, c_ab / total))
        if not pair_scores:
            logger.warning("topic %d: no top-word pair occurs in the reference "
                           "corpus; contributing 0", t_idx)
            scores.append(0.0)
        else:
            scores.append(float(np.mean(pair_scores)))
    return scores


def npmi(topics, reference_docs, window: int = 10) -> float:
    """Mean NPMI coherence over topics.

    Probabilities are boolean sliding-window presence frequencies over the
    reference documents. Pairs with a word that never occurs are skipped; a
    topic with no scorable pair contributes 0 and is flagged in the log.
    """
    return float(np.mean(_npmi_per_topic(topics, reference_docs, window)))


def _strict_cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for a zero-norm vector")
    return float(np.dot(a, b) / (na * nb))


def _we_per_topic(topics, word_vectors) -> list[float | None]:
    values: list[float | None] = []
    for t_idx, topic in enumerate(topics):
        vecs = [np.asarray(word_vectors[w], dtype=np.float64)
                for w in topic if w in word_vectors]
        if len(vecs) < 2:
            logger.warning("topic %d: fewer than two embedded terms; skipped "
                           "from word-embedding coherence", t_idx)
            values.append(None)
            continue
        sims = [_strict_cosine(a, b) for a, b in combinations(vecs, 2)]
        values.append(float(np.mean(sims)))
    return values


def we_coherence(topics, word_vectors) -> float:
    """Mean pairwise cosine similarity of each topic's embedded top words,
    averaged over topics. Topics with fewer than two terms in the vector
    vocabulary are skipped; if every topic is skipped this raises."""
    values = [v for v in _we_per_topic(topics, word_vectors) if v is not None]
    if not values:
        raise ValueError("no topic has two or more embedded terms")
    return float(np.mean(values))


def topic_diversity(topics, n: int = 10) -> float:
    """Fraction of distinct words among the top-``n`` slots of all topics."""
    if not topics:
        raise ValueError("at least one topic is required")
    if any(len(t) < n for t in topics):
        raise ValueError(f"every topic needs at least {n} words")
    unique = set()
    for t in topics:
        unique.update(t[:n])
    return len(unique) / (n * len(topics))


def rbo(list_a, list_b, p: float = 0.9) -> float:
    """Extrapolated rank-biased overlap of two equal-length rankings
    without duplicates; 1 for identical lists, 0 for disjoint ones."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    a, b = list(list_a), list(list_b)
    d = len(a)
    if d == 0 or len(b) != d:
        raise ValueError("lists must be non-empty and of equal length")
    if len(set(a)) != d or len(set(b)) != d:
        raise ValueError("lists must not contain duplicates")
    seen_a: set = set()
    seen_b: set = set()
    overlap = 0
    tail = 0.0
    for i in range(d):
        if a[i] == b[i]:
            overlap += 1
        else:
            overlap += (a[i] in seen_b) + (b[i] in seen_a)
        seen_a.add(a[i])
        seen_b.add(b[i])
        tail += overlap / (i + 1) * p ** (i + 1)
    return overlap / d * p ** d + (1.0 - p) / p * tail


def irbo(topics, p: float = 0.9) -> float:
    """Inverted rank-biased overlap: 1 minus the mean pairwise RBO over all
    topic pairs. 1 means fully distinct topics, 0 means identical ones."""
    if len(topics) < 2:
        raise ValueError("at least two topics are required")
    sims = [rbo(a, b, p=p) for a, b in combinations(topics, 2)]
    return 1.0 - float(np.mean(sims))


def _unit(vectors) -> np.ndarray:
    arr = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(arr, axis=-1)
    if np.any(norms == 0.0):
        raise ValueError("cosine undefined for a zero-norm embedding")
    return arr / norms[..., None]


def _iec_per_topic(topic_image_sets) -> list[float]:
    values = []
    for t_idx, images in enumerate(topic_image_sets):
        arr = np.asarray(images, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 2:
            raise ValueError(f"topic {t_idx}: at least two image embeddings required")
        unit = _unit(arr)
        gram = unit @ unit.T
        iu = np.triu_indices(arr.shape[0], k=1)
        values.append(float(np.mean(gram[iu])))
    return values


def iec(topic_image_sets) -> float:
    """Image embedding coherence: for each topic, the mean pairwise cosine
    similarity of its descriptor image embeddings; averaged over topics."""
    if not topic_image_sets:
        raise ValueError("at least one topic image set is required")
    return float(np.mean(_iec_per_topic(topic_image_sets)))


def ieps(topic_image_sets) -> float:
    """Image embedding pairwise similarity across topics: for each pair of
    topics, the mean cosine over all cross-set image pairs; averaged over
    the topic pairs. Lower values mean more visually distinct topics."""
    k = len(topic_image_sets)
    if k < 2:
        raise ValueError("at least two topic image sets are required")
    sizes = {np.asarray(s).shape[0] for s in topic_image_sets}
    if len(sizes) != 1:
        raise ValueError(f"image sets must share one size, got {sorted(sizes)}")
    units = [_unit(np.asarray(s, dtype=np.float64)) for s in topic_image_sets]
    pair_means = [float(np.mean(units[a] @ units[b].T))
                  for a, b in combinations(range(k), 2)]
    return float(np.mean(pair_means))


def load_word_vectors(path: str | Path) -> dict[str, np.ndarray]:
    """Read a text word-vector file: one ``term v1 ... vd`` per line.
    Dimensions must agree across lines."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            term, values = parts[0], parts[1:]
            if not values:
                raise ValueError(f"line {lineno}: no vector components")
            try:
                vec = np.array([float(x) for x in values])
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric vector component")
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise ValueError(f"line {lineno}: dimension {vec.size} differs "
                                 f"from {dim}")
            vectors[term] = vec
    if not vectors:
        raise ValueError(f"{path}: no vectors found")
    return vectors


@dataclass(frozen=True)
class MetricReport:
    """All metric values for one trained model; metrics that do not apply
    (image metrics for unimodal kinds, word-embedding coherence without
    vectors) stay None and render as blank cells."""

    model_id: str
    npmi: float | None = None
    we: float | None = None
    td: float | None = None
    irbo: float | None = None
    iec: float | None = None
    ieps: float | None = None
    per_topic: dict | None = None
    params: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(**d)

    def values(self) -> dict[str, float | None]:
        return {"npmi": self.npmi, "we": self.we, "td": self.td,
                "irbo": self.irbo, "iec": self.iec, "ieps": self.ieps}


def compute_metric_report(model, corpus, *, word_vectors=None,
                          n_descriptors: int = 10, window: int = 10,
                          rbo_p: float = 0.9,
                          model_id: str | None = None) -> MetricReport:
    """Evaluate a trained model on its corpus.

    Keyword metrics always apply. Word-embedding coherence runs only when
    vectors are supplied. Image metrics run for multimodal kinds, over the
    top image descriptors each topic selects from the corpus.
    """
    from .descriptors import top_images, top_keywords
    from .models import MULTIMODAL_KINDS

    topics = [top_keywords(model.topic_word_matrix, model.vocabulary, t, n_descriptors)
              for t in range(model.num_topics)]
    reference = corpus.token_lists()

    npmi_topics = _npmi_per_topic(topics, reference, window)
    per_topic: dict = {"npmi": npmi_topics}
    report = {
        "npmi": float(np.mean(npmi_topics)),
        "td": topic_diversity(topics, n=n_descriptors),
        "irbo": irbo(topics, p=rbo_p),
        "we": None, "iec": None, "ieps": None,
    }
    if word_vectors is not None:
        we_topics = _we_per_topic(topics, word_vectors)
        per_topic["we"] = we_topics
        present = [v for v in we_topics if v is not None]
        report["we"] = float(np.mean(present)) if present else None

    if model.kind in MULTIMODAL_KINDS:
        image_sets = [
            np.stack([im.embedding for im in
                      top_images(model.doc_topics, corpus, t, n_descriptors)])
            for t in range(model.num_topics)
        ]
        iec_topics = _iec_per_topic(image_sets)
        per_topic["iec"] = iec_topics
        report["iec"] = float(np.mean(iec_topics))
        report["ieps"] = ieps(image_sets)

    return MetricReport(
        model_id=model_id if model_id is not None else model.label,
        per_topic=per_topic,
        params={"n_descriptors": n_descriptors, "window": window, "rbo_p": rbo_p},
        **report,
    )
