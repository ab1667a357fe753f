"""Multimodal corpus handling: preprocessing, vocabularies, the JSON-lines
dataset format, and planted-topic synthetic corpora.

Each document pairs a bag-of-words over a shared capped vocabulary with two
precomputed embedding vectors, one for the text and one for the image. The
toolkit never runs an encoder; embeddings arrive as numbers and stay opaque.

Dataset format (UTF-8, one JSON object per line)::

    {"id": "d1", "text": "a brown dog ...",
     "text_embedding": [...], "image_embedding": [...],
     "image_ref": "optional-label"}

``tokens`` (a list of strings) may replace ``text`` when preprocessing has
already been done elsewhere; a line must carry exactly one of the two. A
sidecar vocabulary file (``<stem>.vocab.txt`` next to the dataset, or
``vocab.txt`` in the same directory, one term per line) pins the vocabulary;
otherwise it is built from the data.
"""

from __future__ import annotations

import json
import string
from collections import Counter
from dataclasses import dataclass, field, asdict
from importlib import resources
from pathlib import Path

import numpy as np

DEFAULT_VOCAB_CAP = 2000

# Per-document topic-mixture concentration used by the synthetic generator.
# Small enough that most documents are dominated by one planted topic, which
# keeps each topic's empirical top words inside its own word block.
_MIXTURE_CONCENTRATION = 0.03


class DatasetFormatError(ValueError):
    """A dataset file violates the JSON-lines document format."""


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load a stopword list, one word per line. Defaults to the bundled
    English list."""
    if path is None:
        text = resources.files("mmtopic.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def preprocess_tokens(raw_text: str, stopwords: frozenset[str] | set[str]) -> list[str]:
    """Lowercase and whitespace-split ``raw_text``, stripping punctuation at
    token boundaries, dropping tokens that contain any digit, and dropping
    stopwords. Returns the surviving tokens in order."""
    kept = []
    for token in raw_text.lower().split():
        token = token.strip(string.punctuation)
        if not token:
            continue
        if any(ch.isdigit() for ch in token):
            continue
        if token in stopwords:
            continue
        kept.append(token)
    return kept


@dataclass(frozen=True)
class Vocabulary:
    """Ordered set of distinct terms with a term -> index map."""

    terms: tuple[str, ...]
    index: dict[str, int] = field(repr=False)

    @classmethod
    def from_terms(cls, terms) -> "Vocabulary":
        terms = tuple(terms)
        index = {t: i for i, t in enumerate(terms)}
        if len(index) != len(terms):
            raise ValueError("vocabulary terms must be distinct")
        if not terms:
            raise ValueError("vocabulary must contain at least one term")
        return cls(terms=terms, index=index)

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


def build_vocabulary(token_lists, cap: int = DEFAULT_VOCAB_CAP) -> Vocabulary:
    """Build a vocabulary of the ``cap`` most frequent tokens.

    Terms are ordered by descending corpus frequency; frequency ties break
    lexicographically ascending, so the result is deterministic.
    """
    if cap < 1:
        raise ValueError(f"vocabulary cap must be >= 1, got {cap}")
    counts = Counter()
    for tokens in token_lists:
        counts.update(tokens)
    if not counts:
        raise ValueError("no distinct tokens: cannot build a vocabulary")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary.from_terms(t for t, _ in ranked[:cap])


def vectorize(tokens, vocabulary: Vocabulary) -> np.ndarray:
    """Count vector of in-vocabulary token occurrences, shape (V,), int64."""
    bow = np.zeros(len(vocabulary), dtype=np.int64)
    index = vocabulary.index
    for token in tokens:
        i = index.get(token)
        if i is not None:
            bow[i] += 1
    return bow


@dataclass(frozen=True)
class MultimodalDocument:
    id: str
    tokens: tuple[str, ...]
    bow: np.ndarray
    text_embedding: np.ndarray
    image_embedding: np.ndarray
    image_ref: str | None = None


@dataclass(frozen=True)
class Corpus:
    """Immutable bundle of documents over one vocabulary.

    Construction validates that every bag-of-words matches its token list
    restricted to the vocabulary, that embedding dimensions are constant
    across documents, that all embedding values are finite, and that at
    least one document has at least one in-vocabulary token. Arrays are
    frozen after validation.
    """

    vocabulary: Vocabulary
    documents: tuple[MultimodalDocument, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.documents:
            raise ValueError("corpus must contain at least one document")
        v = len(self.vocabulary)
        text_dim = self.documents[0].text_embedding.shape
        image_dim = self.documents[0].image_embedding.shape
        any_in_vocab = False
        for d in self.documents:
            if d.bow.shape != (v,):
                raise ValueError(
                    f"document {d.id!r}: bow has shape {d.bow.shape}, expected ({v},)")
            if not np.array_equal(d.bow, vectorize(d.tokens, self.vocabulary)):
                raise ValueError(
                    f"document {d.id!r}: bow does not match its tokens")
            if d.text_embedding.shape != text_dim or d.text_embedding.ndim != 1:
                raise ValueError(
                    f"document {d.id!r}: text embedding shape {d.text_embedding.shape} "
                    f"differs from {text_dim}")
            if d.image_embedding.shape != image_dim or d.image_embedding.ndim != 1:
                raise ValueError(
                    f"document {d.id!r}: image embedding shape {d.image_embedding.shape} "
                    f"differs from {image_dim}")
            if not (np.all(np.isfinite(d.text_embedding))
                    and np.all(np.isfinite(d.image_embedding))):
                raise ValueError(f"document {d.id!r}: non-finite embedding values")
            if d.bow.sum() > 0:
                any_in_vocab = True
        if not any_in_vocab:
            raise ValueError("no document has any in-vocabulary token")
        for d in self.documents:
            for arr in (d.bow, d.text_embedding, d.image_embedding):
                arr.flags.writeable = False

    @property
    def num_documents(self) -> int:
        return len(self.documents)

    @property
    def text_dim(self) -> int:
        return self.documents[0].text_embedding.shape[0]

    @property
    def image_dim(self) -> int:
        return self.documents[0].image_embedding.shape[0]

    def bow_matrix(self) -> np.ndarray:
        return np.stack([d.bow for d in self.documents]).astype(np.float64)

    def text_matrix(self) -> np.ndarray:
        return np.stack([d.text_embedding for d in self.documents])

    def image_matrix(self) -> np.ndarray:
        return np.stack([d.image_embedding for d in self.documents])

    def token_lists(self) -> list[tuple[str, ...]]:
        return [d.tokens for d in self.documents]


def _parse_embedding(obj, name: str, lineno: int) -> np.ndarray:
    if name not in obj:
        raise DatasetFormatError(f"line {lineno}: missing required field {name!r}")
    try:
        arr = np.asarray(obj[name], dtype=np.float64)
    except (TypeError, ValueError):
        raise DatasetFormatError(f"line {lineno}: field {name!r} is not a numeric array")
    if arr.ndim != 1 or arr.size == 0:
        raise DatasetFormatError(f"line {lineno}: field {name!r} must be a non-empty flat array")
    if not np.all(np.isfinite(arr)):
        raise DatasetFormatError(f"line {lineno}: field {name!r} contains non-finite values")
    return arr


def _find_sidecar_vocab(path: Path) -> Path | None:
    stem_sidecar = path.with_name(path.stem + ".vocab.txt")
    if stem_sidecar.exists():
        return stem_sidecar
    generic = path.with_name("vocab.txt")
    if generic.exists():
        return generic
    return None


def read_vocab_file(path: str | Path) -> Vocabulary:
    lines = Path(path).read_text("utf-8").splitlines()
    return Vocabulary.from_terms(t.strip() for t in lines if t.strip())


def load_corpus(path: str | Path, *, cap: int = DEFAULT_VOCAB_CAP,
                stopwords: frozenset[str] | None = None,
                vocabulary: Vocabulary | None = None) -> Corpus:
    """Load a JSON-lines dataset into a :class:`Corpus`.

    Lines carrying ``text`` are preprocessed with :func:`preprocess_tokens`;
    lines carrying ``tokens`` are taken verbatim. The vocabulary comes from,
    in order of precedence: the ``vocabulary`` argument, a sidecar vocab file
    next to the dataset, or a frequency build capped at ``cap``.

    Raises :class:`DatasetFormatError` naming the offending line for any
    malformed document.
    """
    path = Path(path)
    if stopwords is None:
        stopwords = load_stopwords()

    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"line {lineno}: invalid JSON ({exc.msg})")
            if not isinstance(obj, dict):
                raise DatasetFormatError(f"line {lineno}: expected a JSON object")
            if "id" not in obj:
                raise DatasetFormatError(f"line {lineno}: missing required field 'id'")
            has_text = "text" in obj
            has_tokens = "tokens" in obj
            if has_text == has_tokens:
                raise DatasetFormatError(
                    f"line {lineno}: exactly one of 'text' or 'tokens' is required")
            if has_text:
                tokens = preprocess_tokens(str(obj["text"]), stopwords)
            else:
                raw = obj["tokens"]
                if not isinstance(raw, list) or not all(isinstance(t, str) for t in raw):
                    raise DatasetFormatError(f"line {lineno}: 'tokens' must be a list of strings")
                tokens = list(raw)
            text_emb = _parse_embedding(obj, "text_embedding", lineno)
            image_emb = _parse_embedding(obj, "image_embedding", lineno)
            rows.append((lineno, str(obj["id"]), tokens, text_emb, image_emb,
                         obj.get("image_ref")))

    if not rows:
        raise DatasetFormatError(f"{path}: dataset contains no documents")

    text_dim = rows[0][3].shape[0]
    image_dim = rows[0][4].shape[0]
    for lineno, doc_id, _, t, m, _ in rows:
        if t.shape[0] != text_dim:
            raise DatasetFormatError(
                f"line {lineno}: text_embedding has dimension {t.shape[0]}, "
                f"expected {text_dim}")
        if m.shape[0] != image_dim:
            raise DatasetFormatError(
                f"line {lineno}: image_embedding has dimension {m.shape[0]}, "
                f"expected {image_dim}")

    vocab_source = "argument"
    if vocabulary is None:
        sidecar = _find_sidecar_vocab(path)
        if sidecar is not None:
            vocabulary = read_vocab_file(sidecar)
            vocab_source = str(sidecar)
        else:
            vocabulary = build_vocabulary((r[2] for r in rows), cap=cap)
            vocab_source = f"built (cap={cap})"

    documents = tuple(
        MultimodalDocument(
            id=doc_id,
            tokens=tuple(tokens),
            bow=vectorize(tokens, vocabulary),
            text_embedding=text_emb,
            image_embedding=image_emb,
            image_ref=None if ref is None else str(ref),
        )
        for _, doc_id, tokens, text_emb, image_emb, ref in rows
    )
    meta = {"name": path.stem, "path": str(path), "vocab_source": vocab_source}
    return Corpus(vocabulary=vocabulary, documents=documents, meta=meta)


def save_corpus(corpus: Corpus, path: str | Path) -> Path:
    """Write ``corpus`` as a JSON-lines dataset plus a ``<stem>.vocab.txt``
    sidecar pinning the vocabulary. Loading the result reproduces the corpus
    bit for bit (floats round-trip exactly through JSON)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for d in corpus.documents:
            obj = {
                "id": d.id,
                "tokens": list(d.tokens),
                "text_embedding": d.text_embedding.tolist(),
                "image_embedding": d.image_embedding.tolist(),
            }
            if d.image_ref is not None:
                obj["image_ref"] = d.image_ref
            fh.write(json.dumps(obj) + "\n")
    sidecar = path.with_name(path.stem + ".vocab.txt")
    sidecar.write_text("\n".join(corpus.vocabulary.terms) + "\n", encoding="utf-8")
    return path


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for the planted-topic synthetic corpus generator."""

    num_topics_true: int
    vocab_size: int
    docs: int
    doc_length: float
    embed_dim_text: int
    embed_dim_image: int
    topic_word_concentration: float = 0.5
    embedding_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.num_topics_true < 1:
            raise ValueError("num_topics_true must be >= 1")
        if self.vocab_size < self.num_topics_true:
            raise ValueError("vocab_size must be >= num_topics_true "
                             "(each topic owns a disjoint word block)")
        if self.docs < 1:
            raise ValueError("docs must be >= 1")
        if self.doc_length <= 0:
            raise ValueError("doc_length must be positive")
        if self.embed_dim_text < 1 or self.embed_dim_image < 1:
            raise ValueError("embedding dimensions must be >= 1")
        if self.topic_word_concentration <= 0:
            raise ValueError("topic_word_concentration must be positive")
        if self.embedding_noise < 0:
            raise ValueError("embedding_noise must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PlantedTopic:
    """Ground truth for one synthetic topic.

    ``terms`` ranks the topic's word block by descending planted probability.
    ``doc_weights`` holds the topic's mixture weight in every document, so
    stacking them column-wise recovers the full document-topic matrix.
    """

    index: int
    terms: tuple[str, ...]
    word_ids: tuple[int, ...]
    word_probs: np.ndarray
    text_centroid: np.ndarray
    image_centroid: np.ndarray
    doc_weights: np.ndarray


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    return matrix / norms


def generate_synthetic(spec: SyntheticSpec) -> tuple[Corpus, list[PlantedTopic]]:
    """Generate a corpus with planted topics and its ground truth.

    Each topic owns a disjoint block of the vocabulary and a word
    distribution drawn over that block only. Every document draws a topic
    mixture from a sparse symmetric Dirichlet, samples tokens from the mixed
    word distribution, and gets embeddings equal to the unit-normalized
    mixture of per-topic centroid vectors plus Gaussian noise. With
    ``embedding_noise == 0`` the embeddings sit exactly on the normalized
    centroid mixtures. Deterministic for a fixed spec.
    """
    rng = np.random.default_rng(spec.seed)
    k, v = spec.num_topics_true, spec.vocab_size

    width = max(4, len(str(v - 1)))
    terms = [f"w{i:0{width}d}" for i in range(v)]
    vocabulary = Vocabulary.from_terms(terms)

    # Disjoint word blocks covering the vocabulary; remainders go to the
    # leading topics one extra term each.
    base, extra = divmod(v, k)
    blocks = []
    start = 0
    for t in range(k):
        size = base + (1 if t < extra else 0)
        blocks.append(np.arange(start, start + size))
        start += size

    word_probs = np.zeros((k, v))
    for t in range(k):
        word_probs[t, blocks[t]] = rng.dirichlet(
            np.full(blocks[t].size, spec.topic_word_concentration))

    text_centroids = _unit_rows(rng.standard_normal((k, spec.embed_dim_text)))
    image_centroids = _unit_rows(rng.standard_normal((k, spec.embed_dim_image)))

    mixtures = rng.dirichlet(np.full(k, _MIXTURE_CONCENTRATION), size=spec.docs)

    documents = []
    id_width = max(5, len(str(spec.docs - 1)))
    for d in range(spec.docs):
        mix = mixtures[d]
        length = max(1, int(rng.poisson(spec.doc_length)))
        p = mix @ word_probs
        p = p / p.sum()
        token_ids = rng.choice(v, size=length, p=p)
        tokens = tuple(terms[i] for i in token_ids)

        text_emb = mix @ text_centroids
        text_emb = text_emb / np.linalg.norm(text_emb)
        image_emb = mix @ image_centroids
        image_emb = image_emb / np.linalg.norm(image_emb)
        if spec.embedding_noise > 0:
            text_emb = text_emb + spec.embedding_noise * rng.standard_normal(spec.embed_dim_text)
            image_emb = image_emb + spec.embedding_noise * rng.standard_normal(spec.embed_dim_image)

        doc_id = f"doc{d:0{id_width}d}"
        documents.append(MultimodalDocument(
            id=doc_id,
            tokens=tokens,
            bow=vectorize(tokens, vocabulary),
            text_embedding=text_emb,
            image_embedding=image_emb,
            image_ref=f"img{d:0{id_width}d}",
        ))

    planted = []
    for t in range(k):
        order = blocks[t][np.argsort(-word_probs[t, blocks[t]], kind="stable")]
        planted.append(PlantedTopic(
            index=t,
            terms=tuple(terms[i] for i in order),
            word_ids=tuple(int(i) for i in order),
            word_probs=word_probs[t],
            text_centroid=text_centroids[t],
            image_centroid=image_centroids[t],
            doc_weights=mixtures[:, t].copy(),
        ))

    meta = {"name": f"synthetic-k{k}", "synthetic_spec": spec.to_dict()}
    return Corpus(vocabulary=vocabulary, documents=tuple(documents), meta=meta), planted
