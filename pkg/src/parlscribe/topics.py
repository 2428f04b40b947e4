"""Corpus exploration: LDA via collapsed Gibbs sampling, coherence, k choice.

The sampler is the standard collapsed Gibbs chain over token-topic
assignments with symmetric Dirichlet smoothing (alpha = 50/k over topics,
beta = 0.01 over words by default). Topic quality is the mean pairwise
cosine similarity among each topic's top words' embedding vectors, and the
topic count is chosen to maximize the mean coherence over topics.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyCorpus, NoCoveredWords

DEFAULT_BETA = 0.01
DEFAULT_ITERATIONS = 1000


def prepare_documents(
    texts: list[str],
    stopwords: set[str] | None = None,
    lemma_map: dict[str, str] | None = None,
) -> list[list[str]]:
    """Tokenize on whitespace, map lemmas, drop stopwords."""
    stopwords = stopwords or set()
    lemma_map = lemma_map or {}
    docs = []
    for text in texts:
        tokens = [lemma_map.get(w, w) for w in text.split()]
        docs.append([w for w in tokens if w not in stopwords])
    return docs


def load_word_list(path: str | Path) -> set[str]:
    return {
        line.strip()
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    }


def load_lemma_map(path: str | Path) -> dict[str, str]:
    """Two tab-separated columns: surface form, lemma."""
    mapping = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        surface, lemma = line.split("\t")
        mapping[surface] = lemma
    return mapping


@dataclass
class LdaModel:
    k: int
    vocabulary: tuple[str, ...]
    doc_topic_counts: np.ndarray   # D x k
    topic_word_counts: np.ndarray  # k x V
    topic_totals: np.ndarray       # k
    assignments: list[np.ndarray]  # per document, per token topic ids
    alpha_dirichlet: float
    beta_dirichlet: float

    def topic_word_probs(self) -> np.ndarray:
        """Smoothed k x V topic-word distributions."""
        v = len(self.vocabulary)
        return (self.topic_word_counts + self.beta_dirichlet) / (
            self.topic_totals[:, None] + v * self.beta_dirichlet
        )

    def top_words(self, topic: int, n: int = 10) -> list[tuple[str, float]]:
        probs = self.topic_word_probs()[topic]
        order = sorted(range(len(probs)), key=lambda w: (-probs[w], self.vocabulary[w]))
        return [(self.vocabulary[w], float(probs[w])) for w in order[:n]]


def fit_lda(
    docs: list[list[str]],
    k: int,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
    alpha: float | None = None,
    beta: float = DEFAULT_BETA,
) -> LdaModel:
    """Collapsed Gibbs sampling for a fixed number of sweeps, seeded."""
    vocabulary = tuple(sorted({w for doc in docs for w in doc}))
    if not vocabulary:
        raise EmptyCorpus("no tokens left after preprocessing")
    word_id = {w: i for i, w in enumerate(vocabulary)}
    token_ids = [np.array([word_id[w] for w in doc], dtype=np.int64) for doc in docs]
    v = len(vocabulary)
    if alpha is None:
        alpha = 50.0 / k

    rng = np.random.default_rng(seed)
    doc_topic = np.zeros((len(docs), k), dtype=np.int64)
    topic_word = np.zeros((k, v), dtype=np.int64)
    topic_totals = np.zeros(k, dtype=np.int64)
    assignments = []
    for d, ids in enumerate(token_ids):
        z = rng.integers(0, k, size=len(ids))
        assignments.append(z)
        for topic, w in zip(z, ids):
            doc_topic[d, topic] += 1
            topic_word[topic, w] += 1
            topic_totals[topic] += 1

    beta_sum = v * beta
    for _ in range(iterations):
        for d, ids in enumerate(token_ids):
            z = assignments[d]
            dt_row = doc_topic[d]
            for i in range(len(ids)):
                w = ids[i]
                old = z[i]
                dt_row[old] -= 1
                topic_word[old, w] -= 1
                topic_totals[old] -= 1
                weights = (dt_row + alpha) * (topic_word[:, w] + beta) / (topic_totals + beta_sum)
                cum = np.cumsum(weights)
                new = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
                new = min(new, k - 1)
                z[i] = new
                dt_row[new] += 1
                topic_word[new, w] += 1
                topic_totals[new] += 1

    return LdaModel(
        k=k,
        vocabulary=vocabulary,
        doc_topic_counts=doc_topic,
        topic_word_counts=topic_word,
        topic_totals=topic_totals,
        assignments=assignments,
        alpha_dirichlet=alpha,
        beta_dirichlet=beta,
    )


def load_embeddings(path: str | Path) -> dict[str, np.ndarray]:
    """Text embeddings: word followed by space-separated components."""
    table: dict[str, np.ndarray] = {}
    dim = None
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        parts = line.split()
        vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise ValueError(f"line {lineno}: dimension {len(vec)} != {dim}")
        table[parts[0]] = vec
    return table


@dataclass(frozen=True)
class CoherenceReport:
    per_topic: tuple[float, ...]
    mean: float
    missing_words: tuple[int, ...]  # per topic, top words without a vector


def coherence(
    model: LdaModel,
    embeddings: dict[str, np.ndarray],
    top_n: int = 15,
) -> CoherenceReport:
    """Mean pairwise cosine similarity of each topic's top-n word vectors."""
    per_topic = []
    missing = []
    for topic in range(model.k):
        words = [w for w, _ in model.top_words(topic, top_n)]
        vectors = [embeddings[w] for w in words if w in embeddings]
        missing.append(len(words) - len(vectors))
        if len(vectors) < 2:
            raise NoCoveredWords(
                f"topic {topic}: {len(vectors)} of {len(words)} top words have vectors"
            )
        mat = np.vstack(vectors)
        normed = mat / np.linalg.norm(mat, axis=1, keepdims=True)
        sims = normed @ normed.T
        n = len(vectors)
        upper = sims[np.triu_indices(n, k=1)]
        per_topic.append(float(upper.mean()))
    return CoherenceReport(
        per_topic=tuple(per_topic),
        mean=float(np.mean(per_topic)),
        missing_words=tuple(missing),
    )


def select_topic_count(
    docs: list[list[str]],
    k_candidates: list[int],
    embeddings: dict[str, np.ndarray],
    seed: int = 0,
    iterations: int = DEFAULT_ITERATIONS,
    top_n: int = 15,
) -> tuple[int, list[tuple[int, float]]]:
    """Fit one model per candidate k; return the argmax of mean coherence.

    Ties go to the smallest k.
    """
    if not k_candidates:
        raise ValueError("need at least one candidate topic count")
    table = []
    for k in sorted(k_candidates):
        model = fit_lda(docs, k, iterations=iterations, seed=seed)
        table.append((k, coherence(model, embeddings, top_n).mean))
    best_k = max(table, key=lambda row: (row[1], -row[0]))[0]
    return best_k, table
