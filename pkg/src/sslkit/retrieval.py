"""Skill discovery evaluation: embed, rank exhaustively, score.

Candidates are ranked by inner product over L2-normalized vectors with
an exhaustive scan (no approximate index; a few thousand candidates need
none). Per query there is a single relevant skill, so MRR is windowed at
50 and NDCG uses binary gain with ideal DCG 1.
"""

from __future__ import annotations

import os
import zlib
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
import requests

from . import records
from .document import SslDocument, document_from_dict
from .errors import BackendUnavailable, DimensionMismatch, ZeroVector
from .views import ProjectedView, RepresentationVariant, compose_input

MRR_WINDOW = 50
RECALL_WINDOW = 10


class QueryType(str, Enum):
    FUNCTIONAL = "functional"
    CONSTRAINT = "constraint"
    COMPOSITIONAL = "compositional"
    SAFETY = "safety"
    SCENARIO = "scenario"


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str
    gold_skill_id: str
    query_type: QueryType


@dataclass(frozen=True)
class AnnotationScores:
    realism: int
    grounding: int
    doc_proximity: int
    name_leak: bool
    length: int

    def __post_init__(self) -> None:
        for name in ("realism", "grounding", "doc_proximity"):
            value = getattr(self, name)
            if not 1 <= value <= 5:
                raise ValueError(f"{name} must be in 1..5, got {value}")
        if self.length < 0:
            raise ValueError("length must be >= 0")


@dataclass(frozen=True)
class RankedQueryResult:
    query_id: str
    query_type: QueryType
    gold_rank: int | None  # absent when the gold skill falls outside top-50
    reciprocal_rank: float
    ndcg5: float
    ndcg10: float
    recall10: float


@dataclass(frozen=True)
class MetricsRow:
    scope: str  # "overall" or a query type name
    n_queries: int
    mrr50: float
    ndcg5: float
    ndcg10: float
    recall10: float


@dataclass(frozen=True)
class VariantEvaluation:
    variant: RepresentationVariant
    overall: MetricsRow
    by_type: dict[QueryType, MetricsRow]
    per_query: list[RankedQueryResult]


@dataclass
class CorpusEntry:
    skill_id: str
    description: str = ""
    source_md: str = ""
    document: SslDocument | None = None


class EmbeddingBackend(Protocol):
    def embed(self, text: str) -> np.ndarray: ...


class HashedTokenEmbedder:
    """Deterministic offline embedder for desk-scale runs.

    Lowercases, splits on non-alphanumerics, hashes tokens (CRC32) into a
    fixed number of buckets, counts, and L2-normalizes. No model, no
    network, identical output across processes.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim

    def bucket(self, token: str) -> int:
        return zlib.crc32(token.encode("utf-8")) % self.dim

    def tokens(self, text: str) -> list[str]:
        return [t for t in re.split(r"[^a-z0-9]+", text.lower()) if t]

    def embed(self, text: str) -> np.ndarray:
        counts = np.zeros(self.dim, dtype=np.float64)
        for token in self.tokens(text):
            counts[self.bucket(token)] += 1.0
        return l2_normalize(counts)


class HttpEmbeddingBackend:
    """POSTs {text} to an endpoint returning {embedding: [...]}."""

    def __init__(self, url: str, api_key_env: str = "SSLKIT_API_KEY", timeout: float = 60.0):
        self.url = url
        self.api_key_env = api_key_env
        self.timeout = timeout

    def embed(self, text: str) -> np.ndarray:
        headers = {}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = requests.post(
                self.url, json={"text": text}, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise BackendUnavailable(str(exc)) from None
        if resp.status_code != 200:
            raise BackendUnavailable(f"embedder returned HTTP {resp.status_code}")
        try:
            return np.asarray(resp.json()["embedding"], dtype=np.float64)
        except (ValueError, KeyError, TypeError) as exc:
            raise BackendUnavailable(f"malformed embedder response: {exc}") from None


def l2_normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ZeroVector("cannot normalize a zero vector")
    return v / norm


def rank_candidates(
    qvec: np.ndarray, corpus_vecs: Sequence[np.ndarray] | np.ndarray, k: int
) -> list[int]:
    """Top-k candidate indices by descending inner product.

    Exhaustive scan; ties break by ascending corpus index, so results
    match any exact inner-product index up to that tie rule.
    """
    qvec = np.asarray(qvec, dtype=np.float64)
    matrix = np.asarray(corpus_vecs, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != qvec.shape[0]:
        raise DimensionMismatch(
            f"corpus vectors of shape {matrix.shape} do not match query dimension {qvec.shape[0]}"
        )
    scores = matrix @ qvec
    # stable sort on negated scores keeps ascending index order for ties
    order = np.argsort(-scores, kind="stable")
    return [int(i) for i in order[:k]]


def query_metrics(gold_rank: int | None) -> tuple[float, float, float, float]:
    """(rr@50, ndcg@5, ndcg@10, recall@10) for a single-relevant query.

    With one relevant item of gain 1 the ideal DCG is 1, so
    ndcg@k = 1/log2(rank+1) when rank <= k and 0 otherwise.
    """
    if gold_rank is None:
        return (0.0, 0.0, 0.0, 0.0)
    if gold_rank < 1:
        raise ValueError("rank must be >= 1")
    rr = 1.0 / gold_rank if gold_rank <= MRR_WINDOW else 0.0
    gain = 1.0 / float(np.log2(gold_rank + 1))
    ndcg5 = gain if gold_rank <= 5 else 0.0
    ndcg10 = gain if gold_rank <= 10 else 0.0
    recall10 = 1.0 if gold_rank <= RECALL_WINDOW else 0.0
    return (rr, ndcg5, ndcg10, recall10)


def filter_queries(
    candidates: Sequence[tuple[Query, AnnotationScores]],
) -> list[Query]:
    """Keep candidates passing every annotation threshold.

    realism >= 4, grounding >= 4, document proximity <= 2, no name
    leakage, and at most 120 characters. Pure predicate: order
    independent and idempotent.
    """
    return [
        query
        for query, scores in candidates
        if scores.realism >= 4
        and scores.grounding >= 4
        and scores.doc_proximity <= 2
        and not scores.name_leak
        and scores.length <= 120
    ]


def _mean_row(scope: str, results: Sequence[RankedQueryResult]) -> MetricsRow:
    n = len(results)
    return MetricsRow(
        scope=scope,
        n_queries=n,
        mrr50=sum(r.reciprocal_rank for r in results) / n,
        ndcg5=sum(r.ndcg5 for r in results) / n,
        ndcg10=sum(r.ndcg10 for r in results) / n,
        recall10=sum(r.recall10 for r in results) / n,
    )


def evaluate_variant(
    queries: Sequence[Query],
    corpus_entries: Sequence[CorpusEntry],
    variant: RepresentationVariant,
    embedder: EmbeddingBackend,
) -> VariantEvaluation:
    """Embed the variant's views and score every query against the corpus.

    Also returns per-query unit scores for downstream paired bootstrap
    runs.
    """
    if not queries:
        raise ValueError("no queries to evaluate")
    if not corpus_entries:
        raise ValueError("empty corpus")
    index_of = {entry.skill_id: i for i, entry in enumerate(corpus_entries)}
    for query in queries:
        if query.gold_skill_id not in index_of:
            raise ValueError(
                f"query {query.query_id}: gold skill {query.gold_skill_id!r} not in corpus"
            )

    views: list[ProjectedView] = [
        compose_input(
            variant,
            entry.description,
            entry.source_md,
            entry.document,
            skill_id=entry.skill_id,
        )
        for entry in corpus_entries
    ]
    matrix = np.stack([l2_normalize(embedder.embed(v.text)) for v in views])

    per_query: list[RankedQueryResult] = []
    for query in queries:
        qvec = l2_normalize(embedder.embed(query.text))
        order = rank_candidates(qvec, matrix, k=len(corpus_entries))
        rank = order.index(index_of[query.gold_skill_id]) + 1
        gold_rank = rank if rank <= MRR_WINDOW else None
        rr, ndcg5, ndcg10, recall10 = query_metrics(gold_rank)
        per_query.append(
            RankedQueryResult(
                query_id=query.query_id,
                query_type=query.query_type,
                gold_rank=gold_rank,
                reciprocal_rank=rr,
                ndcg5=ndcg5,
                ndcg10=ndcg10,
                recall10=recall10,
            )
        )

    by_type: dict[QueryType, MetricsRow] = {}
    for qtype in QueryType:
        subset = [r for r in per_query if r.query_type is qtype]
        if subset:
            by_type[qtype] = _mean_row(qtype.value, subset)
    return VariantEvaluation(
        variant=variant,
        overall=_mean_row("overall", per_query),
        by_type=by_type,
        per_query=per_query,
    )


# --- file formats ----------------------------------------------------------


def load_corpus(path: str | Path) -> list[CorpusEntry]:
    """Read line-delimited corpus records.

    Each record carries skill_id, optional description, the source text
    (inline ``source_md`` or a ``source_md_path`` relative to the corpus
    file), and an optional structured record under ``ssl``.
    """
    base = Path(path).parent
    entries: list[CorpusEntry] = []
    for lineno, obj in records.read_jsonl(path):
        if "skill_id" not in obj:
            raise ValueError(f"{path}:{lineno}: corpus record missing skill_id")
        source_md = obj.get("source_md", "")
        if not source_md and obj.get("source_md_path"):
            source_md = (base / obj["source_md_path"]).read_text(encoding="utf-8")
        document = document_from_dict(obj["ssl"]) if obj.get("ssl") else None
        entries.append(
            CorpusEntry(
                skill_id=obj["skill_id"],
                description=obj.get("description", ""),
                source_md=source_md,
                document=document,
            )
        )
    return entries


def load_queries(path: str | Path) -> list[Query]:
    queries = []
    for lineno, obj in records.read_jsonl(path):
        try:
            queries.append(
                Query(
                    query_id=obj["query_id"],
                    text=obj["text"],
                    gold_skill_id=obj["gold_skill_id"],
                    query_type=QueryType(obj["query_type"]),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: bad query record: {exc}") from None
    return queries


def result_to_obj(result: RankedQueryResult) -> dict:
    return {
        "query_id": result.query_id,
        "query_type": result.query_type.value,
        "gold_rank": result.gold_rank,
        "reciprocal_rank": result.reciprocal_rank,
        "ndcg5": result.ndcg5,
        "ndcg10": result.ndcg10,
        "recall10": result.recall10,
    }


def metrics_row_to_obj(variant: RepresentationVariant, row: MetricsRow) -> dict:
    return {
        "variant": variant.value,
        "scope": row.scope,
        "n_queries": row.n_queries,
        "mrr50": row.mrr50,
        "ndcg5": row.ndcg5,
        "ndcg10": row.ndcg10,
        "recall10": row.recall10,
    }
