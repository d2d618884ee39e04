"""Hybrid skill retrieval: BM25 over skill text plus cosine over embeddings."""

from __future__ import annotations

import hashlib
import json
import math
import re
import threading
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Protocol, Sequence

from .model import SkillLibrary, SkillSpec

INDEX_FORMAT = "skillgraph-index"
INDEX_VERSION = 1
BM25_K1 = 1.2
BM25_B = 0.75

_WORD = re.compile(r"[A-Za-z0-9]+")
_CAMEL = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric runs; camel-case runs also contribute their parts.

    ``EdgeOpenHomePage`` yields ``edgeopenhomepage, edge, open, home, page`` so
    both the exact identifier and its words can match.
    """
    out: list[str] = []
    for run in _WORD.findall(text):
        out.append(run.lower())
        parts = _CAMEL.findall(run)
        if len(parts) > 1:
            out.extend(p.lower() for p in parts)
    return out


def skill_text(spec: SkillSpec) -> str:
    return f"{spec.id} {spec.intent}".strip()


# --------------------------------------------------------------------------- embedders


class EmbeddingProvider(Protocol):
    id: str
    dimension: int

    def embed(self, text: str) -> list[float]: ...


class ProviderError(RuntimeError):
    pass


@dataclass(frozen=True)
class HashingEmbedder:
    """Signed feature hashing of word tokens and character trigrams."""

    dimension: int = 256
    seed: int = 0
    trigram_weight: float = 0.5

    @property
    def id(self) -> str:
        return f"hashing-v1:d{self.dimension}:s{self.seed}"

    def features(self, text: str) -> Counter:
        feats: Counter = Counter()
        for tok in tokenize(text):
            feats["w:" + tok] += 1.0
            padded = f"^{tok}$"
            for i in range(len(padded) - 2):
                feats["c:" + padded[i : i + 3]] += self.trigram_weight
        return feats

    def _bucket(self, feature: str) -> tuple[int, float]:
        h = int.from_bytes(hashlib.blake2b(f"{self.seed}:{feature}".encode(), digest_size=8).digest(), "big")
        return h % self.dimension, (1.0 if h >> 63 else -1.0)

    def embed(self, text: str) -> list[float]:
        vec = [0.0] * self.dimension
        for feat, w in sorted(self.features(text).items()):
            i, sign = self._bucket(feat)
            vec[i] += sign * w
        return _unit(vec)


def _unit(vec: Sequence[float]) -> list[float]:
    norm = math.sqrt(sum(x * x for x in vec))
    if norm == 0.0:
        return [0.0] * len(vec)
    return [x / norm for x in vec]


class WireEmbeddingProvider:
    """Embedding provider reached over HTTP with JSON bodies.

    Request: ``{"version": 1, "texts": [str, ...]}``.
    Response: ``{"version": 1, "provider": str, "dimension": int, "vectors": [[float, ...], ...]}``.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0):
        self.endpoint = endpoint
        self.timeout = timeout
        info = self._call([])
        self.id = f"wire:{info['provider']}"
        self.dimension = int(info["dimension"])

    def _call(self, texts: list[str]) -> dict:
        body = json.dumps({"version": 1, "texts": texts}).encode("utf-8")
        req = urllib.request.Request(self.endpoint, body, {"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                data = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as e:
            raise ProviderError(f"embedding endpoint {self.endpoint}: {e}") from e
        if data.get("version") != 1 or len(data.get("vectors", [])) != len(texts):
            raise ProviderError(f"embedding endpoint {self.endpoint}: malformed response")
        return data

    def embed(self, text: str) -> list[float]:
        vec = self._call([text])["vectors"][0]
        if len(vec) != self.dimension:
            raise ProviderError(f"expected dimension {self.dimension}, got {len(vec)}")
        return [float(x) for x in vec]


def serve_embeddings(provider: EmbeddingProvider, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Expose ``provider`` with the wire protocol above on a background thread."""

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            n = int(self.headers.get("Content-Length", 0))
            try:
                req = json.loads(self.rfile.read(n))
                vectors = [provider.embed(t) for t in req["texts"]]
                code, out = 200, {"version": 1, "provider": provider.id, "dimension": provider.dimension, "vectors": vectors}
            except (KeyError, TypeError, ValueError) as e:
                code, out = 400, {"version": 1, "error": str(e)}
            body = json.dumps(out).encode()
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer((host, port), Handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    return server


# --------------------------------------------------------------------------- index


class IndexBuildError(RuntimeError):
    pass


@dataclass
class SkillIndex:
    doc_terms: dict[str, dict[str, int]]  # skill id -> term frequencies
    vectors: dict[str, list[float]]
    provider_id: str
    dimension: int
    texts: dict[str, str] = field(default_factory=dict)
    postings: dict[str, dict[str, int]] = field(init=False, repr=False)
    doc_len: dict[str, int] = field(init=False, repr=False)
    avgdl: float = field(init=False)

    def __post_init__(self):
        self.postings = {}
        for sid, terms in self.doc_terms.items():
            for t, tf in terms.items():
                self.postings.setdefault(t, {})[sid] = tf
        self.doc_len = {sid: sum(terms.values()) for sid, terms in self.doc_terms.items()}
        self.avgdl = sum(self.doc_len.values()) / len(self.doc_len) if self.doc_len else 0.0

    @property
    def ids(self) -> list[str]:
        return sorted(self.doc_terms)

    def idf(self, term: str) -> float:
        n = len(self.doc_terms)
        df = len(self.postings.get(term, ()))
        return math.log((n - df + 0.5) / (df + 0.5) + 1.0)

    def to_json(self) -> str:
        data = {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "provider": self.provider_id,
            "dimension": self.dimension,
            "bm25": {"k1": BM25_K1, "b": BM25_B},
            "docs": [
                {"id": sid, "text": self.texts.get(sid, ""), "terms": self.doc_terms[sid], "vector": self.vectors[sid]}
                for sid in self.ids
            ],
        }
        return json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SkillIndex":
        data = json.loads(text)
        if data.get("format") != INDEX_FORMAT or data.get("version") != INDEX_VERSION:
            raise ValueError(f"not a version-{INDEX_VERSION} skill index")
        docs = data["docs"]
        return cls(
            {d["id"]: dict(d["terms"]) for d in docs},
            {d["id"]: list(d["vector"]) for d in docs},
            data["provider"],
            int(data["dimension"]),
            {d["id"]: d["text"] for d in docs},
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SkillIndex":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def build_index(lib: SkillLibrary, provider: EmbeddingProvider | None = None) -> SkillIndex:
    """Index every skill's id and intent; any provider failure aborts the build."""
    provider = provider or HashingEmbedder()
    terms: dict[str, dict[str, int]] = {}
    vectors: dict[str, list[float]] = {}
    texts: dict[str, str] = {}
    for sid in sorted(lib.skills):
        text = skill_text(lib.skills[sid])
        texts[sid] = text
        terms[sid] = dict(sorted(Counter(tokenize(text)).items()))
        try:
            vec = provider.embed(text)
        except Exception as e:
            raise IndexBuildError(f"embedding failed for {sid}: {e}") from e
        if len(vec) != provider.dimension:
            raise IndexBuildError(f"embedding for {sid} has dimension {len(vec)}, expected {provider.dimension}")
        unit = _unit(vec)
        if not any(unit):
            raise IndexBuildError(f"embedding for {sid} is the zero vector")
        vectors[sid] = unit
    return SkillIndex(terms, vectors, provider.id, provider.dimension, texts)


# --------------------------------------------------------------------------- search


def bm25_score(idx: SkillIndex, query_terms: Sequence[str], sid: str) -> float:
    dl = idx.doc_len[sid]
    norm = BM25_K1 * (1.0 - BM25_B + BM25_B * dl / idx.avgdl)
    score = 0.0
    for t in set(query_terms):
        tf = idx.doc_terms[sid].get(t, 0)
        if tf:
            score += idx.idf(t) * tf * (BM25_K1 + 1.0) / (tf + norm)
    return score


def lexical_search(idx: SkillIndex, query: str, k: int) -> list[tuple[str, float]]:
    """Top-k documents sharing at least one token with ``query``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    terms = set(tokenize(query))
    hits = {sid for t in terms for sid in idx.postings.get(t, ())}
    scored = [(sid, bm25_score(idx, list(terms), sid)) for sid in hits]
    scored.sort(key=lambda p: (-p[1], p[0]))
    return scored[:k]


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    return sum(x * y for x, y in zip(a, b))


def semantic_search(
    idx: SkillIndex, query: str, k: int, provider: EmbeddingProvider | None = None
) -> list[tuple[str, float]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    provider = provider or provider_for(idx)
    q = _unit(provider.embed(query))
    if not any(q):
        return []
    scored = [(sid, max(-1.0, min(1.0, cosine(q, v)))) for sid, v in idx.vectors.items()]
    scored.sort(key=lambda p: (-p[1], p[0]))
    return scored[:k]


def provider_for(idx: SkillIndex) -> EmbeddingProvider:
    m = re.fullmatch(r"hashing-v1:d(\d+):s(\d+)", idx.provider_id)
    if m:
        return HashingEmbedder(int(m.group(1)), int(m.group(2)))
    if idx.provider_id.startswith("wire:"):
        raise ProviderError(f"index built with {idx.provider_id}; pass the wire provider explicitly")
    raise ProviderError(f"unknown embedding provider {idx.provider_id!r}")


@dataclass(frozen=True)
class RetrievalResult:
    skill_id: str
    lexical_score: float
    semantic_score: float
    channel: str  # "lexical" | "semantic" | "both"
    rank: int


def merge_rankings(ranked_lists: Sequence[tuple[str, Sequence[tuple[str, float]]]]) -> list[tuple[str, int, set[str]]]:
    """Rank interleave: each skill keeps its best 1-based position in any list;
    ties go to the lexicographically smaller id. Returns (id, best rank, channels)."""
    best: dict[str, int] = {}
    channels: dict[str, set[str]] = {}
    for channel, ranked in ranked_lists:
        for pos, (sid, _) in enumerate(ranked, 1):
            if pos < best.get(sid, pos + 1):
                best[sid] = pos
            channels.setdefault(sid, set()).add(channel)
    order = sorted(best, key=lambda sid: (best[sid], sid))
    return [(sid, best[sid], channels[sid]) for sid in order]


def hybrid_retrieve(
    idx: SkillIndex,
    queries: Sequence[str],
    per_channel_k: int = 5,
    provider: EmbeddingProvider | None = None,
) -> list[RetrievalResult]:
    """Union of both channels' top results over all queries, merged by rank."""
    if not queries:
        raise ValueError("at least one query is required")
    if not idx.doc_terms:
        return []
    provider = provider or provider_for(idx)
    lists = []
    lex_best: dict[str, float] = {}
    sem_best: dict[str, float] = {}
    for q in queries:
        lex = lexical_search(idx, q, per_channel_k)
        sem = semantic_search(idx, q, per_channel_k, provider)
        lists += [("lexical", lex), ("semantic", sem)]
        for sid, s in lex:
            lex_best[sid] = max(s, lex_best.get(sid, 0.0))
        for sid, s in sem:
            sem_best[sid] = max(s, sem_best.get(sid, -1.0))
    out = []
    for rank, (sid, _, chans) in enumerate(merge_rankings(lists), 1):
        channel = "both" if len(chans) == 2 else next(iter(chans))
        out.append(RetrievalResult(sid, lex_best.get(sid, 0.0), sem_best.get(sid, 0.0), channel, rank))
    return out
