"""Semantic triples, embedding tables and the graph-to-nearest-triple metric."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ContractViolation, GenerationError

NORM_TOL = 1e-9

# cone / separation constants for synthetic tables
COMMON_HALF_ANGLE = math.radians(20.0)  # pairwise angle <= 40 deg -> cos >= 0.766
COMMON_MIN_COS = 0.7
KEY_MAX_COS = 0.2


@dataclass(frozen=True)
class SemanticTriple:
    id: int
    subject: str
    relation: str
    object: str
    payload_bits: int

    def __post_init__(self):
        if self.payload_bits <= 0:
            raise ContractViolation(f"triple {self.id}: payload_bits must be > 0")


@dataclass(frozen=True)
class SemanticGraph:
    triples: tuple[SemanticTriple, ...]

    def __post_init__(self):
        object.__setattr__(self, "triples", tuple(self.triples))
        if not self.triples:
            raise ContractViolation("a semantic graph needs at least one triple")
        ids = [t.id for t in self.triples]
        if ids != list(range(len(ids))):
            raise ContractViolation("triple ids must be unique and contiguous from 0")

    @property
    def K(self) -> int:
        return len(self.triples)

    @property
    def payload_bits(self) -> np.ndarray:
        return np.array([t.payload_bits for t in self.triples], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    """One unit-norm vector per triple id, rows of ``vectors``."""

    dim: int
    vectors: np.ndarray
    gram: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vecs = np.array(self.vectors, dtype=np.float64)
        if vecs.ndim != 2 or vecs.shape[1] != self.dim or self.dim < 1:
            raise ContractViolation(f"vectors must have shape (K, {self.dim})")
        norms = np.linalg.norm(vecs, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            raise ContractViolation("embedding vectors must be unit norm")
        vecs.setflags(write=False)
        gram = np.clip(vecs @ vecs.T, -1.0, 1.0)
        np.fill_diagonal(gram, 1.0)
        gram.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "gram", gram)

    def __len__(self):
        return self.vectors.shape[0]

    def __eq__(self, other):
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.vectors, other.vectors)

    @classmethod
    def from_raw(cls, vectors) -> "EmbeddingTable":
        """Normalize arbitrary nonzero rows and build a table."""
        vecs = np.array(vectors, dtype=np.float64)
        norms = np.linalg.norm(vecs, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise ContractViolation("zero embedding vector cannot be normalized")
        return cls(dim=vecs.shape[1], vectors=vecs / norms)


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ContractViolation(f"cosine needs equal-length vectors, got {u.shape} and {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ContractViolation("cosine of a zero vector is undefined")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _check_ids(ids: Iterable[int], n: int) -> list[int]:
    out = [int(i) for i in ids]
    for i in out:
        if not 0 <= i < n:
            raise ContractViolation(f"unknown triple id {i}")
    return out


def gnt(original_ids: Sequence[int], received_ids: Iterable[int], table: EmbeddingTable) -> float:
    """Graph-to-nearest-triple similarity of a received set.

    Each original triple is scored by its best cosine against any received
    triple; a null reception scores 0. Returns the mean over originals.
    """
    n = len(table)
    orig = _check_ids(original_ids, n)
    if not orig:
        raise ContractViolation("original_ids must be nonempty")
    recv = _check_ids(received_ids, n)
    if not set(recv) <= set(orig):
        raise ContractViolation("received_ids must be a subset of original_ids")
    mask = np.zeros(n, dtype=np.uint8)
    mask[recv] = 1
    sim = np.ascontiguousarray(table.gram[orig, :])
    return kernels.nearest_mean(sim, mask)


def gnt_mask(received_mask: np.ndarray, table: EmbeddingTable) -> float:
    """``gnt`` over all triples of the table, reception given as a mask."""
    return kernels.nearest_mean(table.gram, np.asarray(received_mask, dtype=np.uint8))


def state_matrix(graph: SemanticGraph, table: EmbeddingTable, retired_mask) -> np.ndarray:
    retired = np.asarray(retired_mask, dtype=bool)
    if retired.shape != (graph.K,):
        raise ContractViolation(f"retired mask must have length {graph.K}")
    if len(table) != graph.K:
        raise ContractViolation("embedding table does not match the graph")
    out = np.array(table.gram, dtype=np.float64)
    out[retired, :] = 0.0
    out[:, retired] = 0.0
    return out


def _random_unit(rng, d):
    while True:
        v = rng.standard_normal(d)
        nv = np.linalg.norm(v)
        if nv > 1e-12:
            return v / nv


def synth_embeddings(K: int, d: int, seed: int, key_count: int, max_tries: int = 200) -> EmbeddingTable:
    """Deterministic synthetic table with ``key_count`` isolated key triples.

    Common triples lie within a 20 degree cone around a random centre, so
    every common pair has cosine > 0.7. Key triples are orthogonal to the
    centre and to each other, and are redrawn until they sit below cosine
    0.2 against every other triple. Keys occupy ids ``0..key_count-1``.
    """
    if K < 1 or d < 2:
        raise ContractViolation("need K >= 1 and d >= 2")
    if not 0 <= key_count <= K:
        raise ContractViolation("key_count must lie in [0, K]")
    n_common = K - key_count
    free_dims = d - (1 if n_common else 0)
    if key_count > free_dims:
        raise GenerationError(f"{key_count} key triples do not fit in dimension {d}")

    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        centre = _random_unit(rng, d)
        commons = []
        for _ in range(n_common):
            u = rng.standard_normal(d)
            u -= np.dot(u, centre) * centre
            u /= np.linalg.norm(u)
            phi = rng.uniform(0.0, COMMON_HALF_ANGLE)
            commons.append(math.cos(phi) * centre + math.sin(phi) * u)
        keys: list[np.ndarray] = []
        basis = [centre] if n_common else []
        for _ in range(key_count):
            k = rng.standard_normal(d)
            for b in basis + keys:
                k -= np.dot(k, b) * b
            nk = np.linalg.norm(k)
            if nk < 1e-9:
                break
            keys.append(k / nk)
        if len(keys) != key_count:
            continue
        vecs = np.array(keys + commons, dtype=np.float64).reshape(K, d)
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
        if _separation_ok(vecs, key_count):
            return EmbeddingTable(dim=d, vectors=vecs)
    raise GenerationError(f"could not separate {key_count} key triples from {n_common} common ones in d={d}")


def _separation_ok(vecs, key_count):
    g = vecs @ vecs.T
    K = vecs.shape[0]
    off = ~np.eye(K, dtype=bool)
    if key_count and np.any(g[:key_count][off[:key_count]] >= KEY_MAX_COS):
        return False
    common = g[key_count:, key_count:]
    if common.shape[0] > 1:
        if np.min(common[~np.eye(common.shape[0], dtype=bool)]) <= COMMON_MIN_COS:
            return False
    return True


def synth_graph(K: int, payload_bits: int | Sequence[int] = 400, seed: int = 0) -> SemanticGraph:
    """Placeholder labels with fixed (or per-triple) payload sizes."""
    if isinstance(payload_bits, (int, np.integer)):
        sizes = [int(payload_bits)] * K
    else:
        sizes = [int(z) for z in payload_bits]
        if len(sizes) != K:
            raise ContractViolation("one payload size per triple expected")
    triples = [SemanticTriple(k, f"obj{2 * k}", f"rel{k}", f"obj{2 * k + 1}", sizes[k]) for k in range(K)]
    return SemanticGraph(tuple(triples))


def load_embedding_file(path) -> tuple[SemanticGraph, EmbeddingTable]:
    """Read the JSON triple/embedding document; vectors are normalized."""
    doc = json.loads(Path(path).read_text())
    try:
        dim = int(doc["dim"])
        rows = doc["triples"]
    except (KeyError, TypeError) as e:
        raise ContractViolation(f"embedding file missing field: {e}") from None
    rows = sorted(rows, key=lambda r: int(r["id"]))
    triples = []
    vecs = []
    for r in rows:
        emb = [float(x) for x in r["embedding"]]
        if len(emb) != dim:
            raise ContractViolation(f"triple {r['id']}: embedding length {len(emb)} != dim {dim}")
        triples.append(SemanticTriple(int(r["id"]), str(r["subject"]), str(r["relation"]),
                                      str(r["object"]), int(r["payload_bits"])))
        vecs.append(emb)
    graph = SemanticGraph(tuple(triples))
    return graph, EmbeddingTable.from_raw(vecs)


def save_embedding_file(path, graph: SemanticGraph, table: EmbeddingTable) -> None:
    doc = {
        "dim": table.dim,
        "triples": [
            {"id": t.id, "subject": t.subject, "relation": t.relation, "object": t.object,
             "payload_bits": t.payload_bits, "embedding": table.vectors[t.id].tolist()}
            for t in graph.triples
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1))
