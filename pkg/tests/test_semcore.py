import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covsem.errors import ContractViolation, GenerationError
from covsem.semcore import (
    EmbeddingTable,
    SemanticGraph,
    SemanticTriple,
    cosine,
    gnt,
    gnt_mask,
    load_embedding_file,
    save_embedding_file,
    state_matrix,
    synth_embeddings,
    synth_graph,
)


def brute_gnt(vectors, original, received):
    """Double loop straight from the definition, no shared code."""
    total = 0.0
    for k in original:
        best = None
        for j in received:
            u, v = vectors[k], vectors[j]
            c = sum(a * b for a, b in zip(u, v)) / (sum(a * a for a in u) ** 0.5 * sum(b * b for b in v) ** 0.5)
            best = c if best is None else max(best, c)
        total += 0.0 if best is None else best
    return total / len(original)


@pytest.mark.parametrize("u,v,expected", [((1, 0), (1, 0), 1.0), ((1, 0), (0, 1), 0.0), ((1, 0), (-1, 0), -1.0)])
def test_cosine_cases(u, v, expected):
    assert cosine(u, v) == expected


def test_cosine_rejects_bad_inputs():
    with pytest.raises(ContractViolation):
        cosine([1, 0], [1, 0, 0])
    with pytest.raises(ContractViolation):
        cosine([0, 0], [1, 0])


def test_gnt_examples():
    table = EmbeddingTable.from_raw(np.eye(2))
    assert gnt([0, 1], [0, 1], table) == 1.0
    assert gnt([0, 1], [], table) == 0.0
    assert gnt([0, 1], [1], table) == 0.5


def test_gnt_rejects_unknown_and_foreign_ids():
    table = EmbeddingTable.from_raw(np.eye(3))
    with pytest.raises(ContractViolation):
        gnt([0, 5], [0], table)
    with pytest.raises(ContractViolation):
        gnt([0, 1], [2], table)


def test_gnt_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(200):
        K = int(rng.integers(1, 17))
        d = int(rng.integers(2, 33))
        raw = rng.normal(size=(K, d))
        table = EmbeddingTable.from_raw(raw)
        recv = [k for k in range(K) if rng.random() < 0.5]
        assert abs(gnt(range(K), recv, table) - brute_gnt(raw, range(K), recv)) < 1e-9


def test_state_matrix_examples():
    assert state_matrix(synth_graph(1), EmbeddingTable.from_raw([[3.0, 4.0]]), [False]).tolist() == [[1.0]]
    table = EmbeddingTable.from_raw(np.eye(2))
    g = synth_graph(2)
    assert state_matrix(g, table, [False, False]).tolist() == [[1, 0], [0, 1]]
    assert state_matrix(g, table, [True, False]).tolist() == [[0, 0], [0, 1]]


@settings(max_examples=60, deadline=None)
@given(K=st.integers(1, 10), d=st.integers(2, 12), seed=st.integers(0, 2**31), data=st.data())
def test_state_matrix_symmetry_and_diagonal(K, d, seed, data):
    table = EmbeddingTable.from_raw(np.random.default_rng(seed).normal(size=(K, d)))
    retired = np.array(data.draw(st.lists(st.booleans(), min_size=K, max_size=K)))
    m = state_matrix(synth_graph(K), table, retired)
    assert np.array_equal(m, m.T)
    assert np.array_equal(np.diag(m), np.where(retired, 0.0, 1.0))
    assert np.all(np.abs(m) <= 1.0)


@settings(max_examples=80, deadline=None)
@given(K=st.integers(1, 12), d=st.integers(2, 16), seed=st.integers(0, 2**31), data=st.data())
def test_gnt_bounded_and_monotone(K, d, seed, data):
    table = EmbeddingTable.from_raw(np.random.default_rng(seed).normal(size=(K, d)))
    small = data.draw(st.sets(st.integers(0, K - 1)))
    extra = data.draw(st.sets(st.integers(0, K - 1)))
    lo = gnt(range(K), small, table)
    hi = gnt(range(K), small | extra, table)
    assert -1.0 <= lo <= hi + 1e-15 <= 1.0 + 1e-15
    assert gnt(range(K), range(K), table) == 1.0


def test_synth_embeddings_separation():
    t = synth_embeddings(8, 16, seed=7, key_count=1)
    g = t.gram
    common = g[1:, 1:]
    assert common[~np.eye(7, dtype=bool)].min() > 0.7
    assert np.abs(g[0, 1:]).max() < 0.2
    assert np.allclose(np.linalg.norm(t.vectors, axis=1), 1.0)


def test_synth_embeddings_deterministic_and_single():
    assert synth_embeddings(8, 16, 3, 1) == synth_embeddings(8, 16, 3, 1)
    one = synth_embeddings(1, 2, 0, 0)
    assert len(one) == 1 and abs(np.linalg.norm(one.vectors[0]) - 1.0) < 1e-12


def test_synth_embeddings_infeasible():
    with pytest.raises(GenerationError):
        synth_embeddings(6, 3, 0, key_count=5)


def test_removing_key_costs_more_than_any_common():
    t = synth_embeddings(8, 16, seed=1, key_count=1)
    full = set(range(8))
    drop_key = gnt(range(8), full - {0}, t)
    for k in range(1, 8):
        assert drop_key < gnt(range(8), full - {k}, t)


def test_gnt_mask_agrees_with_gnt():
    t = synth_embeddings(8, 16, seed=2, key_count=1)
    mask = np.array([1, 0, 1, 1, 0, 0, 1, 0], dtype=np.uint8)
    assert gnt_mask(mask, t) == gnt(range(8), np.flatnonzero(mask), t)


def test_triple_and_graph_contracts():
    with pytest.raises(ContractViolation):
        SemanticTriple(0, "a", "b", "c", 0)
    with pytest.raises(ContractViolation):
        SemanticGraph((SemanticTriple(1, "a", "b", "c", 8),))
    assert synth_graph(3, 128).payload_bits.tolist() == [128, 128, 128]


def test_embedding_file_round_trip(tmp_path):
    t = synth_embeddings(4, 6, seed=0, key_count=1)
    g = synth_graph(4, 256)
    path = tmp_path / "emb.json"
    save_embedding_file(path, g, t)
    g2, t2 = load_embedding_file(path)
    assert g2 == g
    assert np.allclose(t2.vectors, t.vectors, atol=1e-15)


def test_embedding_file_normalizes_and_rejects_bad_dims(tmp_path):
    doc = {"dim": 2, "triples": [{"id": 0, "subject": "s", "relation": "r", "object": "o", "payload_bits": 8,
                                  "embedding": [3.0, 4.0]}]}
    p = tmp_path / "a.json"
    p.write_text(json.dumps(doc))
    _, t = load_embedding_file(p)
    assert np.allclose(t.vectors[0], [0.6, 0.8])
    doc["triples"][0]["embedding"] = [1.0, 2.0, 3.0]
    p.write_text(json.dumps(doc))
    with pytest.raises(Exception):
        load_embedding_file(p)
