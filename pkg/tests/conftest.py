import numpy as np
import pytest

from covsem.channel import RadioParams
from covsem.env import CovertSemanticEnv, EpisodeConfig
from covsem.harness.config import ExperimentConfig
from covsem.semcore import EmbeddingTable, synth_graph


@pytest.fixture
def default_cfg():
    return ExperimentConfig()


@pytest.fixture
def default_env(default_cfg):
    return default_cfg.build_env()


def make_env(vectors, payload=400, d_SU=1.0, d_JU=4.0, **episode):
    table = EmbeddingTable.from_raw(np.asarray(vectors, dtype=float))
    graph = synth_graph(len(table), payload)
    return CovertSemanticEnv(graph, table, RadioParams(), d_SU, d_JU, 2.0, EpisodeConfig(**episode))


@pytest.fixture
def tiny_env():
    # three orthogonal triples, few slots
    return make_env(np.eye(3), N=4, G=2)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
