import numpy as np
import pytest

from citesim.distributions import OutDegreeDist, Phenotype, PhenotypeMode, RecencyTable, synthetic_recency_table
from citesim.engine import SimConfig
from citesim.seedgen import ErSpec, gen_erdos_renyi_gnm


@pytest.fixture(scope="session")
def recency():
    return synthetic_recency_table()


@pytest.fixture
def small_seed():
    return gen_erdos_renyi_gnm(ErSpec(300, 600), master_seed=11)


@pytest.fixture
def small_config(recency):
    return SimConfig(
        recency_table=recency,
        years=4,
        out_degree=OutDegreeDist(kind="uniform", min=2, max=12),
        superstars=(),
        master_seed=5,
    )


def flat_recency(n=40):
    return RecencyTable(tuple([1.0] * n))


def static(alpha=0.5, pw=1 / 3, rw=1 / 3, fw=1 / 3):
    return PhenotypeMode.static(Phenotype(pw, rw, fw, alpha))


def all_digraph_edges(n):
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def random_digraph(rng, n, p):
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    return list(zip(*np.nonzero(mask)))


# one line per acceptance criterion, echoed after the run
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
