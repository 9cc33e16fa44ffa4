import time
from dataclasses import dataclass

import numpy as np
import pytest

from bilstm_lrp.model import UNK
from bilstm_lrp.synthetic import SyntheticCorpusSpec, generate_synthetic_corpus
from bilstm_lrp.train import TrainConfig, init_model, train

_CRITERIA: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def report():
    """Record one acceptance line: report(key, passed, detail)."""
    def _report(key: str, passed: bool, detail: str) -> bool:
        _CRITERIA[key] = (bool(passed), detail)
        return bool(passed)
    return _report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: int(k.split()[0])):
        passed, detail = _CRITERIA[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {key}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@dataclass
class TrainedSetup:
    spec: SyntheticCorpusSpec
    cfg: TrainConfig
    train: object
    test: object
    params: object
    history: list
    seconds: float


@pytest.fixture(scope="session")
def trained():
    """Default synthetic corpus and default training run (about a minute)."""
    spec, cfg = SyntheticCorpusSpec(), TrainConfig()
    train_set, test_set = generate_synthetic_corpus(spec)
    start = time.process_time()
    params, history = train(init_model(train_set.vocabulary([UNK]), cfg), train_set, cfg, test_set)
    return TrainedSetup(spec, cfg, train_set, test_set, params, history, time.process_time() - start)
