import numpy as np
import pytest

import mirrorgame as mg

from helpers import corpus_trials


@pytest.fixture(scope="session")
def small_corpus():
    return corpus_trials(8, 20.0, seed=42)


@pytest.fixture(scope="session")
def small_model(small_corpus):
    # 16 levels keeps signature-dependent tests fast
    return mg.train_signature_model(small_corpus, n_levels=16, seed=7)


@pytest.fixture(scope="session")
def model_file(small_model, tmp_path_factory):
    path = tmp_path_factory.mktemp("models") / "small.ims.json"
    mg.save_model(small_model, path)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


# Verdict lines recorded by the acceptance battery; echoed at the end of
# the run so they are visible even when passing tests swallow stdout.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
