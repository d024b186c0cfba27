import os

import hypothesis
import numpy as np
import pytest

from svgp_fraud.synthetic import make_blobs

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def blobs():
    return make_blobs(n=400, prevalence=0.15, d=2, seed=0)


@pytest.fixture(scope="session")
def blobs_csv(tmp_path_factory, blobs):
    from svgp_fraud.data import save_csv

    path = tmp_path_factory.mktemp("data") / "blobs.csv"
    save_csv(blobs, path)
    return path


def random_spd(rng, n):
    A = rng.standard_normal((n, n))
    return A.T @ A + np.eye(n)


def pytest_terminal_summary(terminalreporter):
    from tests.test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
