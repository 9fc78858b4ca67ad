import os

import hypothesis
import numpy as np
import pytest

from bcmsr.models.schemas import BlackwellParams, DueckParams
from bcmsr.services.channels import dueck_distribution

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def dueck_noisy():
    """Case 1 at p = q = r = 0.05, where all four bounds differ."""
    return DueckParams(noise_case=1, p=0.05, q=0.05, r=0.05)


@pytest.fixture
def dueck_tight():
    return DueckParams(noise_case=1, p=0.25, q=0.2, r=0.3)


@pytest.fixture
def blackwell_default():
    return BlackwellParams(p=0.1, alpha=0.3, beta=0.3)


@pytest.fixture(scope="session")
def dueck_extended():
    return dueck_distribution(DueckParams(noise_case=1, p=0.05, q=0.05, r=0.05))


@pytest.fixture
def system_file(tmp_path):
    def write(text: str, name: str = "system.txt") -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write
