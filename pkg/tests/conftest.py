import numpy as np
import pytest

from erpquant.synthdata import GeneratorConfig, generate_subject


@pytest.fixture(scope="session")
def default_subject():
    return generate_subject(GeneratorConfig(n_subjects=1, seed=7), 0)


@pytest.fixture(scope="session")
def small_config():
    return GeneratorConfig(n_subjects=3, n_targets=40, n_nontargets=160, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
