import pytest

from _scorers import RandomLogitScorer


@pytest.fixture
def random_scorer():
    return RandomLogitScorer(seed=13)
