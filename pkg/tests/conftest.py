import numpy as np
import pytest
import torch
from hypothesis import HealthCheck, settings

from weaknorm.align import SPECIALS, Vocabulary, train_subword_vocab
from weaknorm.text_prep import Lexicon, generate_corpus

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

torch.set_num_threads(1)


@pytest.fixture(scope="session")
def lexicon():
    return Lexicon.default()


@pytest.fixture(scope="session")
def small_corpus(lexicon):
    return generate_corpus(300, lexicon=lexicon)


@pytest.fixture(scope="session")
def small_vocab(small_corpus):
    return train_subword_vocab([p.target_words for p in small_corpus], 800,
                               [p.source_words for p in small_corpus])


@pytest.fixture
def split_vocab():
    """Hand-built vocabulary where 'màk' and 'qá' split into two units."""
    units = ["▁ca", "▁công", "▁an", "▁mà", "k", "▁hay", "▁z", "▁vậy", "▁q", "á", "▁quá"]
    return Vocabulary(list(SPECIALS) + units)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
