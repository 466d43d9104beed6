import numpy as np
import pytest

from crossrumor.agreement import init_agreement
from crossrumor.encoder import SentenceEncoder, init_encoder
from crossrumor.rng import RngState
from crossrumor.tokenizer import Vocabulary, RESERVED


@pytest.fixture
def rng():
    return RngState(1234)


@pytest.fixture
def small_vocab():
    tokens = list(RESERVED) + [f"tok{i:02d}" for i in range(30)]
    return Vocabulary(token_to_id={t: i for i, t in enumerate(tokens)}, id_to_token=tokens)


@pytest.fixture
def tiny_encoder_params(rng):
    # Full-size output (300) so agreement/feature dims line up, tiny vocab.
    return init_encoder(vocab_size=33, rng=rng.split(0))


@pytest.fixture
def sentence_encoder(small_vocab, tiny_encoder_params):
    return SentenceEncoder(small_vocab, tiny_encoder_params)


@pytest.fixture
def agreement_params(rng):
    return init_agreement(rng.split(1))


def random_unit_vec(rng, dim=300):
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)
