import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crossrumor.errors import DegenerateInputError
from crossrumor.features import (
    CcpFeatures,
    EMPTY_EVIDENCE_FEATURES,
    EvidenceItem,
    EvidenceSet,
    FEATURE_NAMES,
    cosine_distance,
    extract_features,
    mean_var,
)
from crossrumor.rng import RngState


# ---------------------------------------------------------------------------
# cosine distance


def test_cosine_distance_identical_is_zero():
    v = np.array([0.3, -1.2, 4.0])
    assert abs(cosine_distance(v, v)) < 1e-12


def test_cosine_distance_opposite_is_two():
    v = np.array([1.0, 2.0])
    assert abs(cosine_distance(v, -v) - 2.0) < 1e-12


def test_cosine_distance_hand_value():
    assert abs(cosine_distance([1.0, 0.0], [1.0, 1.0]) - 0.29289) < 1e-5


def test_cosine_distance_zero_norm_raises():
    with pytest.raises(DegenerateInputError):
        cosine_distance([0.0, 0.0], [1.0, 0.0])


@settings(max_examples=60)
@given(st.integers(0, 10**9))
def test_cosine_distance_range(seed):
    rng = RngState(seed)
    u = rng.normal(size=5) + 1e-3
    v = rng.normal(size=5) + 1e-3
    d = cosine_distance(u, v)
    assert -1e-12 <= d <= 2.0 + 1e-12


# ---------------------------------------------------------------------------
# mean / population variance


def test_mean_var_single_element():
    assert mean_var([0.5]) == (0.5, 0.0)


def test_mean_var_two_points():
    mean, var = mean_var([0.0, 1.0])
    assert mean == 0.5 and abs(var - 0.25) < 1e-15


def test_mean_var_constant_sequence():
    _, var = mean_var([0.7] * 9)
    assert var == 0.0


def test_mean_var_empty_raises():
    with pytest.raises(ValueError):
        mean_var([])


@settings(max_examples=50)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=20))
def test_mean_var_matches_two_pass_oracle(xs):
    mean, var = mean_var(xs)
    m = sum(xs) / len(xs)
    v = sum((x - m) ** 2 for x in xs) / len(xs)
    assert abs(mean - m) < 1e-9
    assert abs(var - v) < 1e-9


# ---------------------------------------------------------------------------
# extract_features


class _StubEncoder:
    """Maps exact texts to fixed vectors; stands in for the real encoder."""

    def __init__(self, table):
        self.table = table

    def encode(self, text, language_hint=None):
        return self.table[text]


class _StubAgreement:
    pass


def _patched_extract(monkeypatch, table, dists_probs):
    """Run extract_features with stubbed per-title agreement distributions."""
    from crossrumor import features as feat_mod
    from crossrumor.agreement import AgreementDistribution

    def fake_predict(rumor_vec, title_vec, params):
        key = tuple(np.round(title_vec[:2], 6))
        return AgreementDistribution(*dists_probs[key])

    monkeypatch.setattr(feat_mod, "predict_agreement", fake_predict)
    return feat_mod


def test_identical_evidence_gives_zero_variances(rng, sentence_encoder, agreement_params):
    ev = EvidenceSet(
        rumor_text="tok01 tok02 tok03",
        items=[
            EvidenceItem("copy a", "google", "m1"),
            EvidenceItem("copy b", "google", "m1"),
        ],
    )
    # both titles UNK-tokenize differently but we want *identical embeddings*:
    # use the same underlying text for both by stubbing the encoder
    vec = rng.normal(size=300)
    enc = _StubEncoder({"tok01 tok02 tok03": vec, "copy a": vec.copy(), "copy b": vec.copy()})
    out = extract_features(ev, enc, agreement_params)
    assert abs(out.dist_mean) < 1e-9
    assert out.dist_var == 0.0
    for name in ("agree_var", "disagree_var", "discuss_var", "unrelated_var"):
        assert abs(getattr(out, name)) < 1e-12


def test_fixture_distances_and_distributions(monkeypatch, rng):
    from crossrumor.agreement import AgreementDistribution
    from crossrumor import features as feat_mod

    rumor = np.zeros(300)
    rumor[0] = 1.0
    near = rumor.copy()  # distance 0
    far = np.zeros(300)
    far[1] = 1.0  # distance 1
    enc = _StubEncoder({"rumor": rumor, "near": near, "far": far})

    def fake_predict(rumor_vec, title_vec, params):
        if title_vec[0] == 1.0:
            return AgreementDistribution(0.7, 0.1, 0.1, 0.1)
        return AgreementDistribution(0.1, 0.1, 0.1, 0.7)

    monkeypatch.setattr(feat_mod, "predict_agreement", fake_predict)
    ev = EvidenceSet(
        rumor_text="rumor",
        items=[EvidenceItem("near", "google", "m"), EvidenceItem("far", "baidu", "m")],
    )
    out = feat_mod.extract_features(ev, enc, None)
    expected = (0.5, 0.25, 0.4, 0.09, 0.1, 0.0, 0.1, 0.0, 0.4, 0.09)
    assert np.abs(out.as_array() - np.array(expected)).max() < 1e-12


def test_empty_evidence_imputation(sentence_encoder, agreement_params):
    out = extract_features(EvidenceSet("anything", []), sentence_encoder, agreement_params)
    assert out.as_array().tolist() == list(EMPTY_EVIDENCE_FEATURES)


def test_duplicate_titles_collapse(sentence_encoder, agreement_params):
    base = EvidenceSet(
        "tok01 tok02",
        [EvidenceItem("tok03 tok04", "google", "m1"), EvidenceItem("tok05", "google", "m2")],
    )
    doubled = EvidenceSet(
        "tok01 tok02",
        base.items + [EvidenceItem("tok03 tok04", "baidu", "m9")],
    )
    a = extract_features(base, sentence_encoder, agreement_params).as_array()
    b = extract_features(doubled, sentence_encoder, agreement_params).as_array()
    assert np.array_equal(a, b)


def test_permuting_evidence_leaves_output_unchanged(sentence_encoder, agreement_params, rng):
    items = [EvidenceItem(f"tok0{i} tok1{i % 3}", "google", f"m{i}") for i in range(5)]
    ev1 = EvidenceSet("tok01 tok02 tok03", items)
    ev2 = EvidenceSet("tok01 tok02 tok03", items[::-1])
    a = extract_features(ev1, sentence_encoder, agreement_params).as_array()
    b = extract_features(ev2, sentence_encoder, agreement_params).as_array()
    assert np.array_equal(a, b)


def test_agreement_means_sum_to_one(sentence_encoder, agreement_params):
    items = [EvidenceItem(f"tok2{i} tok0{i % 4} tok1{i % 2}", "google", f"m{i}") for i in range(4)]
    out = extract_features(EvidenceSet("tok01 tok05", items), sentence_encoder, agreement_params)
    total = out.agree_mean + out.disagree_mean + out.discuss_mean + out.unrelated_mean
    assert abs(total - 1.0) < 1e-9


def test_zero_norm_title_embedding_imputes_distance(monkeypatch, agreement_params, rng):
    rumor = rng.normal(size=300)
    enc = _StubEncoder({"rumor": rumor, "dead": np.zeros(300)})
    ev = EvidenceSet("rumor", [EvidenceItem("dead", "google", "m")])
    out = extract_features(ev, enc, agreement_params)
    assert out.dist_mean == 1.0 and out.dist_var == 0.0


def test_features_match_bruteforce_oracle(sentence_encoder, agreement_params):
    """Small-scale version of the acceptance oracle check (full 100-case run
    lives in test_acceptance)."""
    from tests.oracle_features import bruteforce_features

    rng = RngState(55)
    for case in range(10):
        n = int(rng.integers(0, 5))
        items = [
            EvidenceItem(f"tok{int(rng.integers(0, 30)):02d} tok{int(rng.integers(0, 30)):02d}", "google", f"m{i}")
            for i in range(n)
        ]
        ev = EvidenceSet("tok02 tok11 tok17", items)
        fast = extract_features(ev, sentence_encoder, agreement_params).as_array()
        slow = bruteforce_features(ev, sentence_encoder, agreement_params)
        assert np.abs(fast - slow).max() < 1e-9, f"case {case}"


def test_feature_vector_shape_and_names():
    assert len(FEATURE_NAMES) == 10
    f = CcpFeatures.from_array(np.arange(10.0))
    assert f.as_array().tolist() == list(map(float, range(10)))
    with pytest.raises(ValueError):
        CcpFeatures.from_array(np.arange(9.0))
