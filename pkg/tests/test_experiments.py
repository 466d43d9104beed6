import numpy as np
import pytest

from crossrumor.agreement import init_agreement, save_agreement
from crossrumor.corpus import load_corpus
from crossrumor.encoder import init_encoder, save_encoder
from crossrumor.errors import ConfigError
from crossrumor.experiments import (
    ExperimentConfig,
    analyze_features,
    compute_feature_rows,
    load_features_csv,
    run_experiment,
    sha256_file,
    write_features_csv,
)
from crossrumor.features import FEATURE_NAMES
from crossrumor.rng import RngState
from crossrumor.synthetic import SyntheticConfig, generate_synthetic_corpus, generate_world
from crossrumor.tokenizer import build_vocabulary
from crossrumor.verifier import VerifierTrainConfig, save_verifier, train_verifier
from crossrumor.nncore import config_digest


def _make_workspace(tmp_path, n_events=4, posts_per_event=14, events_without_baidu=0, seed=3):
    cfg = SyntheticConfig(
        n_events=n_events,
        posts_per_event=posts_per_event,
        n_pairs=40,
        n_heldout_pairs=6,
        stance_per_class=6,
        events_without_baidu=events_without_baidu,
    )
    generate_synthetic_corpus(cfg, RngState(seed), tmp_path)
    world = generate_world(cfg, RngState(seed))
    texts = [p.source for p in world.pairs_train] + [p.target for p in world.pairs_train]
    corpus_texts = [p.text for p in world.corpus.posts]
    vocab = build_vocabulary(texts + corpus_texts, min_count=1)
    vocab.save(tmp_path / "vocab.txt")
    enc = init_encoder(vocab.size, RngState(seed + 1))
    save_encoder(tmp_path / "encoder.ckpt", enc, seed, config_digest({"init": "only"}))
    agr = init_agreement(RngState(seed + 2))
    save_agreement(tmp_path / "agreement.ckpt", agr, seed, config_digest({"init": "only"}))
    return tmp_path


def _config(ws, out, **kw):
    base = dict(
        setting="event",
        source="TFG",
        corpus_dir=ws / "corpus",
        vocab_path=ws / "vocab.txt",
        encoder_path=ws / "encoder.ckpt",
        agreement_path=ws / "agreement.ckpt",
        out_dir=out,
        seed=5,
        verifier_epochs=40,
        permutation_iterations=1000,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def test_event_setting_report_shape(tmp_path):
    ws = _make_workspace(tmp_path / "ws")
    res = run_experiment(_config(ws, tmp_path / "out"))
    assert res.setting == "event"
    assert [r.event_id for r in res.rows] == [1, 2, 3, 4]
    assert all(r.scores["TFG"] is not None for r in res.rows)
    assert res.averages["TFG"] is not None
    assert res.p_value_vs_random is not None
    for name in ("features", "predictions", "report_txt", "report_csv", "manifest"):
        assert res.files[name].exists(), name
    text = (tmp_path / "out" / "report.txt").read_text()
    assert "Average" in text and "Random" in text


def test_event_folds_never_train_on_test_event(tmp_path, monkeypatch):
    ws = _make_workspace(tmp_path / "ws")
    seen = []
    from crossrumor import experiments as exp_mod

    original = exp_mod.train_verifier

    def spy(x, labels, cfg, rng):
        seen.append(len(labels))
        return original(x, labels, cfg, rng)

    monkeypatch.setattr(exp_mod, "train_verifier", spy)
    res = run_experiment(_config(ws, tmp_path / "out"))
    corpus = load_corpus(ws / "corpus")
    n = len(corpus.posts_on("twitter"))
    per_event = [sum(1 for p in corpus.posts_on("twitter") if p.event_id == ev) for ev in (1, 2, 3, 4)]
    assert seen == [n - k for k in per_event]


def test_task_setting_requires_17_style_events(tmp_path):
    ws = _make_workspace(tmp_path / "ws17", n_events=17, posts_per_event=6)
    res = run_experiment(_config(ws, tmp_path / "out", setting="task"))
    assert res.setting == "task"
    assert res.averages["TFG"] is not None
    report = (tmp_path / "out" / "report.csv").read_text()
    assert "f1_task" in report


def test_transfer_setting_and_dashes(tmp_path):
    ws = _make_workspace(tmp_path / "ws", n_events=4, events_without_baidu=1)
    # verifier pretrained on TFG
    corpus = load_corpus(ws / "corpus")
    from crossrumor.tokenizer import Vocabulary
    from crossrumor.encoder import SentenceEncoder, load_encoder
    from crossrumor.agreement import load_agreement

    vocab = Vocabulary.load(ws / "vocab.txt")
    enc_params, _ = load_encoder(ws / "encoder.ckpt")
    agr, _ = load_agreement(ws / "agreement.ckpt")
    encoder = SentenceEncoder(vocab, enc_params)
    posts, x, labels, _, _ = compute_feature_rows(corpus, "TFG", encoder, agr)
    vparams, _ = train_verifier(x, labels, VerifierTrainConfig(epochs=30), RngState(1))
    save_verifier(ws / "verifier.ckpt", vparams, 1, config_digest({"on": "tfg"}))

    res = run_experiment(
        _config(ws, tmp_path / "out", setting="transfer", source="BFG", verifier_path=ws / "verifier.ckpt")
    )
    assert res.setting == "transfer"
    by_event = {r.event_id: r for r in res.rows}
    assert by_event[4].scores["Transfer"] is None  # no baidu pages for event 4
    assert by_event[4].n == 0
    assert res.n_others_filtered > 0
    text = (tmp_path / "out" / "report.txt").read_text()
    assert "-" in text


def test_transfer_requires_bfg_and_checkpoint(tmp_path):
    ws = _make_workspace(tmp_path / "ws")
    with pytest.raises(ConfigError):
        run_experiment(_config(ws, tmp_path / "o1", setting="transfer", source="TFG",
                               verifier_path=ws / "encoder.ckpt"))
    with pytest.raises(ConfigError):
        run_experiment(_config(ws, tmp_path / "o2", setting="transfer", source="BFG"))


def test_missing_inputs_raise_config_error_before_compute(tmp_path):
    ws = _make_workspace(tmp_path / "ws")
    cfg = _config(ws, tmp_path / "out", encoder_path=ws / "nope.ckpt")
    with pytest.raises(ConfigError, match="nope.ckpt"):
        run_experiment(cfg)


def test_reports_are_byte_identical_across_runs(tmp_path):
    ws = _make_workspace(tmp_path / "ws")
    run_experiment(_config(ws, tmp_path / "a"))
    run_experiment(_config(ws, tmp_path / "b"))
    for name in ("features_TFG.csv", "predictions.csv", "report.txt", "report.csv", "manifest.txt"):
        fa = (tmp_path / "a" / name).read_bytes()
        fb = (tmp_path / "b" / name).read_bytes()
        assert fa == fb, name


def test_manifest_digests_match_files(tmp_path):
    ws = _make_workspace(tmp_path / "ws")
    res = run_experiment(_config(ws, tmp_path / "out"))
    manifest = (tmp_path / "out" / "manifest.txt").read_text().splitlines()
    digests = {}
    for line in manifest:
        if line.startswith("file sha256 "):
            _, _, digest, name = line.split(" ", 3)
            digests[name] = digest
    for name, path in res.files.items():
        if name == "manifest":
            continue
        assert digests[path.name] == sha256_file(path), name


def test_features_csv_roundtrip(tmp_path):
    ws = _make_workspace(tmp_path / "ws")
    res = run_experiment(_config(ws, tmp_path / "out"))
    post_ids, event_ids, sources, x, labels = load_features_csv(res.files["features"])
    assert x.shape[1] == len(FEATURE_NAMES)
    assert set(sources) == {"TFG"}
    assert len(post_ids) == x.shape[0] == len(labels)
    assert all(lab in ("real", "fake") for lab in labels)


def test_analyze_features_report(tmp_path):
    ws = _make_workspace(tmp_path / "ws")
    res = run_experiment(_config(ws, tmp_path / "out"))
    ranked = analyze_features(res.files["features"], tmp_path / "pcc")
    assert len(ranked) == 10
    assert (tmp_path / "pcc" / "pcc_report.csv").exists()
    assert (tmp_path / "pcc" / "pcc_report.txt").exists()
    names = [n for n, _ in ranked]
    assert sorted(names) == sorted(FEATURE_NAMES)
