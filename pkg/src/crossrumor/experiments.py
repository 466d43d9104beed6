"""Experiment orchestration: feature runs, reports, manifests.

Three settings mirror the evaluation protocols of the benchmark:

  task      fixed split, train on events 1-11 and test on events 12-17;
  event     leave-one-event-out cross-validation with a freshly trained
            verifier per fold;
  transfer  a verifier pre-trained on twitter TFG features applied unchanged
            to baidu BFG features, against a seeded random baseline.

Every run writes a feature file, a predictions file, a machine-readable
report, an aligned-text report, and a manifest of sha256 digests. Outputs
carry no timestamps, so identical seed and config reproduce identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import backend, published
from .agreement import AgreementParams, load_agreement
from .corpus import (
    Corpus,
    SOURCES,
    SOURCE_PLATFORM,
    build_evidence,
    load_corpus,
    load_stats,
    loeo_splits,
    task_split,
    validate_against_stats,
)
from .encoder import SentenceEncoder, load_encoder
from .errors import ConfigError, DataError
from .features import FEATURE_NAMES, extract_features
from .metrics import correctness, f1_fake, permutation_test, random_baseline, top_features_report
from .rng import RngState
from .tokenizer import Vocabulary
from .verifier import (
    VerifierTrainConfig,
    load_verifier,
    predict_verifier_batch,
    train_verifier,
)

import logging

logger = logging.getLogger(__name__)

SETTINGS = ("task", "event", "transfer")
NO_DATA = "-"


@dataclass
class ExperimentConfig:
    setting: str
    source: str
    corpus_dir: Path
    vocab_path: Path
    encoder_path: Path
    agreement_path: Path
    out_dir: Path
    verifier_path: Path | None = None
    seed: int = 0
    verifier_epochs: int = 200
    verifier_lr: float = 1e-3
    verifier_dropout: float = 0.5
    permutation_iterations: int = 10000

    def validate(self) -> None:
        if self.setting not in SETTINGS:
            raise ConfigError(f"unknown setting {self.setting!r}, expected one of {SETTINGS}")
        if self.source not in SOURCES:
            raise ConfigError(f"unknown source {self.source!r}, expected one of {SOURCES}")
        if self.setting == "transfer":
            if self.source != "BFG":
                raise ConfigError("transfer setting requires source BFG")
            if self.verifier_path is None:
                raise ConfigError("transfer setting requires a pre-trained verifier checkpoint")
        required = {
            "corpus posts": Path(self.corpus_dir) / "posts.jsonl",
            "vocabulary": Path(self.vocab_path),
            "encoder checkpoint": Path(self.encoder_path),
            "agreement checkpoint": Path(self.agreement_path),
        }
        if self.verifier_path is not None:
            required["verifier checkpoint"] = Path(self.verifier_path)
        missing = [f"{what}: {p}" for what, p in required.items() if not p.exists()]
        if missing:
            raise ConfigError("missing inputs: " + "; ".join(missing))

    def as_dict(self) -> dict:
        return {
            "setting": self.setting,
            "source": self.source,
            "corpus_dir": str(self.corpus_dir),
            "vocab_path": str(self.vocab_path),
            "encoder_path": str(self.encoder_path),
            "agreement_path": str(self.agreement_path),
            "verifier_path": "" if self.verifier_path is None else str(self.verifier_path),
            "seed": self.seed,
            "verifier_epochs": self.verifier_epochs,
            "verifier_lr": self.verifier_lr,
            "verifier_dropout": self.verifier_dropout,
            "permutation_iterations": self.permutation_iterations,
        }


@dataclass
class ReportRow:
    event_id: int
    event_name: str
    n: int
    scores: dict[str, float | None]


@dataclass
class ExperimentResult:
    setting: str
    source: str
    rows: list[ReportRow]
    averages: dict[str, float | None]
    p_value_vs_random: float | None
    n_others_filtered: int
    files: dict[str, Path] = field(default_factory=dict)

    @property
    def average_f1(self) -> float | None:
        return self.averages.get(self.source)


# ---------------------------------------------------------------------------
# Feature rows


def compute_feature_rows(
    corpus: Corpus,
    source: str,
    encoder: SentenceEncoder,
    agreement: AgreementParams,
):
    """Feature matrix for every real/fake rumor post of the source's platform.

    Posts labeled "others" are excluded (the verifier is binary); the count is
    returned so reports can state it. Rows are ordered by (event_id, post_id)
    so output files are byte-stable.
    """
    platform = SOURCE_PLATFORM[source]
    posts = sorted(corpus.posts_on(platform), key=lambda p: (p.event_id, p.post_id))
    n_others = sum(1 for p in posts if p.label == "others")
    posts = [p for p in posts if p.label != "others"]
    x = np.empty((len(posts), len(FEATURE_NAMES)))
    evidence_sizes = np.empty(len(posts), dtype=np.int64)
    for i, post in enumerate(posts):
        evidence = build_evidence(post, source, corpus.index)
        evidence_sizes[i] = len(evidence.items)
        x[i] = extract_features(evidence, encoder, agreement).as_array()
    labels = [p.label for p in posts]
    return posts, x, labels, evidence_sizes, n_others


def write_features_csv(path, posts, x, labels, source: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["post_id", "event_id", "source"] + list(FEATURE_NAMES) + ["label"])
        for post, row, label in zip(posts, x, labels):
            writer.writerow(
                [post.post_id, post.event_id, source]
                + [format(v, ".17g") for v in row]
                + [label]
            )


def load_features_csv(path):
    post_ids, event_ids, sources, rows, labels = [], [], [], [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            post_ids.append(rec["post_id"])
            event_ids.append(int(rec["event_id"]))
            sources.append(rec["source"])
            rows.append([float(rec[name]) for name in FEATURE_NAMES])
            labels.append(rec["label"])
    return post_ids, event_ids, sources, np.asarray(rows, dtype=np.float64), labels


def write_predictions_csv(path, post_ids, p_fakes, labels) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["post_id", "p_fake", "label"])
        for pid, p, lab in zip(post_ids, p_fakes, labels):
            writer.writerow([pid, format(float(p), ".17g"), lab])


# ---------------------------------------------------------------------------
# Manifest


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, files: dict[str, Path], meta: dict) -> Path:
    """Digest every output file and echo the run configuration."""
    out = Path(out_dir)
    path = out / "manifest.txt"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("crossrumor-manifest 1\n")
        fh.write(f"backend {backend.ACTIVE}\n")
        for key in sorted(meta):
            fh.write(f"config {key}={meta[key]}\n")
        for name in sorted(files):
            fh.write(f"file sha256 {sha256_file(files[name])} {Path(files[name]).name}\n")
    return path


# ---------------------------------------------------------------------------
# Reports


def _fmt(score: float | None) -> str:
    return NO_DATA if score is None else f"{score:.3f}"


def write_event_report(path_txt, path_csv, rows: list[ReportRow], columns, averages, footer_lines):
    with open(path_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["event_id", "event_name", "n"] + list(columns))
        for row in rows:
            writer.writerow(
                [row.event_id, row.event_name, row.n]
                + [_fmt(row.scores.get(c)) for c in columns]
            )
        writer.writerow(["avg", "", ""] + [_fmt(averages.get(c)) for c in columns])
    name_w = max([len(r.event_name) for r in rows] + [len("Event")]) + 2
    with open(path_txt, "w", encoding="utf-8") as fh:
        header = f"{'ID':>4} {'Event':<{name_w}} {'N':>6} " + " ".join(
            f"{c:>12}" for c in columns
        )
        fh.write(header + "\n")
        fh.write("-" * len(header) + "\n")
        for row in rows:
            fh.write(
                f"{row.event_id:>4} {row.event_name:<{name_w}} {row.n:>6} "
                + " ".join(f"{_fmt(row.scores.get(c)):>12}" for c in columns)
                + "\n"
            )
        fh.write("-" * len(header) + "\n")
        fh.write(
            f"{'':>4} {'Average':<{name_w}} {'':>6} "
            + " ".join(f"{_fmt(averages.get(c)):>12}" for c in columns)
            + "\n"
        )
        for line in footer_lines:
            fh.write(line + "\n")


def write_task_report(path_txt, path_csv, scores: dict[str, float], footer_lines):
    with open(path_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "f1_task"])
        for method, score in scores.items():
            writer.writerow([method, _fmt(score)])
    with open(path_txt, "w", encoding="utf-8") as fh:
        fh.write(f"{'Method':<16} {'F1-Task':>8}\n")
        fh.write("-" * 25 + "\n")
        for method, score in scores.items():
            fh.write(f"{method:<16} {_fmt(score):>8}\n")
        for line in footer_lines:
            fh.write(line + "\n")


# ---------------------------------------------------------------------------
# The three settings


def _per_event_f1(posts, verdicts, event_ids, has_data) -> dict[int, float | None]:
    scores: dict[int, float | None] = {}
    for ev in event_ids:
        idx = [i for i, p in enumerate(posts) if p.event_id == ev]
        if not idx or not has_data(ev, idx):
            scores[ev] = None
            continue
        scores[ev] = f1_fake([verdicts[i] for i in idx], [posts[i].label for i in idx])
    return scores


def _avg(values) -> float | None:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = RngState(config.seed)

    corpus = load_corpus(config.corpus_dir)
    stats_path = Path(config.corpus_dir) / "stats.csv"
    if stats_path.exists():
        mismatches = validate_against_stats(corpus, load_stats(stats_path))
        if mismatches:
            logger.warning("corpus counts differ from %s in %d cells", stats_path, len(mismatches))

    vocab = Vocabulary.load(config.vocab_path)
    enc_params, _ = load_encoder(config.encoder_path)
    agr_params, _ = load_agreement(config.agreement_path)
    encoder = SentenceEncoder(vocab, enc_params)

    posts, x, labels, evidence_sizes, n_others = compute_feature_rows(
        corpus, config.source, encoder, agr_params
    )
    if not posts:
        raise DataError(f"no usable {SOURCE_PLATFORM[config.source]} posts in the corpus")

    files: dict[str, Path] = {}
    features_path = out / f"features_{config.source}.csv"
    write_features_csv(features_path, posts, x, labels, config.source)
    files["features"] = features_path

    vcfg = VerifierTrainConfig(
        epochs=config.verifier_epochs,
        learning_rate=config.verifier_lr,
        dropout=config.verifier_dropout,
    )
    event_ids = sorted(e.id for e in corpus.events)
    canonical = published.is_canonical_corpus(corpus.event_names)

    if config.setting == "task":
        result = _run_task(config, corpus, posts, x, labels, vcfg, rng, canonical, files, out)
    elif config.setting == "event":
        result = _run_event(
            config, corpus, posts, x, labels, evidence_sizes, vcfg, rng, event_ids, canonical, files, out
        )
    else:
        result = _run_transfer(config, corpus, posts, x, labels, rng, event_ids, files, out)
    result.n_others_filtered = n_others

    meta = config.as_dict()
    meta["n_posts"] = len(posts)
    meta["n_others_filtered"] = n_others
    files["manifest"] = write_manifest(out, files, meta)
    result.files = files
    return result


def _run_task(config, corpus, posts, x, labels, vcfg, rng, canonical, files, out):
    train_posts, test_posts = task_split(posts)
    if not train_posts or not test_posts:
        raise DataError(
            f"task split needs posts on both sides, got {len(train_posts)} train / {len(test_posts)} test"
        )
    pos_index = {id(p): i for i, p in enumerate(posts)}
    tr = [pos_index[id(p)] for p in train_posts]
    te = [pos_index[id(p)] for p in test_posts]
    params, _ = train_verifier(x[tr], [labels[i] for i in tr], vcfg, rng.split(100))
    p_fake = predict_verifier_batch(x[te], params)
    pred = ["fake" if p >= 0.5 else "real" for p in p_fake]
    gold = [labels[i] for i in te]
    ours = f1_fake(pred, gold)

    rand = random_baseline(te, rng.split(9))
    p_value = permutation_test(
        correctness(pred, gold),
        correctness(rand, gold),
        config.permutation_iterations,
        rng.split(10),
    )

    scores = {config.source: ours, "Random": f1_fake(rand, gold)}
    if canonical:
        for name, f1 in published.BASELINE_TASK_F1.items():
            scores[f"{name} (published)"] = f1
    footer = [
        f"permutation test vs random baseline: p = {p_value:.6g}",
        f"train posts: {len(tr)}; test posts: {len(te)}",
    ]
    report_txt, report_csv = out / "report.txt", out / "report.csv"
    write_task_report(report_txt, report_csv, scores, footer)
    files["report_txt"], files["report_csv"] = report_txt, report_csv

    predictions = out / "predictions.csv"
    write_predictions_csv(predictions, [p.post_id for p in test_posts], p_fake, pred)
    files["predictions"] = predictions

    row = ReportRow(event_id=0, event_name="task split 1-11 / 12-17", n=len(te), scores=scores)
    return ExperimentResult(
        setting="task",
        source=config.source,
        rows=[row],
        averages=scores,
        p_value_vs_random=p_value,
        n_others_filtered=0,
    )


def _run_event(
    config, corpus, posts, x, labels, evidence_sizes, vcfg, rng, event_ids, canonical, files, out
):
    folds = loeo_splits(posts)
    pos_index = {id(p): i for i, p in enumerate(posts)}
    p_fake = np.empty(len(posts))
    for ev, train_posts, test_posts in folds:
        tr = [pos_index[id(p)] for p in train_posts]
        te = [pos_index[id(p)] for p in test_posts]
        params, _ = train_verifier(x[tr], [labels[i] for i in tr], vcfg, rng.split(ev))
        p_fake[te] = predict_verifier_batch(x[te], params)
    pred = ["fake" if p >= 0.5 else "real" for p in p_fake]
    rand = random_baseline(posts, rng.split(9))

    # An event with no retrieved evidence at all has nothing for the features
    # to see; its row shows a dash and stays out of the average.
    def has_data(ev, idx):
        return bool(evidence_sizes[idx].sum() > 0)

    ours = _per_event_f1(posts, pred, event_ids, has_data)
    rand_scores = _per_event_f1(posts, [v.label for v in rand], event_ids, has_data)

    columns = [config.source, "Random"]
    rows = []
    for ev in event_ids:
        scores = {config.source: ours[ev], "Random": rand_scores[ev]}
        if canonical:
            for name, per_event in published.BASELINE_EVENT_F1.items():
                scores[f"{name} (published)"] = per_event[ev - 1]
        rows.append(
            ReportRow(
                event_id=ev,
                event_name=corpus.event_names.get(ev, ""),
                n=sum(1 for p in posts if p.event_id == ev),
                scores=scores,
            )
        )
    if canonical:
        columns += [f"{name} (published)" for name in published.BASELINE_EVENT_F1]
    averages = {c: _avg([r.scores.get(c) for r in rows]) for c in columns}

    scored = [i for i, p in enumerate(posts) if ours[p.event_id] is not None]
    p_value = None
    if scored:
        gold = [posts[i].label for i in scored]
        p_value = permutation_test(
            correctness([pred[i] for i in scored], gold),
            correctness([rand[i] for i in scored], gold),
            config.permutation_iterations,
            rng.split(10),
        )

    footer = [f"events without evidence show '{NO_DATA}' and are excluded from the average"]
    if p_value is not None:
        footer.append(f"permutation test vs random baseline (per-post correctness): p = {p_value:.6g}")
    report_txt, report_csv = out / "report.txt", out / "report.csv"
    write_event_report(report_txt, report_csv, rows, columns, averages, footer)
    files["report_txt"], files["report_csv"] = report_txt, report_csv

    predictions = out / "predictions.csv"
    write_predictions_csv(predictions, [p.post_id for p in posts], p_fake, pred)
    files["predictions"] = predictions

    return ExperimentResult(
        setting="event",
        source=config.source,
        rows=rows,
        averages=averages,
        p_value_vs_random=p_value,
        n_others_filtered=0,
    )


def _run_transfer(config, corpus, posts, x, labels, rng, event_ids, files, out):
    params, _ = load_verifier(config.verifier_path)
    p_fake = predict_verifier_batch(x, params)  # constants stay as trained
    pred = ["fake" if p >= 0.5 else "real" for p in p_fake]
    rand = random_baseline(posts, rng.split(9))

    def has_data(ev, idx):
        return True  # events with zero rows are handled by the empty-idx path

    ours = _per_event_f1(posts, pred, event_ids, has_data)
    rand_scores = _per_event_f1(posts, [v.label for v in rand], event_ids, has_data)
    columns = ["Random", "Transfer"]
    rows = [
        ReportRow(
            event_id=ev,
            event_name=corpus.event_names.get(ev, ""),
            n=sum(1 for p in posts if p.event_id == ev),
            scores={"Random": rand_scores[ev], "Transfer": ours[ev]},
        )
        for ev in event_ids
    ]
    averages = {c: _avg([r.scores.get(c) for r in rows]) for c in columns}
    p_value = None
    if posts:
        gold = [p.label for p in posts]
        p_value = permutation_test(
            correctness(pred, gold),
            correctness(rand, gold),
            config.permutation_iterations,
            rng.split(10),
        )

    footer = [f"'{NO_DATA}' marks events with no usable webpage rows"]
    if p_value is not None:
        footer.append(f"permutation test vs random baseline (per-post correctness): p = {p_value:.6g}")
    report_txt, report_csv = out / "report.txt", out / "report.csv"
    write_event_report(report_txt, report_csv, rows, columns, averages, footer)
    files["report_txt"], files["report_csv"] = report_txt, report_csv

    predictions = out / "predictions.csv"
    write_predictions_csv(predictions, [p.post_id for p in posts], p_fake, pred)
    files["predictions"] = predictions

    return ExperimentResult(
        setting="transfer",
        source=config.source,
        rows=rows,
        averages={"Transfer": averages["Transfer"], "Random": averages["Random"]},
        p_value_vs_random=p_value,
        n_others_filtered=0,
    )


# ---------------------------------------------------------------------------
# Feature analysis (PCC report)


def analyze_features(features_path, out_dir) -> list[tuple[str, float | None]]:
    """Rank the 10 features by |PCC| against the fake label; write the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, _, _, x, labels = load_features_csv(features_path)
    if x.shape[0] < 2:
        raise DataError("feature analysis needs at least 2 rows")
    ranked = top_features_report(x, labels, FEATURE_NAMES)
    path_csv = out / "pcc_report.csv"
    with open(path_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "pcc"])
        for name, pcc in ranked:
            writer.writerow([name, "undefined" if pcc is None else format(pcc, ".6f")])
    path_txt = out / "pcc_report.txt"
    with open(path_txt, "w", encoding="utf-8") as fh:
        fh.write(f"{'Feature':<18} {'PCC':>10}\n")
        fh.write("-" * 29 + "\n")
        for name, pcc in ranked:
            fh.write(f"{name:<18} {'undefined' if pcc is None else format(pcc, '+.3f'):>10}\n")
    write_manifest(out, {"pcc_csv": path_csv, "pcc_txt": path_txt}, {"features": str(features_path)})
    return ranked
