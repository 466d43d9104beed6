"""Evaluation metrics and statistical comparisons."""

from __future__ import annotations

import numpy as np

from .rng import RngState
from .verifier import Verdict


def _labels(seq) -> list[str]:
    return [v.label if isinstance(v, Verdict) else str(v) for v in seq]


def f1_fake(predictions, gold) -> float:
    """Binary F1 with fake as the positive class; zero denominators yield 0."""
    pred = _labels(predictions)
    gold = _labels(gold)
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} predictions vs {len(gold)} gold")
    if not gold:
        raise ValueError("empty label sequences")
    tp = sum(1 for p, g in zip(pred, gold) if p == "fake" and g == "fake")
    fp = sum(1 for p, g in zip(pred, gold) if p == "fake" and g != "fake")
    fn = sum(1 for p, g in zip(pred, gold) if p != "fake" and g == "fake")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def encode_fake_labels(labels) -> np.ndarray:
    return np.array([1.0 if lab == "fake" else 0.0 for lab in _labels(labels)])


def pearson_correlation(feature_values, labels) -> float | None:
    """Pearson r between a feature and the fake indicator (fake=1, real=0).

    Returns None (an explicit undefined marker) when either column is
    constant, rather than a NaN.
    """
    x = np.asarray(feature_values, dtype=np.float64)
    y = (
        encode_fake_labels(labels)
        if not isinstance(labels, np.ndarray) or labels.dtype.kind not in "fiu"
        else np.asarray(labels, dtype=np.float64)
    )
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"length mismatch: {x.shape[0]} features vs {y.shape[0]} labels")
    if x.shape[0] < 2:
        raise ValueError("pearson correlation needs at least 2 points")
    xd = x - x.mean()
    yd = y - y.mean()
    denom = np.sqrt((xd**2).sum() * (yd**2).sum())
    if denom == 0.0:
        return None
    return float((xd * yd).sum() / denom)


def top_features_report(
    feature_table: np.ndarray, labels, feature_names
) -> list[tuple[str, float | None]]:
    """All features ranked by |PCC| descending; undefined PCCs sink to the end.

    Ties (and the undefined group) keep the canonical feature order.
    """
    table = np.asarray(feature_table, dtype=np.float64)
    if table.ndim != 2 or table.shape[1] != len(feature_names):
        raise ValueError(f"feature table shape {table.shape} does not match {len(feature_names)} names")
    scored = []
    for j, name in enumerate(feature_names):
        scored.append((name, pearson_correlation(table[:, j], labels), j))
    scored.sort(key=lambda t: (-(abs(t[1]) if t[1] is not None else -1.0), t[2]))
    return [(name, pcc) for name, pcc, _ in scored]


def permutation_test(
    per_item_scores_a, per_item_scores_b, iterations: int, rng: RngState
) -> float:
    """Paired approximate-randomization test on the mean difference.

    Each iteration flips the sign of every paired difference with probability
    one half; the p-value is the add-one-smoothed fraction of permuted
    |mean| that reach the observed |mean|.
    """
    a = np.asarray(per_item_scores_a, dtype=np.float64)
    b = np.asarray(per_item_scores_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if iterations < 1000:
        raise ValueError(f"need at least 1000 iterations for a stable p-value, got {iterations}")
    d = a - b
    observed = abs(d.mean())
    signs = rng.integers(0, 2, size=(iterations, d.shape[0])) * 2 - 1
    permuted = np.abs((signs * d).mean(axis=1))
    count = int((permuted >= observed).sum())
    return (count + 1) / (iterations + 1)


def random_baseline(posts, rng: RngState) -> list[Verdict]:
    """Fair-coin verdict per post, seeded."""
    flips = rng.integers(0, 2, size=len(posts))
    return [
        Verdict(label="fake" if f else "real", p_fake=1.0 if f else 0.0) for f in flips
    ]


def correctness(predictions, gold) -> np.ndarray:
    """Per-item 0/1 agreement vector, the pairing unit for significance tests."""
    pred = _labels(predictions)
    gold = _labels(gold)
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} vs {len(gold)}")
    return np.array([1.0 if p == g else 0.0 for p, g in zip(pred, gold)])
