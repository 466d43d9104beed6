"""Four-class agreement classifier over sentence-vector pairs.

Pre-trained on a stance dataset: each (headline, body) pair is embedded with
the frozen bilingual encoder, the two 300-dimensional vectors are
concatenated in that order, and a one-hidden-layer MLP predicts one of
agree / disagree / discuss / unrelated. The class order is fixed everywhere,
including the downstream feature layout.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .nncore import (
    Checkpoint,
    Parameter,
    adam_step,
    config_digest,
    dropout_mask,
    init_uniform,
    linear_forward,
    load_checkpoint,
    relu,
    save_checkpoint,
    softmax,
    softmax_cross_entropy,
    zero_grads,
)
from .rng import RngState

STANCE_LABELS = ("agree", "disagree", "discuss", "unrelated")
INPUT_DIM = 600  # two concatenated sentence vectors
HIDDEN_DIM = 100


@dataclass
class StancePair:
    headline: str
    body: str
    label: str

    def __post_init__(self):
        if self.label not in STANCE_LABELS:
            raise DataError(f"unknown stance label {self.label!r}")


@dataclass
class AgreementDistribution:
    p_agree: float
    p_disagree: float
    p_discuss: float
    p_unrelated: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p_agree, self.p_disagree, self.p_discuss, self.p_unrelated])

    @classmethod
    def from_array(cls, a) -> "AgreementDistribution":
        a = np.asarray(a, dtype=np.float64)
        if a.shape != (4,):
            raise ValueError(f"agreement distribution needs 4 entries, got shape {a.shape}")
        return cls(*(float(x) for x in a))


@dataclass
class AgreementParams:
    w1: Parameter  # (600, 100)
    b1: Parameter
    w2: Parameter  # (100, 4)
    b2: Parameter

    def parameters(self) -> list[Parameter]:
        return [self.w1, self.b1, self.w2, self.b2]


def init_agreement(rng: RngState) -> AgreementParams:
    return AgreementParams(
        w1=Parameter("w1", init_uniform(rng, (INPUT_DIM, HIDDEN_DIM), INPUT_DIM)),
        b1=Parameter("b1", np.zeros((1, HIDDEN_DIM))),
        w2=Parameter("w2", init_uniform(rng, (HIDDEN_DIM, len(STANCE_LABELS)), HIDDEN_DIM)),
        b2=Parameter("b2", np.zeros((1, len(STANCE_LABELS)))),
    )


def save_agreement(path, params: AgreementParams, seed: int, digest: str) -> None:
    save_checkpoint(path, params.parameters(), seed, digest)


def load_agreement(path) -> tuple[AgreementParams, Checkpoint]:
    ckpt = load_checkpoint(path)
    params = AgreementParams(
        w1=Parameter("w1", ckpt.arrays["w1"]),
        b1=Parameter("b1", ckpt.arrays["b1"]),
        w2=Parameter("w2", ckpt.arrays["w2"]),
        b2=Parameter("b2", ckpt.arrays["b2"]),
    )
    return params, ckpt


def agreement_logits(x: np.ndarray, params: AgreementParams, hidden_mask=None):
    """Forward pass; ``hidden_mask`` is the (scaled) dropout mask in training."""
    pre = linear_forward(x, params.w1, params.b1)
    hid = relu(pre)
    if hidden_mask is not None:
        hid = hid * hidden_mask
    return linear_forward(hid, params.w2, params.b2), pre, hid


def predict_agreement_batch(x: np.ndarray, params: AgreementParams) -> np.ndarray:
    logits, _, _ = agreement_logits(x, params)
    return softmax(logits)


def predict_agreement(rumor_vec, title_vec, params: AgreementParams) -> AgreementDistribution:
    """Class probabilities for concat(rumor, title), dropout disabled."""
    r = np.asarray(rumor_vec, dtype=np.float64).ravel()
    t = np.asarray(title_vec, dtype=np.float64).ravel()
    if r.shape[0] != INPUT_DIM // 2 or t.shape[0] != INPUT_DIM // 2:
        raise ValueError(
            f"expected two {INPUT_DIM // 2}-dim vectors, got {r.shape[0]} and {t.shape[0]}"
        )
    probs = predict_agreement_batch(np.concatenate([r, t])[None, :], params)
    return AgreementDistribution.from_array(probs[0])


# ---------------------------------------------------------------------------
# Data handling


def load_stance_file(path) -> list[StancePair]:
    """CSV with columns headline, body, label (canonical label strings)."""
    pairs = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for i, row in enumerate(reader, 2):
            try:
                pairs.append(StancePair(row["headline"], row["body"], row["label"]))
            except (KeyError, DataError) as exc:
                raise DataError(f"{path}:{i}: {exc}") from exc
    return pairs


def save_stance_file(path, pairs: list[StancePair]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["headline", "body", "label"])
        for p in pairs:
            writer.writerow([p.headline, p.body, p.label])


def split_stance_data(
    dataset: list[StancePair], rng: RngState, per_label: int = 250
) -> tuple[list[StancePair], list[StancePair]]:
    """Hold out a balanced dev set (``per_label`` pairs per class), seeded."""
    by_label: dict[str, list[int]] = {lab: [] for lab in STANCE_LABELS}
    for i, pair in enumerate(dataset):
        by_label[pair.label].append(i)
    dev_idx: set[int] = set()
    for lab in STANCE_LABELS:
        idxs = by_label[lab]
        if len(idxs) < per_label:
            raise DataError(
                f"label {lab!r} has only {len(idxs)} pairs, need {per_label} for the dev set"
            )
        picked = rng.choice(len(idxs), size=per_label, replace=False)
        dev_idx.update(idxs[k] for k in picked)
    dev = [dataset[i] for i in sorted(dev_idx)]
    train = [dataset[i] for i in range(len(dataset)) if i not in dev_idx]
    return train, dev


def macro_f1(predictions, gold, labels=STANCE_LABELS) -> float:
    """Unweighted mean of per-class F1.

    A class absent from both gold and predictions contributes F1 = 1 (nothing
    to get wrong); any zero division inside a class that does occur yields 0.
    """
    predictions = list(predictions)
    gold = list(gold)
    if len(predictions) != len(gold):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(gold)} gold")
    if not gold:
        raise ValueError("empty label sequences")
    scores = []
    for lab in labels:
        tp = sum(1 for p, g in zip(predictions, gold) if p == lab and g == lab)
        fp = sum(1 for p, g in zip(predictions, gold) if p == lab and g != lab)
        fn = sum(1 for p, g in zip(predictions, gold) if p != lab and g == lab)
        if tp == 0 and fp == 0 and fn == 0:
            scores.append(1.0)
            continue
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        scores.append(f1)
    return float(np.mean(scores))


# ---------------------------------------------------------------------------
# Training


@dataclass
class AgreementTrainConfig:
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 1e-3
    dropout: float = 0.3
    seed: int = 0

    def as_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "dropout": self.dropout,
            "seed": self.seed,
        }


def fit_agreement(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_dev: np.ndarray,
    y_dev: np.ndarray,
    config: AgreementTrainConfig,
) -> tuple[AgreementParams, list[float]]:
    """Train the MLP on prebuilt 600-dim inputs; keep the best-dev epoch.

    Returns the parameters at the epoch with the highest dev macro-F1 and the
    per-epoch dev macro-F1 trace.
    """
    if x_train.shape[0] == 0:
        raise ValueError("empty training set")
    if x_dev.shape[0] == 0:
        raise ValueError("empty dev set; best-epoch selection needs one")
    rng = RngState(config.seed)
    params = init_agreement(rng.split(0))
    train_rng = rng.split(1)
    all_params = params.parameters()
    n = x_train.shape[0]
    trace: list[float] = []
    best = (-1.0, [p.value.copy() for p in all_params])
    step = 0
    for _ in range(config.epochs):
        order = train_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            mask = (
                dropout_mask((xb.shape[0], HIDDEN_DIM), config.dropout, train_rng)
                if config.dropout > 0
                else None
            )
            logits, pre, hid = agreement_logits(xb, params, mask)
            _, dlogits = softmax_cross_entropy(logits, yb)
            zero_grads(all_params)
            dhid = dlogits @ params.w2.value.T
            params.w2.grad += hid.T @ dlogits
            params.b2.grad += dlogits.sum(axis=0, keepdims=True)
            if mask is not None:
                dhid = dhid * mask
            dpre = dhid * (pre > 0.0)
            params.w1.grad += xb.T @ dpre
            params.b1.grad += dpre.sum(axis=0, keepdims=True)
            step += 1
            adam_step(all_params, step, lr=config.learning_rate)
        dev_pred = predict_agreement_batch(x_dev, params).argmax(axis=1)
        score = macro_f1(
            [STANCE_LABELS[i] for i in dev_pred], [STANCE_LABELS[i] for i in y_dev]
        )
        trace.append(score)
        if score > best[0]:
            best = (score, [p.value.copy() for p in all_params])
    for p, value in zip(all_params, best[1]):
        p.value[...] = value
    return params, trace


def embed_stance_pairs(pairs: list[StancePair], encoder) -> tuple[np.ndarray, np.ndarray]:
    """Embed (headline, body) through the frozen encoder into (N, 600) inputs."""
    x = np.empty((len(pairs), INPUT_DIM))
    y = np.empty(len(pairs), dtype=np.int64)
    for i, pair in enumerate(pairs):
        x[i, : INPUT_DIM // 2] = encoder.encode(pair.headline)
        x[i, INPUT_DIM // 2 :] = encoder.encode(pair.body)
        y[i] = STANCE_LABELS.index(pair.label)
    return x, y


def train_agreement(
    train_pairs: list[StancePair],
    dev_pairs: list[StancePair],
    encoder,
    config: AgreementTrainConfig,
) -> tuple[AgreementParams, list[float]]:
    """Text-level training entry: embeds with the frozen encoder and fits."""
    if not train_pairs:
        raise ValueError("empty training set")
    x_train, y_train = embed_stance_pairs(train_pairs, encoder)
    x_dev, y_dev = embed_stance_pairs(dev_pairs, encoder)
    return fit_agreement(x_train, y_train, x_dev, y_dev, config)
