"""Binary real/fake classifier over the 10 evidence features.

A small MLP (10 -> 20 -> 20 -> 2, ReLU, dropout 0.5 on both hidden layers
during training) on z-scored features. The standardization constants come
from the training set and travel inside the checkpoint, so applying a trained
verifier to another domain (the transfer setting) reuses the source-domain
scaling and never refits anything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .nncore import (
    Checkpoint,
    Parameter,
    adam_step,
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

INPUT_DIM = 10
HIDDEN_DIM = 20
CLASSES = ("real", "fake")  # class index 1 is fake


@dataclass
class Verdict:
    label: str
    p_fake: float


@dataclass
class VerifierParams:
    feat_mean: np.ndarray  # (1, 10) training-set feature means
    feat_std: np.ndarray  # (1, 10) training-set stddevs (constant features -> 1)
    w1: Parameter
    b1: Parameter
    w2: Parameter
    b2: Parameter
    w3: Parameter
    b3: Parameter

    def parameters(self) -> list[Parameter]:
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]


@dataclass
class VerifierTrainConfig:
    epochs: int = 200
    learning_rate: float = 1e-3
    dropout: float = 0.5

    def as_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "dropout": self.dropout,
        }


def init_verifier(rng: RngState, feat_mean: np.ndarray, feat_std: np.ndarray) -> VerifierParams:
    return VerifierParams(
        feat_mean=feat_mean.reshape(1, INPUT_DIM),
        feat_std=feat_std.reshape(1, INPUT_DIM),
        w1=Parameter("w1", init_uniform(rng, (INPUT_DIM, HIDDEN_DIM), INPUT_DIM)),
        b1=Parameter("b1", np.zeros((1, HIDDEN_DIM))),
        w2=Parameter("w2", init_uniform(rng, (HIDDEN_DIM, HIDDEN_DIM), HIDDEN_DIM)),
        b2=Parameter("b2", np.zeros((1, HIDDEN_DIM))),
        w3=Parameter("w3", init_uniform(rng, (HIDDEN_DIM, len(CLASSES)), HIDDEN_DIM)),
        b3=Parameter("b3", np.zeros((1, len(CLASSES)))),
    )


def save_verifier(path, params: VerifierParams, seed: int, digest: str) -> None:
    arrays = {"feat_mean": params.feat_mean, "feat_std": params.feat_std}
    arrays.update({p.name: p.value for p in params.parameters()})
    save_checkpoint(path, arrays, seed, digest)


def load_verifier(path) -> tuple[VerifierParams, Checkpoint]:
    ckpt = load_checkpoint(path)
    params = VerifierParams(
        feat_mean=ckpt.arrays["feat_mean"],
        feat_std=ckpt.arrays["feat_std"],
        **{name: Parameter(name, ckpt.arrays[name]) for name in ("w1", "b1", "w2", "b2", "w3", "b3")},
    )
    return params, ckpt


def verifier_logits(x: np.ndarray, params: VerifierParams, masks=None):
    """Forward pass on already-standardized features; masks enable dropout."""
    pre1 = linear_forward(x, params.w1, params.b1)
    h1 = relu(pre1)
    if masks is not None:
        h1 = h1 * masks[0]
    pre2 = linear_forward(h1, params.w2, params.b2)
    h2 = relu(pre2)
    if masks is not None:
        h2 = h2 * masks[1]
    logits = linear_forward(h2, params.w3, params.b3)
    return logits, (pre1, h1, pre2, h2)


def standardize(x: np.ndarray, params: VerifierParams) -> np.ndarray:
    return (x - params.feat_mean) / params.feat_std


def train_verifier(
    features: np.ndarray,
    labels,
    config: VerifierTrainConfig,
    rng: RngState,
) -> tuple[VerifierParams, list[float]]:
    """Full-batch Adam on z-scored features; returns params and the loss trace."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray([CLASSES.index(lab) for lab in labels], dtype=np.int64)
    if x.ndim != 2 or x.shape[1] != INPUT_DIM:
        raise ValueError(f"features must be (n, {INPUT_DIM}), got {x.shape}")
    if len(set(y.tolist())) < 2:
        raise DataError("training data contains a single class; need both real and fake")
    mean = x.mean(axis=0, keepdims=True)
    std = x.std(axis=0, keepdims=True)
    std[std == 0.0] = 1.0
    params = init_verifier(rng.split(0), mean, std)
    train_rng = rng.split(1)
    xs = standardize(x, params)
    all_params = params.parameters()
    losses: list[float] = []
    for epoch in range(config.epochs):
        masks = None
        if config.dropout > 0:
            masks = (
                dropout_mask((xs.shape[0], HIDDEN_DIM), config.dropout, train_rng),
                dropout_mask((xs.shape[0], HIDDEN_DIM), config.dropout, train_rng),
            )
        logits, (pre1, h1, pre2, h2) = verifier_logits(xs, params, masks)
        loss, dlogits = softmax_cross_entropy(logits, y)
        losses.append(loss)
        zero_grads(all_params)
        params.w3.grad += h2.T @ dlogits
        params.b3.grad += dlogits.sum(axis=0, keepdims=True)
        dh2 = dlogits @ params.w3.value.T
        if masks is not None:
            dh2 = dh2 * masks[1]
        dpre2 = dh2 * (pre2 > 0.0)
        params.w2.grad += h1.T @ dpre2
        params.b2.grad += dpre2.sum(axis=0, keepdims=True)
        dh1 = dpre2 @ params.w2.value.T
        if masks is not None:
            dh1 = dh1 * masks[0]
        dpre1 = dh1 * (pre1 > 0.0)
        params.w1.grad += xs.T @ dpre1
        params.b1.grad += dpre1.sum(axis=0, keepdims=True)
        adam_step(all_params, epoch + 1, lr=config.learning_rate)
    return params, losses


def predict_verifier_batch(features: np.ndarray, params: VerifierParams) -> np.ndarray:
    """p(fake) per row, dropout off."""
    x = standardize(np.asarray(features, dtype=np.float64), params)
    logits, _ = verifier_logits(x, params)
    return softmax(logits)[:, CLASSES.index("fake")]


def predict_verifier(features, params: VerifierParams) -> Verdict:
    """Single-row verdict; p_fake >= 0.5 labels fake (ties go to fake)."""
    f = np.asarray(features, dtype=np.float64).reshape(1, -1)
    p_fake = float(predict_verifier_batch(f, params)[0])
    return Verdict(label="fake" if p_fake >= 0.5 else "real", p_fake=p_fake)


def transfer_predict(
    features: np.ndarray,
    labels,
    pretrained: VerifierParams,
) -> tuple[list[Verdict], list[int], int]:
    """Apply a pretrained verifier unchanged to another domain's feature rows.

    Rows labeled "others" are dropped (the classifier is binary); the count of
    dropped rows is returned alongside the verdicts and the indices of the
    rows that were kept. No re-training and no re-fitting of the
    standardization constants happens here.
    """
    labels = list(labels)
    keep = [i for i, lab in enumerate(labels) if lab != "others"]
    n_filtered = len(labels) - len(keep)
    if not keep:
        return [], [], n_filtered
    x = np.asarray(features, dtype=np.float64)[keep]
    p_fake = predict_verifier_batch(x, pretrained)
    verdicts = [
        Verdict(label="fake" if p >= 0.5 else "real", p_fake=float(p)) for p in p_fake
    ]
    return verdicts, keep, n_filtered
