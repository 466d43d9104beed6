"""Minimal deterministic neural-network engine.

Everything trains in float64 on 2-D numpy arrays ("matrices"): activations
and inputs are row-major with one row per example, weights are
(fan_in, fan_out), biases are (1, fan_out). Gradients are hand-written per
operation rather than via a general autodiff graph; the finite-difference
checker at the bottom is the safety net that keeps them honest.

Determinism contract: given the same RngState and the same call sequence,
training is bit-reproducible on one machine. Nothing here spawns threads or
uses nondeterministic reductions.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import backend
from .errors import DegenerateInputError, DeterminismError, ShapeError
from .rng import RngState


# ---------------------------------------------------------------------------
# Parameters


@dataclass
class Parameter:
    """A trainable matrix with its gradient and Adam moment buffers."""

    name: str
    value: np.ndarray
    grad: np.ndarray = field(default=None)  # type: ignore[assignment]
    adam_m: np.ndarray = field(default=None)  # type: ignore[assignment]
    adam_v: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.value.ndim != 2:
            raise ShapeError(f"parameter {self.name!r} must be 2-D, got shape {self.value.shape}")
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        if self.adam_m is None:
            self.adam_m = np.zeros_like(self.value)
        if self.adam_v is None:
            self.adam_v = np.zeros_like(self.value)

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape  # type: ignore[return-value]


def init_uniform(rng: RngState, shape: tuple[int, int], fan_in: int) -> np.ndarray:
    """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    bound = 1.0 / np.sqrt(float(fan_in))
    return rng.uniform(-bound, bound, shape)


def zero_grads(params: Iterable[Parameter]) -> None:
    for p in params:
        p.grad[...] = 0.0


def check_finite(params: Iterable[Parameter]) -> None:
    for p in params:
        if not np.all(np.isfinite(p.value)):
            raise DegenerateInputError(f"parameter {p.name!r} contains non-finite values")


def _value(x) -> np.ndarray:
    return x.value if isinstance(x, Parameter) else np.asarray(x, dtype=np.float64)


# ---------------------------------------------------------------------------
# Dense ops


def linear_forward(x, w, b) -> np.ndarray:
    """x (n, d_in) times w (d_in, d_out) plus row-broadcast bias b (1, d_out)."""
    xv, wv, bv = _value(x), _value(w), _value(b)
    if xv.ndim != 2 or wv.ndim != 2 or xv.shape[1] != wv.shape[0]:
        raise ShapeError(f"linear_forward: x has shape {xv.shape}, w has shape {wv.shape}")
    if bv.shape != (1, wv.shape[1]):
        raise ShapeError(f"linear_forward: b has shape {bv.shape}, expected (1, {wv.shape[1]})")
    return xv @ wv + bv


def linear_backward(dout: np.ndarray, x: np.ndarray, w, b) -> np.ndarray:
    """Accumulate grads into w and b (if they are Parameters); return dx."""
    if isinstance(w, Parameter):
        w.grad += x.T @ dout
    if isinstance(b, Parameter):
        b.grad += dout.sum(axis=0, keepdims=True)
    return dout @ _value(w).T


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(dout: np.ndarray, pre: np.ndarray) -> np.ndarray:
    return dout * (pre > 0.0)


def softmax(logits) -> np.ndarray:
    """Row-wise stable softmax; 1-D input gives a 1-D distribution.

    Max-subtraction prevents overflow; a denormal floor keeps every output
    strictly positive even when an exponent underflows to zero.
    """
    a = np.asarray(logits, dtype=np.float64)
    if a.size == 0:
        raise ValueError("softmax: empty input")
    squeeze = a.ndim == 1
    if squeeze:
        a = a[None, :]
    a = a - a.max(axis=1, keepdims=True)
    e = np.maximum(np.exp(a), np.finfo(np.float64).tiny)
    out = e / e.sum(axis=1, keepdims=True)
    return out[0] if squeeze else out


def cross_entropy_loss(probs, target_index: int) -> float:
    """-log(probs[target]); probs are clipped into [1e-12, 1] first."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ShapeError(f"cross_entropy_loss expects a 1-D distribution, got shape {p.shape}")
    if not 0 <= target_index < p.shape[0]:
        raise ValueError(f"target index {target_index} out of range for {p.shape[0]} classes")
    return float(-np.log(np.clip(p[target_index], 1e-12, 1.0)))


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over rows plus the gradient on the logits."""
    probs = softmax(logits)
    n = logits.shape[0]
    rows = np.arange(n)
    loss = float(np.mean(-np.log(np.clip(probs[rows, targets], 1e-12, 1.0))))
    dlogits = probs.copy()
    dlogits[rows, targets] -= 1.0
    dlogits /= n
    return loss, dlogits


# ---------------------------------------------------------------------------
# Cosine ranking loss


def _unit(v: np.ndarray, what: str) -> tuple[np.ndarray, float]:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise DegenerateInputError(f"{what} has zero norm")
    return v / n, n


def cosine_similarity(u, v) -> float:
    uv = np.asarray(u, dtype=np.float64).ravel()
    vv = np.asarray(v, dtype=np.float64).ravel()
    uh, _ = _unit(uv, "first vector")
    vh, _ = _unit(vv, "second vector")
    return float(uh @ vh)


def ranking_loss(anchor, positive, negative, margin: float) -> float:
    """max(0, margin - cos(anchor, positive) + cos(anchor, negative))."""
    if margin <= 0.0:
        raise ValueError(f"margin must be positive, got {margin}")
    return max(
        0.0,
        margin - cosine_similarity(anchor, positive) + cosine_similarity(anchor, negative),
    )


def _cos_grads(u: np.ndarray, v: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    uh, un = _unit(u, "first vector")
    vh, vn = _unit(v, "second vector")
    c = float(uh @ vh)
    du = (vh - c * uh) / un
    dv = (uh - c * vh) / vn
    return c, du, dv


def ranking_loss_grad(anchor, positive, negative, margin: float):
    """Loss plus gradients w.r.t. all three vectors (zero when the hinge is slack)."""
    if margin <= 0.0:
        raise ValueError(f"margin must be positive, got {margin}")
    a = np.asarray(anchor, dtype=np.float64).ravel()
    p = np.asarray(positive, dtype=np.float64).ravel()
    n = np.asarray(negative, dtype=np.float64).ravel()
    c_ap, da_p, dp = _cos_grads(a, p)
    c_an, da_n, dn = _cos_grads(a, n)
    loss = margin - c_ap + c_an
    if loss <= 0.0:
        z = np.zeros_like(a)
        return 0.0, z, np.zeros_like(p), np.zeros_like(n)
    return float(loss), -da_p + da_n, -dp, dn


# ---------------------------------------------------------------------------
# Dropout


def dropout_mask(shape, rate: float, rng: RngState) -> np.ndarray:
    """Keep-mask already scaled by 1/(1-rate) (inverted dropout)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def dropout(x, rate: float, rng: RngState, training: bool) -> np.ndarray:
    """Inverted dropout: zero with probability ``rate`` and rescale survivors."""
    xv = _value(x)
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return xv
    return xv * dropout_mask(xv.shape, rate, rng)


# ---------------------------------------------------------------------------
# Optimizer


def adam_step(
    params: Iterable[Parameter],
    t: int,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Bias-corrected Adam update, in place; grads are zeroed afterwards."""
    if t < 1:
        raise ValueError(f"step counter must be >= 1, got {t}")
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for p in params:
        g = p.grad
        p.adam_m *= beta1
        p.adam_m += (1.0 - beta1) * g
        p.adam_v *= beta2
        p.adam_v += (1.0 - beta2) * g * g
        m_hat = p.adam_m / bc1
        v_hat = p.adam_v / bc2
        p.value -= lr * m_hat / (np.sqrt(v_hat) + eps)
        g[...] = 0.0


# ---------------------------------------------------------------------------
# GRU cell (single step; the sequence kernels live in crossrumor.kernels)


@dataclass
class GruCellParams:
    """One GRU direction: packed input weights, split recurrent weights.

    w is (d_in, 3H) with gates packed [update | reset | candidate], u_zr is
    (H, 2H) for the two sigmoid gates, u_c is (H, H) for the candidate, b is
    (1, 3H).
    """

    w: Parameter
    u_zr: Parameter
    u_c: Parameter
    b: Parameter

    @property
    def d_in(self) -> int:
        return self.w.shape[0]

    @property
    def d_hidden(self) -> int:
        return self.u_c.shape[0]

    def parameters(self) -> list[Parameter]:
        return [self.w, self.u_zr, self.u_c, self.b]


def init_gru_cell(rng: RngState, prefix: str, d_in: int, d_hidden: int) -> GruCellParams:
    return GruCellParams(
        w=Parameter(f"{prefix}.w", init_uniform(rng, (d_in, 3 * d_hidden), d_in)),
        u_zr=Parameter(f"{prefix}.u_zr", init_uniform(rng, (d_hidden, 2 * d_hidden), d_hidden)),
        u_c=Parameter(f"{prefix}.u_c", init_uniform(rng, (d_hidden, d_hidden), d_hidden)),
        b=Parameter(f"{prefix}.b", np.zeros((1, 3 * d_hidden))),
    )


def gru_cell_step(x_t, h_prev, cell: GruCellParams) -> np.ndarray:
    """Advance the hidden state by one step; x_t is (1, d_in), h_prev (1, H)."""
    xv, hv = _value(x_t), _value(h_prev)
    if xv.shape != (1, cell.d_in):
        raise ShapeError(f"gru_cell_step: x_t has shape {xv.shape}, expected (1, {cell.d_in})")
    if hv.shape != (1, cell.d_hidden):
        raise ShapeError(
            f"gru_cell_step: h_prev has shape {hv.shape}, expected (1, {cell.d_hidden})"
        )
    xw = xv @ cell.w.value + cell.b.value
    h_all, _, _, _ = backend.gru_layer_forward(
        np.ascontiguousarray(xw), cell.u_zr.value, cell.u_c.value, hv[0].copy()
    )
    return h_all[1:2].copy()


# ---------------------------------------------------------------------------
# Finite-difference gradient checking


def grad_check(
    loss_and_grad: Callable[[], float],
    params: Sequence[Parameter],
    epsilon: float = 1e-4,
    rng: RngState | None = None,
    max_entries_per_param: int = 6,
) -> float:
    """Compare analytic gradients against central finite differences.

    ``loss_and_grad`` must zero the grads it owns, run the forward pass, run
    the backward pass, and return the scalar loss; it must be deterministic
    (two identical calls returning different losses raise DeterminismError).
    Up to ``max_entries_per_param`` entries are sampled per parameter; the
    return value is the maximum relative error over all sampled entries.
    """
    if rng is None:
        rng = RngState(0)
    base = loss_and_grad()
    analytic = [p.grad.copy() for p in params]
    if loss_and_grad() != base:
        raise DeterminismError("loss closure returned different values on identical calls")
    max_rel = 0.0
    for p, ana in zip(params, analytic):
        flat = p.value.reshape(-1)
        size = flat.shape[0]
        if size == 0:
            continue
        if size <= max_entries_per_param:
            idxs = np.arange(size)
        else:
            idxs = rng.choice(size, size=max_entries_per_param, replace=False)
        for idx in idxs:
            orig = flat[idx]
            flat[idx] = orig + epsilon
            lp = loss_and_grad()
            flat[idx] = orig - epsilon
            lm = loss_and_grad()
            flat[idx] = orig
            numeric = (lp - lm) / (2.0 * epsilon)
            a = ana.reshape(-1)[idx]
            denom = max(abs(a) + abs(numeric), 1e-8)
            rel = abs(a - numeric) / denom
            max_rel = max(max_rel, rel)
    zero_grads(params)
    return max_rel


# ---------------------------------------------------------------------------
# Checkpoints

CHECKPOINT_MAGIC = "crossrumor-checkpoint"
CHECKPOINT_VERSION = 1


def config_digest(config: Mapping[str, object]) -> str:
    """Stable digest of a configuration mapping (sorted key=value lines)."""
    text = "".join(f"{k}={config[k]}\n" for k in sorted(config))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class Checkpoint:
    seed: int
    config_digest: str
    arrays: dict[str, np.ndarray]


def save_checkpoint(path, arrays, seed: int, digest: str) -> None:
    """Write a self-describing text checkpoint.

    Values render with 17 significant digits, which round-trips float64
    exactly, so save -> load reproduces every matrix bit for bit. ``arrays``
    is a mapping name -> 2-D array, or an iterable of Parameters.
    """
    if not isinstance(arrays, Mapping):
        arrays = {p.name: p.value for p in arrays}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\n")
        fh.write(f"seed {int(seed)}\n")
        fh.write(f"config-digest {digest}\n")
        fh.write(f"arrays {len(arrays)}\n")
        for name, value in arrays.items():
            v = np.asarray(value, dtype=np.float64)
            if v.ndim != 2:
                raise ShapeError(f"checkpoint array {name!r} must be 2-D, got shape {v.shape}")
            fh.write(f"array {name} {v.shape[0]} {v.shape[1]}\n")
            for row in v:
                fh.write(" ".join(format(x, ".17g") for x in row))
                fh.write("\n")


def load_checkpoint(path) -> Checkpoint:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if header[:1] != [CHECKPOINT_MAGIC] or int(header[1]) != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: not a version-{CHECKPOINT_VERSION} checkpoint")
        seed = int(fh.readline().split()[1])
        digest = fh.readline().split()[1]
        count = int(fh.readline().split()[1])
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            _, name, rows, cols = fh.readline().split()
            rows, cols = int(rows), int(cols)
            data = np.empty((rows, cols))
            for i in range(rows):
                data[i] = np.array(fh.readline().split(), dtype=np.float64)
            arrays[name] = data
    return Checkpoint(seed=seed, config_digest=digest, arrays=arrays)
