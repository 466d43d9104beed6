"""Bilingual sentence encoder: two-layer bidirectional GRU over shared tokens.

A sentence becomes a fixed 300-dimensional vector: token embeddings feed a
bidirectional GRU layer, its per-step forward/backward concatenation feeds a
second bidirectional layer, each layer's per-step states are averaged over
time, and the two 150-dimensional layer averages are concatenated. Training
minimizes a pairwise cosine ranking loss over parallel sentence pairs with
in-batch negatives, which pulls translation pairs together in the shared
space and pushes non-pairs apart.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import DataError
from .nncore import (
    Checkpoint,
    GruCellParams,
    Parameter,
    adam_step,
    init_gru_cell,
    init_uniform,
    load_checkpoint,
    save_checkpoint,
    config_digest,
)
from .rng import RngState
from .tokenizer import Vocabulary, tokenize

D_EMB = 128
D_HIDDEN = 75  # per direction per layer
N_LAYERS = 2
SENTENCE_DIM = N_LAYERS * 2 * D_HIDDEN  # 300
MAX_TOKENS = 64

DIRECTIONS = ("f", "b")


@dataclass
class ParallelPair:
    source: str
    target: str
    source_lang: str = "en"
    target_lang: str = "zh"


def load_parallel_pairs(path) -> list[ParallelPair]:
    """Read a tab-separated parallel corpus (source TAB target, one per line)."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'source<TAB>target', got {line!r}")
            pairs.append(ParallelPair(parts[0], parts[1]))
    return pairs


def save_parallel_pairs(path, pairs: list[ParallelPair]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(f"{p.source}\t{p.target}\n")


# ---------------------------------------------------------------------------
# Parameters


@dataclass
class EncoderParams:
    emb: Parameter
    cells: list[tuple[GruCellParams, GruCellParams]]  # per layer: (forward, backward)

    @property
    def vocab_size(self) -> int:
        return self.emb.shape[0]

    @property
    def d_hidden(self) -> int:
        return self.cells[0][0].d_hidden

    @property
    def output_dim(self) -> int:
        return len(self.cells) * 2 * self.d_hidden

    def parameters(self) -> list[Parameter]:
        out = [self.emb]
        for fwd, bwd in self.cells:
            out.extend(fwd.parameters())
            out.extend(bwd.parameters())
        return out


def init_encoder(
    vocab_size: int,
    rng: RngState,
    d_emb: int = D_EMB,
    d_hidden: int = D_HIDDEN,
    n_layers: int = N_LAYERS,
) -> EncoderParams:
    emb = Parameter("emb", init_uniform(rng, (vocab_size, d_emb), d_emb))
    cells = []
    d_in = d_emb
    for layer in range(n_layers):
        fwd = init_gru_cell(rng, f"l{layer}f", d_in, d_hidden)
        bwd = init_gru_cell(rng, f"l{layer}b", d_in, d_hidden)
        cells.append((fwd, bwd))
        d_in = 2 * d_hidden
    return EncoderParams(emb=emb, cells=cells)


def save_encoder(path, params: EncoderParams, seed: int, digest: str) -> None:
    save_checkpoint(path, params.parameters(), seed, digest)


def load_encoder(path) -> tuple[EncoderParams, Checkpoint]:
    ckpt = load_checkpoint(path)
    emb = Parameter("emb", ckpt.arrays["emb"])
    cells = []
    layer = 0
    while f"l{layer}f.w" in ckpt.arrays:
        pair = []
        for d in DIRECTIONS:
            pair.append(
                GruCellParams(
                    w=Parameter(f"l{layer}{d}.w", ckpt.arrays[f"l{layer}{d}.w"]),
                    u_zr=Parameter(f"l{layer}{d}.u_zr", ckpt.arrays[f"l{layer}{d}.u_zr"]),
                    u_c=Parameter(f"l{layer}{d}.u_c", ckpt.arrays[f"l{layer}{d}.u_c"]),
                    b=Parameter(f"l{layer}{d}.b", ckpt.arrays[f"l{layer}{d}.b"]),
                )
            )
        cells.append((pair[0], pair[1]))
        layer += 1
    return EncoderParams(emb=emb, cells=cells), ckpt


# ---------------------------------------------------------------------------
# Forward / backward


@dataclass
class _DirCache:
    x_in: np.ndarray  # layer input as fed to the kernel (time-reversed for 'b')
    h_all: np.ndarray
    z: np.ndarray
    r: np.ndarray
    c: np.ndarray


@dataclass
class EncodeCache:
    ids: np.ndarray
    dir_caches: list[tuple[_DirCache, _DirCache]] = field(default_factory=list)


def _run_direction(x: np.ndarray, cell: GruCellParams, reverse: bool):
    xs = x[::-1] if reverse else x
    xw = xs @ cell.w.value + cell.b.value
    h_all, z, r, c = backend.gru_layer_forward(
        xw, cell.u_zr.value, cell.u_c.value, np.zeros(cell.d_hidden)
    )
    out = h_all[1:]
    if reverse:
        out = out[::-1]
    return out, _DirCache(x_in=np.ascontiguousarray(xs), h_all=h_all, z=z, r=r, c=c)


def encode_with_cache(ids, params: EncoderParams) -> tuple[np.ndarray, EncodeCache]:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1 or ids.shape[0] < 1:
        raise ValueError(f"token id sequence must be non-empty 1-D, got shape {ids.shape}")
    if ids.min() < 0 or ids.max() >= params.vocab_size:
        raise ValueError(
            f"token id out of range [0, {params.vocab_size}): {int(ids.min())}..{int(ids.max())}"
        )
    x = params.emb.value[ids]
    cache = EncodeCache(ids=ids)
    means = []
    for fwd, bwd in params.cells:
        out_f, cache_f = _run_direction(x, fwd, reverse=False)
        out_b, cache_b = _run_direction(x, bwd, reverse=True)
        cache.dir_caches.append((cache_f, cache_b))
        x = np.concatenate([out_f, out_b], axis=1)
        means.append(x.mean(axis=0))
    return np.concatenate(means), cache


def encode_sentence(ids, params: EncoderParams) -> np.ndarray:
    """Encode a token-id sequence into the fixed-size sentence vector."""
    vec, _ = encode_with_cache(ids, params)
    return vec


def _dir_backward(dh: np.ndarray, cache: _DirCache, cell: GruCellParams, reverse: bool):
    if reverse:
        dh = dh[::-1]
    dxw, du_zr, du_c, _ = backend.gru_layer_backward(
        np.ascontiguousarray(dh),
        cache.h_all,
        cache.z,
        cache.r,
        cache.c,
        cell.u_zr.value,
        cell.u_c.value,
    )
    cell.w.grad += cache.x_in.T @ dxw
    cell.b.grad += dxw.sum(axis=0, keepdims=True)
    cell.u_zr.grad += du_zr
    cell.u_c.grad += du_c
    dx = dxw @ cell.w.value.T
    if reverse:
        dx = dx[::-1]
    return dx


def encode_backward(dvec: np.ndarray, cache: EncodeCache, params: EncoderParams) -> None:
    """Accumulate gradients of a scalar loss through one encoded sentence.

    ``dvec`` is the loss gradient on the sentence vector. The time-average
    distributes it evenly over steps; the layer-2 slice also backpropagates
    through the second recurrence into the layer-1 outputs before layer 1
    itself runs BPTT down to the embedding rows.
    """
    T = cache.ids.shape[0]
    h = params.d_hidden
    width = 2 * h
    n_layers = len(params.cells)
    d_out = [
        np.tile(dvec[i * width : (i + 1) * width] / T, (T, 1)) for i in range(n_layers)
    ]
    for i in reversed(range(n_layers)):
        fwd, bwd = params.cells[i]
        cache_f, cache_b = cache.dir_caches[i]
        dx = _dir_backward(d_out[i][:, :h], cache_f, fwd, reverse=False)
        dx += _dir_backward(d_out[i][:, h:], cache_b, bwd, reverse=True)
        if i > 0:
            d_out[i - 1] += dx
        else:
            np.add.at(params.emb.grad, cache.ids, dx)


# ---------------------------------------------------------------------------
# Training on parallel pairs


@dataclass
class EmbeddingTrainConfig:
    epochs: int = 10
    batch_size: int = 32
    margin: float = 0.5
    learning_rate: float = 1e-3
    max_tokens: int = MAX_TOKENS
    seed: int = 0

    def as_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "margin": self.margin,
            "learning_rate": self.learning_rate,
            "max_tokens": self.max_tokens,
            "seed": self.seed,
        }


def _norm_rows(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.maximum(np.linalg.norm(x, axis=1), 1e-12)
    return x / norms[:, None], norms


def _batch_ranking_loss(src_vecs: np.ndarray, tgt_vecs: np.ndarray, margin: float):
    """Mean hinge over all in-batch (anchor, positive, negative) triples.

    Returns the loss and its gradients on the raw source/target vectors.
    Anchor i pairs with target i; every other target in the batch is a
    negative for it.
    """
    b = src_vecs.shape[0]
    a_hat, a_norm = _norm_rows(src_vecs)
    p_hat, p_norm = _norm_rows(tgt_vecs)
    sims = a_hat @ p_hat.T
    diag = np.diag(sims)
    hinge = margin - diag[:, None] + sims
    off = ~np.eye(b, dtype=bool)
    active = (hinge > 0.0) & off
    scale = 1.0 / (b * (b - 1))
    loss = float(hinge[active].sum() * scale)
    dsims = active * scale
    np.fill_diagonal(dsims, -active.sum(axis=1) * scale)
    d_src = (dsims @ p_hat - (dsims * sims).sum(axis=1, keepdims=True) * a_hat) / a_norm[:, None]
    d_tgt = (dsims.T @ a_hat - (dsims * sims).sum(axis=0)[:, None] * p_hat) / p_norm[:, None]
    return loss, d_src, d_tgt


def train_embedding(
    pairs: list[ParallelPair],
    vocab: Vocabulary,
    config: EmbeddingTrainConfig,
) -> tuple[EncoderParams, dict]:
    """Train the encoder; returns the parameters and a training-trace dict.

    The trace holds the per-epoch mean batch loss plus the loss on a fixed
    probe batch before and after training.
    """
    if len(pairs) < 2:
        raise ValueError(f"need at least 2 parallel pairs for in-batch negatives, got {len(pairs)}")
    rng = RngState(config.seed)
    params = init_encoder(vocab.size, rng.split(0))
    shuffle_rng = rng.split(1)

    src_ids = [vocab.encode_text(p.source, config.max_tokens) for p in pairs]
    tgt_ids = [vocab.encode_text(p.target, config.max_tokens) for p in pairs]
    all_params = params.parameters()
    n = len(pairs)
    probe = list(range(min(config.batch_size, n)))

    def probe_loss() -> float:
        a = np.stack([encode_sentence(src_ids[i], params) for i in probe])
        p = np.stack([encode_sentence(tgt_ids[i], params) for i in probe])
        loss, _, _ = _batch_ranking_loss(a, p, config.margin)
        return loss

    probe_start = probe_loss()
    epoch_losses = []
    step = 0
    for _ in range(config.epochs):
        order = shuffle_rng.permutation(n)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            if batch.shape[0] < 2:
                continue  # a single pair has no in-batch negative
            src_enc = [encode_with_cache(src_ids[i], params) for i in batch]
            tgt_enc = [encode_with_cache(tgt_ids[i], params) for i in batch]
            a = np.stack([v for v, _ in src_enc])
            p = np.stack([v for v, _ in tgt_enc])
            loss, d_src, d_tgt = _batch_ranking_loss(a, p, config.margin)
            for k in range(batch.shape[0]):
                encode_backward(d_src[k], src_enc[k][1], params)
                encode_backward(d_tgt[k], tgt_enc[k][1], params)
            step += 1
            adam_step(all_params, step, lr=config.learning_rate)
            batch_losses.append(loss)
        epoch_losses.append(float(np.mean(batch_losses)) if batch_losses else 0.0)
    trace = {
        "epoch_losses": epoch_losses,
        "probe_start": probe_start,
        "probe_end": probe_loss(),
        "steps": step,
        "config_digest": config_digest(config.as_dict()),
    }
    return params, trace


def eval_pair_retrieval(
    pairs: list[ParallelPair],
    vocab: Vocabulary,
    params: EncoderParams,
    max_tokens: int = MAX_TOKENS,
) -> float:
    """Retrieval-at-1: how often the true translation is the nearest target."""
    if len(pairs) < 2:
        raise ValueError(f"need at least 2 pairs to evaluate retrieval, got {len(pairs)}")
    a = np.stack([encode_sentence(vocab.encode_text(p.source, max_tokens), params) for p in pairs])
    t = np.stack([encode_sentence(vocab.encode_text(p.target, max_tokens), params) for p in pairs])
    a_hat, _ = _norm_rows(a)
    t_hat, _ = _norm_rows(t)
    sims = a_hat @ t_hat.T
    best = sims.argmax(axis=1)  # argmax takes the lowest index on ties
    return float(np.mean(best == np.arange(len(pairs))))


class SentenceEncoder:
    """Vocabulary + trained weights bundled behind a memoised text interface.

    Encoding is pure given immutable parameters, so results are cached by
    exact text; callers encoding the same webpage title for many rumors pay
    for it once.
    """

    def __init__(self, vocab: Vocabulary, params: EncoderParams, max_tokens: int = MAX_TOKENS):
        self.vocab = vocab
        self.params = params
        self.max_tokens = max_tokens
        self._cache: dict[str, np.ndarray] = {}

    def encode(self, text: str, language_hint: str | None = None) -> np.ndarray:
        vec = self._cache.get(text)
        if vec is None:
            ids = self.vocab.encode(tokenize(text, language_hint), self.max_tokens)
            vec = encode_sentence(ids, self.params)
            self._cache[text] = vec
        return vec
