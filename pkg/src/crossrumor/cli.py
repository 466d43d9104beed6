"""Command-line interface.

Verbs: gen-synthetic, train-embedding, train-agreement, extract-features,
train-verifier, evaluate, analyze-features. Every verb takes --seed,
--config, and --out-dir; a config file is plain ``key=value`` text whose keys
match the flag names (underscores for dashes), and any explicit flag
overrides the file.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .agreement import (
    AgreementTrainConfig,
    load_agreement,
    save_agreement,
    split_stance_data,
    load_stance_file,
    train_agreement,
)
from .corpus import SOURCES, load_corpus
from .encoder import (
    EmbeddingTrainConfig,
    SentenceEncoder,
    eval_pair_retrieval,
    load_encoder,
    load_parallel_pairs,
    save_encoder,
    train_embedding,
)
from .errors import ConfigError, DataError, InvariantError
from .experiments import (
    ExperimentConfig,
    analyze_features,
    compute_feature_rows,
    load_features_csv,
    run_experiment,
    write_features_csv,
    write_manifest,
)
from .nncore import config_digest
from .rng import RngState
from .synthetic import SyntheticConfig, generate_synthetic_corpus
from .tokenizer import Vocabulary, build_vocabulary
from .verifier import VerifierTrainConfig, save_verifier, train_verifier

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are configuration errors (exit 1)
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _read_config_file(path) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _cast(raw: str, like):
    if isinstance(like, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw


def _resolve(args: argparse.Namespace, defaults: dict):
    """Merge precedence: explicit flag > config file > built-in default."""
    from_file = _read_config_file(args.config) if args.config else {}
    out = {}
    for key, default in defaults.items():
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            out[key] = flag_value
        elif key in from_file:
            out[key] = _cast(from_file[key], default if default is not None else "")
        else:
            out[key] = default
    out["seed"] = args.seed if args.seed is not None else int(from_file.get("seed", 0))
    if args.out_dir is not None:
        out["out_dir"] = args.out_dir
    elif "out_dir" in from_file:
        out["out_dir"] = from_file["out_dir"]
    else:
        raise ConfigError("--out-dir is required (flag or config file)")
    return out


def _require(opts: dict, *keys: str) -> None:
    missing = [k for k in keys if not opts.get(k)]
    if missing:
        raise ConfigError("missing required options: " + ", ".join(f"--{k.replace('_', '-')}" for k in missing))


def _write_trace_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Verbs

GEN_DEFAULTS = {
    "events": 10,
    "posts_per_event": 100,
    "borrowed_rate": 0.9,
    "pairs": 2000,
    "heldout_pairs": 200,
    "stance_per_class": 600,
    "events_without_baidu": 0,
}


def cmd_gen_synthetic(opts) -> int:
    cfg = SyntheticConfig(
        n_events=opts["events"],
        posts_per_event=opts["posts_per_event"],
        borrowed_rate=opts["borrowed_rate"],
        n_pairs=opts["pairs"],
        n_heldout_pairs=opts["heldout_pairs"],
        stance_per_class=opts["stance_per_class"],
        events_without_baidu=opts["events_without_baidu"],
    )
    paths = generate_synthetic_corpus(cfg, RngState(opts["seed"]), opts["out_dir"])
    meta = cfg.as_dict()
    meta["seed"] = opts["seed"]
    write_manifest(opts["out_dir"], paths, meta)
    print(f"synthetic workspace written to {opts['out_dir']}")
    return 0


EMB_DEFAULTS = {
    "pairs": None,
    "heldout": None,
    "epochs": 10,
    "batch_size": 32,
    "margin": 0.5,
    "learning_rate": 1e-3,
    "max_tokens": 64,
    "min_count": 2,
}


def cmd_train_embedding(opts) -> int:
    _require(opts, "pairs")
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    pairs = load_parallel_pairs(opts["pairs"])
    vocab = build_vocabulary(
        [p.source for p in pairs] + [p.target for p in pairs], min_count=opts["min_count"]
    )
    vocab_path = out / "vocab.txt"
    vocab.save(vocab_path)
    cfg = EmbeddingTrainConfig(
        epochs=opts["epochs"],
        batch_size=opts["batch_size"],
        margin=opts["margin"],
        learning_rate=opts["learning_rate"],
        max_tokens=opts["max_tokens"],
        seed=opts["seed"],
    )
    params, trace = train_embedding(pairs, vocab, cfg)
    ckpt_path = out / "encoder.ckpt"
    save_encoder(ckpt_path, params, cfg.seed, config_digest(cfg.as_dict()))
    trace_path = out / "trace.csv"
    _write_trace_csv(
        trace_path,
        ["epoch", "mean_loss"],
        [(i + 1, format(loss, ".17g")) for i, loss in enumerate(trace["epoch_losses"])],
    )
    files = {"vocab": vocab_path, "encoder": ckpt_path, "trace": trace_path}
    meta = cfg.as_dict()
    meta.update(
        probe_start=format(trace["probe_start"], ".17g"),
        probe_end=format(trace["probe_end"], ".17g"),
        vocab_size=vocab.size,
    )
    if opts["heldout"]:
        heldout = load_parallel_pairs(opts["heldout"])
        acc = eval_pair_retrieval(heldout, vocab, params, cfg.max_tokens)
        meta["heldout_retrieval_at_1"] = format(acc, ".6f")
        print(f"held-out retrieval@1: {acc:.3f} over {len(heldout)} pairs")
    write_manifest(out, files, meta)
    print(f"encoder written to {ckpt_path}")
    return 0


AGR_DEFAULTS = {
    "stance": None,
    "vocab": None,
    "encoder": None,
    "epochs": 20,
    "batch_size": 64,
    "learning_rate": 1e-3,
    "dropout": 0.3,
    "dev_per_label": 250,
}


def cmd_train_agreement(opts) -> int:
    _require(opts, "stance", "vocab", "encoder")
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    dataset = load_stance_file(opts["stance"])
    rng = RngState(opts["seed"])
    train_pairs, dev_pairs = split_stance_data(dataset, rng.split(0), per_label=opts["dev_per_label"])
    vocab = Vocabulary.load(opts["vocab"])
    enc_params, _ = load_encoder(opts["encoder"])
    encoder = SentenceEncoder(vocab, enc_params)
    cfg = AgreementTrainConfig(
        epochs=opts["epochs"],
        batch_size=opts["batch_size"],
        learning_rate=opts["learning_rate"],
        dropout=opts["dropout"],
        seed=opts["seed"],
    )
    params, trace = train_agreement(train_pairs, dev_pairs, encoder, cfg)
    ckpt_path = out / "agreement.ckpt"
    save_agreement(ckpt_path, params, cfg.seed, config_digest(cfg.as_dict()))
    trace_path = out / "trace.csv"
    _write_trace_csv(
        trace_path,
        ["epoch", "dev_macro_f1"],
        [(i + 1, format(score, ".17g")) for i, score in enumerate(trace)],
    )
    best = max(trace) if trace else float("nan")
    meta = cfg.as_dict()
    meta.update(best_dev_macro_f1=format(best, ".6f"), train_pairs=len(train_pairs), dev_pairs=len(dev_pairs))
    write_manifest(out, {"agreement": ckpt_path, "trace": trace_path}, meta)
    print(f"agreement classifier written to {ckpt_path} (best dev macro-F1 {best:.3f})")
    return 0


FEAT_DEFAULTS = {"corpus": None, "vocab": None, "encoder": None, "agreement": None, "source": "TFG"}


def cmd_extract_features(opts) -> int:
    _require(opts, "corpus", "vocab", "encoder", "agreement")
    if opts["source"] not in SOURCES:
        raise ConfigError(f"unknown source {opts['source']!r}, expected one of {SOURCES}")
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    corpus = load_corpus(opts["corpus"])
    vocab = Vocabulary.load(opts["vocab"])
    enc_params, _ = load_encoder(opts["encoder"])
    agr_params, _ = load_agreement(opts["agreement"])
    encoder = SentenceEncoder(vocab, enc_params)
    posts, x, labels, _, n_others = compute_feature_rows(corpus, opts["source"], encoder, agr_params)
    path = out / f"features_{opts['source']}.csv"
    write_features_csv(path, posts, x, labels, opts["source"])
    meta = {"source": opts["source"], "seed": opts["seed"], "n_posts": len(posts), "n_others_filtered": n_others}
    write_manifest(out, {"features": path}, meta)
    print(f"{len(posts)} feature rows written to {path} ({n_others} 'others' posts skipped)")
    return 0


VER_DEFAULTS = {"features": None, "epochs": 200, "learning_rate": 1e-3, "dropout": 0.5}


def cmd_train_verifier(opts) -> int:
    _require(opts, "features")
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    _, _, _, x, labels = load_features_csv(opts["features"])
    cfg = VerifierTrainConfig(
        epochs=opts["epochs"], learning_rate=opts["learning_rate"], dropout=opts["dropout"]
    )
    params, losses = train_verifier(x, labels, cfg, RngState(opts["seed"]))
    ckpt_path = out / "verifier.ckpt"
    digest_src = cfg.as_dict()
    digest_src["seed"] = opts["seed"]
    save_verifier(ckpt_path, params, opts["seed"], config_digest(digest_src))
    trace_path = out / "trace.csv"
    _write_trace_csv(
        trace_path,
        ["epoch", "loss"],
        [(i + 1, format(loss, ".17g")) for i, loss in enumerate(losses)],
    )
    meta = dict(digest_src)
    meta["n_rows"] = x.shape[0]
    write_manifest(out, {"verifier": ckpt_path, "trace": trace_path}, meta)
    print(f"verifier written to {ckpt_path} (final loss {losses[-1]:.4f})")
    return 0


EVAL_DEFAULTS = {
    "corpus": None,
    "vocab": None,
    "encoder": None,
    "agreement": None,
    "verifier": None,
    "setting": "event",
    "source": "TFG",
    "verifier_epochs": 200,
    "verifier_lr": 1e-3,
    "verifier_dropout": 0.5,
    "permutation_iterations": 10000,
}


def cmd_evaluate(opts) -> int:
    _require(opts, "corpus", "vocab", "encoder", "agreement")
    cfg = ExperimentConfig(
        setting=opts["setting"],
        source=opts["source"],
        corpus_dir=Path(opts["corpus"]),
        vocab_path=Path(opts["vocab"]),
        encoder_path=Path(opts["encoder"]),
        agreement_path=Path(opts["agreement"]),
        verifier_path=None if not opts["verifier"] else Path(opts["verifier"]),
        out_dir=Path(opts["out_dir"]),
        seed=opts["seed"],
        verifier_epochs=opts["verifier_epochs"],
        verifier_lr=opts["verifier_lr"],
        verifier_dropout=opts["verifier_dropout"],
        permutation_iterations=opts["permutation_iterations"],
    )
    result = run_experiment(cfg)
    for name, value in result.averages.items():
        shown = "-" if value is None else f"{value:.3f}"
        print(f"{name}: {shown}")
    if result.p_value_vs_random is not None:
        print(f"p vs random: {result.p_value_vs_random:.6g}")
    print(f"reports written to {opts['out_dir']}")
    return 0


ANALYZE_DEFAULTS = {"features": None}


def cmd_analyze_features(opts) -> int:
    _require(opts, "features")
    ranked = analyze_features(opts["features"], opts["out_dir"])
    for name, pcc in ranked:
        print(f"{name:<18} {'undefined' if pcc is None else format(pcc, '+.3f')}")
    return 0


# ---------------------------------------------------------------------------
# Parser wiring

_VERBS = [
    ("gen-synthetic", cmd_gen_synthetic, GEN_DEFAULTS, "generate a synthetic corpus, parallel pairs, and stance data"),
    ("train-embedding", cmd_train_embedding, EMB_DEFAULTS, "train the bilingual sentence encoder on parallel pairs"),
    ("train-agreement", cmd_train_agreement, AGR_DEFAULTS, "train the 4-class agreement classifier on stance data"),
    ("extract-features", cmd_extract_features, FEAT_DEFAULTS, "write the 10-dim feature rows for one evidence source"),
    ("train-verifier", cmd_train_verifier, VER_DEFAULTS, "train the real/fake verifier on a feature file"),
    ("evaluate", cmd_evaluate, EVAL_DEFAULTS, "run the task / event / transfer evaluation"),
    ("analyze-features", cmd_analyze_features, ANALYZE_DEFAULTS, "rank features by correlation with the fake label"),
]


def build_parser() -> _Parser:
    parser = _Parser(prog="crossrumor", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)
    for name, func, defaults, help_text in _VERBS:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--out-dir", dest="out_dir", default=None)
        for key, default in defaults.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(default, bool):
                p.add_argument(flag, dest=key, default=None, type=lambda s: _cast(s, True))
            elif isinstance(default, int):
                p.add_argument(flag, dest=key, default=None, type=int)
            elif isinstance(default, float):
                p.add_argument(flag, dest=key, default=None, type=float)
            else:
                p.add_argument(flag, dest=key, default=None)
        p.set_defaults(func=func, defaults=defaults)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        opts = _resolve(args, args.defaults)
        return args.func(opts)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
