"""Deterministic synthetic world for desk-scale experiments.

Builds a two-"language" universe from one seed: a base vocabulary plus a
cipher language (a fixed bijection from every base token onto a unique CJK
character, with URLs and punctuation shared verbatim across both sides).
From it come:

  * a corpus of events, twitter rumors, and google/baidu webpages, where
    fake rumors borrow media from other events so their retrieved evidence
    describes something else (the signal the distance/agreement features
    are built to catch);
  * parallel sentence pairs for training the bilingual encoder;
  * a four-class stance dataset for pre-training the agreement classifier.

Webpages double as posts on their platform, so the same generator feeds the
twitter experiments (TFG/TFB/COMBO) and the baidu transfer experiment (BFG).
Borrowed media attract "echo" webpages repeating the false claim, which is
what makes a fake rumor's evidence internally inconsistent rather than just
uniformly unrelated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .agreement import StancePair, save_stance_file
from .corpus import Corpus, Event, EvidenceIndex, Post, WebRecord, save_corpus, save_stats
from .encoder import ParallelPair, save_parallel_pairs
from .rng import RngState

DENY_MARKERS = ("false", "hoax", "denied", "untrue")
HEDGE_MARKERS = ("reportedly", "maybe", "unclear", "sources")

CIPHER_BASE = 0x4E00  # first CJK unified ideograph


@dataclass
class SyntheticConfig:
    n_events: int = 10
    posts_per_event: int = 100
    borrowed_rate: float = 0.9
    fake_fraction: float = 0.5
    media_per_event: int = 0  # 0 derives from posts_per_event
    viral_fraction: float = 0.25  # share of each event's media available for borrowing
    pages_per_media: tuple[int, int] = (3, 5)  # per engine, inclusive range
    page_fake_rate: float = 0.03
    page_noise_rate: float = 0.03
    echo_rate: float = 0.8
    junk_rate: float = 0.6  # clickbait noise deposited on media each time it is borrowed
    events_without_baidu: int = 0
    n_pairs: int = 2000
    n_heldout_pairs: int = 200
    stance_per_class: int = 600
    shared_vocab: int = 40
    topic_vocab: int = 12
    noise_vocab: int = 16

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["pages_per_media"] = f"{self.pages_per_media[0]}-{self.pages_per_media[1]}"
        return d


@dataclass
class SyntheticWorld:
    corpus: Corpus
    pairs_train: list[ParallelPair]
    pairs_heldout: list[ParallelPair]
    stance: list[StancePair]
    cipher: dict[str, str] = field(repr=False, default_factory=dict)


class _Lexicon:
    def __init__(self, cfg: SyntheticConfig):
        self.shared = [f"word{i:02d}" for i in range(cfg.shared_vocab)]
        self.topics = {
            e: [f"ev{e:02d}topic{j:02d}" for j in range(cfg.topic_vocab)]
            for e in range(1, cfg.n_events + 1)
        }
        self.noise = [f"noise{i:02d}" for i in range(cfg.noise_vocab)]
        self.base = list(self.shared) + list(DENY_MARKERS) + list(HEDGE_MARKERS) + self.noise
        for pool in self.topics.values():
            self.base.extend(pool)
        self.cipher = {tok: chr(CIPHER_BASE + i) for i, tok in enumerate(sorted(self.base))}

    def encipher(self, tokens: list[str]) -> list[str]:
        return [self.cipher.get(t, t) for t in tokens]


def _topic_sentence(rng: RngState, lex: _Lexicon, event: int) -> list[str]:
    """A sentence about one event: its two-token name, then a shuffled body.

    The fixed three-token name prefix mirrors how headlines about one story
    share the entity phrase; it is what makes same-event sentences measurably
    closer than cross-event ones under a sequence encoder.
    """
    pool = lex.topics[event]
    n_topic = int(rng.integers(2, 6))
    n_shared = int(rng.integers(1, 3))
    body = [pool[int(i)] for i in rng.integers(3, len(pool), n_topic)]
    body += [lex.shared[int(i)] for i in rng.integers(0, len(lex.shared), n_shared)]
    order = rng.permutation(len(body))
    tokens = pool[:3] + [body[int(i)] for i in order]
    if rng.random() < 0.25:
        tokens.append("!")
    if rng.random() < 0.08:
        tokens.append(f"http://src.example/{int(rng.integers(0, 10**6)):06d}")
    return tokens


def _noise_sentence(rng: RngState, lex: _Lexicon) -> list[str]:
    n = int(rng.integers(4, 9))
    tokens = [lex.noise[int(i)] for i in rng.integers(0, len(lex.noise), n)]
    tokens.append(str(int(rng.integers(1990, 2030))))
    return tokens


def _render(tokens: list[str]) -> str:
    return " ".join(tokens)


# ---------------------------------------------------------------------------
# Corpus generation


def _build_corpus(cfg: SyntheticConfig, lex: _Lexicon, rng: RngState) -> Corpus:
    events = [Event(id=e, name=f"synthetic-event-{e:02d}") for e in range(1, cfg.n_events + 1)]
    media_per_event = cfg.media_per_event or max(3, cfg.posts_per_event // 6)
    n_viral = max(2, round(media_per_event * cfg.viral_fraction))
    media = {
        e: [f"m{e:02d}-{j:02d}" for j in range(media_per_event)] for e in range(1, cfg.n_events + 1)
    }
    # Borrowers take from the viral tail of another event's media; domestic
    # posts use the fresh head. That keeps the junk that borrowing attracts
    # off the evidence of ordinary real rumors.
    fresh = {e: ms[: media_per_event - n_viral] or ms for e, ms in media.items()}
    viral = {e: ms[media_per_event - n_viral :] or ms for e, ms in media.items()}
    media_event = {m: e for e, ms in media.items() for m in ms}
    baidu_cutoff = cfg.n_events - cfg.events_without_baidu

    def engines_for(event: int) -> tuple[str, ...]:
        return ("google", "baidu") if event <= baidu_cutoff else ("google",)

    posts: list[Post] = []
    index = EvidenceIndex()

    def add_page(engine: str, media_id: str, claim_event: int, label: str, uid: str) -> None:
        # Pages attribute to the event whose media retrieved them (that is how
        # the per-event counts of such corpora are built); the claim event
        # only shapes the text.
        owner = media_event[media_id]
        if label == "others":
            tokens = _noise_sentence(rng, lex)
        else:
            tokens = _topic_sentence(rng, lex, claim_event)
        if engine == "baidu":
            tokens = lex.encipher(tokens)
        text = _render(tokens)
        post_id = f"{engine[0]}-{uid}"
        posts.append(
            Post(
                post_id=post_id,
                event_id=owner,
                platform=engine,
                language="zh" if engine == "baidu" else "en",
                text=text,
                media_ids=[media_id],
                label=label,
            )
        )
        index.add(media_id, engine, WebRecord(title=text, url=post_id, label=label))

    # Baseline webpage coverage per media and engine.
    for e in range(1, cfg.n_events + 1):
        for m in media[e]:
            for engine in engines_for(e):
                n_pages = int(rng.integers(cfg.pages_per_media[0], cfg.pages_per_media[1] + 1))
                for k in range(n_pages):
                    roll = rng.random()
                    if roll < cfg.page_noise_rate:
                        label, claim = "others", e
                    elif roll < cfg.page_noise_rate + cfg.page_fake_rate and cfg.n_events > 1:
                        label = "fake"
                        others = [x for x in range(1, cfg.n_events + 1) if x != e]
                        claim = int(others[int(rng.integers(0, len(others)))])
                    else:
                        label, claim = "real", e
                    add_page(engine, m, claim, label, f"{m}-{k:02d}")

    # Twitter rumors; fakes borrow media from other events at borrowed_rate.
    echo_serial = 0
    for e in range(1, cfg.n_events + 1):
        n_fake = round(cfg.posts_per_event * cfg.fake_fraction)
        for k in range(cfg.posts_per_event):
            is_fake = k < n_fake
            borrowed = is_fake and cfg.n_events > 1 and rng.random() < cfg.borrowed_rate
            n_media = int(rng.integers(1, 3))
            if borrowed:
                media_ids = []
                for _ in range(n_media):
                    others = [x for x in range(1, cfg.n_events + 1) if x != e]
                    src = int(others[int(rng.integers(0, len(others)))])
                    media_ids.append(viral[src][int(rng.integers(0, len(viral[src])))])
            else:
                media_ids = [
                    fresh[e][int(rng.integers(0, len(fresh[e])))] for _ in range(n_media)
                ]
            posts.append(
                Post(
                    post_id=f"t-{e:02d}-{k:03d}",
                    event_id=e,
                    platform="twitter",
                    language="en",
                    text=_render(_topic_sentence(rng, lex, e)),
                    media_ids=sorted(set(media_ids)),
                    label="fake" if is_fake else "real",
                )
            )
            if borrowed:
                # Borrowed media attract webpages that echo the false claim
                # and clickbait junk, which is what spreads the evidence of a
                # borrowing rumor apart.
                for m in set(media_ids):
                    for engine in engines_for(media_event[m]):
                        if rng.random() < cfg.echo_rate:
                            echo_serial += 1
                            add_page(engine, m, e, "fake", f"echo-{echo_serial:04d}")
                        if rng.random() < cfg.junk_rate:
                            echo_serial += 1
                            add_page(engine, m, e, "others", f"junk-{echo_serial:04d}")

    return Corpus(events=events, posts=posts, index=index)


# ---------------------------------------------------------------------------
# Parallel pairs and stance data


def _make_pairs(cfg: SyntheticConfig, lex: _Lexicon, rng: RngState, n: int) -> list[ParallelPair]:
    """General-text parallel pairs: tokens mixed across the whole lexicon.

    Deliberately not event-topical: pairs that read like single-event corpus
    sentences would make in-batch negatives same-topic and the ranking loss
    would push same-event sentences apart, destroying the topical geometry
    the features rely on. Mixed-token sentences keep hard negatives rare, so
    topical closeness emerges purely from token overlap.
    """
    pairs = []
    for _ in range(n):
        k = int(rng.integers(4, 10))
        tokens = [lex.base[int(i)] for i in rng.integers(0, len(lex.base), k)]
        if rng.random() < 0.25:
            tokens.append("!")
        if rng.random() < 0.08:
            tokens.append(f"http://src.example/{int(rng.integers(0, 10**6)):06d}")
        pairs.append(
            ParallelPair(source=_render(tokens), target=_render(lex.encipher(tokens)))
        )
    return pairs


def _make_stance(cfg: SyntheticConfig, lex: _Lexicon, rng: RngState) -> list[StancePair]:
    """Balanced four-class stance pairs over the same lexicon.

    agree: body restates the headline; disagree: same story plus denial
    markers; discuss: same story plus hedging markers; unrelated: a different
    event or plain noise. Half the bodies (and a quarter of headlines) are
    rendered in the cipher language so agreement prediction stays
    cross-lingual.
    """
    pairs = []
    for label in ("agree", "disagree", "discuss", "unrelated"):
        for _ in range(cfg.stance_per_class):
            event = int(rng.integers(1, cfg.n_events + 1))
            head = _topic_sentence(rng, lex, event)
            if label == "agree":
                order = rng.permutation(len(head))
                body = [head[int(i)] for i in order]
            elif label == "disagree":
                body = _topic_sentence(rng, lex, event)
                for _ in range(int(rng.integers(2, 4))):
                    body.append(DENY_MARKERS[int(rng.integers(0, len(DENY_MARKERS)))])
            elif label == "discuss":
                body = _topic_sentence(rng, lex, event)
                for _ in range(int(rng.integers(2, 4))):
                    body.append(HEDGE_MARKERS[int(rng.integers(0, len(HEDGE_MARKERS)))])
            else:
                if rng.random() < 0.3 or cfg.n_events < 2:
                    body = _noise_sentence(rng, lex)
                else:
                    others = [x for x in range(1, cfg.n_events + 1) if x != event]
                    body = _topic_sentence(rng, lex, int(others[int(rng.integers(0, len(others)))]))
            if rng.random() < 0.25:
                head = lex.encipher(head)
            if rng.random() < 0.5:
                body = lex.encipher(body)
            pairs.append(StancePair(_render(head), _render(body), label))
    return pairs


# ---------------------------------------------------------------------------
# Entry points


def generate_world(config: SyntheticConfig, rng: RngState) -> SyntheticWorld:
    lex = _Lexicon(config)
    corpus = _build_corpus(config, lex, rng.split(0))
    pairs_train = _make_pairs(config, lex, rng.split(1), config.n_pairs)
    pairs_heldout = _make_pairs(config, lex, rng.split(2), config.n_heldout_pairs)
    stance = _make_stance(config, lex, rng.split(3))
    return SyntheticWorld(
        corpus=corpus,
        pairs_train=pairs_train,
        pairs_heldout=pairs_heldout,
        stance=stance,
        cipher=lex.cipher,
    )


def write_world(world: SyntheticWorld, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_dir = out / "corpus"
    save_corpus(world.corpus, corpus_dir)
    save_stats(corpus_dir / "stats.csv", world.corpus)
    paths = {
        "events": corpus_dir / "events.jsonl",
        "posts": corpus_dir / "posts.jsonl",
        "evidence": corpus_dir / "evidence.jsonl",
        "stats": corpus_dir / "stats.csv",
        "pairs_train": out / "pairs_train.tsv",
        "pairs_heldout": out / "pairs_heldout.tsv",
        "stance": out / "stance.csv",
    }
    save_parallel_pairs(paths["pairs_train"], world.pairs_train)
    save_parallel_pairs(paths["pairs_heldout"], world.pairs_heldout)
    save_stance_file(paths["stance"], world.stance)
    return paths


def generate_synthetic_corpus(config: SyntheticConfig, rng: RngState, out_dir) -> dict[str, Path]:
    """Generate a full synthetic workspace on disk; returns the file map."""
    return write_world(generate_world(config, rng), out_dir)
