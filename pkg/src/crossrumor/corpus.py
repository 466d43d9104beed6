"""Corpus data model, ingestion, validation, splits, and evidence lookup.

A corpus directory holds three newline-delimited JSON files plus an optional
expected-counts table:

    events.jsonl    {"id": 1, "name": "..."}
    posts.jsonl     {"post_id", "event_id", "platform", "language", "text",
                     "media_ids", "label"}
    evidence.jsonl  {"media_id", "engine", "title", "url", "label"}  (label
                    may be null for unannotated webpages)
    stats.csv       event_id,platform,real,fake,others  (expected counts)

Platforms are twitter / google / baidu; labels are real / fake / others, with
"others" forbidden on twitter. Evidence lookups are keyed by (media_id,
engine) and never fail: unknown keys yield an empty list.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusLoadError
from .features import EvidenceItem, EvidenceSet
from .rng import RngState

logger = logging.getLogger(__name__)

PLATFORMS = ("twitter", "google", "baidu")
POST_LABELS = ("real", "fake", "others")
ENGINES = ("google", "baidu")
SOURCES = ("TFG", "TFB", "BFG", "COMBO")

# Which rumor platform and which evidence engines each feature source uses.
SOURCE_PLATFORM = {"TFG": "twitter", "TFB": "twitter", "BFG": "baidu", "COMBO": "twitter"}
SOURCE_ENGINES = {"TFG": ("google",), "TFB": ("baidu",), "BFG": ("google",), "COMBO": ENGINES}

TASK_TRAIN_EVENTS = tuple(range(1, 12))
TASK_TEST_EVENTS = tuple(range(12, 18))


@dataclass
class Event:
    id: int
    name: str


@dataclass
class Post:
    post_id: str
    event_id: int
    platform: str
    language: str
    text: str
    media_ids: list[str]
    label: str


@dataclass
class WebRecord:
    title: str
    url: str
    label: str | None = None


class EvidenceIndex:
    """(media_id, engine) -> retrieved webpage records; missing keys are empty."""

    def __init__(self):
        self._table: dict[tuple[str, str], list[WebRecord]] = {}

    def add(self, media_id: str, engine: str, record: WebRecord) -> None:
        self._table.setdefault((media_id, engine), []).append(record)

    def lookup(self, media_id: str, engine: str) -> list[WebRecord]:
        return self._table.get((media_id, engine), [])

    def items(self):
        return self._table.items()

    def __len__(self) -> int:
        return len(self._table)


@dataclass
class Corpus:
    events: list[Event]
    posts: list[Post]
    index: EvidenceIndex
    event_names: dict[int, str] = field(init=False)

    def __post_init__(self):
        self.event_names = {e.id: e.name for e in self.events}

    def posts_on(self, platform: str) -> list[Post]:
        return [p for p in self.posts if p.platform == platform]


# ---------------------------------------------------------------------------
# Loading / saving


def _read_jsonl(path: Path, problems: list[str]):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append((lineno, json.loads(line)))
            except json.JSONDecodeError as exc:
                problems.append(f"{path.name}:{lineno}: invalid JSON ({exc.msg})")
    return rows


def load_corpus(path) -> Corpus:
    """Load and validate a corpus directory; bad rows raise CorpusLoadError."""
    root = Path(path)
    problems: list[str] = []

    events: list[Event] = []
    seen_event_ids: set[int] = set()
    for lineno, row in _read_jsonl(root / "events.jsonl", problems):
        try:
            ev = Event(id=int(row["id"]), name=str(row["name"]))
        except (KeyError, TypeError, ValueError):
            problems.append(f"events.jsonl:{lineno}: malformed event record")
            continue
        if ev.id in seen_event_ids:
            problems.append(f"events.jsonl:{lineno}: duplicate event id {ev.id}")
            continue
        seen_event_ids.add(ev.id)
        events.append(ev)

    posts: list[Post] = []
    seen_post_ids: set[tuple[str, str]] = set()
    for lineno, row in _read_jsonl(root / "posts.jsonl", problems):
        try:
            post = Post(
                post_id=str(row["post_id"]),
                event_id=int(row["event_id"]),
                platform=str(row["platform"]),
                language=str(row.get("language", "")),
                text=str(row["text"]),
                media_ids=[str(m) for m in row.get("media_ids", [])],
                label=str(row["label"]),
            )
        except (KeyError, TypeError, ValueError):
            problems.append(f"posts.jsonl:{lineno}: malformed post record")
            continue
        if post.platform not in PLATFORMS:
            problems.append(f"posts.jsonl:{lineno}: unknown platform {post.platform!r}")
            continue
        if post.label not in POST_LABELS:
            problems.append(f"posts.jsonl:{lineno}: unknown label {post.label!r}")
            continue
        if post.platform == "twitter" and post.label == "others":
            problems.append(f"posts.jsonl:{lineno}: twitter posts cannot be labeled 'others'")
            continue
        if post.event_id not in seen_event_ids:
            problems.append(f"posts.jsonl:{lineno}: dangling event id {post.event_id}")
            continue
        key = (post.platform, post.post_id)
        if key in seen_post_ids:
            problems.append(f"posts.jsonl:{lineno}: duplicate post id {post.post_id!r} on {post.platform}")
            continue
        seen_post_ids.add(key)
        posts.append(post)

    index = EvidenceIndex()
    for lineno, row in _read_jsonl(root / "evidence.jsonl", problems):
        try:
            media_id = str(row["media_id"])
            engine = str(row["engine"])
            record = WebRecord(
                title=str(row["title"]),
                url=str(row["url"]),
                label=None if row.get("label") is None else str(row["label"]),
            )
        except (KeyError, TypeError, ValueError):
            problems.append(f"evidence.jsonl:{lineno}: malformed evidence record")
            continue
        if engine not in ENGINES:
            problems.append(f"evidence.jsonl:{lineno}: unknown engine {engine!r}")
            continue
        if record.label is not None and record.label not in POST_LABELS:
            problems.append(f"evidence.jsonl:{lineno}: unknown label {record.label!r}")
            continue
        index.add(media_id, engine, record)

    if problems:
        raise CorpusLoadError(problems)
    if not posts:
        logger.warning("corpus at %s is empty", root)
    return Corpus(events=events, posts=posts, index=index)


def save_corpus(corpus: Corpus, path) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "events.jsonl", "w", encoding="utf-8") as fh:
        for ev in corpus.events:
            fh.write(json.dumps({"id": ev.id, "name": ev.name}, ensure_ascii=False) + "\n")
    with open(root / "posts.jsonl", "w", encoding="utf-8") as fh:
        for p in corpus.posts:
            fh.write(
                json.dumps(
                    {
                        "post_id": p.post_id,
                        "event_id": p.event_id,
                        "platform": p.platform,
                        "language": p.language,
                        "text": p.text,
                        "media_ids": p.media_ids,
                        "label": p.label,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    with open(root / "evidence.jsonl", "w", encoding="utf-8") as fh:
        for (media_id, engine), records in corpus.index.items():
            for r in records:
                fh.write(
                    json.dumps(
                        {
                            "media_id": media_id,
                            "engine": engine,
                            "title": r.title,
                            "url": r.url,
                            "label": r.label,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )


# ---------------------------------------------------------------------------
# Published-statistics validation


@dataclass
class CountMismatch:
    event_id: int
    platform: str
    label: str
    expected: int
    actual: int


def corpus_counts(corpus: Corpus) -> dict[tuple[int, str, str], int]:
    counts: dict[tuple[int, str, str], int] = {}
    for p in corpus.posts:
        key = (p.event_id, p.platform, p.label)
        counts[key] = counts.get(key, 0) + 1
    return counts


def load_stats(path) -> dict[tuple[int, str, str], int]:
    """Expected-counts table: csv columns event_id,platform,real,fake,others."""
    expected: dict[tuple[int, str, str], int] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            ev = int(row["event_id"])
            platform = row["platform"]
            for label in POST_LABELS:
                expected[(ev, platform, label)] = int(row[label])
    return expected


def save_stats(path, corpus: Corpus) -> None:
    counts = corpus_counts(corpus)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["event_id", "platform"] + list(POST_LABELS))
        for ev in sorted(e.id for e in corpus.events):
            for platform in PLATFORMS:
                writer.writerow(
                    [ev, platform] + [counts.get((ev, platform, lab), 0) for lab in POST_LABELS]
                )


def validate_against_stats(
    corpus: Corpus, expected: dict[tuple[int, str, str], int]
) -> list[CountMismatch]:
    """Compare per-(event, platform, label) counts against an expected table."""
    actual = corpus_counts(corpus)
    mismatches = []
    for key in sorted(set(expected) | set(actual)):
        exp = expected.get(key, 0)
        act = actual.get(key, 0)
        if exp != act:
            mismatches.append(CountMismatch(key[0], key[1], key[2], exp, act))
    return mismatches


# ---------------------------------------------------------------------------
# Evaluation splits


def task_split(posts: list[Post]) -> tuple[list[Post], list[Post]]:
    """Fixed split: events 1-11 train, events 12-17 test."""
    for p in posts:
        if not 1 <= p.event_id <= 17:
            raise ValueError(f"task_split: event id {p.event_id} outside 1..17")
    train = [p for p in posts if p.event_id in TASK_TRAIN_EVENTS]
    test = [p for p in posts if p.event_id in TASK_TEST_EVENTS]
    return train, test


def loeo_splits(posts: list[Post]) -> list[tuple[int, list[Post], list[Post]]]:
    """Leave-one-event-out folds, one per event present, ordered by event id."""
    event_ids = sorted({p.event_id for p in posts})
    if len(event_ids) < 2:
        raise ValueError(f"leave-one-event-out needs >= 2 events, got {len(event_ids)}")
    folds = []
    for ev in event_ids:
        test = [p for p in posts if p.event_id == ev]
        train = [p for p in posts if p.event_id != ev]
        folds.append((ev, train, test))
    return folds


# ---------------------------------------------------------------------------
# Evidence construction


def build_evidence(post: Post, source: str, index: EvidenceIndex) -> EvidenceSet:
    """Gather the evidence titles a feature source sees for one rumor.

    Union over the post's media ids and the source's engines, the post's own
    record excluded, deduplicated by title, and sorted so downstream output
    files are byte-stable.
    """
    if source not in SOURCES:
        raise ValueError(f"unknown evidence source {source!r}, expected one of {SOURCES}")
    want_platform = SOURCE_PLATFORM[source]
    if post.platform != want_platform:
        raise ValueError(
            f"source {source} expects {want_platform} posts, got a {post.platform} post"
        )
    items = []
    for media_id in post.media_ids:
        for engine in SOURCE_ENGINES[source]:
            for record in index.lookup(media_id, engine):
                if record.url == post.post_id or record.title == post.text:
                    continue  # the post's own webpage record
                items.append(EvidenceItem(title=record.title, engine=engine, media_id=media_id))
    items.sort(key=lambda it: (it.title, it.engine, it.media_id))
    seen: set[str] = set()
    deduped = []
    for it in items:
        if it.title not in seen:
            seen.add(it.title)
            deduped.append(it)
    return EvidenceSet(rumor_text=post.text, items=deduped)


def split_with_rng_per_fold(folds, rng: RngState):
    """Attach an independent child stream to each fold, keyed by event id."""
    return [(ev, train, test, rng.split(ev)) for ev, train, test in folds]
