"""Script-driven tokenizer and shared bilingual vocabulary.

Both languages go through one rule set so that parallel sentences share a
single token table: URLs collapse to one reserved token, punctuation splits
off as standalone tokens, Latin-script runs split on whitespace and are
lowercased, and CJK runs split into single characters.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

import numpy as np

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
URL_TOKEN = "<url>"
RESERVED = (PAD_TOKEN, UNK_TOKEN, URL_TOKEN)
PAD_ID, UNK_ID, URL_ID = 0, 1, 2

_URL_RE = re.compile(r"https?://\S+|www\.\S+")

# Unicode ranges treated as CJK: ideographs (incl. ext A), kana, hangul.
_CJK_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0x3040, 0x30FF),
    (0xAC00, 0xD7AF),
)


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith(("P", "S"))


def tokenize(text: str, language_hint: str | None = None) -> list[str]:
    """Split text into tokens; never fails, empty input yields [UNK_TOKEN].

    ``language_hint`` is record metadata passed through by callers; the rules
    key off Unicode script, so it does not change the output.
    """
    tokens: list[str] = []
    pos = 0
    for m in _URL_RE.finditer(text):
        tokens.extend(_tokenize_plain(text[pos : m.start()]))
        tokens.append(URL_TOKEN)
        pos = m.end()
    tokens.extend(_tokenize_plain(text[pos:]))
    return tokens if tokens else [UNK_TOKEN]


def _tokenize_plain(segment: str) -> list[str]:
    tokens: list[str] = []
    word: list[str] = []

    def flush():
        if word:
            tokens.append("".join(word).lower())
            word.clear()

    for ch in segment:
        if ch.isspace():
            flush()
        elif _is_cjk(ch):
            flush()
            tokens.append(ch)
        elif _is_punct(ch):
            flush()
            tokens.append(ch)
        else:
            word.append(ch)
    flush()
    return tokens


@dataclass
class Vocabulary:
    """Dense token -> id table with three reserved ids (PAD, UNK, URL)."""

    token_to_id: dict[str, int]
    id_to_token: list[str]

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def encode(self, tokens: list[str], max_tokens: int | None = None) -> np.ndarray:
        ids = [self.lookup(t) for t in tokens]
        if max_tokens is not None:
            ids = ids[:max_tokens]
        return np.asarray(ids, dtype=np.int64)

    def encode_text(self, text: str, max_tokens: int | None = None) -> np.ndarray:
        return self.encode(tokenize(text), max_tokens)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for token in self.id_to_token:
                fh.write(token + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh]
        while tokens and tokens[-1] == "":
            tokens.pop()
        if tuple(tokens[:3]) != RESERVED:
            raise ValueError(f"{path}: vocabulary must start with reserved tokens {RESERVED}")
        return cls(token_to_id={t: i for i, t in enumerate(tokens)}, id_to_token=tokens)


def build_vocabulary(corpus, min_count: int = 2) -> Vocabulary:
    """Count tokens over an iterable of texts and keep those seen >= min_count.

    Kept tokens are ordered by (-frequency, token) so the id assignment is a
    pure function of the corpus. The URL sentinel is already reserved, so it
    never competes for an id.
    """
    counts: dict[str, int] = {}
    for text in corpus:
        for token in tokenize(text):
            if token == URL_TOKEN:
                continue
            counts[token] = counts.get(token, 0) + 1
    kept = sorted(
        (t for t, c in counts.items() if c >= min_count),
        key=lambda t: (-counts[t], t),
    )
    id_to_token = list(RESERVED) + kept
    return Vocabulary(
        token_to_id={t: i for i, t in enumerate(id_to_token)},
        id_to_token=id_to_token,
    )
