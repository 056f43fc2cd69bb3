"""Subword vocabulary and token-level source/target alignment.

Words are split into syllables on spaces; each syllable starts with a unit carrying
the ``▁`` boundary marker, followed by continuation units. Aligned pairs pad the
shorter side of every word span: the source with ``<mask>``, the target with
``<space>``, always at the end of the span.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DanglingContinuation, MaskOverflow, TargetTooSmall
from .text_prep import WordPair

MARKER = "▁"
PAD, UNK, MASK, SPACE = "<pad>", "<unk>", "<mask>", "<space>"
SPECIALS = (PAD, UNK, MASK, SPACE)
IGNORE = -1
DEFAULT_MAX_N_MASK = 3


@dataclass
class Vocabulary:
    id_to_unit: list[str]
    unit_to_id: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if tuple(self.id_to_unit[:4]) != SPECIALS:
            raise ValueError(f"vocabulary must start with {SPECIALS}")
        self.unit_to_id = {u: i for i, u in enumerate(self.id_to_unit)}
        if len(self.unit_to_id) != len(self.id_to_unit):
            raise ValueError("duplicate units in vocabulary")
        self._max_len = max(len(u) for u in self.id_to_unit[4:]) if len(self) > 4 else 1

    pad_id = 0
    unk_id = 1
    mask_id = 2
    space_id = 3

    def __len__(self):
        return len(self.id_to_unit)

    @property
    def size(self) -> int:
        return len(self.id_to_unit)

    def _syllable_ids(self, syllable: str) -> list[int]:
        ids = []
        text = MARKER + syllable
        pos = 0
        while pos < len(text):
            for end in range(min(len(text), pos + self._max_len), pos, -1):
                unit = text[pos:end]
                if unit in self.unit_to_id and unit != MARKER:
                    ids.append(self.unit_to_id[unit])
                    pos = end
                    break
            else:
                # unseen character: swallow it (and a leading marker) as one <unk>
                ids.append(self.unk_id)
                pos += 2 if text[pos] == MARKER else 1
        return ids

    def tokenize_word(self, word: str) -> list[int]:
        ids: list[int] = []
        for syllable in word.split():
            ids.extend(self._syllable_ids(syllable))
        return ids

    def units(self, ids: Iterable[int]) -> list[str]:
        return [self.id_to_unit[int(i)] for i in ids]

    def to_dict(self) -> dict:
        return {
            "format": "weaknorm-vocab/1",
            "units": self.id_to_unit,
            "special_ids": {name: self.unit_to_id[name] for name in SPECIALS},
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False), encoding="utf-8")

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        return cls(list(data["units"]))

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def fingerprint(self) -> str:
        blob = json.dumps(self.id_to_unit, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def _alphabet(syllables: Iterable[str]) -> list[str]:
    chars: dict[str, None] = {}
    for syl in syllables:
        for ch in syl:
            chars.setdefault(ch, None)
    units = []
    for ch in chars:
        units.extend((MARKER + ch, ch))
    return units


def train_subword_vocab(corpus: Iterable[Sequence[str]], target_size: int,
                        alphabet_corpus: Iterable[Sequence[str]] = ()) -> Vocabulary:
    """Learn a merge vocabulary of at most ``target_size`` units (specials included).

    Merges are chosen greedily by pair frequency; ties go to the pair seen first,
    so the result is a pure function of the corpus order. ``alphabet_corpus``
    contributes characters only (no merges), e.g. noisy text that should still
    tokenize without ``<unk>``.
    """
    freq: Counter = Counter()
    for words in corpus:
        for word in words:
            freq.update(word.split())
    if not freq:
        raise ValueError("empty corpus")
    syllables = list(freq)
    extra = (syl for words in alphabet_corpus for word in words for syl in word.split())
    alphabet = _alphabet(itertools.chain(syllables, extra))
    if target_size < len(alphabet) + len(SPECIALS):
        raise TargetTooSmall(
            f"target_size {target_size} < alphabet {len(alphabet)} + {len(SPECIALS)} specials"
        )
    units = list(SPECIALS) + alphabet
    known = set(units)
    segs = [[MARKER + s[0], *s[1:]] for s in syllables]
    counts = [freq[s] for s in syllables]

    pair_counts: dict[tuple[str, str], int] = defaultdict(int)
    where: dict[tuple[str, str], set[int]] = defaultdict(set)
    for idx, seg in enumerate(segs):
        for pair in zip(seg, seg[1:]):
            pair_counts[pair] += counts[idx]
            where[pair].add(idx)

    while len(units) < target_size:
        best, best_count = None, 0
        for pair, c in pair_counts.items():
            if c > best_count:
                best, best_count = pair, c
        if best is None:
            break
        merged = best[0] + best[1]
        if merged not in known:
            units.append(merged)
            known.add(merged)
        for idx in sorted(where.pop(best, ())):
            seg = segs[idx]
            for pair in zip(seg, seg[1:]):
                pair_counts[pair] -= counts[idx]
                if pair_counts[pair] <= 0:
                    del pair_counts[pair]
                if pair != best:
                    where[pair].discard(idx)
            new_seg, i = [], 0
            while i < len(seg):
                if i + 1 < len(seg) and (seg[i], seg[i + 1]) == best:
                    new_seg.append(merged)
                    i += 2
                else:
                    new_seg.append(seg[i])
                    i += 1
            segs[idx] = new_seg
            for pair in zip(new_seg, new_seg[1:]):
                pair_counts[pair] += counts[idx]
                where[pair].add(idx)
        pair_counts.pop(best, None)
    return Vocabulary(units)


@dataclass
class AlignedExample:
    source_ids: np.ndarray
    target_ids: np.ndarray
    n_mask: np.ndarray
    word_spans: list[tuple[int, int]]
    source_words: tuple[str, ...] = ()
    target_words: tuple[str, ...] = ()

    def __len__(self):
        return len(self.source_ids)

    @property
    def unmasked_source(self) -> tuple[np.ndarray, np.ndarray]:
        """Source ids with ``<mask>`` removed, and the mask counts that follow each."""
        keep = self.n_mask != IGNORE
        return self.source_ids[keep], self.n_mask[keep]


def align_pair(pair: WordPair, vocab: Vocabulary,
               max_n_mask: int = DEFAULT_MAX_N_MASK) -> AlignedExample:
    src: list[int] = []
    tgt: list[int] = []
    spans = []
    for s_word, t_word in zip(pair.source_words, pair.target_words):
        s_ids = vocab.tokenize_word(s_word)
        t_ids = vocab.tokenize_word(t_word)
        extra = len(t_ids) - len(s_ids)
        if extra > max_n_mask:
            raise MaskOverflow(
                f"{s_word!r} -> {t_word!r} needs {extra} masks (max {max_n_mask})"
            )
        start = len(src)
        src.extend(s_ids + [vocab.mask_id] * max(extra, 0))
        tgt.extend(t_ids + [vocab.space_id] * max(-extra, 0))
        spans.append((start, len(src)))
    source_ids = np.asarray(src, dtype=np.int64)
    example = AlignedExample(
        source_ids=source_ids,
        target_ids=np.asarray(tgt, dtype=np.int64),
        n_mask=np.zeros(len(src), dtype=np.int64),
        word_spans=spans,
        source_words=pair.source_words,
        target_words=pair.target_words,
    )
    example.n_mask = n_mask_labels(example, vocab)
    return example


def n_mask_labels(example: AlignedExample | np.ndarray, vocab: Vocabulary) -> np.ndarray:
    ids = example.source_ids if isinstance(example, AlignedExample) else np.asarray(example)
    labels = np.zeros(len(ids), dtype=np.int64)
    last = None
    for i, tok in enumerate(ids):
        if tok == vocab.mask_id:
            labels[i] = IGNORE
            if last is not None:
                labels[last] += 1
        else:
            last = i
    return labels


def insert_masks(ids: Sequence[int], counts: Sequence[int], vocab: Vocabulary) -> np.ndarray:
    """Insert ``counts[i]`` masks after token ``i``; inverse of dropping masks."""
    out: list[int] = []
    for tok, n in zip(ids, counts):
        out.append(int(tok))
        out.extend([vocab.mask_id] * int(n))
    return np.asarray(out, dtype=np.int64)


def detokenize(ids: Iterable[int], vocab: Vocabulary, strict: bool = True) -> list[str]:
    words: list[str] = []
    for i in ids:
        unit = vocab.id_to_unit[int(i)]
        if unit in (PAD, SPACE):
            continue
        if unit == MASK:
            raise ValueError("<mask> in a target-side sequence")
        if unit.startswith(MARKER):
            words.append(unit[len(MARKER):])
        elif not words:
            if strict:
                raise DanglingContinuation(f"sequence starts with continuation unit {unit!r}")
            words.append(unit)
        else:
            words[-1] += unit
    return words


def tile_spans(n_tokens_per_word: Sequence[int]) -> list[tuple[int, int]]:
    spans, pos = [], 0
    for n in n_tokens_per_word:
        spans.append((pos, pos + n))
        pos += n
    return spans
