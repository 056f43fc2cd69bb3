"""Dictionary and regular-expression weak supervision sources."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .align import AlignedExample, Vocabulary
from .exceptions import InvalidPattern, SpanOverflow
from .text_prep import Lexicon

logger = logging.getLogger(__name__)

ABSTAIN = None
ABSTAIN_ID = -1
RULE_REGEX, RULE_DICT, RULE_STUDENT = 0, 1, 2
N_RULES = 3


@dataclass(frozen=True)
class WeakPrediction:
    rule_id: int
    word_index: int
    prediction: str | None

    def __post_init__(self):
        if self.rule_id not in (RULE_REGEX, RULE_DICT, RULE_STUDENT):
            raise ValueError(f"unknown rule id {self.rule_id}")

    @property
    def abstained(self) -> bool:
        return self.prediction is ABSTAIN


class DictionaryRule:
    """Maps known non-standard words to one standard word; abstains elsewhere.

    Entries whose value spans several words are dropped with a warning. A value
    with an internal space is accepted only when the lexicon lists it as a
    single (segmented) word, e.g. ``"công ty"``.
    """

    rule_id = RULE_DICT

    def __init__(self, entries: dict[str, str], lexicon: Lexicon | None = None):
        self.entries: dict[str, str] = {}
        for nsw, std in entries.items():
            if nsw == std:
                continue
            if " " in nsw or (" " in std and (lexicon is None or std not in lexicon)):
                logger.warning("dropping non 1-1 dictionary entry %r -> %r", nsw, std)
                continue
            self.entries[nsw] = std

    @classmethod
    def load(cls, path: str | Path, lexicon: Lexicon | None = None) -> "DictionaryRule":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh), lexicon)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.entries, ensure_ascii=False, indent=1),
                              encoding="utf-8")

    def predict_word(self, word: str) -> str | None:
        return self.entries.get(word, ABSTAIN)

    def apply(self, words: Sequence[str]) -> list[WeakPrediction]:
        return [WeakPrediction(RULE_DICT, i, self.predict_word(w)) for i, w in enumerate(words)]

    def __len__(self):
        return len(self.entries)


class RegexRule:
    rule_id = RULE_REGEX

    def __init__(self, patterns: Iterable[tuple[str, str]]):
        self.patterns = list(patterns)
        self._compiled = []
        for pattern, replacement in self.patterns:
            try:
                compiled = re.compile(pattern)
                # template is parsed eagerly, so bad group references fail here
                compiled.sub(replacement, "")
            except re.error as exc:
                raise InvalidPattern(f"{pattern!r} -> {replacement!r}: {exc}") from None
            self._compiled.append((compiled, replacement))

    @classmethod
    def load(cls, path: str | Path) -> "RegexRule":
        with open(path, encoding="utf-8") as fh:
            items = json.load(fh)
        return cls((item["pattern"], item["replacement"]) for item in items)

    @classmethod
    def default(cls) -> "RegexRule":
        ref = resources.files("weaknorm.data").joinpath("regex_rules.json")
        items = json.loads(ref.read_text(encoding="utf-8"))
        return cls((item["pattern"], item["replacement"]) for item in items)

    def predict_word(self, word: str) -> str | None:
        for compiled, replacement in self._compiled:
            m = compiled.fullmatch(word)
            if m:
                try:
                    out = m.expand(replacement)
                except (re.error, IndexError) as exc:
                    raise InvalidPattern(f"{compiled.pattern!r}: {exc}") from None
                return out if out and out != word else ABSTAIN
        return ABSTAIN

    def apply(self, words: Sequence[str]) -> list[WeakPrediction]:
        return [WeakPrediction(RULE_REGEX, i, self.predict_word(w)) for i, w in enumerate(words)]


def apply_dictionary(words: Sequence[str], rule: DictionaryRule) -> list[WeakPrediction]:
    return rule.apply(words)


def apply_regex(words: Sequence[str], rule: RegexRule) -> list[WeakPrediction]:
    return rule.apply(words)


def build_default_dictionary(lexicon: Lexicon | None = None, coverage: float = 0.4,
                             error_rate: float = 0.1, seed: int = 0) -> DictionaryRule:
    """Seed dictionary sampled from the generator's NSW tables.

    Only ``coverage`` of the NSW forms are included and ``error_rate`` of those map
    to a wrong standard word, so the rule is an imperfect source.
    """
    lexicon = lexicon or Lexicon.default()
    rng = np.random.default_rng(seed)
    table = lexicon.nsw_table
    forms = sorted(table)
    keep = sorted(rng.choice(len(forms), size=int(round(coverage * len(forms))), replace=False))
    entries = {}
    for idx in keep:
        nsw = forms[idx]
        std = table[nsw]
        if rng.random() < error_rate:
            others = [w for w in lexicon.canonical_words if w != std and " " not in w]
            std = others[int(rng.integers(len(others)))]
        entries[nsw] = std
    return DictionaryRule(entries, lexicon)


def rule_column(words: Sequence[str], rule: DictionaryRule | RegexRule) -> list[str]:
    out = []
    for w in words:
        pred = rule.predict_word(w)
        out.append(w if pred is ABSTAIN else pred)
    return out


def precompute_rule_columns(dataset: Iterable[dict], regex: RegexRule,
                            dictionary: DictionaryRule) -> list[dict]:
    """Add ``regex_rule`` and ``dict_rule`` columns to records with an ``input`` field.

    Unmatched words are copied through, so a rule fired exactly where its column
    differs from ``input``.
    """
    out = []
    for record in dataset:
        words = record["input"]
        out.append({**record,
                    "regex_rule": rule_column(words, regex),
                    "dict_rule": rule_column(words, dictionary)})
    return out


def predictions_from_column(words: Sequence[str], column: Sequence[str],
                            rule_id: int) -> list[WeakPrediction]:
    return [WeakPrediction(rule_id, i, c if c != w else ABSTAIN)
            for i, (w, c) in enumerate(zip(words, column))]


def expand_to_subwords(preds: Sequence[WeakPrediction], example: AlignedExample | Sequence,
                       vocab: Vocabulary, on_overflow: str = "raise") -> np.ndarray:
    """Token-level weak labels for one aligned example.

    Returns one class id per token (the hot index of the one-hot label), with
    ``ABSTAIN_ID`` where the rule abstained. Predictions shorter than their span are
    padded with ``<space>``. ``on_overflow="abstain"`` turns a prediction that does
    not fit its span into an abstention instead of raising ``SpanOverflow``.
    """
    spans = example.word_spans if isinstance(example, AlignedExample) else example
    n_tokens = spans[-1][1] if spans else 0
    labels = np.full(n_tokens, ABSTAIN_ID, dtype=np.int64)
    for pred in preds:
        if pred.abstained:
            continue
        start, end = spans[pred.word_index]
        ids = vocab.tokenize_word(pred.prediction)
        if len(ids) > end - start:
            if on_overflow == "abstain":
                continue
            raise SpanOverflow(
                f"{pred.prediction!r} needs {len(ids)} tokens, span has {end - start}"
            )
        labels[start:end] = ids + [vocab.space_id] * (end - start - len(ids))
    return labels


def one_hot(class_ids: np.ndarray, n_classes: int) -> np.ndarray:
    """Dense one-hot rows; abstained positions are all-zero."""
    out = np.zeros((len(class_ids), n_classes))
    fired = class_ids != ABSTAIN_ID
    out[np.flatnonzero(fired), class_ids[fired]] = 1.0
    return out
