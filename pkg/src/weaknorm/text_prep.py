"""Preprocessing, diacritic stripping and the synthetic noisy-corpus generator."""
from __future__ import annotations

import json
import unicodedata
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DataError, EmptyDataset, UnknownWord

DEFAULT_NSW_RATE = 0.17

_JOINERS = {"\u200d", "\ufe0f", "\ufe0e"}


@dataclass(frozen=True)
class WordPair:
    source_words: tuple[str, ...]
    target_words: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "source_words", tuple(self.source_words))
        object.__setattr__(self, "target_words", tuple(self.target_words))
        if len(self.source_words) != len(self.target_words):
            raise DataError(
                f"source has {len(self.source_words)} words, target has {len(self.target_words)}"
            )
        if any(not w for w in self.source_words + self.target_words):
            raise DataError("empty word in pair")

    def __len__(self):
        return len(self.source_words)

    @property
    def n_nsw(self) -> int:
        return sum(s != t for s, t in zip(self.source_words, self.target_words))


@dataclass
class Lexicon:
    canonical_words: list[str]
    abbreviation_table: dict[str, str]
    teencode_table: dict[str, str]
    diacritic_map: dict[str, str]
    word_classes: dict[str, list[str]] = field(default_factory=dict)
    templates: list[str] = field(default_factory=list)

    def __post_init__(self):
        canon = set(self.canonical_words)
        for name in ("abbreviation_table", "teencode_table"):
            for nsw, std in getattr(self, name).items():
                if std not in canon:
                    raise DataError(f"{name}: value {std!r} for {nsw!r} is not a canonical word")
        for k, v in self.diacritic_map.items():
            if v in self.diacritic_map:
                raise DataError(f"diacritic_map is not idempotent at {k!r} -> {v!r}")
        self._canon = canon
        self._abbrev_forms = _invert(self.abbreviation_table)
        self._teen_forms = _invert(self.teencode_table)

    @classmethod
    def from_dict(cls, data: dict) -> "Lexicon":
        try:
            return cls(
                canonical_words=list(data["canonical_words"]),
                abbreviation_table=dict(data["abbreviation_table"]),
                teencode_table=dict(data["teencode_table"]),
                diacritic_map=dict(data["diacritic_map"]),
                word_classes={k: list(v) for k, v in data.get("word_classes", {}).items()},
                templates=list(data.get("templates", [])),
            )
        except KeyError as exc:
            raise DataError(f"lexicon is missing key {exc.args[0]!r}") from None

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def default(cls) -> "Lexicon":
        ref = resources.files("weaknorm.data").joinpath("lexicon.json")
        return cls.from_dict(json.loads(ref.read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {
            "canonical_words": self.canonical_words,
            "abbreviation_table": self.abbreviation_table,
            "teencode_table": self.teencode_table,
            "diacritic_map": self.diacritic_map,
            "word_classes": self.word_classes,
            "templates": self.templates,
        }

    def __contains__(self, word: str) -> bool:
        return word in self._canon

    def abbreviations_of(self, word: str) -> list[str]:
        return self._abbrev_forms.get(word, [])

    def teencodes_of(self, word: str) -> list[str]:
        return self._teen_forms.get(word, [])

    @property
    def nsw_table(self) -> dict[str, str]:
        """All known NSW forms mapped to their standard word."""
        return {**self.teencode_table, **self.abbreviation_table}


def _invert(table: dict[str, str]) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for nsw, std in table.items():
        out.setdefault(std, []).append(nsw)
    return out


@dataclass
class CorruptionConfig:
    p_abbrev: float = 0.21
    p_teencode: float = 0.21
    p_repeat_suffix: float = 0.035
    p_typo: float = 0.02
    p_diacritic_char: float = 0.0
    variant_skew: float = 2.0
    rng_seed: int = 0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if name == "variant_skew":
                if value < 1.0:
                    raise ValueError("variant_skew must be >= 1")
            elif name != "rng_seed" and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} is outside [0, 1]")


def _is_emoji(ch: str) -> bool:
    return unicodedata.category(ch) == "So" or 0x1F000 <= ord(ch) <= 0x1FAFF


def _is_word_char(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "LNM" or ch in "@_"


def is_punctuation(word: str) -> bool:
    """True for punctuation runs, emoticons and emoji (no letter or digit inside)."""
    return not any(unicodedata.category(ch)[0] in "LN" for ch in word)


def case_fold_and_separate(text: str) -> list[str]:
    words: list[str] = []
    buf: list[str] = []
    kind = None

    def flush():
        nonlocal kind
        if buf:
            words.append("".join(buf))
            buf.clear()
        kind = None

    for ch in unicodedata.normalize("NFC", text.lower()):
        if ch.isspace():
            flush()
            continue
        if ch in _JOINERS or 0x1F3FB <= ord(ch) <= 0x1F3FF:
            # modifiers stick to the preceding emoji; a ZWJ also pulls in the next one
            if kind == "emoji":
                buf.append(ch)
                if ch == "\u200d":
                    kind = "emoji+"
            continue
        if _is_emoji(ch):
            if kind != "emoji+":
                flush()
            buf.append(ch)
            kind = "emoji"
            continue
        new_kind = "word" if _is_word_char(ch) else "punct"
        if new_kind != kind:
            flush()
        buf.append(ch)
        kind = new_kind
    flush()
    return words


def strip_diacritics(word: str, proportion: float, rng: np.random.Generator,
                     diacritic_map: dict[str, str] | None = None) -> str:
    if diacritic_map is None:
        diacritic_map = Lexicon.default().diacritic_map
    draws = rng.random(len(word))
    return "".join(
        diacritic_map[ch] if ch in diacritic_map and u < proportion else ch
        for ch, u in zip(word, draws)
    )


def _typo(word: str, rng: np.random.Generator) -> str:
    slots = [i for i in range(len(word) - 1) if word[i] != " " and word[i + 1] != " "]
    if not slots:
        return word + word[-1]
    i = int(rng.choice(slots))
    if rng.random() < 0.5 and word[i] != word[i + 1]:
        return word[:i] + word[i + 1] + word[i] + word[i + 2:]
    return word[: i + 1] + word[i] + word[i + 1:]


def corrupt_word(word: str, config: CorruptionConfig, rng: np.random.Generator,
                 lexicon: Lexicon) -> str:
    # one independent draw per operator keeps the streams aligned across configs
    u_abbrev, u_teen, u_rep, u_typo, u_pick = rng.random(5)
    if is_punctuation(word):
        return word
    if word not in lexicon:
        raise UnknownWord(word)
    abbrevs = lexicon.abbreviations_of(word)
    teens = lexicon.teencodes_of(word)
    # earlier forms are the common ones: index density falls off with variant_skew
    rank = u_pick ** config.variant_skew
    if abbrevs and u_abbrev < config.p_abbrev:
        return abbrevs[int(rank * len(abbrevs))]
    if teens and u_teen < config.p_teencode:
        return teens[int(rank * len(teens))]
    if word[-1].isalpha() and u_rep < config.p_repeat_suffix:
        return word + word[-1] * (1 + int(u_pick * 3))
    if len(word) > 1 and u_typo < config.p_typo:
        return _typo(word, rng)
    if config.p_diacritic_char > 0:
        return strip_diacritics(word, config.p_diacritic_char, rng, lexicon.diacritic_map)
    return word


def corrupt_sentence(words: Sequence[str], config: CorruptionConfig,
                     rng: np.random.Generator, lexicon: Lexicon | None = None) -> WordPair:
    lexicon = lexicon or Lexicon.default()
    source = [corrupt_word(w, config, rng, lexicon) for w in words]
    return WordPair(tuple(source), tuple(words))


def augment_with_diacritic_removal(dataset: Sequence[WordPair], p: float,
                                   rng: np.random.Generator,
                                   diacritic_map: dict[str, str] | None = None) -> list[WordPair]:
    """Return ``dataset`` followed by a replica whose sources are stripped at proportion ``p``."""
    if not dataset:
        raise EmptyDataset("nothing to augment")
    if diacritic_map is None:
        diacritic_map = Lexicon.default().diacritic_map
    replica = [
        WordPair(tuple(strip_diacritics(w, p, rng, diacritic_map) for w in pair.source_words),
                 pair.target_words)
        for pair in dataset
    ]
    return list(dataset) + replica


def split_dataset(pairs: Sequence, ratios: Sequence[float] = (0.8, 0.1, 0.1),
                  rng: np.random.Generator | int = 0) -> tuple[list, list, list]:
    if len(pairs) == 0:
        raise EmptyDataset("cannot split an empty dataset")
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise ValueError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    order = rng.permutation(len(pairs))
    n = len(pairs)
    n_train = int(round(n * ratios[0]))
    n_dev = min(int(round(n * ratios[1])), n - n_train)
    pick = [pairs[i] for i in order]
    return pick[:n_train], pick[n_train:n_train + n_dev], pick[n_train + n_dev:]


def generate_sentence(lexicon: Lexicon, rng: np.random.Generator) -> list[str]:
    """Fill one random template with words of the right class."""
    if not lexicon.templates:
        raise DataError("lexicon has no templates to generate from")
    template = lexicon.templates[int(rng.integers(len(lexicon.templates)))]
    words = []
    for slot in template.split():
        choices = lexicon.word_classes.get(slot)
        words.append(choices[int(rng.integers(len(choices)))] if choices else slot)
    return words


def sentence_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def generate_corpus(n: int, config: CorruptionConfig | None = None,
                    lexicon: Lexicon | None = None, offset: int = 0) -> list[WordPair]:
    """Generate ``n`` noisy/clean sentence pairs.

    Sentence ``i`` draws from its own stream seeded by ``(config.rng_seed, offset + i)``,
    so corpora built in slices concatenate to the same result.
    """
    config = config or CorruptionConfig()
    lexicon = lexicon or Lexicon.default()
    out = []
    for i in range(offset, offset + n):
        rng = sentence_rng(config.rng_seed, i)
        out.append(corrupt_sentence(generate_sentence(lexicon, rng), config, rng, lexicon))
    return out


def nsw_rate(pairs: Iterable[WordPair]) -> float:
    total = nsw = 0
    for pair in pairs:
        total += len(pair)
        nsw += pair.n_nsw
    return nsw / total if total else 0.0


def labeled_record(pair: WordPair) -> dict:
    return {
        "original": " ".join(pair.source_words),
        "normalized": " ".join(pair.target_words),
        "input": list(pair.source_words),
        "output": list(pair.target_words),
    }


def unlabeled_record(pair: WordPair, sent_idx: int, idx: int = 0,
                     dataset: str = "synthetic", split: str = "train") -> dict:
    return {
        "dataset": dataset,
        "type": split,
        "sent_idx": sent_idx,
        "idx": idx,
        "original": " ".join(pair.source_words),
        "input": list(pair.source_words),
    }


def pair_from_record(record: dict) -> WordPair:
    try:
        return WordPair(tuple(record["input"]), tuple(record["output"]))
    except KeyError as exc:
        raise DataError(f"labeled record lacks field {exc.args[0]!r}") from None
