"""Training regimes: student only, hard-label self-training, and the weakly supervised loop.

All three consume the same labeled split, vocabulary and initial weights for a given
``(seed, split_seed)``, so differences in their reports come from the regime alone.
A run directory, when given, holds::

    config.json            resolved RunConfig
    metrics.jsonl          one row per evaluated iteration
    checkpoints/iter_XXX/  student.pt, ran.pt (weak supervision), state.json
    report.json            final dev/test metrics (no timings; byte-stable per seed)
    manifest.json          config, dataset hashes, version, metric rows, timings
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import __version__
from .align import IGNORE, AlignedExample, Vocabulary, align_pair, train_subword_vocab
from .exceptions import ConfigError, EmptyDataset, InvalidSoftLabel, MaskOverflow, SampleTooLarge
from .metrics import evaluate
from .ran import RanConfig, RanData, init_ran, load_ran, save_ran, teacher_label, train_ran
from .rules import (RULE_DICT, RULE_REGEX, DictionaryRule, RegexRule, build_default_dictionary,
                    expand_to_subwords, precompute_rule_columns, predictions_from_column)
from .student import (SoftExample, StudentConfig, StudentModel, forward, init_student,
                      load_student, normalize_sentences, predict_mask_counts, save_student,
                      train_on_soft_labels, train_supervised)
from .text_prep import (CorruptionConfig, Lexicon, WordPair, augment_with_diacritic_removal,
                        generate_corpus, split_dataset, unlabeled_record)

logger = logging.getLogger(__name__)

REGIMES = ("student", "self_training", "weak_supervision")
DIST_TOL = 1e-9


@dataclass
class RunConfig:
    regime: str = "weak_supervision"
    iterations: int = 3
    n_downsample: int = 512
    student_epochs: int = 25
    init_epochs: int = 10
    pseudo_epochs: int = 5
    finetune_epochs: int = 5
    batch_size: int = 16
    unsup_batch_size: int = 128
    seed: int = 0
    split_seed: int = 0
    train_ratio: float = 0.8
    dev_ratio: float = 0.1
    p_diacritic: float = 0.0
    vocab_size: int = 2000
    max_n_mask: int = 3
    embed_dim: int = 64
    n_layers: int = 2
    n_heads: int = 4
    ff_dim: int = 128
    max_len: int = 160
    lr_embeddings: float = 1e-2
    lr_encoder: float = 4e-3
    lr_heads: float = 2e-3
    rule_dim: int = 128
    ran_hidden_dim: int = 128
    ran_max_lr: float = 1e-2
    ran_min_lr: float = 1e-5
    ran_unsup_epochs: int = 1
    ran_sup_epochs: int = 1
    ran_sup_batch_size: int = 16
    count_student_in_rules: bool = False

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if self.n_downsample < 1:
            raise ConfigError("n_downsample must be >= 1")
        if not 0.0 <= self.p_diacritic <= 1.0:
            raise ConfigError("p_diacritic must lie in [0, 1]")
        if not (0 < self.train_ratio and self.dev_ratio >= 0
                and self.train_ratio + self.dev_ratio <= 1):
            raise ConfigError("train_ratio + dev_ratio must leave room for a test split")

    @classmethod
    def desk(cls, **overrides) -> "RunConfig":
        return cls(**overrides)

    @classmethod
    def full_scale(cls, **overrides) -> "RunConfig":
        base = dict(iterations=10, n_downsample=8096, student_epochs=10, init_epochs=5,
                    lr_embeddings=5e-5, lr_encoder=2e-5, lr_heads=1e-5)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(names))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def student_config(self, epochs: int | None = None) -> StudentConfig:
        return StudentConfig(
            embed_dim=self.embed_dim, n_layers=self.n_layers, n_heads=self.n_heads,
            ff_dim=self.ff_dim, max_len=self.max_len, max_n_mask=self.max_n_mask,
            lr_embeddings=self.lr_embeddings, lr_encoder=self.lr_encoder,
            lr_heads=self.lr_heads, epochs=self.student_epochs if epochs is None else epochs,
            batch_size=self.batch_size, seed=self.seed,
        )

    def ran_config(self) -> RanConfig:
        return RanConfig(
            rule_dim=self.rule_dim, hidden_dim=self.ran_hidden_dim, max_lr=self.ran_max_lr,
            min_lr=self.ran_min_lr, unsup_epochs=self.ran_unsup_epochs,
            sup_epochs=self.ran_sup_epochs, unsup_batch_size=self.unsup_batch_size,
            sup_batch_size=self.ran_sup_batch_size,
            count_student_in_rules=self.count_student_in_rules, seed=self.seed,
        )


# ---------------------------------------------------------------- data preparation

@dataclass
class Benchmark:
    labeled: list[WordPair]
    unlabeled: list[dict]
    unlabeled_gold: list[WordPair]


def make_benchmark(n_labeled: int = 2000, n_unlabeled: int = 20000, seed: int = 0,
                   corruption: CorruptionConfig | None = None,
                   lexicon: Lexicon | None = None) -> Benchmark:
    """Synthetic D_L and D_U drawn from disjoint per-sentence streams of one generator."""
    corruption = corruption or CorruptionConfig(rng_seed=seed)
    lexicon = lexicon or Lexicon.default()
    labeled = generate_corpus(n_labeled, corruption, lexicon)
    gold = generate_corpus(n_unlabeled, corruption, lexicon, offset=n_labeled)
    unlabeled = [unlabeled_record(p, i) for i, p in enumerate(gold)]
    return Benchmark(labeled, unlabeled, gold)


def downsample(pool: Sequence, n: int, rng: np.random.Generator) -> list:
    """Uniform sample of ``n`` items without replacement."""
    if n > len(pool):
        raise SampleTooLarge(f"cannot draw {n} items from a pool of {len(pool)}")
    return [pool[i] for i in rng.choice(len(pool), size=n, replace=False)]


def check_distribution(rows: np.ndarray, what: str, tol: float = DIST_TOL) -> None:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.size == 0:
        return
    if rows.min() < 0 or np.abs(rows.sum(-1) - 1.0).max() > tol:
        raise InvalidSoftLabel(f"{what}: rows must be non-negative and sum to 1 within {tol}")


def _align_all(pairs: Sequence[WordPair], vocab: Vocabulary, max_n_mask: int) -> list[AlignedExample]:
    out, skipped = [], 0
    for pair in pairs:
        try:
            out.append(align_pair(pair, vocab, max_n_mask))
        except MaskOverflow:
            skipped += 1
    if skipped:
        logger.warning("skipped %d pairs needing more than %d masks", skipped, max_n_mask)
    return out


def corpus_hash(items: Sequence) -> str:
    h = hashlib.sha256()
    for item in items:
        if isinstance(item, WordPair):
            item = {"input": list(item.source_words), "output": list(item.target_words)}
        h.update(json.dumps(item, ensure_ascii=False, sort_keys=True).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


@dataclass
class PreparedData:
    train: list[WordPair]
    dev: list[WordPair]
    test: list[WordPair]
    vocab: Vocabulary
    train_examples: list[AlignedExample]
    unlabeled: list[dict]


def prepare(config: RunConfig, labeled: Sequence[WordPair], unlabeled: Sequence[dict] = (),
            regex: RegexRule | None = None,
            dictionary: DictionaryRule | None = None) -> PreparedData:
    if not labeled:
        raise EmptyDataset("no labeled data")
    ratios = (config.train_ratio, config.dev_ratio,
              max(0.0, 1.0 - config.train_ratio - config.dev_ratio))
    train, dev, test = split_dataset(list(labeled), ratios, config.split_seed)
    if config.p_diacritic > 0:
        aug_rng = np.random.default_rng([config.split_seed, 1])
        train = augment_with_diacritic_removal(train, config.p_diacritic, aug_rng)
        dev = augment_with_diacritic_removal(dev, config.p_diacritic, aug_rng)
    alphabet = [p.source_words for p in train + dev] + [r["input"] for r in unlabeled]
    vocab = train_subword_vocab([p.target_words for p in train + dev], config.vocab_size, alphabet)
    # D_U feeds the subword alphabet in every regime so T=0 runs match the baseline
    records = list(unlabeled) if config.regime != "student" else []
    if records and not all("regex_rule" in r and "dict_rule" in r for r in records):
        records = precompute_rule_columns(records, regex or RegexRule.default(),
                                          dictionary or build_default_dictionary())
    examples = _align_all(train, vocab, config.max_n_mask)
    if not examples:
        raise EmptyDataset("no trainable labeled pairs after alignment")
    return PreparedData(train, dev, test, vocab, examples, records)


def evaluate_model(model: StudentModel, pairs: Sequence[WordPair]) -> dict:
    sources = [p.source_words for p in pairs]
    preds = normalize_sentences(model, sources)
    return evaluate(sources, [p.target_words for p in pairs], preds)


# ---------------------------------------------------------------- weak supervision steps

def student_distributions(model: StudentModel, seqs: Sequence[Sequence[int]],
                          batch_size: int = 128) -> list[tuple[np.ndarray, np.ndarray]]:
    """Float64 softmax rows and hidden states per sequence; rows are validity-checked."""
    out = []
    model.net.eval()
    with torch.no_grad():
        for start in range(0, len(seqs), batch_size):
            chunk = seqs[start:start + batch_size]
            h, logits, _, _ = forward(model, chunk)
            probs = torch.softmax(logits.double(), -1).numpy()
            h = h.numpy()
            for i, s in enumerate(chunk):
                p = probs[i, : len(s)]
                check_distribution(p, "student softmax")
                out.append((p, h[i, : len(s)]))
    return out


@dataclass
class PseudoLayout:
    ids: np.ndarray
    spans: list[tuple[int, int]]
    n_source: list[int]
    rule_cls: np.ndarray


def pseudo_layouts(model: StudentModel, records: Sequence[dict]) -> list[PseudoLayout]:
    """Token layouts for unlabeled sentences.

    Each word gets as many masks as the largest expansion proposed by the Student's
    mask-count head or by a rule whose output fits within ``max_n_mask`` extra tokens.
    """
    vocab = model.vocab
    cap = model.config.max_n_mask
    tokenized = [[vocab.tokenize_word(w) for w in r["input"]] for r in records]
    flat = [[t for word in words for t in word] for words in tokenized]
    counts = predict_mask_counts(model, flat)
    out = []
    for record, words, cnt in zip(records, tokenized, counts):
        ids, spans, n_src = [], [], []
        pos = 0
        for w_idx, word_ids in enumerate(words):
            extra = int(cnt[pos:pos + len(word_ids)].sum())
            pos += len(word_ids)
            for column in ("regex_rule", "dict_rule"):
                proposal = record[column][w_idx]
                if proposal != record["input"][w_idx]:
                    need = len(vocab.tokenize_word(proposal)) - len(word_ids)
                    if need <= cap:
                        extra = max(extra, need)
            extra = min(extra, cap)
            start = len(ids)
            ids.extend(word_ids + [vocab.mask_id] * extra)
            spans.append((start, len(ids)))
            n_src.append(len(word_ids))
        words_in = record["input"]
        cols = [expand_to_subwords(predictions_from_column(words_in, record[c], rid), spans,
                                   vocab, on_overflow="abstain")
                for c, rid in (("regex_rule", RULE_REGEX), ("dict_rule", RULE_DICT))]
        out.append(PseudoLayout(np.asarray(ids, dtype=np.int64), spans, n_src,
                                np.stack(cols, axis=1)))
    return out


def labeled_rule_classes(examples: Sequence[AlignedExample], regex: RegexRule,
                         dictionary: DictionaryRule, vocab: Vocabulary) -> list[np.ndarray]:
    out = []
    for ex in examples:
        words = ex.source_words
        cols = []
        for rule, rid in ((regex, RULE_REGEX), (dictionary, RULE_DICT)):
            preds = rule.apply(words)
            cols.append(expand_to_subwords(preds, ex.word_spans, vocab, on_overflow="abstain"))
        out.append(np.stack(cols, axis=1))
    return out


def ran_data_for_labeled(model: StudentModel, examples: Sequence[AlignedExample],
                         rule_cls: Sequence[np.ndarray]) -> RanData:
    dists = student_distributions(model, [ex.source_ids for ex in examples])
    return RanData.from_sentences([d[1] for d in dists], [d[0] for d in dists], rule_cls,
                                  [ex.target_ids for ex in examples])


def ran_data_for_pseudo(model: StudentModel, layouts: Sequence[PseudoLayout]) -> RanData:
    dists = student_distributions(model, [lay.ids for lay in layouts])
    return RanData.from_sentences([d[1] for d in dists], [d[0] for d in dists],
                                  [lay.rule_cls for lay in layouts])


def soft_examples(layouts: Sequence[PseudoLayout], q: Sequence[np.ndarray],
                  vocab: Vocabulary) -> list[SoftExample]:
    """Pair layouts with teacher labels; mask-count labels follow the teacher's argmax."""
    out = []
    for lay, qs in zip(layouts, q):
        check_distribution(qs, "teacher soft label")
        top = qs.argmax(-1)
        n_mask = np.zeros(len(lay.ids), dtype=np.int64)
        for (start, end), n_src in zip(lay.spans, lay.n_source):
            n_mask[start + n_src:end] = IGNORE
            filled = int((top[start:end] != vocab.space_id).sum())
            n_mask[start + n_src - 1] = min(max(filled - n_src, 0), end - start - n_src)
        out.append(SoftExample(lay.ids, qs, n_mask))
    return out


def pseudo_pairs(model: StudentModel, records: Sequence[dict]) -> list[WordPair]:
    """Hard argmax pseudo-labels for self-training."""
    sources = [r["input"] for r in records]
    preds = normalize_sentences(model, sources)
    return [WordPair(tuple(s), tuple(p)) for s, p in zip(sources, preds)]


# ---------------------------------------------------------------- run bookkeeping

def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=1) + "\n"


def _rng_state(rng: np.random.Generator) -> dict:
    return rng.bit_generator.state


def _restore_rng(state: dict) -> np.random.Generator:
    rng = np.random.default_rng()
    rng.bit_generator.state = state
    return rng


@dataclass
class RunResult:
    config: RunConfig
    student: StudentModel
    ran: object | None
    vocab: Vocabulary
    rows: list[dict]
    report: dict
    timings: dict = field(default_factory=dict)
    data: PreparedData | None = None


class _RunState:
    """Checkpointing of iteration boundaries; a run resumes after the last saved one."""

    def __init__(self, run_dir: str | Path | None, config: RunConfig):
        self.dir = Path(run_dir) if run_dir is not None else None
        self.config = config
        if self.dir is not None:
            (self.dir / "checkpoints").mkdir(parents=True, exist_ok=True)

    def check_config(self, resume: bool) -> None:
        if self.dir is None:
            return
        path = self.dir / "config.json"
        if resume and path.exists():
            saved = json.loads(path.read_text(encoding="utf-8"))
            if saved != self.config.to_dict():
                raise ConfigError(f"{path} differs from the requested config; refusing to resume")
        _atomic_write(path, _dumps(self.config.to_dict()))

    def latest(self) -> int | None:
        if self.dir is None:
            return None
        done = sorted(int(p.name[5:]) for p in (self.dir / "checkpoints").glob("iter_*")
                      if (p / "state.json").exists())
        return done[-1] if done else None

    def save(self, it: int, student: StudentModel, ran, rng: np.random.Generator,
             rows: list[dict], extra: dict) -> None:
        if self.dir is None:
            return
        ck = self.dir / "checkpoints" / f"iter_{it:03d}"
        ck.mkdir(parents=True, exist_ok=True)
        save_student(student, ck / "student.pt")
        if ran is not None:
            save_ran(ran[0], ran[1], ran[2], ck / "ran.pt")
        state = {"iteration": it, "rng": _rng_state(rng), "rows": rows, **extra}
        _atomic_write(ck / "state.json", _dumps(state))
        _atomic_write(self.dir / "metrics.jsonl",
                      "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))

    def load(self, it: int):
        ck = self.dir / "checkpoints" / f"iter_{it:03d}"
        state = json.loads((ck / "state.json").read_text(encoding="utf-8"))
        student = load_student(ck / "student.pt")
        ran = load_ran(ck / "ran.pt") if (ck / "ran.pt").exists() else None
        return student, ran, state


def _metric_row(config: RunConfig, it: int, split: str, report: dict) -> dict:
    row = {"regime": config.regime, "seed": config.seed, "iteration": it, "split": split}
    row.update({k: report[k] for k in ("precision", "recall", "f1", "integrity", "accuracy")})
    return row


def run(config: RunConfig, labeled: Sequence[WordPair], unlabeled: Sequence[dict] = (),
        regex: RegexRule | None = None, dictionary: DictionaryRule | None = None,
        run_dir: str | Path | None = None, resume: bool = False,
        stop_after: int | None = None) -> RunResult:
    """Execute ``config.regime``; ``stop_after`` halts after that iteration (for resume tests)."""
    torch.set_num_threads(1)
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    regex = regex or RegexRule.default()
    dictionary = dictionary or build_default_dictionary()
    data = prepare(config, labeled, unlabeled, regex, dictionary)
    timings["prepare"] = time.perf_counter() - t0
    state = _RunState(run_dir, config)
    state.check_config(resume)
    iterations = 0 if config.regime == "student" else config.iterations
    if iterations and config.n_downsample > len(data.unlabeled):
        raise SampleTooLarge(f"n_downsample={config.n_downsample} exceeds |D_U|={len(data.unlabeled)}")

    ran_cfg = config.ran_config()
    ran_net = None
    pool: list[WordPair] = []
    start_it = 0
    last = state.latest() if resume else None
    if last is not None:
        student, ran_loaded, saved = state.load(last)
        if student.vocab.fingerprint() != data.vocab.fingerprint():
            raise ConfigError("checkpoint vocabulary does not match the prepared data")
        rng = _restore_rng(saved["rng"])
        rows = saved["rows"]
        pool = [WordPair(tuple(s), tuple(t)) for s, t in saved.get("pool", [])]
        if ran_loaded is not None:
            ran_net = ran_loaded[0]
        start_it = last + 1
        logger.info("resuming after iteration %d", last)
    else:
        rng = np.random.default_rng([config.seed, 7])
        t = time.perf_counter()
        epochs = config.student_epochs if config.regime == "student" else config.init_epochs
        student = init_student(config.student_config(epochs), data.vocab)
        train_supervised(student, data.train_examples, epochs, rng)
        timings["step1"] = time.perf_counter() - t
        rows = [_metric_row(config, 0, "dev", evaluate_model(student, data.dev))]
        state.save(0, student, None, rng, rows, {"pool": []})
        start_it = 1
        if stop_after == 0:
            return RunResult(config, student, None, data.vocab, rows, {}, timings, data)

    rule_cls_l = None
    ran_l_cache = None
    for it in range(start_it, iterations + 1):
        t = time.perf_counter()
        batch = downsample(data.unlabeled, config.n_downsample, rng)
        if config.regime == "self_training":
            added = _align_all(pseudo_pairs(student, batch), data.vocab, config.max_n_mask)
            pool.extend(WordPair(ex.source_words, ex.target_words) for ex in added)
            examples = data.train_examples + _align_all(pool, data.vocab, config.max_n_mask)
            train_supervised(student, examples, config.pseudo_epochs, rng)
            extra = {"pool": [[list(p.source_words), list(p.target_words)] for p in pool]}
            ran_ckpt = None
        else:
            if rule_cls_l is None:
                rule_cls_l = labeled_rule_classes(data.train_examples, regex, dictionary, data.vocab)
            layouts = pseudo_layouts(student, batch)
            pseudo_data = ran_data_for_pseudo(student, layouts)
            labeled_data = ran_data_for_labeled(student, data.train_examples, rule_cls_l)
            if ran_net is None:
                ran_net = init_ran(pseudo_data.h.shape[1], ran_cfg)
            train_ran(ran_net, pseudo_data, labeled_data, ran_cfg, rng)
            q = teacher_label(ran_net, pseudo_data, ran_cfg)
            soft = soft_examples(layouts, q, data.vocab)
            train_on_soft_labels(student, soft, config.pseudo_epochs, rng)
            train_supervised(student, data.train_examples, config.finetune_epochs, rng)
            extra = {"pool": []}
            ran_ckpt = (ran_net, ran_cfg, pseudo_data.h.shape[1])
        timings[f"iter_{it:03d}"] = time.perf_counter() - t
        rows.append(_metric_row(config, it, "dev", evaluate_model(student, data.dev)))
        state.save(it, student, ran_ckpt, rng, rows, extra)
        if stop_after is not None and it >= stop_after:
            return RunResult(config, student, ran_net, data.vocab, rows, {}, timings, data)

    report = {
        "regime": config.regime,
        "seed": config.seed,
        "iterations": iterations,
        "dev": evaluate_model(student, data.dev),
        "test": evaluate_model(student, data.test),
    }
    timings["total"] = time.perf_counter() - t0
    if state.dir is not None:
        save_student(student, state.dir / "student.pt")
        if ran_net is not None:
            save_ran(ran_net, ran_cfg, ran_net.f[0].in_features, state.dir / "ran.pt")
        _atomic_write(state.dir / "report.json", _dumps(report))
        manifest = {
            "version": __version__,
            "config": config.to_dict(),
            "seed": config.seed,
            "datasets": {"labeled_sha256": corpus_hash(list(labeled)),
                         "unlabeled_sha256": corpus_hash([r["input"] for r in unlabeled]),
                         "vocab_sha256": data.vocab.fingerprint()},
            "rows": rows,
            "timings": timings,
        }
        _atomic_write(state.dir / "manifest.json", _dumps(manifest))
    return RunResult(config, student, ran_net, data.vocab, rows, report, timings, data)


def run_student_baseline(config: RunConfig, labeled, **kwargs) -> RunResult:
    return run(replace(config, regime="student"), labeled, **kwargs)


def run_self_training(config: RunConfig, labeled, unlabeled, **kwargs) -> RunResult:
    return run(replace(config, regime="self_training"), labeled, unlabeled, **kwargs)


def run_weak_supervision(config: RunConfig, labeled, unlabeled, regex=None, dictionary=None,
                         **kwargs) -> RunResult:
    return run(replace(config, regime="weak_supervision"), labeled, unlabeled, regex,
               dictionary, **kwargs)


class WeakSupervisionNormalizer(BaseEstimator):
    """Estimator over word lists: ``fit(X, y, X_unlabeled)`` then ``predict(X)``.

    ``X`` and ``y`` are sequences of noisy and clean word lists; all of ``X``/``y`` is used
    for training, with the dev split carved out internally.
    """

    def __init__(self, regime="weak_supervision", iterations=3, n_downsample=512,
                 student_epochs=10, init_epochs=10, pseudo_epochs=5, finetune_epochs=5,
                 vocab_size=2000, p_diacritic=0.0, random_state=0):
        self.regime = regime
        self.iterations = iterations
        self.n_downsample = n_downsample
        self.student_epochs = student_epochs
        self.init_epochs = init_epochs
        self.pseudo_epochs = pseudo_epochs
        self.finetune_epochs = finetune_epochs
        self.vocab_size = vocab_size
        self.p_diacritic = p_diacritic
        self.random_state = random_state

    def fit(self, X, y, X_unlabeled=(), regex=None, dictionary=None):
        config = RunConfig(
            regime=self.regime, iterations=self.iterations, n_downsample=self.n_downsample,
            student_epochs=self.student_epochs, init_epochs=self.init_epochs,
            pseudo_epochs=self.pseudo_epochs, finetune_epochs=self.finetune_epochs,
            vocab_size=self.vocab_size, p_diacritic=self.p_diacritic, seed=self.random_state,
            train_ratio=0.9, dev_ratio=0.1,
        )
        pairs = [WordPair(tuple(s), tuple(t)) for s, t in zip(X, y, strict=True)]
        records = [unlabeled_record(WordPair(tuple(w), tuple(w)), i)
                   for i, w in enumerate(X_unlabeled)]
        self.result_ = run(config, pairs, records, regex, dictionary)
        self.student_ = self.result_.student
        return self

    def predict(self, X):
        check_is_fitted(self, "student_")
        return normalize_sentences(self.student_, [list(x) for x in X])

    def score(self, X, y):
        preds = self.predict(X)
        return evaluate([list(x) for x in X], [list(t) for t in y], preds)["f1"]
