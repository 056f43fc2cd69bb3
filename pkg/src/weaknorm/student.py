"""The Student: a token-classification normalizer with a mask-count head.

A small pre-norm transformer encoder trained from scratch. Every source token gets a
distribution over the subword vocabulary (its normalized form, ``<space>`` meaning
"drop") and a distribution over how many ``<mask>`` tokens must follow it.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch
import torch.nn.functional as F
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted
from torch import nn

from .align import IGNORE, AlignedExample, Vocabulary, align_pair, detokenize, train_subword_vocab
from .exceptions import InvalidSoftLabel, SequenceTooLong
from .text_prep import WordPair

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "weaknorm-student/1"


@dataclass
class StudentConfig:
    """Student hyperparameters.

    Learning-rate defaults are the per-group fine-tuning rates used for pretrained
    encoders; a model trained from scratch needs :meth:`desk` (same ratios, x200).
    """

    embed_dim: int = 64
    n_layers: int = 2
    n_heads: int = 4
    ff_dim: int = 128
    max_len: int = 160
    max_n_mask: int = 3
    dropout: float = 0.0
    lr_embeddings: float = 5e-5
    lr_encoder: float = 2e-5
    lr_heads: float = 1e-5
    epochs: int = 10
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.embed_dim <= 0 or self.embed_dim % self.n_heads:
            raise ValueError("embed_dim must be positive and divisible by n_heads")
        if min(self.lr_embeddings, self.lr_encoder, self.lr_heads) <= 0:
            raise ValueError("learning rates must be positive")

    @classmethod
    def desk(cls, **overrides) -> "StudentConfig":
        base = dict(lr_embeddings=1e-2, lr_encoder=4e-3, lr_heads=2e-3)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, data: dict) -> "StudentConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


class StudentNet(nn.Module):
    def __init__(self, vocab_size: int, config: StudentConfig):
        super().__init__()
        d = config.embed_dim
        self.tok_embed = nn.Embedding(vocab_size, d)
        self.pos_embed = nn.Embedding(config.max_len, d)
        layer = nn.TransformerEncoderLayer(
            d, config.n_heads, config.ff_dim, config.dropout, batch_first=True, norm_first=True
        )
        self.encoder = nn.TransformerEncoder(layer, config.n_layers, enable_nested_tensor=False)
        self.final_norm = nn.LayerNorm(d)
        self.norm_head = nn.Linear(d, vocab_size)
        self.mask_head = nn.Linear(d, config.max_n_mask + 1)

    def forward(self, ids: torch.Tensor, pad: torch.Tensor):
        pos = torch.arange(ids.shape[1], device=ids.device)
        x = self.tok_embed(ids) + self.pos_embed(pos)[None]
        x = self.encoder(x, src_key_padding_mask=pad)
        h = self.final_norm(x)
        return h, self.norm_head(h), self.mask_head(h)

    def param_groups(self) -> dict[str, list[nn.Parameter]]:
        return {
            "embeddings": [*self.tok_embed.parameters(), *self.pos_embed.parameters()],
            "encoder": [*self.encoder.parameters(), *self.final_norm.parameters()],
            "heads": [*self.norm_head.parameters(), *self.mask_head.parameters()],
        }


@dataclass
class StudentModel:
    net: StudentNet
    vocab: Vocabulary
    config: StudentConfig

    @property
    def dtype(self) -> torch.dtype:
        return self.net.tok_embed.weight.dtype


def _fill_from_population(rows: torch.Tensor, index: int, gen: torch.Generator) -> None:
    others = torch.cat([rows[:index], rows[index + 1:]])
    mean, std = others.mean(0), others.std(0)
    z = torch.randn(rows.shape[1], generator=gen, dtype=rows.dtype).clamp(-3.0, 3.0)
    rows[index] = mean + std * z


def init_student(config: StudentConfig, vocab: Vocabulary) -> StudentModel:
    """Seeded initialization; the ``<space>`` rows follow the other rows' statistics."""
    with torch.random.fork_rng():
        torch.manual_seed(config.seed)
        net = StudentNet(len(vocab), config)
    gen = torch.Generator().manual_seed(config.seed + 1)
    with torch.no_grad():
        _fill_from_population(net.tok_embed.weight, vocab.space_id, gen)
        _fill_from_population(net.norm_head.weight, vocab.space_id, gen)
    return StudentModel(net, vocab, config)


def pad_batch(seqs: Sequence[Sequence[int]], fill: int = 0) -> tuple[torch.Tensor, torch.Tensor]:
    width = max((len(s) for s in seqs), default=0)
    out = torch.full((len(seqs), max(width, 1)), fill, dtype=torch.long)
    for i, s in enumerate(seqs):
        if len(s):
            out[i, : len(s)] = torch.as_tensor(np.asarray(s, dtype=np.int64))
    lengths = torch.as_tensor([len(s) for s in seqs])
    pad = torch.arange(out.shape[1])[None] >= lengths[:, None]
    return out, pad


def forward(model: StudentModel, batch: Sequence[Sequence[int]]):
    """Run the encoder over a batch of id sequences.

    Returns ``(h, token_logits, mask_logits, pad)``; padded positions of the
    outputs are meaningless and flagged by ``pad``.
    """
    longest = max((len(s) for s in batch), default=0)
    if longest > model.config.max_len:
        raise SequenceTooLong(f"sequence of {longest} tokens exceeds max_len {model.config.max_len}")
    ids, pad = pad_batch(batch, model.vocab.pad_id)
    h, logits, mask_logits = model.net(ids, pad)
    return h, logits, mask_logits, pad


def token_ce(logits: torch.Tensor, targets: torch.Tensor, valid: torch.Tensor,
             reduction: str = "sum") -> torch.Tensor:
    nll = -torch.log_softmax(logits, -1).gather(-1, targets.clamp_min(0)[..., None])[..., 0]
    nll = nll * valid
    return nll.sum() / valid.sum().clamp_min(1) if reduction == "mean" else nll.sum()


def mask_count_ce(mask_logits: torch.Tensor, labels: torch.Tensor,
                  reduction: str = "sum") -> torch.Tensor:
    """Cross-entropy over mask counts; positions labelled IGNORE (or padding) are skipped."""
    valid = labels != IGNORE
    return token_ce(mask_logits, labels, valid.to(mask_logits.dtype), reduction)


def soft_label_ce(logits: torch.Tensor, q: torch.Tensor, valid: torch.Tensor,
                  reduction: str = "sum") -> torch.Tensor:
    """-sum_i sum_j q_ij log p_ij over valid positions."""
    per_tok = -(q * torch.log_softmax(logits, -1)).sum(-1) * valid
    return per_tok.sum() / valid.sum().clamp_min(1) if reduction == "mean" else per_tok.sum()


def _optimizer(model: StudentModel) -> torch.optim.Optimizer:
    groups = model.net.param_groups()
    cfg = model.config
    return torch.optim.Adam([
        {"params": groups["embeddings"], "lr": cfg.lr_embeddings},
        {"params": groups["encoder"], "lr": cfg.lr_encoder},
        {"params": groups["heads"], "lr": cfg.lr_heads},
    ])


def _pad_labels(seqs: Sequence[np.ndarray], width: int, fill: int) -> torch.Tensor:
    out = torch.full((len(seqs), width), fill, dtype=torch.long)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = torch.as_tensor(s)
    return out


def supervised_batch_loss(model: StudentModel, batch: Sequence[AlignedExample],
                          reduction: str = "mean"):
    """Token CE on the masked source plus mask-count CE on the mask-free source.

    The mask-count head sees the sequence without masks, as it does at inference.
    Returns ``(token_loss, mask_loss, n_correct, n_tokens)``.
    """
    unmasked = [ex.unmasked_source for ex in batch]
    seqs = [ex.source_ids for ex in batch] + [u[0] for u in unmasked]
    _, logits, mask_logits, pad = forward(model, seqs)
    b = len(batch)
    width = logits.shape[1]
    targets = _pad_labels([ex.target_ids for ex in batch], width, model.vocab.pad_id)
    valid = (~pad[:b]).to(logits.dtype)
    tok_loss = token_ce(logits[:b], targets, valid, reduction)
    counts = _pad_labels([u[1] for u in unmasked], width, IGNORE)
    msk_loss = mask_count_ce(mask_logits[b:], counts, reduction)
    with torch.no_grad():
        correct = ((logits[:b].argmax(-1) == targets) & ~pad[:b]).sum().item()
    return tok_loss, msk_loss, correct, int((~pad[:b]).sum())


def _batches(n: int, batch_size: int, rng: np.random.Generator | None):
    order = rng.permutation(n) if rng is not None else np.arange(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def train_supervised(model: StudentModel, examples: Sequence[AlignedExample],
                     epochs: int | None = None, rng: np.random.Generator | None = None,
                     on_epoch: Callable[[int, dict], None] | None = None) -> list[dict]:
    """Minimize token CE + mask-count CE on aligned gold examples."""
    epochs = model.config.epochs if epochs is None else epochs
    rng = rng if rng is not None else np.random.default_rng(model.config.seed)
    history = []
    if epochs <= 0 or not examples:
        return history
    opt = _optimizer(model)
    model.net.train()
    for epoch in range(epochs):
        tot_loss = correct = n_tok = 0.0
        n_batches = 0
        for idx in _batches(len(examples), model.config.batch_size, rng):
            tok_loss, msk_loss, c, n = supervised_batch_loss(model, [examples[i] for i in idx])
            loss = tok_loss + msk_loss
            opt.zero_grad()
            loss.backward()
            opt.step()
            tot_loss += loss.item()
            n_batches += 1
            correct += c
            n_tok += n
        row = {"epoch": epoch, "loss": tot_loss / n_batches, "token_accuracy": correct / n_tok}
        history.append(row)
        if on_epoch is not None:
            on_epoch(epoch, row)
    model.net.eval()
    return history


def fine_tune(model: StudentModel, examples: Sequence[AlignedExample], epochs: int = 5,
              rng: np.random.Generator | None = None) -> list[dict]:
    return train_supervised(model, examples, epochs=epochs, rng=rng)


@dataclass
class SoftExample:
    """Student input with RAN soft labels per position and hard mask-count labels."""

    source_ids: np.ndarray
    q: np.ndarray
    n_mask: np.ndarray

    @property
    def unmasked_source(self) -> tuple[np.ndarray, np.ndarray]:
        keep = self.n_mask != IGNORE
        return self.source_ids[keep], self.n_mask[keep]


def check_soft_labels(q: np.ndarray, tol: float = 1e-6) -> None:
    if q.ndim != 2 or (q < -tol).any() or np.abs(q.sum(-1) - 1).max(initial=0) > tol:
        raise InvalidSoftLabel("soft label rows must be non-negative and sum to 1")


def train_on_soft_labels(model: StudentModel, examples: Sequence[SoftExample],
                         epochs: int = 5, rng: np.random.Generator | None = None) -> list[dict]:
    """Minimize the soft-label cross-entropy (plus mask-count CE) on pseudo-labelled data."""
    for ex in examples:
        check_soft_labels(ex.q)
    rng = rng if rng is not None else np.random.default_rng(model.config.seed)
    history = []
    if epochs <= 0 or not examples:
        return history
    opt = _optimizer(model)
    model.net.train()
    k = len(model.vocab)
    for epoch in range(epochs):
        tot = 0.0
        n_batches = 0
        for idx in _batches(len(examples), model.config.batch_size, rng):
            batch = [examples[i] for i in idx]
            unmasked = [ex.unmasked_source for ex in batch]
            seqs = [ex.source_ids for ex in batch] + [u[0] for u in unmasked]
            _, logits, mask_logits, pad = forward(model, seqs)
            b = len(batch)
            width = logits.shape[1]
            q = torch.zeros(b, width, k, dtype=logits.dtype)
            for i, ex in enumerate(batch):
                q[i, : len(ex.q)] = torch.as_tensor(ex.q, dtype=logits.dtype)
            valid = (~pad[:b]).to(logits.dtype)
            loss = soft_label_ce(logits[:b], q, valid, "mean")
            counts = _pad_labels([u[1] for u in unmasked], width, IGNORE)
            loss = loss + mask_count_ce(mask_logits[b:], counts, "mean")
            opt.zero_grad()
            loss.backward()
            opt.step()
            tot += loss.item()
            n_batches += 1
        history.append({"epoch": epoch, "loss": tot / n_batches})
    model.net.eval()
    return history


def _no_grad_eval(model: StudentModel):
    model.net.eval()
    return torch.no_grad()


def predict_mask_counts(model: StudentModel, seqs: Sequence[Sequence[int]],
                        batch_size: int = 256) -> list[np.ndarray]:
    out = []
    with _no_grad_eval(model):
        for start in range(0, len(seqs), batch_size):
            chunk = seqs[start:start + batch_size]
            _, _, mask_logits, _ = forward(model, chunk)
            counts = mask_logits.argmax(-1).numpy()
            out.extend(counts[i, : len(s)] for i, s in enumerate(chunk))
    return out


def predict_pseudo(model: StudentModel, seqs: Sequence[Sequence[int]],
                   batch_size: int = 256) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-token distributions p(y|x) and last-layer hidden states for each sequence."""
    out = []
    with _no_grad_eval(model):
        for start in range(0, len(seqs), batch_size):
            chunk = seqs[start:start + batch_size]
            h, logits, _, _ = forward(model, chunk)
            probs = torch.softmax(logits, -1).numpy()
            h = h.numpy()
            out.extend((probs[i, : len(s)], h[i, : len(s)]) for i, s in enumerate(chunk))
    return out


def tokenize_words(vocab: Vocabulary, words: Sequence[str]) -> tuple[list[int], list[int]]:
    ids: list[int] = []
    owner: list[int] = []
    for w_idx, word in enumerate(words):
        piece = vocab.tokenize_word(word)
        ids.extend(piece)
        owner.extend([w_idx] * len(piece))
    return ids, owner


def expand_with_masks(ids: Sequence[int], owner: Sequence[int], counts: Sequence[int],
                      vocab: Vocabulary) -> tuple[list[int], list[int]]:
    new_ids, new_owner = [], []
    for tok, w, n in zip(ids, owner, counts):
        new_ids.append(int(tok))
        new_owner.append(w)
        new_ids.extend([vocab.mask_id] * int(n))
        new_owner.extend([w] * int(n))
    return new_ids, new_owner


def words_from_predictions(pred_ids: Sequence[int], owner: Sequence[int],
                           source_words: Sequence[str], vocab: Vocabulary) -> list[str]:
    """Regroup predicted units by the source word they sit in.

    A word whose span predicts nothing but ``<space>`` keeps its source form, so the
    output always has one entry per source word.
    """
    per_word: list[list[int]] = [[] for _ in source_words]
    for tok, w in zip(pred_ids, owner):
        per_word[w].append(int(tok))
    out = []
    for src, ids in zip(source_words, per_word):
        pieces = detokenize(ids, vocab, strict=False)
        out.append(" ".join(pieces) if pieces else src)
    return out


def normalize_sentences(model: StudentModel, sentences: Sequence[Sequence[str]],
                        batch_size: int = 256) -> list[list[str]]:
    vocab = model.vocab
    tokenized = [tokenize_words(vocab, words) for words in sentences]
    counts = predict_mask_counts(model, [t[0] for t in tokenized], batch_size)
    expanded = [expand_with_masks(ids, owner, c, vocab) for (ids, owner), c in zip(tokenized, counts)]
    banned = torch.tensor([vocab.pad_id, vocab.unk_id, vocab.mask_id])
    results = []
    with _no_grad_eval(model):
        for start in range(0, len(expanded), batch_size):
            chunk = expanded[start:start + batch_size]
            _, logits, _, _ = forward(model, [e[0] for e in chunk])
            logits[..., banned] = -torch.inf
            pred = logits.argmax(-1).numpy()
            for i, (ids, owner) in enumerate(chunk):
                words = sentences[start + i]
                results.append(words_from_predictions(pred[i, : len(ids)], owner, words, vocab))
    return results


def normalize_sentence(model: StudentModel, words: Sequence[str]) -> list[str]:
    return normalize_sentences(model, [words])[0]


def save_student(model: StudentModel, path: str | Path) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "config": asdict(model.config),
        "vocab_units": model.vocab.id_to_unit,
        "vocab_sha256": model.vocab.fingerprint(),
        "state": {k: v.detach().clone() for k, v in model.net.state_dict().items()},
    }
    tmp = Path(str(path) + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)


def load_student(path: str | Path) -> StudentModel:
    payload = torch.load(path, weights_only=True)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a student checkpoint")
    vocab = Vocabulary(list(payload["vocab_units"]))
    if vocab.fingerprint() != payload["vocab_sha256"]:
        raise ValueError(f"{path}: vocabulary hash mismatch")
    config = StudentConfig.from_dict(payload["config"])
    net = StudentNet(len(vocab), config)
    state = payload["state"]
    net = net.to(next(iter(state.values())).dtype)
    net.load_state_dict(state)
    net.eval()
    return StudentModel(net, vocab, config)


class LexNormStudent(BaseEstimator):
    """Scikit-learn style wrapper: ``fit`` on (noisy, clean) word lists, ``predict`` clean ones."""

    def __init__(self, embed_dim=64, n_layers=2, n_heads=4, ff_dim=128, max_n_mask=3,
                 lr_embeddings=1e-2, lr_encoder=4e-3, lr_heads=2e-3, epochs=10,
                 batch_size=16, vocab_size=2000, random_state=0):
        self.embed_dim = embed_dim
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.ff_dim = ff_dim
        self.max_n_mask = max_n_mask
        self.lr_embeddings = lr_embeddings
        self.lr_encoder = lr_encoder
        self.lr_heads = lr_heads
        self.epochs = epochs
        self.batch_size = batch_size
        self.vocab_size = vocab_size
        self.random_state = random_state

    def _config(self) -> StudentConfig:
        return StudentConfig(
            embed_dim=self.embed_dim, n_layers=self.n_layers, n_heads=self.n_heads,
            ff_dim=self.ff_dim, max_n_mask=self.max_n_mask, lr_embeddings=self.lr_embeddings,
            lr_encoder=self.lr_encoder, lr_heads=self.lr_heads, epochs=self.epochs,
            batch_size=self.batch_size, seed=self.random_state,
        )

    def fit(self, X, y):
        pairs = [WordPair(tuple(s), tuple(t)) for s, t in zip(X, y, strict=True)]
        vocab = train_subword_vocab([p.target_words for p in pairs], self.vocab_size,
                                    [p.source_words for p in pairs])
        config = self._config()
        examples = [align_pair(p, vocab, config.max_n_mask) for p in pairs]
        self.model_ = init_student(config, vocab)
        self.history_ = train_supervised(self.model_, examples,
                                         rng=np.random.default_rng(self.random_state))
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return normalize_sentences(self.model_, [list(x) for x in X])

    def score(self, X, y):
        from .metrics import evaluate

        return evaluate([list(x) for x in X], [list(t) for t in y], self.predict(X))["f1"]
