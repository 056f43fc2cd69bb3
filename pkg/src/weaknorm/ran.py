"""Rule Attention Network: instance-conditioned aggregation of weak sources.

Each token position is one instance. Its soft label is

    q = (sum_j a_j q_j + a_S p + a_u u) / Z,    a_u = |R| + 1 - sum_j a_j - a_S

where the sum runs over heuristic rules that fired, ``p`` is the Student's
distribution, ``u`` is uniform over the K labels and every weight is
``sigmoid(f(h) . e_rule)`` for the Student hidden state ``h``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted
from torch import nn

from .rules import ABSTAIN_ID, N_RULES, RULE_STUDENT

CHECKPOINT_FORMAT = "weaknorm-ran/1"
N_HEURISTIC = N_RULES - 1


@dataclass
class RanConfig:
    rule_dim: int = 128
    hidden_dim: int = 128
    max_lr: float = 1e-2
    min_lr: float = 1e-5
    warmup_frac: float = 0.1
    unsup_epochs: int = 1
    sup_epochs: int = 1
    unsup_batch_size: int = 128
    sup_batch_size: int = 16
    count_student_in_rules: bool = False
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "RanConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


class RanNet(nn.Module):
    def __init__(self, input_dim: int, config: RanConfig):
        super().__init__()
        self.f = nn.Sequential(
            nn.Linear(input_dim, config.hidden_dim),
            nn.Tanh(),
            nn.Linear(config.hidden_dim, config.rule_dim),
        )
        self.rule_embed = nn.Embedding(N_RULES, config.rule_dim)
        nn.init.normal_(self.rule_embed.weight, std=config.rule_dim ** -0.5)

    def attention_logits(self, h: torch.Tensor) -> torch.Tensor:
        return self.f(h) @ self.rule_embed.weight.T

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        """Attention weights of shape (N, 3): regex, dictionary, student."""
        return torch.sigmoid(self.attention_logits(h))


def attention_weight(net: RanNet, h: torch.Tensor, rule_id: int) -> torch.Tensor:
    return torch.sigmoid(net.f(h) @ net.rule_embed.weight[rule_id])


def aggregate(rule_cls: torch.Tensor, student_p: torch.Tensor, a_rules: torch.Tensor,
              a_student: torch.Tensor, count_student_in_rules: bool = False) -> torch.Tensor:
    """Combine weak sources into soft labels.

    ``rule_cls`` (N, R) holds the class each heuristic rule voted for, ``ABSTAIN_ID``
    where it did not fire; ``a_rules`` (N, R) and ``a_student`` (N,) are weights in [0, 1].
    """
    k = student_p.shape[-1]
    fired = (rule_cls != ABSTAIN_ID).to(student_p.dtype)
    w = a_rules * fired
    n_fired = fired.sum(-1)
    if count_student_in_rules:
        n_fired = n_fired + 1
    a_uniform = n_fired + 1 - w.sum(-1) - a_student
    q = a_student[:, None] * student_p + (a_uniform / k)[:, None]
    q = q.scatter_add(1, rule_cls.clamp_min(0), w)
    return q / q.sum(-1, keepdim=True)


def unsup_loss(q: torch.Tensor, reduction: str = "sum") -> torch.Tensor:
    """Entropy of the soft labels, summed over components."""
    ent = -torch.special.xlogy(q, q).sum(-1)
    return ent.mean() if reduction == "mean" else ent.sum()


def sup_loss(q: torch.Tensor, y: torch.Tensor, reduction: str = "sum") -> torch.Tensor:
    """Cross-entropy of gold classes ``y`` under the soft labels."""
    nll = -torch.log(q.gather(-1, y[:, None])[:, 0].clamp_min(1e-300))
    return nll.mean() if reduction == "mean" else nll.sum()


@dataclass
class RanData:
    """Token-level RAN inputs for a set of sentences, flattened.

    ``offsets[i]`` is the row range of sentence ``i``.
    """

    h: torch.Tensor
    p: torch.Tensor
    rule_cls: torch.Tensor
    offsets: list[tuple[int, int]]
    y: torch.Tensor | None = None

    def __len__(self):
        return self.h.shape[0]

    @property
    def n_sentences(self) -> int:
        return len(self.offsets)

    def rows(self, sentence_ids: Sequence[int]) -> torch.Tensor:
        return torch.cat([torch.arange(*self.offsets[i]) for i in sentence_ids])

    @classmethod
    def from_sentences(cls, h: Sequence[np.ndarray], p: Sequence[np.ndarray],
                       rule_cls: Sequence[np.ndarray], y: Sequence[np.ndarray] | None = None,
                       dtype: torch.dtype = torch.float32) -> "RanData":
        offsets, pos = [], 0
        for arr in h:
            offsets.append((pos, pos + len(arr)))
            pos += len(arr)
        cat = lambda xs: np.concatenate(xs) if len(xs) else np.zeros((0,))
        return cls(
            h=torch.as_tensor(cat(h), dtype=dtype),
            p=torch.as_tensor(cat(p), dtype=dtype),
            rule_cls=torch.as_tensor(cat(rule_cls).reshape(-1, N_HEURISTIC), dtype=torch.long),
            offsets=offsets,
            y=None if y is None else torch.as_tensor(cat(y), dtype=torch.long),
        )


def soft_labels(net: RanNet, data: RanData, rows: torch.Tensor | None = None,
                count_student_in_rules: bool = False) -> torch.Tensor:
    h, p, rc = data.h, data.p, data.rule_cls
    if rows is not None:
        h, p, rc = h[rows], p[rows], rc[rows]
    a = net(h.to(net.rule_embed.weight.dtype))
    return aggregate(rc, p.to(a.dtype), a[:, :N_HEURISTIC], a[:, RULE_STUDENT],
                     count_student_in_rules)


def lr_schedule(step: int, total: int, config: RanConfig) -> float:
    """Linear warmup to ``max_lr``, then exponential decay reaching ``min_lr`` at the end."""
    warm = max(1, int(round(config.warmup_frac * total)))
    if step < warm:
        return config.max_lr * (step + 1) / warm
    span = max(1, total - warm - 1)
    frac = min(1.0, (step - warm) / span)
    return config.max_lr * math.exp(frac * math.log(config.min_lr / config.max_lr))


def _sentence_batches(n: int, size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    return [order[i:i + size] for i in range(0, n, size)]


def train_ran(net: RanNet, unlabeled: RanData | None, labeled: RanData | None,
              config: RanConfig, rng: np.random.Generator | None = None) -> list[dict]:
    """Entropy minimization on ``unlabeled``, then cross-entropy on ``labeled``."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    plan = []
    if unlabeled is not None and unlabeled.n_sentences:
        for _ in range(config.unsup_epochs):
            plan += [("unsup", b) for b in _sentence_batches(unlabeled.n_sentences,
                                                              config.unsup_batch_size, rng)]
    if labeled is not None and labeled.n_sentences:
        if labeled.y is None:
            raise ValueError("labeled RAN data needs gold classes")
        for _ in range(config.sup_epochs):
            plan += [("sup", b) for b in _sentence_batches(labeled.n_sentences,
                                                            config.sup_batch_size, rng)]
    history = []
    if not plan:
        return history
    opt = torch.optim.Adam(net.parameters(), lr=config.max_lr)
    net.train()
    for step, (phase, batch) in enumerate(plan):
        for group in opt.param_groups:
            group["lr"] = lr_schedule(step, len(plan), config)
        data = unlabeled if phase == "unsup" else labeled
        rows = data.rows(batch)
        q = soft_labels(net, data, rows, config.count_student_in_rules)
        if phase == "unsup":
            loss = unsup_loss(q, "mean")
        else:
            loss = sup_loss(q, data.y[rows], "mean")
        opt.zero_grad()
        loss.backward()
        opt.step()
        history.append({"step": step, "phase": phase, "loss": loss.item(),
                        "lr": opt.param_groups[0]["lr"]})
    net.eval()
    return history


def teacher_label(net: RanNet, data: RanData, config: RanConfig,
                  batch_rows: int = 8192) -> list[np.ndarray]:
    """Soft labels for every sentence of ``data``, as float64 arrays."""
    net.eval()
    out = []
    with torch.no_grad():
        chunks = []
        for start in range(0, len(data), batch_rows):
            rows = torch.arange(start, min(len(data), start + batch_rows))
            chunks.append(soft_labels(net, data, rows, config.count_student_in_rules))
        q = torch.cat(chunks).double() if chunks else torch.zeros(0, data.p.shape[-1])
        q = q / q.sum(-1, keepdim=True)
    q = q.numpy()
    for start, end in data.offsets:
        out.append(q[start:end])
    return out


def init_ran(input_dim: int, config: RanConfig) -> RanNet:
    with torch.random.fork_rng():
        torch.manual_seed(config.seed)
        return RanNet(input_dim, config)


def save_ran(net: RanNet, config: RanConfig, input_dim: int, path: str | Path) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "config": asdict(config),
        "input_dim": input_dim,
        "state": {k: v.detach().clone() for k, v in net.state_dict().items()},
    }
    tmp = Path(str(path) + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)


def load_ran(path: str | Path) -> tuple[RanNet, RanConfig]:
    payload = torch.load(path, weights_only=True)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a RAN checkpoint")
    config = RanConfig.from_dict(payload["config"])
    net = RanNet(int(payload["input_dim"]), config)
    net.load_state_dict(payload["state"])
    net.eval()
    return net, config


class RuleAttentionNetwork(BaseEstimator):
    """Estimator face of the RAN.

    ``fit(unlabeled, labeled)`` takes :class:`RanData`; ``predict_proba`` returns the
    per-token soft labels and ``attention`` the per-source weights.
    """

    def __init__(self, rule_dim=128, hidden_dim=128, max_lr=1e-2, min_lr=1e-5,
                 unsup_epochs=1, sup_epochs=1, unsup_batch_size=128, sup_batch_size=16,
                 count_student_in_rules=False, random_state=0):
        self.rule_dim = rule_dim
        self.hidden_dim = hidden_dim
        self.max_lr = max_lr
        self.min_lr = min_lr
        self.unsup_epochs = unsup_epochs
        self.sup_epochs = sup_epochs
        self.unsup_batch_size = unsup_batch_size
        self.sup_batch_size = sup_batch_size
        self.count_student_in_rules = count_student_in_rules
        self.random_state = random_state

    def _config(self) -> RanConfig:
        return RanConfig(
            rule_dim=self.rule_dim, hidden_dim=self.hidden_dim, max_lr=self.max_lr,
            min_lr=self.min_lr, unsup_epochs=self.unsup_epochs, sup_epochs=self.sup_epochs,
            unsup_batch_size=self.unsup_batch_size, sup_batch_size=self.sup_batch_size,
            count_student_in_rules=self.count_student_in_rules, seed=self.random_state,
        )

    def fit(self, unlabeled: RanData | None, labeled: RanData | None = None):
        source = unlabeled if unlabeled is not None else labeled
        self.config_ = self._config()
        self.net_ = init_ran(source.h.shape[1], self.config_)
        if source.h.dtype == torch.float64:
            self.net_ = self.net_.double()
        self.history_ = train_ran(self.net_, unlabeled, labeled, self.config_,
                                  np.random.default_rng(self.random_state))
        return self

    def predict_proba(self, data: RanData) -> list[np.ndarray]:
        check_is_fitted(self, "net_")
        return teacher_label(self.net_, data, self.config_)

    def attention(self, data: RanData) -> np.ndarray:
        check_is_fitted(self, "net_")
        with torch.no_grad():
            return self.net_(data.h.to(self.net_.rule_embed.weight.dtype)).numpy()
