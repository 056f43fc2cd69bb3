"""Shared oracles: central finite differences and the controlled two-rule RAN setup."""
import numpy as np
import torch

from weaknorm.ran import RanData


def rel_err(a: float, b: float, floor: float = 1e-7) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def fd_check(loss_fn, tensor: torch.Tensor, rng: np.random.Generator, n_coords: int = 6,
             eps: float = 1e-6, candidates=None) -> float:
    """Max relative error between autograd and central differences on random coordinates.

    ``loss_fn`` takes no arguments and reads ``tensor`` (a float64 leaf) in place.
    """
    if tensor.grad is not None:
        tensor.grad = None
    loss_fn().backward()
    grad = tensor.grad.detach().clone()
    flat = tensor.data.view(-1)
    worst = 0.0
    pool = np.arange(flat.numel()) if candidates is None else np.asarray(candidates)
    for idx in rng.choice(pool, size=min(n_coords, len(pool)), replace=False):
        orig = flat[idx].item()
        with torch.no_grad():
            flat[idx] = orig + eps
            up = loss_fn().item()
            flat[idx] = orig - eps
            down = loss_fn().item()
            flat[idx] = orig
        worst = max(worst, rel_err(grad.view(-1)[idx].item(), (up - down) / (2 * eps)))
    return worst


def two_rule_data(seed: int, n_sentences: int, tokens: int = 10, k: int = 12, dim: int = 16,
                  fire: float = 0.8, acc=(0.95, 0.30), dtype=torch.float32) -> RanData:
    """Token instances where rule 0 is right 95% of the time it fires and rule 1 only 30%."""
    rng = np.random.default_rng(seed)
    n = n_sentences * tokens
    y = rng.integers(k, size=n)
    h = rng.normal(size=(n, dim))
    rule_cls = np.full((n, 2), -1, dtype=np.int64)
    for j, a in enumerate(acc):
        fired = rng.random(n) < fire
        correct = rng.random(n) < a
        wrong = (y + rng.integers(1, k, size=n)) % k
        rule_cls[fired, j] = np.where(correct, y, wrong)[fired]
    logits = rng.normal(size=(n, k))
    logits[np.arange(n), y] += 1.5
    p = np.exp(logits) / np.exp(logits).sum(1, keepdims=True)
    split = lambda a: [a[i * tokens:(i + 1) * tokens] for i in range(n_sentences)]
    return RanData.from_sentences(split(h), split(p), split(rule_cls), split(y), dtype=dtype)


ACCEPTANCE: list[str] = []


def report(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion:2d} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
