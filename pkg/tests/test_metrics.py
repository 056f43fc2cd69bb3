import numpy as np
import pytest
from hypothesis import given, strategies as st

from weaknorm.exceptions import LengthMismatch
from weaknorm.metrics import (EvalCounts, aggregate, count_sentence, evaluate, integrity,
                              precision_recall_f1, sentence_accuracy)

WORDS = ["a", "b", "c", "d"]


def brute_force(sources, targets, preds):
    """Independent recount with numpy masks over the flattened corpus."""
    s = np.array([w for x in sources for w in x], dtype=object)
    t = np.array([w for x in targets for w in x], dtype=object)
    p = np.array([w for x in preds for w in x], dtype=object)
    need = s != t
    changed = p != s
    hit = p == t
    n_need, n_pred, tp = need.sum(), changed.sum(), (need & hit).sum()
    if n_pred:
        prec = tp / n_pred
    else:
        prec = 1.0 if n_need == 0 else 0.0
    rec = tp / n_need if n_need else 1.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    keep = ~need
    integ = (keep & (p == s)).sum() / keep.sum() if keep.sum() else 1.0
    acc = hit.sum() / len(s) if len(s) else 0.0
    return prec, rec, f1, integ, acc


def random_triples(rng, n):
    out = []
    for _ in range(n):
        length = int(rng.integers(1, 8))
        src = list(rng.choice(WORDS, length))
        tgt = [w if rng.random() < 0.6 else str(rng.choice(WORDS)) for w in src]
        pred = [w if rng.random() < 0.5 else str(rng.choice(WORDS + ["e"])) for w in tgt]
        out.append((src, tgt, pred))
    return out


def test_hand_counted_example():
    c = count_sentence(["t", "ko", "đi"], ["tao", "không", "đi"], ["tao", "không", "đi"])
    assert (c.need_norm, c.tp_need_norm, c.need_no_norm, c.tp_need_no_norm, c.tp_token) == (2, 2, 1, 1, 3)


def test_prf_arithmetic():
    p, r, f = precision_recall_f1(EvalCounts(need_norm=10, pred_need_norm=12, tp_need_norm=8))
    assert r == pytest.approx(0.8) and p == pytest.approx(2 / 3) and f == pytest.approx(0.72727, abs=1e-4)


def test_identity_and_oracle_predictors():
    src, tgt = [["t", "ko", "đi"]], [["tao", "không", "đi"]]
    ident = evaluate(src, tgt, src)
    assert ident["integrity"] == 1.0 and ident["recall"] == 0.0
    oracle = evaluate(src, tgt, tgt)
    assert all(oracle[k] == 1.0 for k in ("precision", "recall", "f1", "integrity", "accuracy"))


def test_zero_denominators():
    assert precision_recall_f1(EvalCounts()) == (1.0, 1.0, 1.0)
    assert precision_recall_f1(EvalCounts(need_norm=3)) == (0.0, 0.0, 0.0)
    assert integrity(EvalCounts()) == 1.0
    assert sentence_accuracy([]) == 0.0


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        count_sentence(["a"], ["a", "b"], ["a"])
    with pytest.raises(LengthMismatch):
        evaluate([["a"]], [], [])


def test_accuracy_three_of_four():
    c = count_sentence(list("abcd"), list("abcd"), list("abce"))
    assert sentence_accuracy(c) == 0.75


def test_brute_force_agreement():
    rng = np.random.default_rng(0)
    for src, tgt, pred in random_triples(rng, 1000):
        got = evaluate([src], [tgt], [pred])
        assert (got["precision"], got["recall"], got["f1"], got["integrity"], got["accuracy"]) == \
            brute_force([src], [tgt], [pred])


@given(st.integers(0, 10_000))
def test_invariants(seed):
    rng = np.random.default_rng(seed)
    triples = random_triples(rng, 6)
    counts = [count_sentence(*t) for t in triples]
    for c in counts:
        assert c.need_norm + c.need_no_norm == c.n_token
        assert c.tp_need_norm <= min(c.need_norm, c.pred_need_norm)
    total = aggregate(counts)
    p, r, f = precision_recall_f1(total)
    assert min(p, r) - 1e-12 <= f <= max(p, r) + 1e-12
    order = rng.permutation(len(triples))
    shuffled = [triples[i] for i in order]
    assert evaluate(*zip(*triples)) == evaluate(*zip(*shuffled))
