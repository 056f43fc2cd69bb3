import json
from dataclasses import replace

import numpy as np
import pytest
from sklearn.base import clone

import weaknorm.orchestrator as orch
from weaknorm.align import IGNORE
from weaknorm.exceptions import ConfigError, SampleTooLarge
from weaknorm.orchestrator import (RunConfig, WeakSupervisionNormalizer, downsample, make_benchmark,
                                   pseudo_layouts, run, soft_examples)
from weaknorm.rules import DictionaryRule, RegexRule, precompute_rule_columns
from weaknorm.student import StudentConfig, init_student
from weaknorm.text_prep import unlabeled_record

TINY = dict(iterations=1, n_downsample=24, student_epochs=2, init_epochs=2, pseudo_epochs=1,
            finetune_epochs=1, embed_dim=16, n_heads=2, ff_dim=32, vocab_size=700,
            rule_dim=16, ran_hidden_dim=16)


@pytest.fixture(scope="module")
def bench():
    return make_benchmark(n_labeled=150, n_unlabeled=120, seed=0)


def tiny(**kw):
    return RunConfig(**{**TINY, **kw})


def test_config_validation_and_presets():
    with pytest.raises(ConfigError):
        RunConfig(regime="nope")
    with pytest.raises(ConfigError):
        RunConfig(iterations=-1)
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"bogus": 1})
    full = RunConfig.full_scale()
    assert (full.iterations, full.n_downsample, full.student_epochs, full.init_epochs,
            full.pseudo_epochs, full.finetune_epochs, full.batch_size,
            full.unsup_batch_size, full.rule_dim) == (10, 8096, 10, 5, 5, 5, 16, 128, 128)
    assert full.lr_embeddings == 5e-5
    assert RunConfig.from_dict(full.to_dict()) == full


def test_downsample():
    pool = list(range(50))
    assert sorted(downsample(pool, 50, np.random.default_rng(0))) == pool
    assert downsample(pool, 10, np.random.default_rng(3)) == downsample(pool, 10, np.random.default_rng(3))
    with pytest.raises(SampleTooLarge):
        downsample(pool, 51, np.random.default_rng(0))


def test_student_baseline(bench):
    res = run(tiny(regime="student", student_epochs=12, embed_dim=32, ff_dim=64), bench.labeled)
    assert len(res.rows) == 1 and res.ran is None
    assert res.report["test"]["f1"] > 0
    assert res.report["iterations"] == 0


def test_self_training_zero_iterations_is_baseline(bench):
    base = run(tiny(regime="student"), bench.labeled, bench.unlabeled)
    st = run(tiny(regime="self_training", iterations=0), bench.labeled, bench.unlabeled)
    assert st.report["test"] == base.report["test"]


def test_self_training_pool_growth(bench, tmp_path):
    run(tiny(regime="self_training", iterations=2), bench.labeled, bench.unlabeled, run_dir=tmp_path)
    sizes = [len(json.loads((tmp_path / f"checkpoints/iter_{i:03d}/state.json").read_text())["pool"])
             for i in range(3)]
    assert sizes[0] == 0
    assert all(0 <= b - a <= TINY["n_downsample"] for a, b in zip(sizes, sizes[1:]))
    assert sizes[-1] > 0


def test_weak_supervision_single_iteration(bench, tmp_path, monkeypatch):
    calls = {}

    def counting(name, fn):
        def wrapper(*a, **k):
            calls[name] = calls.get(name, 0) + 1
            return fn(*a, **k)
        monkeypatch.setattr(orch, name, wrapper)

    for name in ("downsample", "train_ran", "teacher_label", "train_on_soft_labels"):
        counting(name, getattr(orch, name))
    labeled_before = list(bench.labeled)
    res = run(tiny(), bench.labeled, bench.unlabeled, run_dir=tmp_path)
    assert calls == {"downsample": 1, "train_ran": 1, "teacher_label": 1, "train_on_soft_labels": 1}
    assert bench.labeled == labeled_before
    assert [r["iteration"] for r in res.rows] == [0, 1]
    for name in ("config.json", "metrics.jsonl", "report.json", "manifest.json", "student.pt",
                 "ran.pt", "checkpoints/iter_001/ran.pt"):
        assert (tmp_path / name).exists(), name
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"] == tiny().to_dict() and "timings" in manifest
    assert len((tmp_path / "metrics.jsonl").read_text().splitlines()) == 2


def test_n_downsample_larger_than_pool(bench):
    with pytest.raises(SampleTooLarge):
        run(tiny(n_downsample=10_000), bench.labeled, bench.unlabeled)


def test_reports_are_byte_identical(bench, tmp_path):
    for name in ("a", "b"):
        run(tiny(), bench.labeled, bench.unlabeled, run_dir=tmp_path / name)
    assert (tmp_path / "a/report.json").read_bytes() == (tmp_path / "b/report.json").read_bytes()
    assert (tmp_path / "a/metrics.jsonl").read_bytes() == (tmp_path / "b/metrics.jsonl").read_bytes()


@pytest.mark.parametrize("regime", ["weak_supervision", "self_training"])
def test_resume_matches_uninterrupted(bench, tmp_path, regime):
    cfg = tiny(regime=regime, iterations=2)
    full = run(cfg, bench.labeled, bench.unlabeled, run_dir=tmp_path / "full")
    run(cfg, bench.labeled, bench.unlabeled, run_dir=tmp_path / "cut", stop_after=1)
    assert not (tmp_path / "cut/report.json").exists()
    resumed = run(cfg, bench.labeled, bench.unlabeled, run_dir=tmp_path / "cut", resume=True)
    assert resumed.report == full.report
    assert (tmp_path / "cut/report.json").read_bytes() == (tmp_path / "full/report.json").read_bytes()
    with pytest.raises(ConfigError):
        run(replace(cfg, seed=9), bench.labeled, bench.unlabeled, run_dir=tmp_path / "cut", resume=True)


def test_pseudo_layout_and_mask_labels(small_vocab, lexicon):
    model = init_student(StudentConfig.desk(embed_dim=16, n_heads=2, ff_dim=32), small_vocab)
    dictionary = DictionaryRule({"ko": "không", "cty": "công ty"}, lexicon)
    rec = precompute_rule_columns([unlabeled_record_words(["cty", "ko", "đi"])],
                                  RegexRule.default(), dictionary)[0]
    (lay,) = pseudo_layouts(model, [rec])
    v = small_vocab
    need = len(v.tokenize_word("công ty")) - len(v.tokenize_word("cty"))
    start, end = lay.spans[0]
    assert end - start >= len(v.tokenize_word("cty")) + max(need, 0)
    assert (lay.rule_cls[start:end, 1] != -1).all()
    assert (lay.rule_cls[:, 0] == -1).all()
    # teacher argmax equal to the dictionary output gives matching mask labels
    q = np.full((len(lay.ids), len(v)), 1e-3)
    target = v.tokenize_word("công ty")
    for pos in range(start, end):
        cls = target[pos - start] if pos - start < len(target) else v.space_id
        q[pos, cls] = 1.0
    q /= q.sum(1, keepdims=True)
    (soft,) = soft_examples([lay], [q], v)
    n_src = lay.n_source[0]
    assert soft.n_mask[start + n_src - 1] == min(max(len(target) - n_src, 0), end - start - n_src)
    assert (soft.n_mask[start + n_src:end] == IGNORE).all()


def unlabeled_record_words(words):
    from weaknorm.text_prep import WordPair
    return unlabeled_record(WordPair(tuple(words), tuple(words)), 0)


def test_estimator_interface(bench):
    X = [list(p.source_words) for p in bench.labeled]
    y = [list(p.target_words) for p in bench.labeled]
    est = WeakSupervisionNormalizer(iterations=1, n_downsample=16, student_epochs=1, init_epochs=1,
                                    pseudo_epochs=1, finetune_epochs=1, vocab_size=700)
    assert clone(est).get_params()["n_downsample"] == 16
    est.fit(X, y, [r["input"] for r in bench.unlabeled])
    preds = est.predict(X[:3])
    assert [len(p) for p in preds] == [len(x) for x in X[:3]]
    assert 0 <= est.score(X[:20], y[:20]) <= 1
