import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weaknorm.align import align_pair
from weaknorm.exceptions import InvalidPattern, SpanOverflow
from weaknorm.rules import (ABSTAIN, ABSTAIN_ID, RULE_DICT, RULE_REGEX, DictionaryRule, RegexRule,
                            WeakPrediction, apply_dictionary, apply_regex, build_default_dictionary,
                            expand_to_subwords, one_hot, precompute_rule_columns,
                            predictions_from_column)
from weaknorm.text_prep import WordPair


@pytest.fixture
def dictionary(lexicon):
    return DictionaryRule({"ko": "không", "thoai": "thôi", "cty": "công ty", "kt": "kinh tế"}, lexicon)


def test_dictionary_examples(dictionary):
    preds = apply_dictionary(["ko", "đi", "thoai"], dictionary)
    assert [p.prediction for p in preds] == ["không", ABSTAIN, "thôi"]
    assert all(p.rule_id == RULE_DICT for p in preds)
    assert preds[1].abstained


def test_dictionary_drops_multiword(caplog, lexicon):
    with caplog.at_level(logging.WARNING):
        rule = DictionaryRule({"kt": "kinh tế", "a b": "c", "ok": "ok"}, lexicon)
    assert len(rule) == 0
    assert "kt" in caplog.text
    assert DictionaryRule({"cty": "công ty"}, lexicon).predict_word("cty") == "công ty"


def test_dictionary_save_load(dictionary, tmp_path, lexicon):
    dictionary.save(tmp_path / "d.json")
    assert DictionaryRule.load(tmp_path / "d.json", lexicon).entries == dictionary.entries


def test_regex_examples():
    rule = RegexRule.default()
    out = apply_regex(["đẹppp", "hay", "vuiiii", "aaa", "2222", ":)))"], rule)
    assert [p.prediction for p in out] == ["đẹp", ABSTAIN, "vui", "a", ABSTAIN, ABSTAIN]
    assert out[0].rule_id == RULE_REGEX


def test_regex_validation(tmp_path):
    with pytest.raises(InvalidPattern):
        RegexRule([("(a", "b")])
    with pytest.raises(InvalidPattern):
        RegexRule([("(a)", r"\2")])
    path = tmp_path / "r.json"
    path.write_text('[{"pattern": "x+", "replacement": "x"}]', encoding="utf-8")
    assert RegexRule.load(path).predict_word("xxx") == "x"


@given(st.text(alphabet="abcđêô", min_size=1, max_size=8))
def test_rules_deterministic_and_idempotent(word):
    rule = RegexRule.default()
    first = rule.predict_word(word)
    assert first == rule.predict_word(word)
    if first is not ABSTAIN:
        # a collapsed word never collapses further
        assert rule.predict_word(first) is ABSTAIN


def test_weak_prediction_rejects_unknown_rule():
    with pytest.raises(ValueError):
        WeakPrediction(7, 0, "x")


def test_precompute_columns_example(lexicon):
    dictionary = DictionaryRule({"thoai": "thôi", "cty": "công ty"}, lexicon)
    rows = precompute_rule_columns([
        {"input": ["cứ", "ngây thơ", "thế", "thoai", ":))"]},
        {"input": ["đọc", "jd", "mà", "nó", "dễ", "quá", "đâm ra", "sợ", "cty", "lừa", ":)))"]},
        {"input": ["hay", "đi"]},
    ], RegexRule.default(), dictionary)
    assert rows[0]["dict_rule"] == ["cứ", "ngây thơ", "thế", "thôi", ":))"]
    assert rows[1]["dict_rule"][8] == "công ty"
    assert rows[1]["dict_rule"][:8] == rows[1]["input"][:8]
    assert rows[2]["dict_rule"] == rows[2]["regex_rule"] == rows[2]["input"]


def test_expand_to_subwords(split_vocab):
    v = split_vocab
    pair = WordPair(("ca", "qá"), ("công an", "quá"))
    ex = align_pair(pair, v)
    preds = [WeakPrediction(RULE_DICT, 0, ABSTAIN), WeakPrediction(RULE_DICT, 1, "quá")]
    labels = expand_to_subwords(preds, ex, v)
    assert labels.tolist() == [ABSTAIN_ID, ABSTAIN_ID, v.unit_to_id["▁quá"], v.space_id]
    hot = one_hot(labels, len(v))
    assert hot.sum(1).tolist() == [0, 0, 1, 1]
    identity = expand_to_subwords([WeakPrediction(RULE_DICT, 1, "qá")], ex, v)
    assert identity[2:].tolist() == ex.source_ids[2:].tolist()
    with pytest.raises(SpanOverflow):
        expand_to_subwords([WeakPrediction(RULE_DICT, 1, "công an vậy")], ex, v)
    skipped = expand_to_subwords([WeakPrediction(RULE_DICT, 1, "công an vậy")], ex, v,
                                 on_overflow="abstain")
    assert (skipped == ABSTAIN_ID).all()


def test_predictions_from_column():
    preds = predictions_from_column(["ko", "đi"], ["không", "đi"], RULE_DICT)
    assert [p.prediction for p in preds] == ["không", ABSTAIN]


def test_default_dictionary_coverage(lexicon):
    d = build_default_dictionary(lexicon, coverage=0.4, error_rate=0.1, seed=0)
    table = lexicon.nsw_table
    assert abs(len(d) - 0.4 * len(table)) <= 0.02 * len(table)
    wrong = sum(table[k] != v for k, v in d.entries.items())
    assert 0 < wrong < 0.25 * len(d)
    assert d.entries == build_default_dictionary(lexicon, seed=0).entries
