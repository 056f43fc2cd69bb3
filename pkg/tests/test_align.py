import numpy as np
import pytest
from hypothesis import given, strategies as st

from weaknorm.align import (IGNORE, MARKER, SPECIALS, Vocabulary, align_pair, detokenize,
                            insert_masks, n_mask_labels, tile_spans, train_subword_vocab)
from weaknorm.exceptions import DanglingContinuation, MaskOverflow, TargetTooSmall
from weaknorm.text_prep import WordPair

CA_PAIR = WordPair(("ca", "màk", "hay", "z", "qá"), ("công an", "mà", "hay", "vậy", "quá"))


def test_alignment_with_split_units(split_vocab):
    ex = align_pair(CA_PAIR, split_vocab)
    assert split_vocab.units(ex.source_ids) == ["▁ca", "<mask>", "▁mà", "k", "▁hay", "▁z", "▁q", "á"]
    assert split_vocab.units(ex.target_ids) == ["▁công", "▁an", "▁mà", "<space>", "▁hay", "▁vậy",
                                                 "▁quá", "<space>"]
    assert ex.word_spans == [(0, 2), (2, 4), (4, 5), (5, 6), (6, 8)]
    assert detokenize(ex.target_ids, split_vocab) == ["công", "an", "mà", "hay", "vậy", "quá"]


def test_mask_labels_with_extra_unit(split_vocab):
    vocab = Vocabulary(split_vocab.id_to_unit + ["▁qá"])
    ex = align_pair(CA_PAIR, vocab)
    assert vocab.units(ex.source_ids)[-1] == "▁qá"
    assert ex.n_mask.tolist() == [1, IGNORE, 0, 0, 0, 0, 0]


def test_detokenize_examples(split_vocab):
    v = split_vocab
    ids = [v.unit_to_id[u] for u in ("▁công", "▁an", "▁mà", "<space>")]
    assert detokenize(ids, v) == ["công", "an", "mà"]
    assert detokenize([], v) == []
    with pytest.raises(DanglingContinuation):
        detokenize([v.unit_to_id["k"]], v)
    assert detokenize([v.unit_to_id["k"]], v, strict=False) == ["k"]


def test_tokenize_unseen_split(split_vocab):
    v = split_vocab
    assert v.units(v.tokenize_word("qá")) == ["▁q", "á"]
    assert v.units(v.tokenize_word("z")) == ["▁z"]
    assert v.tokenize_word("ж") == [v.unk_id]


def test_vocab_small_example():
    # alphabet has word-initial and continuation forms: 8 units + 4 specials + 2 merges
    vocab = train_subword_vocab([["ab"], ["ab"], ["cd"]], 14)
    assert "▁ab" in vocab.unit_to_id and "▁cd" in vocab.unit_to_id
    assert {"▁a", "b", "▁c", "d"} <= set(vocab.id_to_unit)
    char_level = train_subword_vocab([["ab"], ["ab"], ["cd"]], 12)
    assert len(char_level) == 12 and all(len(u.lstrip(MARKER)) == 1 for u in char_level.id_to_unit[4:])
    with pytest.raises(TargetTooSmall):
        train_subword_vocab([["ab"]], 5)


def test_vocab_deterministic_and_persistent(small_corpus, tmp_path):
    targets = [p.target_words for p in small_corpus]
    a = train_subword_vocab(targets, 500)
    b = train_subword_vocab(targets, 500)
    assert a.id_to_unit == b.id_to_unit
    a.save(tmp_path / "v.json")
    c = Vocabulary.load(tmp_path / "v.json")
    assert c.fingerprint() == a.fingerprint()
    assert tuple(c.id_to_unit[:4]) == SPECIALS


def test_mask_overflow(split_vocab):
    with pytest.raises(MaskOverflow):
        align_pair(WordPair(("z",), ("công an vậy quá mà",)), split_vocab, max_n_mask=3)


def test_three_masks_for_three_extra(split_vocab):
    ex = align_pair(WordPair(("z",), ("công an vậy quá",)), split_vocab)
    assert split_vocab.units(ex.source_ids) == ["▁z", "<mask>", "<mask>", "<mask>"]
    assert ex.n_mask.tolist() == [3, IGNORE, IGNORE, IGNORE]


def test_identity_pair_has_no_padding(small_corpus, small_vocab):
    pair = WordPair(small_corpus[0].target_words, small_corpus[0].target_words)
    ex = align_pair(pair, small_vocab)
    assert (ex.source_ids == ex.target_ids).all() and (ex.n_mask == 0).all()


def test_tile_spans():
    assert tile_spans([2, 1, 3]) == [(0, 2), (2, 3), (3, 6)]


@given(st.lists(st.integers(0, 3), min_size=1, max_size=20))
def test_insert_masks_inverts_labels(counts):
    vocab = Vocabulary(list(SPECIALS) + ["▁a"])
    ids = [4] * len(counts)
    full = insert_masks(ids, counts, vocab)
    labels = n_mask_labels(full, vocab)
    keep = labels != IGNORE
    assert full[keep].tolist() == ids and labels[keep].tolist() == counts


def test_alignment_invariants_on_corpus(small_corpus, small_vocab):
    for pair in small_corpus:
        ex = align_pair(pair, small_vocab)
        assert len(ex.source_ids) == len(ex.target_ids) == len(ex.n_mask)
        assert ex.word_spans[0][0] == 0 and ex.word_spans[-1][1] == len(ex.source_ids)
        assert all(a[1] == b[0] for a, b in zip(ex.word_spans, ex.word_spans[1:]))
        assert " ".join(detokenize(ex.target_ids, small_vocab)) == " ".join(pair.target_words)
        src, cnt = ex.unmasked_source
        assert np.array_equal(insert_masks(src, cnt, small_vocab), ex.source_ids)
