import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snlu.errors import EmptyQuery, ParseError, TaxonomyError
from snlu.text import (PAD, UNK, Dataset, LabeledExample, RawQuery, Taxonomy,
                       build_vocab, example_to_json, load_dataset,
                       split_dataset, tokenize)


def test_tokenize_lowercases_and_drops_punct():
    q = tokenize(RawQuery("Show me some Colleges, near Mumbai!"))
    assert q.tokens == ("show", "me", "some", "colleges", "near", "mumbai")


def test_tokenize_offsets_point_into_raw():
    raw = "B. Tech in Computer-Science"
    q = tokenize(RawQuery(raw))
    for tok, (s, e) in zip(q.tokens, q.offsets):
        assert raw[s:e].lower() == tok


@given(st.text(min_size=1, max_size=60))
@settings(max_examples=300)
def test_tokenize_offset_property(text):
    try:
        q = tokenize(RawQuery(text))
    except EmptyQuery:
        return
    prev_end = 0
    for tok, (s, e) in zip(q.tokens, q.offsets):
        assert prev_end <= s < e
        assert text[s:e].lower() == tok
        prev_end = e


def test_empty_and_oversized_queries_rejected():
    with pytest.raises(EmptyQuery):
        RawQuery("   ")
    with pytest.raises(EmptyQuery):
        RawQuery("x" * 600)
    with pytest.raises(EmptyQuery):
        tokenize(RawQuery("...!!!"))


def test_build_vocab_reserved_and_frequency_order():
    vocab = build_vocab([("b", "a", "b"), ("b", "c")])
    assert vocab[PAD] == 0 and vocab[UNK] == 1
    assert vocab["b"] == 2  # most frequent first
    assert vocab["a"] == 3 and vocab["c"] == 4  # tie broken alphabetically


def test_taxonomy_rejects_duplicate_subcategory():
    with pytest.raises(TaxonomyError):
        Taxonomy({"a": ["x"], "b": ["x"]}, [])


def test_taxonomy_roundtrip():
    t = Taxonomy({"a": ["x", "y"], "b": ["z"]}, ["city"])
    t2 = Taxonomy.from_dict(t.to_dict())
    assert t2.category_names == t.category_names
    assert t2.subcategory_names == t.subcategory_names
    assert t2.cat_of_sub == t.cat_of_sub


def _toy_dataset(n=40):
    tax = Taxonomy({"a": ["x", "y"], "b": ["z"]}, ["city"])
    examples = []
    for i in range(n):
        sub = i % 3
        examples.append(LabeledExample(RawQuery(f"query number {i}"),
                                       tax.cat_of_sub[sub], sub, ()))
    return Dataset(examples, tax)


def test_split_sizes_and_partition():
    ds = _toy_dataset(100)
    train, val, test = split_dataset(ds, seed=1)
    assert len(train) == 70 and len(val) == 15 and len(test) == 15
    texts = [ex.raw.text for ex in train + val + test]
    assert sorted(texts) == sorted(ex.raw.text for ex in ds.examples)
    assert len(set(texts)) == len(texts)


def test_split_deterministic_and_seed_sensitive():
    ds = _toy_dataset(100)
    a = split_dataset(ds, seed=3)
    b = split_dataset(ds, seed=3)
    c = split_dataset(ds, seed=4)
    assert [e.raw.text for e in a[0]] == [e.raw.text for e in b[0]]
    assert [e.raw.text for e in a[0]] != [e.raw.text for e in c[0]]


def test_split_stratification_keeps_classes_in_train():
    ds = _toy_dataset(60)
    for seed in range(5):
        train, _, _ = split_dataset(ds, seed)
        assert {ex.subcategory for ex in train} == {0, 1, 2}


def test_split_rejects_tiny_dataset():
    with pytest.raises(ValueError):
        split_dataset(_toy_dataset(10), 0)


def test_load_dataset_roundtrip(tmp_path):
    tax = Taxonomy({"a": ["x"], "b": ["z"]}, ["city"])
    ex = LabeledExample(RawQuery("jobs in Pune today"), 0, 0, ((8, 12, "city"),))
    p = tmp_path / "data.jsonl"
    p.write_text(example_to_json(ex, tax) + "\n", encoding="utf-8")
    ds = load_dataset(p, tax)
    assert len(ds) == 1
    got = ds.examples[0]
    assert got.raw.text == ex.raw.text
    assert got.entities == ex.entities
    assert "jobs" in ds.vocab


@pytest.mark.parametrize("line,msg", [
    ("{not json", "invalid JSON"),
    (json.dumps({"text": "hi", "category": "nope", "subcategory": "x"}), "unknown label"),
    (json.dumps({"text": "hi", "category": "b", "subcategory": "x"}), "not under"),
    (json.dumps({"text": "hi", "category": "a", "subcategory": "x",
                 "entities": [{"start": 0, "end": 99, "type": "city"}]}), "out of bounds"),
    (json.dumps({"text": "hello there", "category": "a", "subcategory": "x",
                 "entities": [{"start": 0, "end": 5, "type": "city"},
                              {"start": 3, "end": 8, "type": "city"}]}), "overlapping"),
])
def test_load_dataset_rejects_bad_lines(tmp_path, line, msg):
    tax = Taxonomy({"a": ["x"], "b": ["z"]}, ["city"])
    p = tmp_path / "bad.jsonl"
    p.write_text(line + "\n", encoding="utf-8")
    with pytest.raises(ParseError, match=msg):
        load_dataset(p, tax)
