"""Tokenization, dataset representation, loading, and splitting."""
from __future__ import annotations

import json
import math
import random
import string
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .errors import EmptyQuery, ParseError, TaxonomyError

MAX_QUERY_CHARS = 512
PAD, UNK = "<pad>", "<unk>"

_PUNCT = set(string.punctuation)


@dataclass(frozen=True)
class RawQuery:
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise EmptyQuery("query is empty")
        if len(self.text) > MAX_QUERY_CHARS:
            raise EmptyQuery(f"query exceeds {MAX_QUERY_CHARS} characters")


@dataclass(frozen=True)
class TokenizedQuery:
    """Lowercased tokens with half-open char offsets into the raw text.

    Tag tokens inserted by entity substitution (e.g. ``<city>``) keep the
    offsets of the span they replaced, so slices no longer equal the token
    for those positions.
    """

    raw: str
    tokens: tuple
    offsets: tuple  # of (start, end)


def tokenize(raw: RawQuery) -> TokenizedQuery:
    """Split on whitespace and punctuation; punctuation chars are dropped."""
    tokens, offsets = [], []
    start = None
    text = raw.text
    for i, ch in enumerate(text):
        if ch.isspace() or ch in _PUNCT:
            if start is not None:
                tokens.append(text[start:i].lower())
                offsets.append((start, i))
                start = None
        elif start is None:
            start = i
    if start is not None:
        tokens.append(text[start:].lower())
        offsets.append((start, len(text)))
    if not tokens:
        raise EmptyQuery("no tokens after normalization")
    return TokenizedQuery(text, tuple(tokens), tuple(offsets))


@dataclass(frozen=True)
class LabeledExample:
    raw: RawQuery
    category: int
    subcategory: int
    entities: tuple  # of (start_char, end_char, entity_type)


class Taxonomy:
    """Closed intent taxonomy: categories, their subcategories, entity types."""

    def __init__(self, categories: dict, entity_types: list):
        seen = {}
        self.category_names = list(categories)
        self.subcategory_names = []
        self.cat_of_sub = {}
        self.subs_of_cat = defaultdict(list)
        for ci, (cat, subs) in enumerate(categories.items()):
            for sub in subs:
                if sub in seen:
                    raise TaxonomyError(
                        f"subcategory {sub!r} under both {seen[sub]!r} and {cat!r}")
                seen[sub] = cat
                si = len(self.subcategory_names)
                self.subcategory_names.append(sub)
                self.cat_of_sub[si] = ci
                self.subs_of_cat[ci].append(si)
        self.entity_types = list(entity_types)
        self._cat_idx = {n: i for i, n in enumerate(self.category_names)}
        self._sub_idx = {n: i for i, n in enumerate(self.subcategory_names)}

    @property
    def n_categories(self):
        return len(self.category_names)

    @property
    def n_subcategories(self):
        return len(self.subcategory_names)

    def category_id(self, name):
        return self._cat_idx[name]

    def subcategory_id(self, name):
        return self._sub_idx[name]

    def to_dict(self):
        return {
            "categories": {c: [self.subcategory_names[s] for s in self.subs_of_cat[i]]
                           for i, c in enumerate(self.category_names)},
            "entity_types": self.entity_types,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["categories"], d["entity_types"])

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


@dataclass
class Dataset:
    examples: list
    taxonomy: Taxonomy
    vocab: dict = field(default_factory=dict)

    @property
    def entity_types(self):
        return self.taxonomy.entity_types

    def __len__(self):
        return len(self.examples)


def build_vocab(token_seqs) -> dict:
    """Frequency-ordered vocab with reserved PAD=0, UNK=1 indices."""
    counts = Counter()
    for seq in token_seqs:
        counts.update(seq)
    vocab = {PAD: 0, UNK: 1}
    for tok in sorted(counts, key=lambda t: (-counts[t], t)):
        vocab[tok] = len(vocab)
    return vocab


def _validate_example(obj, taxonomy, lineno):
    try:
        raw = RawQuery(obj["text"])
    except (EmptyQuery, KeyError, TypeError) as e:
        raise ParseError(lineno, f"bad text field: {e}")
    try:
        cat = taxonomy.category_id(obj["category"])
        sub = taxonomy.subcategory_id(obj["subcategory"])
    except KeyError as e:
        raise ParseError(lineno, f"unknown label {e}")
    if taxonomy.cat_of_sub[sub] != cat:
        raise ParseError(
            lineno, f"subcategory {obj['subcategory']!r} not under {obj['category']!r}")
    ents = []
    for e in obj.get("entities", []):
        s, t, typ = e["start"], e["end"], e["type"]
        if typ not in taxonomy.entity_types:
            raise ParseError(lineno, f"unknown entity type {typ!r}")
        if not (0 <= s < t <= len(raw.text)):
            raise ParseError(lineno, f"entity span ({s},{t}) out of bounds")
        ents.append((s, t, typ))
    ents.sort()
    for (s1, e1, _), (s2, _, _) in zip(ents, ents[1:]):
        if s2 < e1:
            raise ParseError(lineno, f"overlapping entity spans at {s1} and {s2}")
    return LabeledExample(raw, cat, sub, tuple(ents))


def load_dataset(path, taxonomy: Taxonomy) -> Dataset:
    """Load JSONL examples; vocab here covers the whole file (models rebuild
    their own vocabularies from the training split)."""
    examples = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(lineno, f"invalid JSON: {e}")
            examples.append(_validate_example(obj, taxonomy, lineno))
    vocab = build_vocab(tokenize(ex.raw).tokens for ex in examples)
    return Dataset(examples, taxonomy, vocab)


def example_to_json(ex: LabeledExample, taxonomy: Taxonomy) -> str:
    return json.dumps({
        "text": ex.raw.text,
        "category": taxonomy.category_names[ex.category],
        "subcategory": taxonomy.subcategory_names[ex.subcategory],
        "entities": [{"start": s, "end": e, "type": t} for s, e, t in ex.entities],
    }, ensure_ascii=False)


def split_dataset(dataset: Dataset, seed: int):
    """70/15/15 split, stratified by subcategory, deterministic per seed.

    Classes with >=2 members always place at least one example in train;
    singleton classes fall back to the uniform pool.
    """
    examples = dataset.examples
    n = len(examples)
    if n < 20:
        raise ValueError("dataset too small to split (need >= 20 examples)")
    n_train = math.floor(0.70 * n)
    n_val = math.floor(0.15 * n)

    rng = random.Random(seed)
    by_class = defaultdict(list)
    for i, ex in enumerate(examples):
        by_class[ex.subcategory].append(i)

    train, val, pool = [], [], []
    train_count = defaultdict(int)
    for sub in sorted(by_class):
        idxs = by_class[sub][:]
        rng.shuffle(idxs)
        if len(idxs) < 2:
            pool.extend(idxs)
            continue
        k = len(idxs)
        t = max(1, math.floor(0.70 * k))
        v = math.floor(0.15 * k)
        train.extend(idxs[:t])
        train_count[sub] = t
        val.extend(idxs[t:t + v])
        pool.extend(idxs[t + v:])
    rng.shuffle(pool)

    # Fix up exact sizes, never emptying a stratified class out of train.
    while len(train) > n_train:
        for j in range(len(train) - 1, -1, -1):
            sub = examples[train[j]].subcategory
            if train_count[sub] >= 2:
                train_count[sub] -= 1
                pool.append(train.pop(j))
                break
        else:
            pool.append(train.pop())
    while len(train) < n_train:
        train.append(pool.pop())
    while len(val) > n_val:
        pool.append(val.pop())
    while len(val) < n_val:
        val.append(pool.pop())
    test = pool

    return ([examples[i] for i in sorted(train)],
            [examples[i] for i in sorted(val)],
            [examples[i] for i in sorted(test)])
