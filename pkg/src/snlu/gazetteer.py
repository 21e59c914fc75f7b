"""Tiered gazetteer entity matching and entity-tag substitution.

Three matchers of decreasing strictness run at successive pipeline stages:
tier 1 exact, tier 2 fuzzy, tier 3 fuzzy plus prefix-partial ("fringe")
matches. Similarity is Levenshtein-based over space-joined token windows.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .editdist import edit_distance
from .errors import OverlapError
from .text import TokenizedQuery, tokenize, RawQuery


@dataclass(frozen=True)
class Tier:
    level: int
    threshold: float
    allow_partial: bool

    def __post_init__(self):
        if self.level not in (1, 2, 3):
            raise ValueError("tier level must be 1, 2, or 3")
        if self.allow_partial and self.level != 3:
            raise ValueError("partial matching is tier-3 only")
        if self.level == 1 and self.threshold != 1.0:
            raise ValueError("tier 1 is exact (threshold 1.0)")


def default_tiers(t2=0.85, t3=0.70):
    if not (1.0 >= t2 >= t3 >= 0.0):
        raise ValueError("thresholds must satisfy 1.0 >= tier2 >= tier3")
    return {1: Tier(1, 1.0, False), 2: Tier(2, t2, False), 3: Tier(3, t3, True)}


@dataclass(frozen=True)
class EntityMatch:
    start_tok: int
    end_tok: int  # half-open
    entity_type: str
    matched_phrase: str
    score: float
    tier: int


def is_tag_token(tok: str) -> bool:
    return len(tok) > 2 and tok[0] == "<" and tok[-1] == ">"


def similarity(candidate, phrase) -> float:
    """1 - edit_distance/max_len over space-joined token sequences."""
    a = " ".join(candidate)
    b = " ".join(phrase)
    if a == b:
        return 1.0
    return 1.0 - edit_distance(a, b) / max(len(a), len(b))


class Gazetteer:
    """Per-type phrase dictionary plus NER-2 category clubbing groups.

    groups maps category id -> frozenset of entity types enabled when that
    category has been predicted.
    """

    def __init__(self, entries: dict, groups: dict | None = None):
        self.entries = {t: {tuple(p) for p in phrases} for t, phrases in entries.items()}
        for t, phrases in self.entries.items():
            for p in phrases:
                if not p or any(not tok for tok in p):
                    raise ValueError(f"empty phrase under type {t!r}")
        self.groups = {int(c): frozenset(g) for c, g in (groups or {}).items()}
        self._build_index()

    def _build_index(self):
        self.max_phrase_tokens = max(
            (len(p) for ps in self.entries.values() for p in ps), default=0)
        # exact lookup: window string -> [(type, canonical phrase string)]
        self._exact = defaultdict(list)
        # per type: char length -> [(phrase string, canonical)] for full
        # phrases and for proper prefixes (tier-3 fringe matching)
        by_len = {}
        prefix_by_len = {}
        alphabet = set()
        for typ in sorted(self.entries):
            full = defaultdict(list)
            pref = defaultdict(list)
            for p in sorted(self.entries[typ]):
                s = " ".join(p)
                alphabet.update(s)
                self._exact[s].append((typ, s))
                full[len(s)].append((s, s))
                for k in range(1, len(p)):
                    ps = " ".join(p[:k])
                    pref[len(ps)].append((ps, s))
            by_len[typ] = full
            prefix_by_len[typ] = pref
        # character-count vectors give a cheap lower bound on edit distance
        # (an edit op changes at most two counts), used to prune fuzzy scans
        self._char_idx = {c: i for i, c in enumerate(sorted(alphabet))}
        self._n_chars = len(self._char_idx) + 1  # last slot: unseen chars
        self._by_len = {t: {lb: self._bucket(v) for lb, v in d.items()}
                        for t, d in by_len.items()}
        self._prefix_by_len = {t: {lb: self._bucket(v) for lb, v in d.items()}
                               for t, d in prefix_by_len.items()}

    def _bucket(self, pairs):
        counts = np.zeros((len(pairs), self._n_chars), dtype=np.int16)
        for i, (s, _) in enumerate(pairs):
            counts[i] = self.char_counts(s)
        return pairs, counts

    def char_counts(self, s: str) -> np.ndarray:
        vec = np.zeros(self._n_chars, dtype=np.int16)
        idx = self._char_idx
        other = self._n_chars - 1
        for ch in s:
            vec[idx.get(ch, other)] += 1
        return vec

    @property
    def entity_types(self):
        return sorted(self.entries)

    def types_for_category(self, category: int):
        return self.groups.get(category, frozenset(self.entries))

    @classmethod
    def load_tsv(cls, path, groups=None):
        entries = defaultdict(set)
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                phrase, _, typ = line.partition("\t")
                if not typ:
                    raise ValueError(f"bad gazetteer line: {line!r}")
                toks = tokenize(RawQuery(phrase)).tokens
                entries[typ].add(toks)
        return cls(entries, groups)

    def to_dict(self):
        return {
            "entries": {t: sorted(" ".join(p) for p in ps)
                        for t, ps in sorted(self.entries.items())},
            "groups": {str(c): sorted(g) for c, g in sorted(self.groups.items())},
        }

    @classmethod
    def from_dict(cls, d):
        entries = {t: {tuple(s.split(" ")) for s in ps} for t, ps in d["entries"].items()}
        return cls(entries, d.get("groups"))


def _fuzzy_hits(win_str, wvec, buckets, threshold, tier_level):
    """Yield (score, canonical) for bucket phrases within threshold."""
    la = len(win_str)
    # the epsilon keeps exact-boundary candidates (e.g. 0.2 * 5 rounding just
    # below 1) inside the pruning bounds; the score test below is the arbiter
    lo = math.ceil(threshold * la - 1e-9)
    hi = (math.floor(la / threshold + 1e-9) if threshold > 0
          else max(buckets, default=0))
    dist = edit_distance
    for lb in range(lo, hi + 1):
        bucket = buckets.get(lb)
        if not bucket:
            continue
        pairs, counts = bucket
        m = la if la >= lb else lb
        cap = math.floor((1.0 - threshold) * m + 1e-9)
        inv = 1.0 / m
        # ceil(L1/2) lower-bounds the edit distance; prune before the DP
        keep = np.nonzero(np.abs(counts - wvec).sum(axis=1) <= 2 * cap)[0]
        for k in keep:
            s, canonical = pairs[k]
            d = dist(win_str, s, cap)
            if d <= cap:
                score = 1.0 - d * inv
                if score >= threshold:
                    yield score, canonical


def candidate_matches(q: TokenizedQuery, g: Gazetteer, tier: Tier,
                      enabled_types=None, skip_spans=()):
    """All per-(span, type) best matches before overlap resolution.

    skip_spans: token spans that must not intersect any window (used by the
    pipeline to leave already-tagged regions alone when substitution is off).
    """
    if enabled_types is None:
        enabled_types = set(g.entries)
    enabled = sorted(set(enabled_types) & set(g.entries))
    enabled_set = set(enabled)
    n = len(q.tokens)
    max_len = min(g.max_phrase_tokens + 1, n)
    best = {}  # (start, end, type) -> (score, phrase)

    def consider(span, typ, score, phrase):
        key = (span[0], span[1], typ)
        cur = best.get(key)
        if cur is None or (score, ) > (cur[0], ) or (score == cur[0] and phrase < cur[1]):
            best[key] = (score, phrase)

    for i in range(n):
        if is_tag_token(q.tokens[i]):
            continue
        for j in range(i + 1, min(i + max_len, n) + 1):
            if is_tag_token(q.tokens[j - 1]):
                break
            if any(i < e and s < j for s, e in skip_spans):
                continue
            win = q.tokens[i:j]
            win_str = " ".join(win)
            if tier.level == 1:
                for typ, canonical in g._exact.get(win_str, ()):
                    if typ in enabled_set:
                        consider((i, j), typ, 1.0, canonical)
                continue
            wvec = g.char_counts(win_str)
            for typ in enabled:
                for score, canonical in _fuzzy_hits(
                        win_str, wvec, g._by_len[typ], tier.threshold, tier.level):
                    consider((i, j), typ, score, canonical)
                if tier.allow_partial:
                    for score, canonical in _fuzzy_hits(
                            win_str, wvec, g._prefix_by_len[typ], tier.threshold,
                            tier.level):
                        consider((i, j), typ, score, canonical)
    return [EntityMatch(s, e, t, ph, sc, tier.level)
            for (s, e, t), (sc, ph) in sorted(best.items())]


def resolve_overlaps(candidates):
    """Greedy by (score desc, span length desc, leftmost, type name)."""
    order = sorted(candidates,
                   key=lambda m: (-m.score, -(m.end_tok - m.start_tok),
                                  m.start_tok, m.entity_type))
    chosen = []
    for m in order:
        if all(m.end_tok <= c.start_tok or c.end_tok <= m.start_tok for c in chosen):
            chosen.append(m)
    chosen.sort(key=lambda m: m.start_tok)
    return chosen


def match_entities(q, g, tier, enabled_types=None, skip_spans=()):
    return resolve_overlaps(candidate_matches(q, g, tier, enabled_types, skip_spans))


@dataclass(frozen=True)
class Substitution:
    char_start: int
    char_end: int
    entity_type: str
    surface: str
    score: float
    tier: int


def substitute_tags(q: TokenizedQuery, matches):
    """Replace each matched token span with a single ``<type>`` tag token.

    Returns (new query, substitution records). The tag token's offset covers
    the full matched character range.
    """
    ms = sorted(matches, key=lambda m: m.start_tok)
    for a, b in zip(ms, ms[1:]):
        if b.start_tok < a.end_tok:
            raise OverlapError(f"overlapping matches at tokens {a.start_tok}, {b.start_tok}")
    tokens, offsets, subs = [], [], []
    pos = 0
    for m in ms:
        tokens.extend(q.tokens[pos:m.start_tok])
        offsets.extend(q.offsets[pos:m.start_tok])
        cs = q.offsets[m.start_tok][0]
        ce = q.offsets[m.end_tok - 1][1]
        tokens.append(f"<{m.entity_type}>")
        offsets.append((cs, ce))
        subs.append(Substitution(cs, ce, m.entity_type, q.raw[cs:ce], m.score, m.tier))
        pos = m.end_tok
    tokens.extend(q.tokens[pos:])
    offsets.extend(q.offsets[pos:])
    return TokenizedQuery(q.raw, tuple(tokens), tuple(offsets)), subs
