import math
import random
import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snlu.editdist import edit_distance
from snlu.errors import OverlapError
from snlu.gazetteer import (EntityMatch, Gazetteer, Tier, candidate_matches,
                            default_tiers, is_tag_token, match_entities,
                            resolve_overlaps, similarity, substitute_tags)
from snlu.text import RawQuery, tokenize
from oracles import similarity_oracle


def _gaz(entries, groups=None):
    return Gazetteer({t: {tuple(p.split()) for p in ps}
                      for t, ps in entries.items()}, groups)


def _q(text):
    return tokenize(RawQuery(text))


TIERS = default_tiers()


class TestTierConfig:
    def test_tier1_must_be_exact(self):
        with pytest.raises(ValueError):
            Tier(1, 0.9, False)

    def test_partial_only_on_tier3(self):
        with pytest.raises(ValueError):
            Tier(2, 0.85, True)

    def test_threshold_ordering_enforced(self):
        with pytest.raises(ValueError):
            default_tiers(t2=0.6, t3=0.8)


class TestSimilarity:
    def test_identical(self):
        assert similarity(("jee", "main"), ("jee", "main")) == 1.0

    def test_known_value(self):
        # "delhi" vs "delho": 1 edit over 5 chars
        assert similarity(("delho",), ("delhi",)) == pytest.approx(0.8)

    def test_joined_with_spaces(self):
        # token boundary characters count toward the length
        a, b = ("jee", "main"), ("jee", "mains")
        assert similarity(a, b) == pytest.approx(1.0 - 1.0 / 9.0)


class TestExactTier:
    def test_single_and_multi_token(self):
        g = _gaz({"city": ["mumbai"], "exam": ["jee main"]})
        ms = match_entities(_q("jee main in mumbai"), g, TIERS[1])
        assert [(m.start_tok, m.end_tok, m.entity_type) for m in ms] == \
            [(0, 2, "exam"), (3, 4, "city")]
        assert all(m.score == 1.0 and m.tier == 1 for m in ms)

    def test_no_fuzzy_at_tier1(self):
        g = _gaz({"city": ["mumbai"]})
        assert match_entities(_q("college in mumbay"), g, TIERS[1]) == []

    def test_enabled_types_filter(self):
        g = _gaz({"city": ["pune"], "exam": ["cat"]})
        ms = match_entities(_q("cat coaching in pune"), g, TIERS[1], {"city"})
        assert [(m.entity_type) for m in ms] == ["city"]


class TestFuzzyTiers:
    def test_tier2_catches_typo(self):
        g = _gaz({"city": ["hyderabad"]})
        ms = match_entities(_q("jobs in hyderbad"), g, TIERS[2])
        assert len(ms) == 1
        m = ms[0]
        assert m.entity_type == "city" and m.matched_phrase == "hyderabad"
        assert m.score == pytest.approx(1.0 - 1.0 / 9.0)

    def test_threshold_is_inclusive(self):
        # distance 1 over 5 chars = 0.8 exactly
        g = _gaz({"city": ["delhi"]})
        tier = Tier(2, 0.8, False)
        ms = match_entities(_q("flats in delho"), g, tier)
        assert len(ms) == 1 and ms[0].score == pytest.approx(0.8)
        assert match_entities(_q("flats in delho"), g, Tier(2, 0.81, False)) == []

    def test_tier3_prefix_partial(self):
        # a truncated mention matches a proper prefix of the full phrase
        g = _gaz({"college": ["national institute of design"]})
        q = _q("admission at national institute")
        assert match_entities(q, g, TIERS[2]) == []
        ms = match_entities(q, g, TIERS[3])
        assert len(ms) == 1
        assert ms[0].matched_phrase == "national institute of design"
        assert ms[0].tier == 3

    def test_tag_tokens_never_rematched(self):
        g = _gaz({"city": ["mumbai"]})
        q = _q("college near mumbai")
        q2, _ = substitute_tags(q, match_entities(q, g, TIERS[1]))
        assert "<city>" in q2.tokens
        assert match_entities(q2, g, TIERS[2]) == []

    def test_skip_spans_block_windows(self):
        g = _gaz({"city": ["mumbai"]})
        q = _q("college near mumbai")
        assert match_entities(q, g, TIERS[2], skip_spans=[(2, 3)]) == []


class TestPrefilterExactness:
    def test_prefilter_never_drops_a_match(self):
        """The char-count prune must be invisible: every (window, phrase)
        pair within threshold found by brute force must also be returned."""
        rng = random.Random(11)
        chars = string.ascii_lowercase[:9]

        def word():
            return "".join(rng.choice(chars) for _ in range(rng.randrange(3, 9)))

        for _ in range(30):
            phrases = [" ".join(word() for _ in range(rng.randrange(1, 3)))
                       for _ in range(15)]
            g = _gaz({"x": phrases})
            query = " ".join(word() for _ in range(rng.randrange(2, 6)))
            q = _q(query)
            for tier in (TIERS[2], TIERS[3]):
                got = {(m.start_tok, m.end_tok, m.matched_phrase, m.score)
                       for m in candidate_matches(q, g, tier)}
                want = set()
                n = len(q.tokens)
                targets = [(p, p) for p in phrases]
                if tier.allow_partial:
                    for p in phrases:
                        toks = p.split()
                        for k in range(1, len(toks)):
                            targets.append((" ".join(toks[:k]), p))
                for i in range(n):
                    for j in range(i + 1, n + 1):
                        win = " ".join(q.tokens[i:j])
                        best = None
                        for target, canonical in targets:
                            m = max(len(win), len(target))
                            score = 1.0 if win == target else \
                                1.0 - edit_distance(win, target) / m
                            if score >= tier.threshold:
                                cand = (score, canonical)
                                if best is None or cand[0] > best[0] or \
                                        (cand[0] == best[0] and cand[1] < best[1]):
                                    best = cand
                        if best:
                            want.add((i, j, best[1], best[0]))
                assert got == want


class TestMonotonicity:
    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_candidates_nest_across_tiers(self, data):
        chars = "abcdef"
        word = st.text(alphabet=chars, min_size=2, max_size=7)
        phrases = data.draw(st.lists(st.lists(word, min_size=1, max_size=2),
                                     min_size=1, max_size=6))
        tokens = data.draw(st.lists(word, min_size=1, max_size=6))
        g = Gazetteer({"x": {tuple(p) for p in phrases}})
        q = _q(" ".join(tokens))
        keys = {}
        for level in (1, 2, 3):
            keys[level] = {(m.start_tok, m.end_tok, m.entity_type)
                           for m in candidate_matches(q, g, TIERS[level])}
        assert keys[1] <= keys[2] <= keys[3]


class TestOverlapResolution:
    def test_score_wins(self):
        a = EntityMatch(0, 2, "city", "a b", 0.9, 2)
        b = EntityMatch(1, 3, "exam", "b c", 0.95, 2)
        assert resolve_overlaps([a, b]) == [b]

    def test_longer_wins_on_tied_score(self):
        a = EntityMatch(0, 1, "city", "a", 1.0, 1)
        b = EntityMatch(0, 3, "exam", "a b c", 1.0, 1)
        assert resolve_overlaps([a, b]) == [b]

    def test_leftmost_then_type_on_full_ties(self):
        a = EntityMatch(1, 2, "city", "x", 1.0, 1)
        b = EntityMatch(0, 1, "exam", "y", 1.0, 1)
        assert resolve_overlaps([a, b]) == [b, a]
        c = EntityMatch(0, 1, "city", "y", 1.0, 1)
        d = EntityMatch(0, 1, "exam", "y", 1.0, 1)
        assert resolve_overlaps([c, d]) == [c]

    def test_non_overlapping_all_kept_in_order(self):
        ms = [EntityMatch(3, 4, "city", "d", 0.8, 2),
              EntityMatch(0, 2, "exam", "a b", 0.9, 2)]
        assert [m.start_tok for m in resolve_overlaps(ms)] == [0, 3]


class TestSubstitution:
    def test_tags_replace_spans_and_keep_offsets(self):
        g = _gaz({"city": ["navi mumbai"], "degree": ["b tech"]})
        raw = "B Tech colleges near Navi Mumbai"
        q = _q(raw)
        q2, subs = substitute_tags(q, match_entities(q, g, TIERS[1]))
        assert q2.tokens == ("<degree>", "colleges", "near", "<city>")
        assert [s.surface for s in subs] == ["B Tech", "Navi Mumbai"]
        assert [raw[s.char_start:s.char_end] for s in subs] == \
            ["B Tech", "Navi Mumbai"]

    def test_overlapping_matches_rejected(self):
        q = _q("a b c")
        ms = [EntityMatch(0, 2, "city", "a b", 1.0, 1),
              EntityMatch(1, 3, "exam", "b c", 1.0, 1)]
        with pytest.raises(OverlapError):
            substitute_tags(q, ms)

    def test_no_matches_is_identity(self):
        q = _q("hello world")
        q2, subs = substitute_tags(q, [])
        assert q2 == q and subs == []


class TestSerialization:
    def test_roundtrip(self):
        g = _gaz({"city": ["pune", "navi mumbai"], "exam": ["jee main"]},
                 {0: {"city"}, 1: {"city", "exam"}})
        g2 = Gazetteer.from_dict(g.to_dict())
        assert g2.entries == g.entries
        assert g2.groups == g.groups

    def test_load_tsv(self, tmp_path):
        p = tmp_path / "gaz.tsv"
        p.write_text("# comment\nNavi Mumbai\tcity\njee main\texam\n",
                     encoding="utf-8")
        g = Gazetteer.load_tsv(p)
        assert ("navi", "mumbai") in g.entries["city"]
        assert ("jee", "main") in g.entries["exam"]

    def test_rejects_empty_phrase(self):
        with pytest.raises(ValueError):
            Gazetteer({"city": {()}})

    def test_groups_default_to_all_types(self):
        g = _gaz({"city": ["pune"], "exam": ["cat"]})
        assert g.types_for_category(5) == frozenset({"city", "exam"})


@given(st.sampled_from(["<city>", "<a>", "x", "<>", "<city", "city>"]))
def test_is_tag_token(tok):
    assert is_tag_token(tok) == (len(tok) > 2 and tok[0] == "<" and tok[-1] == ">")


def test_similarity_against_oracle_sample():
    rng = random.Random(5)
    chars = string.ascii_lowercase[:8]
    for _ in range(500):
        a = tuple("".join(rng.choice(chars) for _ in range(rng.randrange(1, 7)))
                  for _ in range(rng.randrange(1, 3)))
        b = tuple("".join(rng.choice(chars) for _ in range(rng.randrange(1, 7)))
                  for _ in range(rng.randrange(1, 3)))
        assert similarity(a, b) == pytest.approx(similarity_oracle(a, b), abs=1e-12)
