"""Keyword/phrase rules that short-circuit subcategory prediction."""
from __future__ import annotations

import json
from dataclasses import dataclass

NO_MATCH = None


@dataclass(frozen=True)
class Rule:
    subcategory: int
    applies_to_category: int
    kind: str  # "keyword" | "phrase"
    pattern: tuple  # token sequence; single token for keyword rules
    priority: int

    def __post_init__(self):
        if self.kind not in ("keyword", "phrase"):
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if not self.pattern:
            raise ValueError("empty rule pattern")
        if self.kind == "keyword" and len(self.pattern) != 1:
            raise ValueError("keyword rules take a single-token pattern")


def load_rules(path, taxonomy):
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    rules = []
    for r in raw:
        cat = taxonomy.category_id(r["category"])
        sub = taxonomy.subcategory_id(r["subcategory"])
        if taxonomy.cat_of_sub[sub] != cat:
            raise ValueError(f"rule subcategory {r['subcategory']!r} not under "
                             f"{r['category']!r}")
        rules.append(Rule(sub, cat, r["kind"], tuple(r["pattern"].split()),
                          int(r.get("priority", 0))))
    return rules


def rules_to_json(rules, taxonomy):
    return [{"category": taxonomy.category_names[r.applies_to_category],
             "subcategory": taxonomy.subcategory_names[r.subcategory],
             "kind": r.kind, "pattern": " ".join(r.pattern),
             "priority": r.priority} for r in rules]


def _fires(rule: Rule, tokens) -> bool:
    if rule.kind == "keyword":
        return rule.pattern[0] in tokens
    n = len(rule.pattern)
    return any(tuple(tokens[i:i + n]) == rule.pattern
               for i in range(len(tokens) - n + 1))


def apply_rules(tokens, category: int, rules):
    """Highest-priority firing rule's subcategory (ties: lowest rule index),
    or NO_MATCH. Consults post-NER-2 tokens only."""
    best = None
    for idx, r in enumerate(rules):
        if r.applies_to_category != category:
            continue
        if _fires(r, tokens):
            key = (-r.priority, idx)
            if best is None or key < best[0]:
                best = (key, r.subcategory)
    return NO_MATCH if best is None else best[1]
