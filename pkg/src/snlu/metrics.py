"""Intent and slot metrics plus the one-sided significance test."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InsufficientSamples, LengthMismatch


@dataclass(frozen=True)
class IntentMetrics:
    per_class: dict  # class -> (precision, recall, f1)
    precision: float  # macro
    recall: float
    f1: float
    accuracy: float


@dataclass(frozen=True)
class SlotMetrics:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


def _f1(p, r):
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def intent_metrics(pred, gold) -> IntentMetrics:
    """Macro-averaged over the classes present in gold; a class with zero
    predicted positives gets precision 0."""
    if len(pred) != len(gold):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(gold)} gold")
    if not gold:
        raise LengthMismatch("empty inputs")
    classes = sorted(set(gold))
    tp, fp, fn = Counter(), Counter(), Counter()
    correct = 0
    for p, g in zip(pred, gold):
        if p == g:
            tp[g] += 1
            correct += 1
        else:
            fp[p] += 1
            fn[g] += 1
    per_class = {}
    for c in classes:
        prec = tp[c] / (tp[c] + fp[c]) if tp[c] + fp[c] else 0.0
        rec = tp[c] / (tp[c] + fn[c]) if tp[c] + fn[c] else 0.0
        per_class[c] = (prec, rec, _f1(prec, rec))
    macro = [sum(v[i] for v in per_class.values()) / len(classes) for i in range(3)]
    return IntentMetrics(per_class, macro[0], macro[1], macro[2], correct / len(gold))


def slot_chunk_f1(pred_slots, gold_slots) -> SlotMetrics:
    """Chunk-level slot metrics, micro-aggregated over queries.

    pred_slots/gold_slots: per-query lists of (start, end, type) triples; a
    prediction is a true positive iff it exactly equals a gold triple.
    """
    if len(pred_slots) != len(gold_slots):
        raise LengthMismatch("per-query slot lists differ in length")
    tp = fp = fn = 0
    for pred, gold in zip(pred_slots, gold_slots):
        p = Counter((s, e, t) for s, e, t in pred)
        g = Counter((s, e, t) for s, e, t in gold)
        inter = sum((p & g).values())
        tp += inter
        fp += sum(p.values()) - inter
        fn += sum(g.values()) - inter
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    return SlotMetrics(prec, rec, _f1(prec, rec), tp, fp, fn)


def significance(samples_a, samples_b) -> float:
    """One-sided Welch t-test p-value for H1: mean(A) > mean(B)."""
    if len(samples_a) < 3 or len(samples_b) < 3:
        raise InsufficientSamples("need >= 3 samples per side")
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    va, vb = a.var(ddof=1), b.var(ddof=1)
    diff = a.mean() - b.mean()
    se2 = va / len(a) + vb / len(b)
    if se2 == 0.0:
        return 0.5 if diff == 0 else (0.0 if diff > 0 else 1.0)
    t = diff / np.sqrt(se2)
    df = se2 ** 2 / ((va / len(a)) ** 2 / (len(a) - 1) + (vb / len(b)) ** 2 / (len(b) - 1))
    return float(stats.t.sf(t, df))
