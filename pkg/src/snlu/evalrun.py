"""Experiment runners: bundle evaluation, bias sweep, ablation table."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import model as md
from .metrics import IntentMetrics, SlotMetrics, intent_metrics, slot_chunk_f1
from .pipeline import Bundle, PipelineConfig, preprocess_example, run, train_pipeline
from .text import split_dataset


def evaluate_bundle(bundle: Bundle, examples):
    """End-to-end intent and slot metrics over labeled examples."""
    pred_subs, gold_subs = [], []
    pred_slots, gold_slots = [], []
    cat_correct = 0
    for ex in examples:
        out = run(bundle, ex.raw)
        pred_subs.append(out.subcategory)
        gold_subs.append(ex.subcategory)
        pred_slots.append([(s.char_start, s.char_end, s.entity_type)
                           for s in out.slots])
        gold_slots.append(list(ex.entities))
        cat_correct += int(out.category == ex.category)
    im = intent_metrics(pred_subs, gold_subs)
    sm = slot_chunk_f1(pred_slots, gold_slots)
    return im, sm, cat_correct / len(examples)


def metrics_row(variant: str, im: IntentMetrics, sm: SlotMetrics) -> dict:
    return {"variant": variant, "int_p": im.precision, "int_r": im.recall,
            "int_f1": im.f1, "int_acc": im.accuracy, "slot_p": sm.precision,
            "slot_r": sm.recall, "slot_f1": sm.f1}


def bias_sweep(cfg: PipelineConfig, dataset, gaz, rules, bias_values, seeds,
               log=None):
    """Train the subcategory path per (bias, seed), sharing the category
    model within each seed. Returns rows [{bias, seed, accuracy}]."""
    for b in bias_values:
        if not 0.0 <= b < 1.0:
            raise ValueError("bias values must be in [0, 1)")
    rows = []
    for seed in seeds:
        scfg = replace(cfg, seed=seed)
        train, val, test = split_dataset(dataset, seed)
        if scfg.limit is not None:
            train = train[:scfg.limit]
        tr_prep = [preprocess_example(ex, gaz, scfg) for ex in train]
        va_prep = [preprocess_example(ex, gaz, scfg) for ex in val]
        cat_model = md.train(
            md.category_config(**scfg.category_model),
            [(a, ex.category) for (a, _), ex in zip(tr_prep, train)],
            [(a, ex.category) for (a, _), ex in zip(va_prep, val)],
            seed)
        sub_val = [((md.indicator_token(ex.category),) + tuple(c), ex.subcategory)
                   for (_, c), ex in zip(va_prep, val)]
        for bias in bias_values:
            if log:
                log(f"bias sweep: seed={seed} bias={bias}")
            sub_train = md.inject_bias(
                cat_model,
                [(a, c, ex.category, ex.subcategory)
                 for (a, c), ex in zip(tr_prep, train)],
                bias, seed)
            sub_model = md.train(md.subcategory_config(**scfg.subcategory_model),
                                 sub_train, sub_val, seed)
            bundle = Bundle(replace(scfg, bias_pct=bias), dataset.taxonomy,
                            gaz, rules, cat_model, sub_model)
            im, _, _ = evaluate_bundle(bundle, test)
            rows.append({"bias": bias, "seed": seed, "accuracy": im.accuracy})
    return rows


def sweep_summary(rows):
    """bias -> (mean accuracy, sd) over seeds."""
    out = {}
    for bias in sorted({r["bias"] for r in rows}):
        accs = [r["accuracy"] for r in rows if r["bias"] == bias]
        out[bias] = (float(np.mean(accs)), float(np.std(accs)))
    return out


ABLATION_VARIANTS = ("no_tiered_ner", "no_tag_substitution", "final")


def ablation_config(cfg: PipelineConfig, variant: str) -> PipelineConfig:
    if variant == "no_tiered_ner":
        return replace(cfg, use_tiered_ner=False)
    if variant == "no_tag_substitution":
        return replace(cfg, use_tag_substitution=False)
    if variant == "final":
        return replace(cfg)
    raise ValueError(f"unknown variant {variant!r}")


def ablation_run(cfg: PipelineConfig, dataset, gaz, rules, seeds, log=None):
    """Train and evaluate the three self-ablation variants on shared seeds
    and splits. Returns per-(variant, seed) metric rows."""
    rows = []
    for variant in ABLATION_VARIANTS:
        for seed in seeds:
            if log:
                log(f"ablation: variant={variant} seed={seed}")
            vcfg = replace(ablation_config(cfg, variant), seed=seed)
            bundle = train_pipeline(vcfg, dataset, gaz, rules, log=log)
            _, _, test = split_dataset(dataset, seed)
            im, sm, _ = evaluate_bundle(bundle, test)
            row = metrics_row(variant, im, sm)
            row["seed"] = seed
            rows.append(row)
    return rows


def ablation_medians(rows):
    """variant -> metric medians over seeds."""
    out = {}
    for variant in ABLATION_VARIANTS:
        vrows = [r for r in rows if r["variant"] == variant]
        if not vrows:
            continue
        out[variant] = {k: float(np.median([r[k] for r in vrows]))
                        for k in vrows[0] if k not in ("variant", "seed")}
    return out
