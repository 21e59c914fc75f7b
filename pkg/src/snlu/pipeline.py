"""End-to-end staged pipeline: NER-1 -> category RNN -> NER-2 -> rules ->
subcategory RNN -> NER-3, plus training orchestration and persistence."""
from __future__ import annotations

import io
import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import model as md
from .errors import CorruptFileError, VersionError
from .gazetteer import (Gazetteer, Tier, default_tiers, match_entities,
                        substitute_tags)
from .rules import NO_MATCH, Rule, apply_rules, load_rules, rules_to_json
from .text import RawQuery, Taxonomy, split_dataset, tokenize

MAGIC = b"SNLU"
VERSION = 1


@dataclass
class PipelineConfig:
    tier2_threshold: float = 0.85
    tier3_threshold: float = 0.70
    bias_pct: float = 0.10
    seed: int = 0
    limit: int | None = None
    use_tiered_ner: bool = True
    use_tag_substitution: bool = True
    category_model: dict = field(default_factory=dict)  # ModelConfig overrides
    subcategory_model: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.bias_pct < 1.0:
            raise ValueError("bias_pct must be in [0, 1)")

    def tiers(self):
        """Stage tiers (A, C, F); the no-tiered-NER ablation collapses all
        stages to the exact matcher."""
        t = default_tiers(self.tier2_threshold, self.tier3_threshold)
        if not self.use_tiered_ner:
            return t[1], t[1], Tier(1, 1.0, False)
        return t[1], t[2], t[3]

    def to_dict(self):
        return {
            "tier2_threshold": self.tier2_threshold,
            "tier3_threshold": self.tier3_threshold,
            "bias_pct": self.bias_pct,
            "seed": self.seed,
            "limit": self.limit,
            "use_tiered_ner": self.use_tiered_ner,
            "use_tag_substitution": self.use_tag_substitution,
            "category_model": self.category_model,
            "subcategory_model": self.subcategory_model,
        }

    @classmethod
    def from_dict(cls, d):
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        return cls(**known)


@dataclass(frozen=True)
class Slot:
    char_start: int
    char_end: int
    entity_type: str
    surface: str
    tier: int
    score: float


@dataclass
class PipelineOutput:
    category: int
    category_probs: list
    subcategory: int
    subcategory_source: str  # "rule" | "model"
    slots: list

    def to_json(self, taxonomy: Taxonomy) -> dict:
        return {
            "category": taxonomy.category_names[self.category],
            "category_probs": [round(p, 6) for p in self.category_probs],
            "subcategory": taxonomy.subcategory_names[self.subcategory],
            "subcategory_source": self.subcategory_source,
            "slots": [{"start": s.char_start, "end": s.char_end,
                       "type": s.entity_type, "text": s.surface,
                       "tier": s.tier, "score": round(s.score, 4)}
                      for s in self.slots],
        }


@dataclass
class Bundle:
    config: PipelineConfig
    taxonomy: Taxonomy
    gazetteer: Gazetteer
    rules: list
    category_model: md.TrainedModel
    subcategory_model: md.TrainedModel
    sub_model_calls: int = 0  # inference-time invocation counter


def _stage_match(q, gaz, tier, types, matched_spans, substitute):
    """Match one NER stage and either substitute tags or record spans."""
    skip = () if substitute else tuple(matched_spans)
    matches = match_entities(q, gaz, tier, types, skip_spans=skip)
    slots = []
    if substitute:
        q, subs = substitute_tags(q, matches)
        for s in subs:
            slots.append(Slot(s.char_start, s.char_end, s.entity_type,
                              s.surface, s.tier, s.score))
    else:
        for m in matches:
            cs = q.offsets[m.start_tok][0]
            ce = q.offsets[m.end_tok - 1][1]
            slots.append(Slot(cs, ce, m.entity_type, q.raw[cs:ce],
                              m.tier, m.score))
            matched_spans.append((m.start_tok, m.end_tok))
    return q, slots


def preprocess_example(ex, gaz, cfg: PipelineConfig):
    """Training-time stages A and C (gold category). Returns the category
    model input tokens and the subcategory model input tokens (without the
    category-indicator token)."""
    tier_a, tier_c, _ = cfg.tiers()
    q = tokenize(ex.raw)
    spans = []
    q_a, _ = _stage_match(q, gaz, tier_a, None, spans, cfg.use_tag_substitution)
    types_c = gaz.types_for_category(ex.category)
    q_c, _ = _stage_match(q_a, gaz, tier_c, types_c, spans,
                          cfg.use_tag_substitution)
    return q_a.tokens, q_c.tokens


def train_pipeline(cfg: PipelineConfig, dataset, gaz: Gazetteer, rules,
                   log=None) -> Bundle:
    """Split, train the category model on NER-1 output, bias-inject, train
    the subcategory model on NER-2 output. Deterministic per cfg.seed."""
    train, val, _ = split_dataset(dataset, cfg.seed)
    if cfg.limit is not None:
        train = train[:cfg.limit]

    def prep(examples):
        return [preprocess_example(ex, gaz, cfg) for ex in examples]

    tr_prep, va_prep = prep(train), prep(val)
    cat_cfg = md.category_config(**cfg.category_model)
    sub_cfg = md.subcategory_config(**cfg.subcategory_model)
    if log:
        log("training category model")
    cat_model = md.train(
        cat_cfg,
        [(a, ex.category) for (a, _), ex in zip(tr_prep, train)],
        [(a, ex.category) for (a, _), ex in zip(va_prep, val)],
        cfg.seed)
    if log:
        log("injecting category bias and training subcategory model")
    sub_train = md.inject_bias(
        cat_model,
        [(a, c, ex.category, ex.subcategory)
         for (a, c), ex in zip(tr_prep, train)],
        cfg.bias_pct, cfg.seed)
    sub_val = [((md.indicator_token(ex.category),) + tuple(c), ex.subcategory)
               for (_, c), ex in zip(va_prep, val)]
    sub_model = md.train(sub_cfg, sub_train, sub_val, cfg.seed)
    return Bundle(cfg, dataset.taxonomy, gaz, rules, cat_model, sub_model)


def run(bundle: Bundle, raw: RawQuery) -> PipelineOutput:
    """Inference through stages A-F."""
    cfg = bundle.config
    gaz = bundle.gazetteer
    tier_a, tier_c, tier_f = cfg.tiers()
    substitute = cfg.use_tag_substitution

    q = tokenize(raw)
    spans = []
    q, slots_a = _stage_match(q, gaz, tier_a, None, spans, substitute)

    probs = md.forward(bundle.category_model, q.tokens)
    category = int(np.argmax(probs))

    types = gaz.types_for_category(category)
    q, slots_c = _stage_match(q, gaz, tier_c, types, spans, substitute)

    sub = apply_rules(q.tokens, category, bundle.rules)
    if sub is not NO_MATCH:
        source = "rule"
    else:
        source = "model"
        bundle.sub_model_calls += 1
        tokens = (md.indicator_token(category),) + tuple(q.tokens)
        sub = int(np.argmax(md.forward(bundle.subcategory_model, tokens)))

    _, slots_f = _stage_match(q, gaz, tier_f, types, spans, substitute)

    slots = slots_a + slots_c + slots_f
    slots.sort(key=lambda s: s.char_start)
    return PipelineOutput(category, [float(p) for p in probs], sub, source, slots)


# -- persistence ------------------------------------------------------------

def _model_header(m: md.TrainedModel):
    return {
        "config": {k: getattr(m.config, k) for k in
                   ("output_classes", "lstm_units", "dense_units",
                    "dropout_after_lstm", "dropout_after_dense",
                    "embedding_dim", "max_seq_len", "batch_size", "lr",
                    "epochs", "patience")},
        "vocab": m.vocab,
        "params": [[name, list(t.data.shape)]
                   for name, t in m.store.params.items()],
    }


def save_bundle(bundle: Bundle, path):
    tax = bundle.taxonomy.to_dict()
    header = {
        "pipeline": bundle.config.to_dict(),
        # category order defines ids; keep it as a list so sort_keys on the
        # header JSON cannot reorder it
        "taxonomy": {"categories": [[c, subs] for c, subs
                                    in tax["categories"].items()],
                     "entity_types": tax["entity_types"]},
        "gazetteer": bundle.gazetteer.to_dict(),
        "gazetteer_digest": _gazetteer_digest(bundle.gazetteer),
        "rules": rules_to_json(bundle.rules, bundle.taxonomy),
        "category_model": _model_header(bundle.category_model),
        "subcategory_model": _model_header(bundle.subcategory_model),
    }
    hbytes = json.dumps(header, sort_keys=True,
                        separators=(",", ":")).encode("utf-8")
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    buf.write(struct.pack("<Q", len(hbytes)))
    buf.write(hbytes)
    for m in (bundle.category_model, bundle.subcategory_model):
        for t in m.store.params.values():
            block = np.ascontiguousarray(t.data, dtype="<f8").tobytes()
            buf.write(struct.pack("<Q", len(block)))
            buf.write(block)
    payload = buf.getvalue()
    with open(path, "wb") as f:
        f.write(payload)
        f.write(struct.pack("<I", zlib.crc32(payload)))


def _gazetteer_digest(gaz: Gazetteer) -> str:
    blob = json.dumps(gaz.to_dict()["entries"], sort_keys=True).encode()
    return f"{zlib.crc32(blob):08x}"


def _read(f, n, what):
    b = f.read(n)
    if len(b) != n:
        raise CorruptFileError(f"truncated bundle while reading {what}")
    return b


def load_bundle(path) -> Bundle:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 4 + 4 + 8 + 4:
        raise CorruptFileError("file too short to be a bundle")
    if data[:4] != MAGIC:
        raise CorruptFileError("bad magic bytes")
    (crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) != crc:
        raise CorruptFileError("checksum mismatch")
    f = io.BytesIO(data[:-4])
    f.seek(4)
    (version,) = struct.unpack("<I", _read(f, 4, "version"))
    if version != VERSION:
        raise VersionError(f"unsupported bundle version {version}")
    (hlen,) = struct.unpack("<Q", _read(f, 8, "header length"))
    try:
        header = json.loads(_read(f, hlen, "header"))
    except json.JSONDecodeError as e:
        raise CorruptFileError(f"bad header JSON: {e}")

    taxonomy = Taxonomy(dict(header["taxonomy"]["categories"]),
                        header["taxonomy"]["entity_types"])
    cfg = PipelineConfig.from_dict(header["pipeline"])
    gaz = Gazetteer.from_dict(header["gazetteer"])
    rules = [Rule(taxonomy.subcategory_id(r["subcategory"]),
                  taxonomy.category_id(r["category"]), r["kind"],
                  tuple(r["pattern"].split()), r["priority"])
             for r in header["rules"]]

    def read_model(key):
        h = header[key]
        m_cfg = md.ModelConfig(**h["config"])
        store = _load_store(f, h["params"])
        return md.TrainedModel(m_cfg, store, dict(h["vocab"]), [])

    cat = read_model("category_model")
    sub = read_model("subcategory_model")
    return Bundle(cfg, taxonomy, gaz, rules, cat, sub)


def _load_store(f, param_spec):
    from . import tensor as tz
    store = tz.ParamStore()
    for name, shape in param_spec:
        (blen,) = struct.unpack("<Q", _read(f, 8, f"param {name} length"))
        expected = int(np.prod(shape)) * 8
        if blen != expected:
            raise CorruptFileError(f"param {name}: {blen} bytes, want {expected}")
        arr = np.frombuffer(_read(f, blen, f"param {name}"), dtype="<f8")
        # frombuffer views are read-only; the compiled kernels need writable
        store.add(name, arr.reshape(shape).copy())
    return store


def load_config(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as f:
        return PipelineConfig.from_dict(json.load(f))


def load_artifacts(config_path):
    """Load the engine config plus the gazetteer/taxonomy/rules files named
    alongside it. The config JSON carries the pipeline fields and the paths
    {"taxonomy": ..., "gazetteer": ..., "rules": ..., "dataset": ...} plus
    "clubbing": {category name: [entity types]}."""
    import os

    with open(config_path, encoding="utf-8") as f:
        raw = json.load(f)
    cfg = PipelineConfig.from_dict(raw)
    base = os.path.dirname(os.path.abspath(config_path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    taxonomy = Taxonomy.load(resolve(raw["taxonomy"]))
    groups = None
    if "clubbing" in raw:
        groups = {taxonomy.category_id(c): frozenset(ts)
                  for c, ts in raw["clubbing"].items()}
    gaz = Gazetteer.load_tsv(resolve(raw["gazetteer"]), groups)
    rules = load_rules(resolve(raw["rules"]), taxonomy)
    dataset_path = resolve(raw["dataset"]) if "dataset" in raw else None
    return cfg, taxonomy, gaz, rules, dataset_path
