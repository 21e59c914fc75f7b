"""Intent classifiers: embedding -> Bi-LSTM -> additive attention -> dense.

Two instances share the architecture: a 9-way category model (64 LSTM
units, 256 dense) and a 19-way subcategory model (32 units, 128 dense).
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

import numpy as np

from . import tensor as tz
from .errors import DivergenceError, EmptyQuery
from .text import PAD, UNK, build_vocab

PAD_ID, UNK_ID = 0, 1


@dataclass(frozen=True)
class ModelConfig:
    output_classes: int
    lstm_units: int
    dense_units: int
    dropout_after_lstm: float
    dropout_after_dense: float
    embedding_dim: int = 38
    max_seq_len: int = 30
    batch_size: int = 300
    lr: float = 7e-4
    epochs: int = 100
    patience: int = 5


def category_config(**overrides) -> ModelConfig:
    return replace(ModelConfig(9, 64, 256, 0.02, 0.01), **overrides)


def subcategory_config(**overrides) -> ModelConfig:
    return replace(ModelConfig(19, 32, 128, 0.01, 0.01), **overrides)


def indicator_token(category: int) -> str:
    return f"<cat_{category}>"


def expected_param_count(cfg: ModelConfig, vocab_size: int) -> int:
    e, u, d, k = cfg.embedding_dim, cfg.lstm_units, cfg.dense_units, cfg.output_classes
    lstm = 2 * (e * 4 * u + u * 4 * u + 4 * u)
    att = 2 * u * 2 * u + 2 * u + 2 * u
    return vocab_size * e + lstm + att + (2 * u * d + d) + (d * k + k)


def init_params(cfg: ModelConfig, vocab_size: int, seed: int) -> tz.ParamStore:
    rng = np.random.default_rng([seed, 0xA11])
    store = tz.ParamStore()

    def glorot(fan_in, fan_out):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, (fan_in, fan_out))

    u, e = cfg.lstm_units, cfg.embedding_dim
    store.add("emb", rng.uniform(-0.05, 0.05, (vocab_size, e)))
    for d in ("fw", "bw"):
        store.add(f"{d}_wx", glorot(e, 4 * u))
        store.add(f"{d}_wh", glorot(u, 4 * u))
        b = np.zeros(4 * u)
        b[u:2 * u] = 1.0  # forget-gate bias
        store.add(f"{d}_b", b)
    h = 2 * u
    store.add("att_w", glorot(h, h))
    store.add("att_b", np.zeros(h))
    store.add("att_v", glorot(h, 1))
    store.add("d1_w", glorot(h, cfg.dense_units))
    store.add("d1_b", np.zeros(cfg.dense_units))
    store.add("d2_w", glorot(cfg.dense_units, cfg.output_classes))
    store.add("d2_b", np.zeros(cfg.output_classes))
    return store


def encode(tokens, vocab, max_len):
    ids = [vocab.get(t, UNK_ID) for t in tokens[:max_len]]
    if not ids:
        raise EmptyQuery("no tokens to encode")
    return ids


def _batch_arrays(id_seqs):
    tmax = max(len(s) for s in id_seqs)
    ids = np.zeros((len(id_seqs), tmax), dtype=np.intp)
    mask = np.zeros((len(id_seqs), tmax))
    for i, s in enumerate(id_seqs):
        ids[i, :len(s)] = s
        mask[i, :len(s)] = 1.0
    return ids, mask


def logits_forward(store: tz.ParamStore, cfg: ModelConfig, ids, mask,
                   training=False, rng=None) -> tz.Tensor:
    """ids (B, T) int, mask (B, T) in {0,1}; returns pre-softmax logits."""
    b, tmax = ids.shape
    u = cfg.lstm_units
    x = tz.embedding(store["emb"], ids)  # (B, T, E)
    hs = tz.bilstm(x, store["fw_wx"], store["fw_wh"], store["fw_b"],
                   store["bw_wx"], store["bw_wh"], store["bw_b"], u, mask)

    return tz.attn_dense_head(hs, store["att_w"], store["att_b"], store["att_v"],
                              store["d1_w"], store["d1_b"], store["d2_w"],
                              store["d2_b"], mask, cfg.dropout_after_lstm,
                              cfg.dropout_after_dense, rng, training)


def fast_loss_fn(store: tz.ParamStore, cfg: ModelConfig, id_seq, label):
    """Closure computing the inference-mode cross-entropy for one sequence
    through the compiled forward; None when the extension is unavailable.
    Matches logits_forward + cross_entropy (training=False) numerically."""
    if tz._lstm_c is None or not hasattr(tz._lstm_c, "fast_loss"):
        return None
    ids = np.ascontiguousarray(id_seq, dtype=np.int64)

    def value():
        return tz._lstm_c.fast_loss(
            store["emb"].data, store["fw_wx"].data, store["fw_wh"].data,
            store["fw_b"].data, store["bw_wx"].data, store["bw_wh"].data,
            store["bw_b"].data, store["att_w"].data, store["att_b"].data,
            store["att_v"].data, store["d1_w"].data, store["d1_b"].data,
            store["d2_w"].data, store["d2_b"].data, ids, label,
            cfg.lstm_units)
    return value


_PARAM_ORDER = ("emb", "fw_wx", "fw_wh", "fw_b", "bw_wx", "bw_wh", "bw_b",
                "att_w", "att_b", "att_v", "d1_w", "d1_b", "d2_w", "d2_b")


def gradient_check_model(store: tz.ParamStore, cfg: ModelConfig, id_seq,
                         label: int, h: float = 1e-6) -> float:
    """Finite-difference check of the whole model against the tape gradient.

    Uses the compiled sweep when available: each perturbation recomputes only
    the stages downstream of the perturbed parameter, which is exact because
    upstream stages cannot depend on it. Falls back to the generic
    element-by-element check on the pure backend.
    """
    ids1 = np.ascontiguousarray(id_seq, dtype=np.int64)
    ids = ids1.astype(np.intp)[None, :]
    mask = np.ones((1, len(ids1)))
    lab = np.array([label], dtype=np.intp)

    def loss_fn():
        logits = logits_forward(store, cfg, ids, mask, training=False)
        loss, _ = tz.cross_entropy(logits, lab)
        return loss

    if tz._lstm_c is None or not hasattr(tz._lstm_c, "fd_sweep"):
        return tz.gradient_check(loss_fn, store, h=h)
    store.zero_grad()
    loss = loss_fn()
    loss.backward()
    fast = fast_loss_fn(store, cfg, ids1, label)
    ref = fast()
    if abs(ref - float(loss.data)) > 1e-9 * max(1.0, abs(ref)):
        raise ValueError("compiled forward disagrees with tape forward")
    params = [store[n].data for n in _PARAM_ORDER]
    grads = [store[n].grad for n in _PARAM_ORDER]
    return tz._lstm_c.fd_sweep(params, grads, ids1, int(label),
                               cfg.lstm_units, h)


@dataclass
class TrainedModel:
    config: ModelConfig
    store: tz.ParamStore
    vocab: dict
    log: list  # per-epoch "epoch,train_loss,train_acc,val_loss,val_acc" rows


def forward(m: TrainedModel, tokens) -> np.ndarray:
    """Class probability vector for one token sequence (inference mode)."""
    ids, mask = _batch_arrays([encode(tokens, m.vocab, m.config.max_seq_len)])
    logits = logits_forward(m.store, m.config, ids, mask).data[0]
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def forward_batch(m: TrainedModel, token_seqs) -> np.ndarray:
    probs = np.empty((len(token_seqs), m.config.output_classes))
    bs = m.config.batch_size
    for lo in range(0, len(token_seqs), bs):
        chunk = token_seqs[lo:lo + bs]
        ids, mask = _batch_arrays(
            [encode(t, m.vocab, m.config.max_seq_len) for t in chunk])
        logits = logits_forward(m.store, m.config, ids, mask).data
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        probs[lo:lo + len(chunk)] = e / e.sum(axis=1, keepdims=True)
    return probs


def predict_topk(m: TrainedModel, tokens, k: int):
    """Top-k (class, probability), ties broken by lower class id."""
    probs = forward(m, tokens)
    if not 1 <= k <= len(probs):
        raise ValueError("k out of range")
    order = sorted(range(len(probs)), key=lambda c: (-probs[c], c))
    return [(c, float(probs[c])) for c in order[:k]]


def _epoch_eval(store, cfg, data_ids, labels):
    loss_sum, correct = 0.0, 0
    for lo in range(0, len(data_ids), cfg.batch_size):
        chunk = data_ids[lo:lo + cfg.batch_size]
        lab = labels[lo:lo + cfg.batch_size]
        ids, mask = _batch_arrays(chunk)
        logits = logits_forward(store, cfg, ids, mask)
        loss, probs = tz.cross_entropy(logits, lab)
        loss_sum += float(loss.data) * len(chunk)
        correct += int((probs.argmax(axis=1) == lab).sum())
    return loss_sum / len(data_ids), correct / len(data_ids)


def train(cfg: ModelConfig, train_set, val_set, seed: int) -> TrainedModel:
    """train_set/val_set: lists of (tokens, label). Deterministic per seed.

    Early-stops on validation loss and returns the best-validation snapshot.
    """
    if not train_set or not val_set:
        raise ValueError("train and validation sets must be non-empty")
    for _, y in train_set:
        if not 0 <= y < cfg.output_classes:
            raise ValueError(f"label {y} out of range")

    vocab = build_vocab([t for t, _ in train_set])
    store = init_params(cfg, len(vocab), seed)
    tr_ids = [encode(t, vocab, cfg.max_seq_len) for t, _ in train_set]
    tr_lab = np.array([y for _, y in train_set], dtype=np.intp)
    va_ids = [encode(t, vocab, cfg.max_seq_len) for t, _ in val_set]
    va_lab = np.array([y for _, y in val_set], dtype=np.intp)

    best_loss, best_snap, best_log = math.inf, store.snapshot(), []
    bad_epochs = 0
    log = []
    for epoch in range(1, cfg.epochs + 1):
        order = list(range(len(tr_ids)))
        random.Random(seed * 1000003 + epoch).shuffle(order)
        drop_rng = np.random.default_rng([seed, epoch, 0xD0])
        loss_sum, correct = 0.0, 0
        for lo in range(0, len(order), cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            ids, mask = _batch_arrays([tr_ids[i] for i in idx])
            lab = tr_lab[idx]
            store.zero_grad()
            logits = logits_forward(store, cfg, ids, mask, training=True, rng=drop_rng)
            loss, probs = tz.cross_entropy(logits, lab)
            if not math.isfinite(float(loss.data)):
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            loss.backward()
            store.nadam_step(lr=cfg.lr)
            loss_sum += float(loss.data) * len(idx)
            correct += int((probs.argmax(axis=1) == lab).sum())
        tr_loss = loss_sum / len(order)
        tr_acc = correct / len(order)
        va_loss, va_acc = _epoch_eval(store, cfg, va_ids, va_lab)
        log.append(f"{epoch},{tr_loss:.6f},{tr_acc:.4f},{va_loss:.6f},{va_acc:.4f}")
        if va_loss < best_loss:
            best_loss, best_snap, bad_epochs = va_loss, store.snapshot(), 0
            best_log = list(log)
        else:
            bad_epochs += 1
            if bad_epochs >= cfg.patience:
                break
    store.restore(best_snap)
    return TrainedModel(cfg, store, vocab, best_log or log)


def inject_bias(category_model: TrainedModel, examples, bias_pct: float, seed: int):
    """Build subcategory training inputs with a category-indicator token.

    examples: list of (cat_tokens, sub_tokens, gold_category, subcategory).
    A seeded floor(bias_pct*N) subset gets the category model's second-most
    probable category instead of the gold one. Returns a list of
    (tokens, subcategory) pairs; subcategory labels are never touched.
    """
    if not 0.0 <= bias_pct < 1.0:
        raise ValueError("bias_pct must be in [0, 1)")
    n = len(examples)
    n_alter = math.floor(bias_pct * n)
    altered = set(random.Random(seed * 1000003 + 777).sample(range(n), n_alter))
    out = []
    for i, (cat_tokens, sub_tokens, gold_cat, sub) in enumerate(examples):
        if i in altered:
            cat = predict_topk(category_model, cat_tokens, 2)[1][0]
        else:
            cat = gold_cat
        out.append(((indicator_token(cat),) + tuple(sub_tokens), sub))
    return out
