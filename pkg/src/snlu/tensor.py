"""Minimal reverse-mode autodiff over float64 numpy arrays.

Covers exactly the layers the intent classifiers need (embedding gather,
LSTM gates, additive attention, dense, dropout, softmax cross-entropy) plus
the Nadam optimizer and a finite-difference gradient checker.
"""
from __future__ import annotations

import os

import numpy as np

if os.environ.get("SNLU_PURE") == "1":
    _lstm_c = None
else:
    try:
        from . import _lstm_c
    except ImportError:  # pragma: no cover - build-dependent
        _lstm_c = None

SELU_LAMBDA = 1.0507009873554804934193349852946
SELU_ALPHA = 1.6732632423543772848170429916717


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar root")
        topo, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        for node in topo:
            node.grad = np.zeros_like(node.data)
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = _wrap(other)

        def bwd(g):
            _accum(self, g)
            _accum(other, g)
        return Tensor(self.data + other.data, (self, other), bwd)

    __radd__ = __add__

    def __mul__(self, other):
        other = _wrap(other)

        def bwd(g):
            _accum(self, g * other.data)
            _accum(other, g * self.data)
        return Tensor(self.data * other.data, (self, other), bwd)

    __rmul__ = __mul__

    def __neg__(self):
        return self * Tensor(np.array(-1.0))

    def __sub__(self, other):
        return self + (-_wrap(other))

    def __matmul__(self, other):
        def bwd(g):
            _accum(self, g @ other.data.T)
            _accum(other, self.data.T @ g)
        return Tensor(self.data @ other.data, (self, other), bwd)


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _accum(t: Tensor, g):
    """Accumulate gradient, un-broadcasting g down to t's shape."""
    if t.grad is None:  # constant not on the tape
        return
    while g.ndim > t.data.ndim:
        g = g.sum(axis=0)
    for ax, n in enumerate(t.data.shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    t.grad += g


# -- activations ------------------------------------------------------------

def sigmoid(x: Tensor) -> Tensor:
    out = 1.0 / (1.0 + np.exp(-x.data))

    def bwd(g):
        _accum(x, g * out * (1.0 - out))
    return Tensor(out, (x,), bwd)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)

    def bwd(g):
        _accum(x, g * (1.0 - out * out))
    return Tensor(out, (x,), bwd)


def selu(x: Tensor) -> Tensor:
    pos = x.data > 0
    ex = np.exp(np.minimum(x.data, 0.0))
    out = SELU_LAMBDA * np.where(pos, x.data, SELU_ALPHA * (ex - 1.0))

    def bwd(g):
        _accum(x, g * SELU_LAMBDA * np.where(pos, 1.0, SELU_ALPHA * ex))
    return Tensor(out, (x,), bwd)


# -- layers -----------------------------------------------------------------

def embedding(table: Tensor, ids) -> Tensor:
    """Row gather; backward scatter-adds into the gathered rows.

    ids must be non-negative and within the table (encode() guarantees
    this); out-of-range rows raise from the gather itself.
    """
    ids = np.asarray(ids, dtype=np.intp)

    def bwd(g):
        if table.grad is not None:
            np.add.at(table.grad, ids, g)
    return Tensor(table.data[ids], (table,), bwd)


def dense(x: Tensor, w: Tensor, b: Tensor, activation="none") -> Tensor:
    out = x @ w + b
    if activation == "selu":
        return selu(out)
    if activation == "softmax":
        return softmax(out)
    if activation == "none":
        return out
    raise ValueError(f"unknown activation {activation!r}")


def softmax(x: Tensor) -> Tensor:
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        dot = (g * out).sum(axis=-1, keepdims=True)
        _accum(x, out * (g - dot))
    return Tensor(out, (x,), bwd)


def masked_softmax(scores: Tensor, mask) -> Tensor:
    """Softmax along the last axis with masked positions forced to weight 0.

    mask is a constant {0,1} array broadcastable to scores.
    """
    mask = np.asarray(mask, dtype=np.float64)
    neg = np.where(mask > 0, 0.0, -np.inf)
    z = scores.data + neg
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z) * mask
    out = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        dot = (g * out).sum(axis=-1, keepdims=True)
        _accum(scores, out * (g - dot))
    return Tensor(out, (scores,), bwd)


def reshape(x: Tensor, shape) -> Tensor:
    def bwd(g):
        _accum(x, g.reshape(x.data.shape))
    return Tensor(x.data.reshape(shape), (x,), bwd)


def attn_context(weights: Tensor, h: Tensor) -> Tensor:
    """sum_t weights[:, t, None] * h[:, t, :] for h of shape (B, T, H)."""
    out = (weights.data[:, None, :] @ h.data)[:, 0, :]

    def bwd(g):
        _accum(weights, np.einsum("bh,bth->bt", g, h.data))
        _accum(h, weights.data[:, :, None] * g[:, None, :])
    return Tensor(out, (weights, h), bwd)


def attn_dense_head(hs: Tensor, att_w: Tensor, att_b: Tensor, att_v: Tensor,
                    d1_w: Tensor, d1_b: Tensor, d2_w: Tensor, d2_b: Tensor,
                    mask, drop1: float, drop2: float, rng, training: bool) -> Tensor:
    """Additive attention over hs (B, T, H) followed by the dense head:
    context -> dropout -> dense+SELU -> dropout -> logits. One fused tape
    node with a hand-written backward; numerically identical to composing
    the individual ops."""
    bsz, tmax, H = hs.data.shape
    mask = np.asarray(mask, dtype=np.float64)
    flat = hs.data.reshape(bsz * tmax, H)
    a1 = np.tanh(flat @ att_w.data + att_b.data)
    sc = (a1 @ att_v.data).reshape(bsz, tmax)
    z = np.where(mask > 0, sc, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z) * mask
    w = e / e.sum(axis=-1, keepdims=True)
    ctx = (w[:, None, :] @ hs.data)[:, 0, :]
    if training and drop1 > 0.0:
        m1 = (rng.random(ctx.shape) < 1.0 - drop1) / (1.0 - drop1)
        ctx_d = ctx * m1
    else:
        m1 = None
        ctx_d = ctx
    z1 = ctx_d @ d1_w.data + d1_b.data
    h1 = SELU_LAMBDA * np.where(z1 > 0, z1, SELU_ALPHA * (np.exp(np.minimum(z1, 0.0)) - 1.0))
    if training and drop2 > 0.0:
        m2 = (rng.random(h1.shape) < 1.0 - drop2) / (1.0 - drop2)
        h1d = h1 * m2
    else:
        m2 = None
        h1d = h1
    logits = h1d @ d2_w.data + d2_b.data

    def bwd(g):
        _accum(d2_w, h1d.T @ g)
        _accum(d2_b, g.sum(axis=0))
        dh1d = g @ d2_w.data.T
        dh1 = dh1d * m2 if m2 is not None else dh1d
        # selu'(z1): lambda above zero, selu(z1) + lambda*alpha below
        dz1 = dh1 * np.where(z1 > 0, SELU_LAMBDA, h1 + SELU_LAMBDA * SELU_ALPHA)
        _accum(d1_w, ctx_d.T @ dz1)
        _accum(d1_b, dz1.sum(axis=0))
        dctx_d = dz1 @ d1_w.data.T
        dctx = dctx_d * m1 if m1 is not None else dctx_d
        dw = (hs.data @ dctx[:, :, None])[:, :, 0]
        dhs = w[:, :, None] * dctx[:, None, :]
        dsc = w * (dw - (dw * w).sum(axis=-1, keepdims=True))
        dsc_flat = dsc.reshape(bsz * tmax, 1)
        _accum(att_v, a1.T @ dsc_flat)
        du1 = (dsc_flat @ att_v.data.T) * (1.0 - a1 * a1)
        _accum(att_w, flat.T @ du1)
        _accum(att_b, du1.sum(axis=0))
        dhs += (du1 @ att_w.data.T).reshape(bsz, tmax, H)
        _accum(hs, dhs)
    return Tensor(logits, (hs, att_w, att_b, att_v, d1_w, d1_b, d2_w, d2_b), bwd)


def dropout(x: Tensor, rate: float, rng, training: bool) -> Tensor:
    """Inverted dropout; identity at inference or rate 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if not training or rate == 0.0:
        return x
    keep = 1.0 - rate
    mask = (rng.random(x.data.shape) < keep) / keep

    def bwd(g):
        _accum(x, g * mask)
    return Tensor(x.data * mask, (x,), bwd)


def cross_entropy(logits: Tensor, labels):
    """Mean softmax cross-entropy. Returns (loss Tensor, probs ndarray)."""
    labels = np.asarray(labels, dtype=np.intp)
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=-1, keepdims=True)
    n = labels.shape[0]
    loss = -np.log(probs[np.arange(n), labels] + 1e-300).sum() / n

    def bwd(g):
        d = probs.copy()
        d[np.arange(n), labels] -= 1.0
        _accum(logits, g * d / n)
    return Tensor(np.array(loss), (logits,), bwd), probs


def _sig(x):
    return 1.0 / (1.0 + np.exp(-x))


def _selu_np(c):
    return SELU_LAMBDA * np.where(c > 0, c, SELU_ALPHA * (np.exp(np.minimum(c, 0.0)) - 1.0))


def _selu_grad_np(c):
    return SELU_LAMBDA * np.where(c > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(c, 0.0)))


def _lstm_dir(xd, wx, wh, b, mask, units, order):
    """Run one LSTM direction over timesteps in `order` (list of t indices).

    Gate order i, f, g, o; gates sigmoid, candidate tanh, cell output SELU.
    Masked timesteps carry the previous (h, c) through unchanged. Returns the
    (B, T, U) hidden sequence plus the cache needed for backprop.
    """
    bsz, T, _ = xd.shape
    xz = (xd.reshape(bsz * T, -1) @ wx + b).reshape(bsz, T, 4 * units)
    if _lstm_c is not None and bsz <= 8:
        out = _lstm_c.lstm_dir_forward(
            np.ascontiguousarray(xz), np.ascontiguousarray(wh),
            np.ascontiguousarray(mask), units,
            np.asarray(order, dtype=np.int64))
        # defer per-step cache assembly; backward runs far less often than
        # forward (finite-difference sweeps call forward only)
        return out[0], ("arrays", mask, list(order)) + out[1:]
    h = np.zeros((bsz, units))
    c = np.zeros((bsz, units))
    hs = np.zeros((bsz, T, units))
    cache = []
    for t in order:
        m = mask[:, t:t + 1]
        z = xz[:, t, :] + h @ wh
        i = _sig(z[:, :units])
        f = _sig(z[:, units:2 * units])
        g = np.tanh(z[:, 2 * units:3 * units])
        o = _sig(z[:, 3 * units:])
        c_new = f * c + i * g
        s = _selu_np(c_new)
        h_new = o * s
        cache.append((t, m, h, c, i, f, g, o, c_new, s))
        h = m * h_new + (1.0 - m) * h
        c = m * c_new + (1.0 - m) * c
        hs[:, t, :] = h
    return hs, cache


def _lstm_dir_bwd(dh_seq, xd, wx, wh, units, cache):
    """BPTT through one direction; dh_seq is (B, T, U) upstream gradient."""
    if cache and cache[0] == "arrays":
        _, mask, order, hp, cp, gi, gf, gg, go, cn, ss = cache
        cache = [(t, mask[:, t:t + 1], hp[:, t], cp[:, t], gi[:, t], gf[:, t],
                  gg[:, t], go[:, t], cn[:, t], ss[:, t]) for t in order]
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(wx.shape[1])
    dx = np.zeros_like(xd)
    bsz = xd.shape[0]
    dh_next = np.zeros((bsz, units))
    dc_next = np.zeros((bsz, units))
    for (t, m, h_prev, c_prev, i, f, g, o, c_new, s) in reversed(cache):
        dh = dh_seq[:, t, :] + dh_next
        dc = dc_next
        keep = 1.0 - m
        dh_new = dh * m
        dc_new = dc * m + dh_new * o * _selu_grad_np(c_new)
        do = dh_new * s
        di = dc_new * g
        dg = dc_new * i
        df = dc_new * c_prev
        dz = np.concatenate([di * i * (1.0 - i), df * f * (1.0 - f),
                             dg * (1.0 - g * g), do * o * (1.0 - o)], axis=1)
        xt = xd[:, t, :]
        dwx += xt.T @ dz
        dwh += h_prev.T @ dz
        db += dz.sum(axis=0)
        dx[:, t, :] += dz @ wx.T
        dh_next = dz @ wh.T + dh * keep
        dc_next = dc_new * f + dc * keep
    return dx, dwx, dwh, db


def bilstm(x: Tensor, fw_wx: Tensor, fw_wh: Tensor, fw_b: Tensor,
           bw_wx: Tensor, bw_wh: Tensor, bw_b: Tensor, units: int,
           mask) -> Tensor:
    """Bidirectional LSTM over a (B, T, E) input; returns (B, T, 2U) hidden
    states with forward and backward halves concatenated. mask is a constant
    {0,1} array of shape (B, T); padded steps carry state through and emit
    the carried hidden value. Backward pass is a fused hand-written BPTT."""
    mask = np.asarray(mask, dtype=np.float64)
    T = x.data.shape[1]
    fwd = np.arange(T)
    hs_f, cache_f = _lstm_dir(x.data, fw_wx.data, fw_wh.data, fw_b.data,
                              mask, units, fwd)
    hs_b, cache_b = _lstm_dir(x.data, bw_wx.data, bw_wh.data, bw_b.data,
                              mask, units, fwd[::-1].copy())
    out = np.concatenate([hs_f, hs_b], axis=2)

    def bwd(g):
        dx_f, dwx_f, dwh_f, db_f = _lstm_dir_bwd(
            g[:, :, :units], x.data, fw_wx.data, fw_wh.data, units, cache_f)
        dx_b, dwx_b, dwh_b, db_b = _lstm_dir_bwd(
            g[:, :, units:], x.data, bw_wx.data, bw_wh.data, units, cache_b)
        _accum(x, dx_f + dx_b)
        _accum(fw_wx, dwx_f)
        _accum(fw_wh, dwh_f)
        _accum(fw_b, db_f)
        _accum(bw_wx, dwx_b)
        _accum(bw_wh, dwh_b)
        _accum(bw_b, db_b)
    return Tensor(out, (x, fw_wx, fw_wh, fw_b, bw_wx, bw_wh, bw_b), bwd)


# -- optimizer --------------------------------------------------------------

class ParamStore:
    """Named parameters with gradients and Nadam moment state."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step = 0

    def add(self, name, value):
        t = Tensor(np.asarray(value, dtype=np.float64))
        t.grad = np.zeros_like(t.data)
        self.params[name] = t
        self.m[name] = np.zeros_like(t.data)
        self.v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name):
        return self.params[name]

    def zero_grad(self):
        for t in self.params.values():
            t.grad = np.zeros_like(t.data)

    def n_params(self):
        return sum(t.data.size for t in self.params.values())

    def snapshot(self):
        return {k: t.data.copy() for k, t in self.params.items()}

    def restore(self, snap):
        for k, t in self.params.items():
            t.data = snap[k].copy()

    def nadam_step(self, lr=7e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        """Adam with a Nesterov-corrected first moment (no momentum-decay
        schedule): the lookahead term uses the bias correction for step t+1."""
        self.step += 1
        t = self.step
        for name, p in self.params.items():
            g = p.grad
            m = self.m[name]
            v = self.v[name]
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            m_hat = m / (1.0 - beta1 ** (t + 1))
            v_hat = v / (1.0 - beta2 ** t)
            lookahead = beta1 * m_hat + (1.0 - beta1) * g / (1.0 - beta1 ** t)
            p.data = p.data - lr * lookahead / (np.sqrt(v_hat) + eps)


# -- verification -----------------------------------------------------------

def gradient_check(loss_fn, store: ParamStore, h=1e-6, loss_value=None):
    """Max relative error between analytic gradients and central finite
    differences over every parameter element. loss_fn must be deterministic
    (reseed any dropout RNG inside it).

    The step must be small: the SELU cell activation has a first-derivative
    jump at zero, so a wider interval straddling that kink makes the central
    difference itself inaccurate.

    loss_value, if given, is a faster callable returning the same loss as a
    float (e.g. a compiled forward); it is used for the finite-difference
    evaluations while the analytic gradient still comes from loss_fn's tape.
    """
    store.zero_grad()
    loss = loss_fn()
    loss.backward()
    if loss_value is None:
        loss_value = lambda: float(loss_fn().data)
    else:
        ref = loss_value()
        if abs(ref - float(loss.data)) > 1e-9 * max(1.0, abs(ref)):
            raise ValueError("loss_value disagrees with loss_fn")
    analytic = {k: t.grad.copy() for k, t in store.params.items()}
    worst = 0.0
    for name, p in store.params.items():
        flat = p.data.reshape(-1)
        aflat = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = loss_value()
            flat[i] = orig - h
            lm = loss_value()
            flat[i] = orig
            num = (lp - lm) / (2.0 * h)
            err = abs(aflat[i] - num) / max(abs(aflat[i]), abs(num), 1.0)
            worst = max(worst, err)
    return worst
