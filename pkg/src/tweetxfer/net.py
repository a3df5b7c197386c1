"""BiLSTM-CNN tweet classifier with explicit forward and backward passes.

Everything is float64 numpy; there is no autograd.  Parameters are
grouped into four freeze units: 1 = the two LSTM directions, 2 = the
convolution blocks, 3 = the hidden dense layer, 4 = the prediction
layer.  A freeze mask names the trainable groups; backward zeroes the
rest and the optimizer never touches them.

Input batches carry per-token embedding rows plus a 0/1 validity mask.
Sequences shorter than the widest convolution kernel are treated as if
padded with zero-embedding tokens up to that width, so every kernel
always sees at least one window.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DataError

LAYER_IDS = (1, 2, 3, 4)

_MAGIC = b"TWXNETCK"
_VERSION = 1


@dataclass(frozen=True)
class FreezeMask:
    """The set of layer groups a training step may modify."""

    trainable: frozenset[int]

    def __post_init__(self) -> None:
        bad = set(self.trainable) - set(LAYER_IDS)
        if bad:
            raise ValueError(f"unknown layer ids in freeze mask: {sorted(bad)}")

    @staticmethod
    def of(*layers: int) -> "FreezeMask":
        return FreezeMask(frozenset(layers))


ALL_LAYERS = FreezeMask.of(1, 2, 3, 4)


def layer_of(name: str) -> int:
    if name.startswith("lstm_"):
        return 1
    if name.startswith("conv"):
        return 2
    if name.startswith("dense_"):
        return 3
    if name.startswith("out_"):
        return 4
    raise KeyError(f"unknown parameter array {name!r}")


@dataclass
class NetworkParams:
    """All weight arrays plus the sizes needed to interpret them."""

    arrays: dict[str, np.ndarray]
    n_classes: int
    cluster_width: int
    embed_dim: int = 300
    hidden: int = 100
    filters: int = 200
    dense: int = 100
    kernels: tuple[int, ...] = (3, 4, 5)
    leaky_slope: float = 0.3

    @property
    def min_len(self) -> int:
        return max(self.kernels)

    def layer_names(self, layer: int) -> list[str]:
        return [n for n in self.arrays if layer_of(n) == layer]

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            arrays={n: a.copy() for n, a in self.arrays.items()},
            n_classes=self.n_classes,
            cluster_width=self.cluster_width,
            embed_dim=self.embed_dim,
            hidden=self.hidden,
            filters=self.filters,
            dense=self.dense,
            kernels=self.kernels,
            leaky_slope=self.leaky_slope,
        )


def layer_checksum(params: NetworkParams, layer: int) -> str:
    """SHA-256 over the raw bytes of the layer's arrays, in name order."""
    digest = hashlib.sha256()
    for name in sorted(params.layer_names(layer)):
        digest.update(np.ascontiguousarray(params.arrays[name]).tobytes())
    return digest.hexdigest()


def _glorot(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


def init_params(
    n_classes: int,
    cluster_width: int,
    seed: int = 0,
    embed_dim: int = 300,
    hidden: int = 100,
    filters: int = 200,
    dense: int = 100,
    kernels: tuple[int, ...] = (3, 4, 5),
    leaky_slope: float = 0.3,
) -> NetworkParams:
    """Glorot-uniform weights, zero biases, LSTM forget-gate bias 1.0.

    Weight arrays are drawn in a fixed order so one seed pins every
    value.
    """
    if n_classes < 2:
        raise ValueError(f"n_classes must be at least 2, got {n_classes}")
    if cluster_width < 0:
        raise ValueError(f"cluster_width must be >= 0, got {cluster_width}")
    if not kernels or list(kernels) != sorted(set(kernels)):
        raise ValueError(f"kernels must be distinct and ascending, got {kernels}")
    rng = np.random.default_rng(seed)
    h4 = 4 * hidden
    width = 2 * hidden
    arrays: dict[str, np.ndarray] = {}
    for direction in ("fw", "bw"):
        arrays[f"lstm_{direction}_W"] = _glorot(rng, (embed_dim, h4), embed_dim, h4)
        arrays[f"lstm_{direction}_U"] = _glorot(rng, (hidden, h4), hidden, h4)
        b = np.zeros(h4)
        b[hidden : 2 * hidden] = 1.0
        arrays[f"lstm_{direction}_b"] = b
    for k in kernels:
        fan = k * width
        arrays[f"conv{k}_W"] = _glorot(rng, (fan, filters), fan, k * filters)
        arrays[f"conv{k}_b"] = np.zeros(filters)
    feat = len(kernels) * filters + cluster_width
    arrays["dense_W"] = _glorot(rng, (feat, dense), feat, dense)
    arrays["dense_b"] = np.zeros(dense)
    arrays["out_W"] = _glorot(rng, (dense, n_classes), dense, n_classes)
    arrays["out_b"] = np.zeros(n_classes)
    return NetworkParams(
        arrays=arrays,
        n_classes=n_classes,
        cluster_width=cluster_width,
        embed_dim=embed_dim,
        hidden=hidden,
        filters=filters,
        dense=dense,
        kernels=tuple(kernels),
        leaky_slope=leaky_slope,
    )


@dataclass(frozen=True)
class Batch:
    """Embedded input sequences, padded and masked, plus side features."""

    embeddings: np.ndarray  # (B, T, embed_dim), zero rows at padding
    mask: np.ndarray  # (B, T) 1.0 at real tokens, 0.0 at padding
    cluster_features: np.ndarray  # (B, cluster_width)
    labels: np.ndarray | None = None  # (B,) int64


def make_batch(
    sequences: list[np.ndarray],
    cluster_features: np.ndarray | list,
    labels: np.ndarray | list | None = None,
    max_len: int = 100,
) -> Batch:
    """Pad per-tweet embedding matrices to a common length.

    Sequences longer than ``max_len`` tokens are truncated.  Padding
    rows are zero and masked out.
    """
    if not sequences:
        raise ValueError("batch needs at least one sequence")
    feats = np.asarray(cluster_features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] != len(sequences):
        raise ValueError("cluster features must align with sequences")
    dims = {s.shape[1] for s in sequences}
    if len(dims) != 1:
        raise ValueError(f"sequences disagree on embedding dim: {sorted(dims)}")
    dim = dims.pop()
    clipped = [s[:max_len] for s in sequences]
    t_max = max(1, max(len(s) for s in clipped))
    emb = np.zeros((len(clipped), t_max, dim))
    mask = np.zeros((len(clipped), t_max))
    for i, s in enumerate(clipped):
        emb[i, : len(s)] = s
        mask[i, : len(s)] = 1.0
    lab = None
    if labels is not None:
        lab = np.asarray(labels, dtype=np.int64)
        if lab.shape != (len(clipped),):
            raise ValueError("labels must align with sequences")
    return Batch(embeddings=emb, mask=mask, cluster_features=feats, labels=lab)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=1, keepdims=True)


def _leaky(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0.0, x, slope * x)


def _leaky_grad(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0.0, 1.0, slope)


@dataclass
class _LstmTrace:
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    tanh_c: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    h_out: np.ndarray


def _lstm_direction(
    x: np.ndarray,
    eff: np.ndarray,
    W: np.ndarray,
    U: np.ndarray,
    b: np.ndarray,
    reverse: bool,
) -> _LstmTrace:
    B, T, _ = x.shape
    H = U.shape[0]
    order = range(T - 1, -1, -1) if reverse else range(T)
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    shape = (B, T, H)
    tr = _LstmTrace(*(np.zeros(shape) for _ in range(8)))
    for t in order:
        m = eff[:, t : t + 1]
        tr.h_prev[:, t] = h
        tr.c_prev[:, t] = c
        z = x[:, t] @ W + h @ U + b
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H : 2 * H])
        g = np.tanh(z[:, 2 * H : 3 * H])
        o = _sigmoid(z[:, 3 * H :])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        # Masked steps carry state through unchanged, so padding after a
        # sequence's end never alters it.
        c = m * c_new + (1.0 - m) * c
        h = m * h_new + (1.0 - m) * h
        tr.i[:, t] = i
        tr.f[:, t] = f
        tr.g[:, t] = g
        tr.o[:, t] = o
        tr.tanh_c[:, t] = tanh_c
        tr.h_out[:, t] = h
    return tr


def _lstm_direction_backward(
    x: np.ndarray,
    eff: np.ndarray,
    W: np.ndarray,
    U: np.ndarray,
    tr: _LstmTrace,
    d_out: np.ndarray,
    reverse: bool,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    B, T, _ = x.shape
    H = U.shape[0]
    order = range(T - 1, -1, -1) if reverse else range(T)
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * H)
    dh_carry = np.zeros((B, H))
    dc_carry = np.zeros((B, H))
    for t in reversed(list(order)):
        m = eff[:, t : t + 1]
        dh_total = d_out[:, t] + dh_carry
        dh_new = m * dh_total
        dh_prev = (1.0 - m) * dh_total
        dc_new = m * dc_carry
        dc_prev = (1.0 - m) * dc_carry
        i, f, g, o = tr.i[:, t], tr.f[:, t], tr.g[:, t], tr.o[:, t]
        tanh_c = tr.tanh_c[:, t]
        d_o = dh_new * tanh_c
        dc_new = dc_new + dh_new * o * (1.0 - tanh_c**2)
        d_f = dc_new * tr.c_prev[:, t]
        d_i = dc_new * g
        d_g = dc_new * i
        dc_prev = dc_prev + dc_new * f
        dz = np.concatenate(
            [
                d_i * i * (1.0 - i),
                d_f * f * (1.0 - f),
                d_g * (1.0 - g**2),
                d_o * o * (1.0 - o),
            ],
            axis=1,
        )
        dW += x[:, t].T @ dz
        dU += tr.h_prev[:, t].T @ dz
        db += dz.sum(axis=0)
        dh_carry = dh_prev + dz @ U.T
        dc_carry = dc_prev
    return dW, dU, db


@dataclass
class _ConvTrace:
    pre: np.ndarray  # (B, P, filters)
    arg: np.ndarray  # (B, filters) winning position per filter
    valid: np.ndarray  # (B, P)
    pooled: np.ndarray  # (B, filters) before dropout
    pool_mask: np.ndarray | None
    pooled_drop: np.ndarray


@dataclass
class ForwardCache:
    params: NetworkParams
    mode: str
    emb: np.ndarray
    eff: np.ndarray
    lengths: np.ndarray
    fw: _LstmTrace
    bw: _LstmTrace
    h_cat: np.ndarray
    lstm_mask: np.ndarray | None
    h_drop: np.ndarray
    conv: dict[int, _ConvTrace]
    z: np.ndarray
    a_pre: np.ndarray
    a: np.ndarray
    probs: np.ndarray


def _windows(h: np.ndarray, k: int) -> np.ndarray:
    """(B, P, k*width) view of all k-step windows, time-major inside."""
    p = h.shape[1] - k + 1
    return np.concatenate([h[:, j : j + p] for j in range(k)], axis=2)


def forward(
    params: NetworkParams,
    batch: Batch,
    mode: str = "train",
    dropout_seed: int = 0,
    dropout: float = 0.5,
) -> tuple[np.ndarray, ForwardCache]:
    """Run the network; returns class probabilities and a backward cache.

    Train mode applies inverted dropout to the BiLSTM output sequence
    and to each pooled convolution vector, with masks drawn from
    ``dropout_seed`` in a fixed order.  Eval mode is deterministic.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if not 0.0 <= dropout < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {dropout}")
    emb = batch.embeddings
    mask = batch.mask
    B, T, E = emb.shape
    if E != params.embed_dim:
        raise ValueError(f"embeddings have dim {E}, network expects {params.embed_dim}")
    if batch.cluster_features.shape != (B, params.cluster_width):
        raise ValueError(
            f"cluster features shaped {batch.cluster_features.shape}, "
            f"expected {(B, params.cluster_width)}"
        )
    min_len = params.min_len
    if T < min_len:
        emb = np.concatenate([emb, np.zeros((B, min_len - T, E))], axis=1)
        mask = np.concatenate([mask, np.zeros((B, min_len - T))], axis=1)
        T = min_len
    # Short sequences count as zero-padded up to the widest kernel:
    # those extra steps are real (zero-vector) inputs, not masked out.
    lengths = np.maximum(mask.sum(axis=1).astype(np.int64), min_len)
    eff = (np.arange(T)[None, :] < lengths[:, None]).astype(np.float64)

    keep = 1.0 - dropout
    lstm_mask = None
    pool_masks: dict[int, np.ndarray] = {}
    if mode == "train" and dropout > 0.0:
        rng = np.random.default_rng(dropout_seed)
        width = 2 * params.hidden
        lstm_mask = (rng.random((B, T, width)) < keep) / keep
        for k in params.kernels:
            pool_masks[k] = (rng.random((B, params.filters)) < keep) / keep

    fw = _lstm_direction(
        emb, eff, params.arrays["lstm_fw_W"], params.arrays["lstm_fw_U"],
        params.arrays["lstm_fw_b"], reverse=False,
    )
    bw = _lstm_direction(
        emb, eff, params.arrays["lstm_bw_W"], params.arrays["lstm_bw_U"],
        params.arrays["lstm_bw_b"], reverse=True,
    )
    h_cat = np.concatenate([fw.h_out, bw.h_out], axis=2)
    h_drop = h_cat * lstm_mask if lstm_mask is not None else h_cat

    conv: dict[int, _ConvTrace] = {}
    pooled_parts: list[np.ndarray] = []
    positions = np.arange(T)
    for k in params.kernels:
        cols = _windows(h_drop, k)
        pre = cols @ params.arrays[f"conv{k}_W"] + params.arrays[f"conv{k}_b"]
        act = _leaky(pre, params.leaky_slope)
        p = T - k + 1
        valid = (positions[:p][None, :] + k) <= lengths[:, None]
        act_masked = np.where(valid[:, :, None], act, -np.inf)
        arg = act_masked.argmax(axis=1)
        pooled = np.take_along_axis(act_masked, arg[:, None, :], axis=1)[:, 0]
        pool_mask = pool_masks.get(k)
        pooled_drop = pooled * pool_mask if pool_mask is not None else pooled
        conv[k] = _ConvTrace(
            pre=pre, arg=arg, valid=valid, pooled=pooled,
            pool_mask=pool_mask, pooled_drop=pooled_drop,
        )
        pooled_parts.append(pooled_drop)

    z = np.concatenate(pooled_parts + [batch.cluster_features], axis=1)
    a_pre = z @ params.arrays["dense_W"] + params.arrays["dense_b"]
    a = _leaky(a_pre, params.leaky_slope)
    logits = a @ params.arrays["out_W"] + params.arrays["out_b"]
    probs = _softmax(logits)
    cache = ForwardCache(
        params=params, mode=mode, emb=emb, eff=eff, lengths=lengths,
        fw=fw, bw=bw, h_cat=h_cat, lstm_mask=lstm_mask, h_drop=h_drop,
        conv=conv, z=z, a_pre=a_pre, a=a, probs=probs,
    )
    return probs, cache


def loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy; probabilities are floored at 1e-12 inside log."""
    picked = probs[np.arange(len(labels)), labels]
    return float(np.mean(-np.log(np.maximum(picked, 1e-12))))


def backward(
    params: NetworkParams,
    batch: Batch,
    cache: ForwardCache,
    freeze: FreezeMask = ALL_LAYERS,
) -> dict[str, np.ndarray]:
    """Gradients of the mean cross-entropy for every parameter array.

    Frozen layers come back as exact zeros.  The cache must come from a
    forward pass over these same params.
    """
    if cache.params is not params:
        raise ValueError("cache was built from different params")
    if batch.labels is None:
        raise ValueError("backward needs labels in the batch")
    B = cache.probs.shape[0]
    slope = params.leaky_slope
    grads = {n: np.zeros_like(a) for n, a in params.arrays.items()}

    dlogits = cache.probs.copy()
    dlogits[np.arange(B), batch.labels] -= 1.0
    dlogits /= B

    grads["out_W"] = cache.a.T @ dlogits
    grads["out_b"] = dlogits.sum(axis=0)
    da = dlogits @ params.arrays["out_W"].T
    da_pre = da * _leaky_grad(cache.a_pre, slope)
    grads["dense_W"] = cache.z.T @ da_pre
    grads["dense_b"] = da_pre.sum(axis=0)
    dz = da_pre @ params.arrays["dense_W"].T

    width = 2 * params.hidden
    d_h_drop = np.zeros_like(cache.h_drop)
    offset = 0
    for k in params.kernels:
        tr = cache.conv[k]
        d_pooled_drop = dz[:, offset : offset + params.filters]
        offset += params.filters
        d_pooled = (
            d_pooled_drop * tr.pool_mask if tr.pool_mask is not None else d_pooled_drop
        )
        p = tr.pre.shape[1]
        dact = np.zeros((B, p, params.filters))
        np.put_along_axis(dact, tr.arg[:, None, :], d_pooled[:, None, :], axis=1)
        dpre = dact * _leaky_grad(tr.pre, slope)
        cols = _windows(cache.h_drop, k)
        grads[f"conv{k}_W"] = np.einsum("bpi,bpf->if", cols, dpre)
        grads[f"conv{k}_b"] = dpre.sum(axis=(0, 1))
        dcols = dpre @ params.arrays[f"conv{k}_W"].T
        for j in range(k):
            d_h_drop[:, j : j + p] += dcols[:, :, j * width : (j + 1) * width]

    d_h_cat = d_h_drop * cache.lstm_mask if cache.lstm_mask is not None else d_h_drop
    H = params.hidden
    for direction, tr, rev in (("fw", cache.fw, False), ("bw", cache.bw, True)):
        dW, dU, db = _lstm_direction_backward(
            cache.emb, cache.eff,
            params.arrays[f"lstm_{direction}_W"], params.arrays[f"lstm_{direction}_U"],
            tr, d_h_cat[:, :, :H] if direction == "fw" else d_h_cat[:, :, H:],
            reverse=rev,
        )
        grads[f"lstm_{direction}_W"] = dW
        grads[f"lstm_{direction}_U"] = dU
        grads[f"lstm_{direction}_b"] = db

    for name in grads:
        if layer_of(name) not in freeze.trainable:
            grads[name] = np.zeros_like(grads[name])
    return grads


@dataclass
class OptimizerState:
    """Nadam state: per-array first and second moments plus schedule."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    m_prod: float = 1.0
    lr: float = 0.002
    beta1: float = 0.99
    beta2: float = 0.999
    eps: float = 1e-8
    schedule_decay: float = 0.004

    @classmethod
    def for_params(cls, params: NetworkParams, lr: float = 0.002, **kwargs) -> "OptimizerState":
        return cls(
            m={n: np.zeros_like(a) for n, a in params.arrays.items()},
            v={n: np.zeros_like(a) for n, a in params.arrays.items()},
            lr=lr,
            **kwargs,
        )


def _momentum(state: OptimizerState, t: int) -> float:
    return state.beta1 * (1.0 - 0.5 * 0.96 ** (t * state.schedule_decay))


def step(
    params: NetworkParams,
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    freeze: FreezeMask = ALL_LAYERS,
) -> tuple[NetworkParams, OptimizerState]:
    """One Nadam update in place over the trainable layer groups.

    Uses the momentum-schedule variant: each step blends the bias
    corrected current gradient with the next step's look-ahead momentum.
    Frozen arrays and their moments stay bit-identical.
    """
    if not freeze.trainable:
        raise ValueError("freeze mask selects no trainable layers")
    names = [n for n in params.arrays if layer_of(n) in freeze.trainable]
    for n in names:
        if not np.isfinite(grads[n]).all():
            raise ValueError(f"non-finite gradient in {n!r} (layer {layer_of(n)})")
    state.t += 1
    t = state.t
    mu_t = _momentum(state, t)
    mu_next = _momentum(state, t + 1)
    m_prod = state.m_prod * mu_t
    m_prod_next = m_prod * mu_next
    state.m_prod = m_prod
    v_corr = 1.0 - state.beta2**t
    for n in names:
        g = grads[n]
        m = state.m[n]
        v = state.v[n]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        g_hat = g / (1.0 - m_prod)
        m_hat = m / (1.0 - m_prod_next)
        m_bar = (1.0 - mu_t) * g_hat + mu_next * m_hat
        params.arrays[n] -= state.lr * m_bar / (np.sqrt(v / v_corr) + state.eps)
    return params, state


def predict(params: NetworkParams, batch: Batch) -> np.ndarray:
    """Eval-mode class predictions, ties to the lowest class id."""
    probs, _ = forward(params, batch, mode="eval")
    return probs.argmax(axis=1)


def gradient_check(
    params: NetworkParams,
    batch: Batch,
    freeze: FreezeMask = ALL_LAYERS,
    eps: float = 1e-5,
    samples_per_array: int = 8,
    seed: int = 0,
    mode: str = "train",
    dropout_seed: int = 0,
) -> float:
    """Largest relative error between analytic and central-difference grads.

    Checks a random sample of indices in every trainable array.  The
    relative error denominator is floored at 1e-6 so finite-difference
    cancellation noise on near-zero gradients does not register.
    """
    if batch.labels is None:
        raise ValueError("gradient check needs labels")
    probs, cache = forward(params, batch, mode=mode, dropout_seed=dropout_seed)
    grads = backward(params, batch, cache, freeze)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in params.arrays:
        if layer_of(name) not in freeze.trainable:
            continue
        arr = params.arrays[name]
        count = min(samples_per_array, arr.size)
        flat_idx = rng.choice(arr.size, size=count, replace=False)
        for i in flat_idx:
            ij = np.unravel_index(i, arr.shape)
            orig = arr[ij]
            arr[ij] = orig + eps
            up = loss(forward(params, batch, mode=mode, dropout_seed=dropout_seed)[0], batch.labels)
            arr[ij] = orig - eps
            down = loss(forward(params, batch, mode=mode, dropout_seed=dropout_seed)[0], batch.labels)
            arr[ij] = orig
            numeric = (up - down) / (2.0 * eps)
            analytic = grads[name][ij]
            denom = max(abs(analytic), abs(numeric), 1e-6)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst


def _arch_dict(params: NetworkParams) -> dict:
    return {
        "n_classes": params.n_classes,
        "cluster_width": params.cluster_width,
        "embed_dim": params.embed_dim,
        "hidden": params.hidden,
        "filters": params.filters,
        "dense": params.dense,
        "kernels": list(params.kernels),
        "leaky_slope": params.leaky_slope,
    }


def save_checkpoint(
    path: str, params: NetworkParams, state: OptimizerState | None = None
) -> None:
    """Write params (and optionally optimizer state) as raw float64.

    Layout: magic, format version, JSON header length, JSON header
    (shapes and scalars), then every array's little-endian float64 bytes
    in header order.  Round-trips are bit-exact.
    """
    arrays = [(name, params.arrays[name]) for name in params.arrays]
    header: dict = {
        "arch": _arch_dict(params),
        "arrays": [[n, list(a.shape)] for n, a in arrays],
    }
    blobs = [a for _, a in arrays]
    if state is not None:
        slots = [(f"m.{n}", state.m[n]) for n in params.arrays]
        slots += [(f"v.{n}", state.v[n]) for n in params.arrays]
        header["optimizer"] = {
            "t": state.t,
            "m_prod": state.m_prod,
            "lr": state.lr,
            "beta1": state.beta1,
            "beta2": state.beta2,
            "eps": state.eps,
            "schedule_decay": state.schedule_decay,
            "slots": [[n, list(a.shape)] for n, a in slots],
        }
        blobs += [a for _, a in slots]
    else:
        header["optimizer"] = None
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(struct.pack("<Q", len(head)))
        fh.write(head)
        for blob in blobs:
            fh.write(np.ascontiguousarray(blob, dtype="<f8").tobytes())


def load_checkpoint(path: str) -> tuple[NetworkParams, OptimizerState | None]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(_MAGIC) + 12 or data[: len(_MAGIC)] != _MAGIC:
        raise DataError(f"{path}: not a network checkpoint")
    off = len(_MAGIC)
    (version,) = struct.unpack_from("<I", data, off)
    off += 4
    if version != _VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    (head_len,) = struct.unpack_from("<Q", data, off)
    off += 8
    if off + head_len > len(data):
        raise DataError(f"{path}: truncated checkpoint header")
    try:
        header = json.loads(data[off : off + head_len].decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError):
        raise DataError(f"{path}: corrupt checkpoint header") from None
    off += head_len

    def read_arrays(specs: Iterable[tuple[str, list[int]]]) -> dict[str, np.ndarray]:
        nonlocal off
        out: dict[str, np.ndarray] = {}
        for name, shape in specs:
            n_items = int(np.prod(shape)) if shape else 1
            n_bytes = 8 * n_items
            if off + n_bytes > len(data):
                raise DataError(f"{path}: truncated checkpoint data at array {name!r}")
            out[name] = (
                np.frombuffer(data[off : off + n_bytes], dtype="<f8")
                .astype(np.float64)
                .reshape(shape)
            )
            off += n_bytes
        return out

    arch = header["arch"]
    arrays = read_arrays(header["arrays"])
    params = NetworkParams(
        arrays=arrays,
        n_classes=int(arch["n_classes"]),
        cluster_width=int(arch["cluster_width"]),
        embed_dim=int(arch["embed_dim"]),
        hidden=int(arch["hidden"]),
        filters=int(arch["filters"]),
        dense=int(arch["dense"]),
        kernels=tuple(arch["kernels"]),
        leaky_slope=float(arch["leaky_slope"]),
    )
    state = None
    opt = header.get("optimizer")
    if opt is not None:
        slots = read_arrays(opt["slots"])
        state = OptimizerState(
            m={n[2:]: a for n, a in slots.items() if n.startswith("m.")},
            v={n[2:]: a for n, a in slots.items() if n.startswith("v.")},
            t=int(opt["t"]),
            m_prod=float(opt["m_prod"]),
            lr=float(opt["lr"]),
            beta1=float(opt["beta1"]),
            beta2=float(opt["beta2"]),
            eps=float(opt["eps"]),
            schedule_decay=float(opt["schedule_decay"]),
        )
    if off != len(data):
        raise DataError(f"{path}: {len(data) - off} trailing bytes after checkpoint data")
    return params, state
