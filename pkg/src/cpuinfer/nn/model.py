"""BERT-shaped encoder forward pass with per-category timing."""
from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field
from time import perf_counter_ns

import numpy as np

from ..dispatch import DispatchCache, KernelRegistry, default_registry
from ..gemm import BASELINE, GemmTask, PartitionParams, TransposeMode, gemm_batched
from ..tensor import DTYPE, InvalidArgument, Matrix, as_matrix, make_rng, random_matrix
from ..timing import TimingBreakdown
from .config import EncoderConfig
from .functional import LayerNormParams, gelu, layer_norm, softmax_rows, tanh
from .linear import LinearLayer, ProfileCache, TransposeFlags, init_linear, linear_forward, profile_linear, wall_timer


@dataclass(frozen=True)
class AttentionWeights:
    wq: LinearLayer
    wk: LinearLayer
    wv: LinearLayer
    wo: LinearLayer


@dataclass(frozen=True)
class FfnWeights:
    w1: LinearLayer
    w2: LinearLayer


@dataclass(frozen=True)
class LayerWeights:
    attention: AttentionWeights
    ffn: FfnWeights
    ln1: LayerNormParams
    ln2: LayerNormParams


@dataclass
class Model:
    config: EncoderConfig
    embedding: Matrix
    layers: list[LayerWeights]
    pooler: LinearLayer
    dispatch_cache: DispatchCache = field(default_factory=DispatchCache)
    registry: KernelRegistry = field(default_factory=default_registry)

    def linear_layers(self) -> list[LinearLayer]:
        out = []
        for lw in self.layers:
            a, f = lw.attention, lw.ffn
            out += [a.wq, a.wk, a.wv, a.wo, f.w1, f.w2]
        out.append(self.pooler)
        return out


class _NullTiming:
    def scope(self, module, sublayer):
        return contextlib.nullcontext()


_NULL = _NullTiming()


def _linear(model: Model | None, x, layer, threads, params):
    if model is None:
        return linear_forward(x, layer, threads, params)
    return linear_forward(x, layer, threads, params, cache=model.dispatch_cache, registry=model.registry)


def split_heads(m: Matrix, heads: int) -> list[Matrix]:
    d_k = m.shape[1] // heads
    return [np.ascontiguousarray(m[:, h * d_k : (h + 1) * d_k]) for h in range(heads)]


def self_attention(
    x: Matrix,
    w: AttentionWeights,
    cfg: EncoderConfig,
    threads: int = 1,
    params: PartitionParams = BASELINE,
    *,
    timing=_NULL,
    model: Model | None = None,
) -> Matrix:
    """Multi-head attention: per-head softmax(Q K^T / sqrt(d_k)) V, then W^O."""
    x = as_matrix(x, "x")
    if x.shape[1] != cfg.d_model:
        raise InvalidArgument(f"self_attention: input width {x.shape[1]} != d_model {cfg.d_model}")
    with timing.scope("linear", "attention.self"):
        q = _linear(model, x, w.wq, threads, params)
        k = _linear(model, x, w.wk, threads, params)
        v = _linear(model, x, w.wv, threads, params)
    with timing.scope("other", "attention.self"):
        qh, kh, vh = split_heads(q, cfg.heads), split_heads(k, cfg.heads), split_heads(v, cfg.heads)
    with timing.scope("bmm", "attention.self"):
        scores = gemm_batched([GemmTask(a, b, TransposeMode.NT) for a, b in zip(qh, kh)], params, threads)
    with timing.scope("other", "attention.self"):
        scale = DTYPE(1.0 / math.sqrt(cfg.d_k))
        for s in scores:
            s *= scale
    with timing.scope("softmax", "attention.self"):
        probs = [softmax_rows(s) for s in scores]
    with timing.scope("bmm", "attention.self"):
        ctx = gemm_batched([GemmTask(p, b, TransposeMode.NN) for p, b in zip(probs, vh)], params, threads)
    with timing.scope("other", "attention.self"):
        concat = np.concatenate(ctx, axis=1)
    with timing.scope("linear", "attention.dense"):
        return _linear(model, concat, w.wo, threads, params)


def feed_forward(
    x: Matrix,
    w: FfnWeights,
    threads: int = 1,
    params: PartitionParams = BASELINE,
    *,
    timing=_NULL,
    model: Model | None = None,
) -> Matrix:
    x = as_matrix(x, "x")
    if x.shape[1] != w.w1.in_dim:
        raise InvalidArgument(f"feed_forward: input width {x.shape[1]} != {w.w1.in_dim}")
    with timing.scope("linear", "ffn.dense1"):
        h = _linear(model, x, w.w1, threads, params)
    with timing.scope("activation", "ffn.other"):
        h = gelu(h)
    with timing.scope("linear", "ffn.dense2"):
        return _linear(model, h, w.w2, threads, params)


def encoder_layer(
    x: Matrix,
    lw: LayerWeights,
    cfg: EncoderConfig,
    threads: int = 1,
    params: PartitionParams = BASELINE,
    *,
    timing=_NULL,
    model: Model | None = None,
) -> Matrix:
    """Post-norm block: LN(x + attn(x)), then LN(y + ffn(y))."""
    a = self_attention(x, lw.attention, cfg, threads, params, timing=timing, model=model)
    with timing.scope("other", "attention.other"):
        a += x
    with timing.scope("layernorm", "attention.layernorm"):
        y = layer_norm(a, lw.ln1)
    f = feed_forward(y, lw.ffn, threads, params, timing=timing, model=model)
    with timing.scope("other", "ffn.other"):
        f += y
    with timing.scope("layernorm", "ffn.layernorm"):
        return layer_norm(f, lw.ln2)


def _init_layer_norm(width: int, eps: float, rng) -> LayerNormParams:
    gamma = np.ones(width, DTYPE) + random_matrix(1, width, rng)[0] * DTYPE(0.1)
    beta = random_matrix(1, width, rng)[0] * DTYPE(0.1)
    return LayerNormParams(gamma, beta, eps)


def build_model(
    cfg: EncoderConfig,
    seed: int | None = None,
    threads: int = 1,
    cache: ProfileCache | None = None,
    profile: bool = True,
    *,
    timer=wall_timer,
    params: PartitionParams = BASELINE,
) -> Model:
    """Deterministic weights from ``seed`` (default ``cfg.seed``).

    With ``profile`` on, each distinct linear shape is profiled once through
    ``cache``; with it off every flag selects the transposed weight.
    """
    seed = cfg.seed if seed is None else seed
    cache = cache if cache is not None else ProfileCache()
    rng = make_rng(seed)
    default_flags = TransposeFlags.uniform(True)

    def flags_for(in_dim, out_dim):
        if not profile:
            return default_flags
        return profile_linear(in_dim, out_dim, threads, cache, timer, params)

    def linear(in_dim, out_dim):
        return init_linear(in_dim, out_dim, rng, flags_for(in_dim, out_dim))

    embedding = random_matrix(cfg.vocab, cfg.d_model, rng)
    embedding *= DTYPE(math.sqrt(12.0))
    d, ff = cfg.d_model, cfg.d_ff
    layers = []
    for _ in range(cfg.layers):
        attn = AttentionWeights(linear(d, d), linear(d, d), linear(d, d), linear(d, d))
        ffn = FfnWeights(linear(d, ff), linear(ff, d))
        ln1 = _init_layer_norm(d, cfg.layernorm_eps, rng)
        ln2 = _init_layer_norm(d, cfg.layernorm_eps, rng)
        layers.append(LayerWeights(attn, ffn, ln1, ln2))
    pooler = linear(d, d)
    return Model(cfg, embedding, layers, pooler)


def embed(model: Model, token_ids) -> Matrix:
    ids = np.asarray(token_ids)
    cfg = model.config
    if ids.ndim != 1 or ids.size < 1:
        raise InvalidArgument("token_ids must be a non-empty 1-D sequence")
    if ids.size > cfg.max_len:
        raise InvalidArgument(f"sequence length {ids.size} exceeds max_len {cfg.max_len}")
    if not np.issubdtype(ids.dtype, np.integer):
        raise InvalidArgument("token ids must be integers")
    if ids.min() < 0 or ids.max() >= cfg.vocab:
        raise InvalidArgument(f"token id out of vocabulary range [0, {cfg.vocab})")
    return np.ascontiguousarray(model.embedding[ids])


def model_forward(
    model: Model,
    token_ids,
    threads: int = 1,
    params: PartitionParams = BASELINE,
    *,
    clock=perf_counter_ns,
) -> tuple[Matrix, TimingBreakdown]:
    """Embed, run every encoder layer, pool the first token through tanh(pooler)."""
    cfg = model.config
    timing = TimingBreakdown(clock=clock)
    with timing.total():
        with timing.scope("other", "other"):
            x = embed(model, token_ids)
        for lw in model.layers:
            x = encoder_layer(x, lw, cfg, threads, params, timing=timing, model=model)
        with timing.scope("other", "other"):
            first = x[:1].copy()
        with timing.scope("linear", "other"):
            pooled = _linear(model, first, model.pooler, threads, params)
        with timing.scope("activation", "other"):
            pooled = tanh(pooled)
    return pooled, timing
