"""Encoder building blocks: config, functional ops, linear layers and the model."""
from .config import BERT_BASE, BERT_LARGE, DISTIL, PRESETS, EncoderConfig, load_config
from .functional import LayerNormParams, gelu, layer_norm, softmax_rows
from .linear import (
    LinearLayer,
    ProfileCache,
    TransposeFlags,
    bucket_index,
    linear_forward,
    profile_linear,
    wall_timer,
)
from .model import (
    AttentionWeights,
    FfnWeights,
    LayerWeights,
    Model,
    build_model,
    encoder_layer,
    feed_forward,
    model_forward,
    self_attention,
)

__all__ = [
    "AttentionWeights",
    "BERT_BASE",
    "BERT_LARGE",
    "DISTIL",
    "EncoderConfig",
    "FfnWeights",
    "LayerNormParams",
    "LayerWeights",
    "LinearLayer",
    "Model",
    "PRESETS",
    "ProfileCache",
    "TransposeFlags",
    "bucket_index",
    "build_model",
    "encoder_layer",
    "feed_forward",
    "gelu",
    "layer_norm",
    "linear_forward",
    "load_config",
    "model_forward",
    "profile_linear",
    "self_attention",
    "softmax_rows",
    "wall_timer",
]
