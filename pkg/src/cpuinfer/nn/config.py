from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from ..tensor import InvalidArgument

MAX_LEN = 512


@dataclass(frozen=True)
class EncoderConfig:
    layers: int = 12
    heads: int = 12
    d_model: int = 768
    d_ff: int = 3072
    d_k: int = 64
    max_len: int = MAX_LEN
    layernorm_eps: float = 1e-12
    vocab: int = 1024
    seed: int = 0

    def __post_init__(self):
        for name in ("layers", "heads", "d_model", "d_ff", "d_k", "max_len", "vocab"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise InvalidArgument(f"config.{name} must be an integer >= 1, got {v!r}")
        if self.heads * self.d_k != self.d_model:
            raise InvalidArgument(f"heads * d_k must equal d_model ({self.heads} * {self.d_k} != {self.d_model})")
        if self.max_len > MAX_LEN:
            raise InvalidArgument(f"max_len must be <= {MAX_LEN}, got {self.max_len}")
        if not self.layernorm_eps > 0:
            raise InvalidArgument(f"layernorm_eps must be positive, got {self.layernorm_eps}")

    @classmethod
    def from_dict(cls, doc: dict) -> "EncoderConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise InvalidArgument(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path) -> "EncoderConfig":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise InvalidArgument(f"{path}: expected a JSON object")
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return asdict(self)

    def linear_shapes(self) -> list[tuple[int, int]]:
        """Distinct (in, out) weight shapes of the encoder's linear layers."""
        return [(self.d_model, self.d_model), (self.d_model, self.d_ff), (self.d_ff, self.d_model)]


BERT_BASE = EncoderConfig()
BERT_LARGE = EncoderConfig(layers=24, heads=16, d_model=1024, d_ff=4096, d_k=64)
DISTIL = EncoderConfig(layers=6)

PRESETS = {"bert-base": BERT_BASE, "bert-large": BERT_LARGE, "distil": DISTIL}


def load_config(name_or_path: str) -> EncoderConfig:
    """Preset name or path to a JSON document."""
    if name_or_path in PRESETS:
        return PRESETS[name_or_path]
    path = Path(name_or_path)
    if not path.is_file():
        raise InvalidArgument(f"unknown config {name_or_path!r}: not a preset ({', '.join(PRESETS)}) nor a file")
    return EncoderConfig.from_json(path)
