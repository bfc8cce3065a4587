"""Model and training configuration, loadable from TOML or JSON."""

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .errors import ConfigError


@dataclass
class PqBertConfig:
    """Architecture and pretraining hyperparameters.

    D_model and M are the only numbers fixed by the representation
    design (sub-embedding width is D_model / M); the encoder shape and
    the corruption scheme are desk-scale defaults.
    """

    M: int = 8
    k_star: int = 256
    P: int = 100
    D_model: int = 256
    layers: int = 4
    heads: int = 4
    ff_dim: int = 512
    dropout: float = 0.1
    mask_ratio: float = 0.15
    mask_token_frac: float = 0.8
    random_frac: float = 0.1
    keep_frac: float = 0.1
    pooling: str = "mean"
    positional: str = "sinusoidal"
    exclude_invalid_in_training: bool = False
    seed: int = 0
    epochs: int = 30
    lr: float = 1e-4
    batch_size: int = 32

    def validate(self) -> None:
        if self.M < 1 or self.k_star < 2 or self.P < 1:
            raise ConfigError("M, k_star and P must be positive (k_star >= 2)")
        if self.D_model % self.M != 0:
            raise ConfigError(f"D_model={self.D_model} not divisible by M={self.M}")
        if not 0.0 < self.mask_ratio < 1.0:
            raise ConfigError("mask_ratio must lie in (0, 1)")
        fracs = self.mask_token_frac + self.random_frac + self.keep_frac
        if abs(fracs - 1.0) > 1e-9:
            raise ConfigError("corruption fractions must sum to 1")
        if self.pooling not in ("mean", "max"):
            raise ConfigError(f"unknown pooling {self.pooling!r}")
        if self.positional not in ("sinusoidal", "learned"):
            raise ConfigError(f"unknown positional encoding {self.positional!r}")
        if self.layers < 1 or self.heads < 1 or self.ff_dim < 1:
            raise ConfigError("encoder shape values must be positive")
        if self.D_model % self.heads != 0:
            raise ConfigError("D_model must be divisible by the head count")

    @property
    def sub_dim(self) -> int:
        return self.D_model // self.M

    @property
    def mask_id(self) -> int:
        return self.k_star

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def load_config(path: str | None, overrides: dict | None = None) -> PqBertConfig:
    doc: dict = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        if str(path).endswith(".toml"):
            doc = tomllib.loads(text)
        else:
            doc = json.loads(text)
    known = {f.name for f in dataclasses.fields(PqBertConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, value in (overrides or {}).items():
        if value is not None:
            doc[key] = value
    cfg = PqBertConfig(**doc)
    cfg.validate()
    return cfg
