"""Model hyperparameters and presets."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..dataset.features import token_width

VARIANTS = ("standard", "no_attn", "history")
HORIZON_OFFSETS_MS = (0.0, 125.0, 250.0)


class ConfigError(ValueError):
    """Invalid model or training configuration."""


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 256
    num_layers: int = 4
    mlp_hidden: int = 1024
    num_players: int = 10
    horizons: int = 3
    action_dim: int = 97
    variant: str = "standard"
    history_depth: int = 2
    # Map extent (x, y): normalized positions are scaled back to map units for the spatial encoding.
    position_scale: tuple = (1600.0, 1600.0)
    horizon_offsets_ms: tuple = HORIZON_OFFSETS_MS

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        for name in ("embed_dim", "num_layers", "mlp_hidden", "num_players", "horizons", "action_dim"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        # Each horizontal axis gets half the width, itself made of sin/cos pairs.
        if self.embed_dim % 4:
            raise ConfigError("embed_dim must be a multiple of 4")
        if self.variant == "history" and self.history_depth <= 0:
            raise ConfigError("history variant needs history_depth >= 1")
        if len(self.horizon_offsets_ms) != self.horizons:
            raise ConfigError("one temporal offset per horizon is required")

    @property
    def input_history(self):
        return self.history_depth if self.variant == "history" else 0

    @property
    def token_width(self):
        return token_width(self.input_history)

    def to_dict(self):
        d = asdict(self)
        d["position_scale"] = list(self.position_scale)
        d["horizon_offsets_ms"] = list(self.horizon_offsets_ms)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = cls.__dataclass_fields__
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown model config keys {sorted(unknown)}")
        for key in ("position_scale", "horizon_offsets_ms"):
            if key in d:
                d[key] = tuple(float(v) for v in d[key])
        return cls(**d)


PRESETS = {
    "desk": dict(embed_dim=64, num_layers=2, mlp_hidden=256),
    "default": dict(embed_dim=256, num_layers=4, mlp_hidden=1024),
}


def preset(name, **overrides):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return ModelConfig(**{**PRESETS[name], **overrides})


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 1024
    learning_rate: float = 4e-5
    seed: int = 0
    augment_std: float = 20.0
    eval_batch_size: int = 2048

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size <= 0 or self.learning_rate <= 0:
            raise ConfigError("epochs >= 0, batch_size > 0 and learning_rate > 0 are required")


# Training recipe used with the desk preset (see README for why it differs from the full-scale one).
DESK_TRAIN = dict(epochs=5, batch_size=256, learning_rate=1e-3)
