"""Experiment configuration and its INI file form.

A config file has one section per nested group and ``[run]`` for top-level
values; nested groups inside a section use dotted keys::

    [meta]
    version = 1

    [run]
    regime = multi_stage
    seed = 0

    [full_stage]
    epochs = 50

    [gaze_net]
    backbone.layers = 3,4,6,3

Overrides use the same dotted names: ``full_stage.epochs=1``, ``seed=3``.
"""

from __future__ import annotations

import configparser
import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path

from ..models import BackboneConfig, GazeNetConfig, HeatmapNetConfig
from ..supervision import LossWeights

CONFIG_VERSION = 1
REGIMES = ("multi_stage", "end_to_end")


class ConfigError(ValueError):
    pass


@dataclass
class StageConfig:
    epochs: int
    batch_size: int
    lr: float = 1e-4
    weight_decay: float = 1e-4

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ConfigError("epochs and batch_size must be positive")
        if self.lr < 0 or self.weight_decay < 0:
            raise ConfigError("lr and weight_decay must be non-negative")


@dataclass
class TrainConfig:
    regime: str = "multi_stage"
    seed: int = 0
    use_full_body: bool = False
    blur_faces: bool = True
    augment: bool = True
    grad_clip: float = 0.0
    alpha: float = 3.0
    sigma: float = 3.0
    window_radius: int = 15
    gaze_stage: StageConfig = field(default_factory=lambda: StageConfig(epochs=30, batch_size=128))
    full_stage: StageConfig = field(default_factory=lambda: StageConfig(epochs=50, batch_size=32))
    loss: LossWeights = field(default_factory=LossWeights)
    gaze_net: GazeNetConfig = field(default_factory=GazeNetConfig)
    heatmap_net: HeatmapNetConfig = field(default_factory=HeatmapNetConfig)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        joints = 17 if self.use_full_body else 13
        if self.gaze_net.num_joints != joints:
            self.gaze_net = dataclasses.replace(self.gaze_net, num_joints=joints)
        if self.gaze_net.depth_size != self.heatmap_net.image_size:
            raise ConfigError("gaze_net.depth_size and heatmap_net.image_size must agree")

    @classmethod
    def tiny(cls) -> "TrainConfig":
        """Desk-scale preset: small encoders, larger learning rate, small batches."""
        backbone = BackboneConfig(layers=(1, 1, 1, 1), base_width=8)
        return cls(
            gaze_stage=StageConfig(epochs=30, batch_size=16, lr=1e-3),
            full_stage=StageConfig(epochs=30, batch_size=16, lr=1e-3),
            gaze_net=GazeNetConfig(
                pose_mlp_dims=(32, 64, 32),
                depth_mlp_dims=(128, 64, 32),
                attention_heads=4,
                attention_dim=32,
                attention_ff_dim=64,
                head_dims=(32, 3),
                dropout=0.1,
                backbone=backbone,
            ),
            heatmap_net=HeatmapNetConfig(decoder_channels=(64, 32, 16, 8), backbone=backbone),
        )


def _is_dataclass_type(tp) -> bool:
    return isinstance(tp, type) and dataclasses.is_dataclass(tp)


def to_flat(obj, prefix: str = "") -> dict[str, object]:
    out: dict[str, object] = {}
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        key = prefix + f.name
        if dataclasses.is_dataclass(value):
            out.update(to_flat(value, key + "."))
        else:
            out[key] = value
    return out


def _parse(tp, raw: str):
    origin = typing.get_origin(tp)
    if tp is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if tp in (int, float, str):
        return tp(raw.strip())
    if origin is tuple:
        (item_tp, *_rest) = typing.get_args(tp)
        return tuple(item_tp(x.strip()) for x in raw.split(",") if x.strip())
    raise TypeError(f"unsupported config type {tp}")


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def from_flat(cls, flat: dict[str, str], prefix: str = ""):
    """Build ``cls`` from dotted string values; missing keys keep their defaults."""
    hints = typing.get_type_hints(cls)
    kwargs = {}
    for f in dataclasses.fields(cls):
        key = prefix + f.name
        tp = hints[f.name]
        if _is_dataclass_type(tp):
            if any(k.startswith(key + ".") for k in flat):
                kwargs[f.name] = from_flat(tp, flat, key + ".")
        elif key in flat:
            try:
                kwargs[f.name] = _parse(tp, flat[key])
            except (TypeError, ValueError) as e:
                raise ConfigError(f"bad value for {key}: {e}") from e
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{cls.__name__}: {e}") from e


def known_keys(cls=TrainConfig, prefix: str = "") -> set[str]:
    hints = typing.get_type_hints(cls)
    keys: set[str] = set()
    for f in dataclasses.fields(cls):
        tp = hints[f.name]
        if _is_dataclass_type(tp):
            keys |= known_keys(tp, prefix + f.name + ".")
        else:
            keys.add(prefix + f.name)
    return keys


def with_overrides(cfg: TrainConfig, overrides: list[str]) -> TrainConfig:
    """Apply ``key=value`` overrides; unknown keys raise :class:`ConfigError`."""
    flat = {k: _format(v) for k, v in to_flat(cfg).items()}
    valid = known_keys()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        if key.startswith("run."):
            key = key[4:]
        if key not in valid:
            raise ConfigError(f"unknown config key {key!r}")
        flat[key] = value
    return from_flat(TrainConfig, flat)


def save_config(cfg: TrainConfig, path) -> None:
    parser = configparser.ConfigParser()
    parser["meta"] = {"version": str(CONFIG_VERSION)}
    parser["run"] = {}
    for key, value in to_flat(cfg).items():
        section, _, rest = key.partition(".")
        if not rest:
            parser["run"][key] = _format(value)
        else:
            if not parser.has_section(section):
                parser.add_section(section)
            parser[section][rest] = _format(value)
    with open(path, "w") as fh:
        parser.write(fh)


def load_config(path) -> TrainConfig:
    parser = configparser.ConfigParser()
    if not parser.read(Path(path)):
        raise ConfigError(f"cannot read config {path}")
    version = parser.get("meta", "version", fallback=None)
    if version != str(CONFIG_VERSION):
        raise ConfigError(f"config version {version!r}, expected {CONFIG_VERSION}")
    items = []
    for section in parser.sections():
        if section == "meta":
            continue
        for key, value in parser[section].items():
            items.append(f"{key}={value}" if section == "run" else f"{section}.{key}={value}")
    return with_overrides(TrainConfig(), items)
