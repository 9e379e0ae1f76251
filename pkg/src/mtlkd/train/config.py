"""Training configuration and the flat ``key = value`` config file format."""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, fields, replace

from mtlkd.core.variant import SEEN_VARIANTS
from mtlkd.policy.student import StudentConfig
from mtlkd.policy.teacher import TeacherConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    instances_per_epoch: int = 512
    batch_size: int = 64
    per_task_batch: int = 32
    n: int = 10
    lr0: float = 1e-3
    lr_halve_after: int = 300
    lr_period: int = 100
    seed: int = 1234
    multi_start: int = 8
    tasks: tuple[str, ...] = SEEN_VARIANTS
    alpha: float = 1.0
    kd_mode: str = "sample"
    embed_dim: int = 16
    heads: int = 2
    ff_hidden: int = 32
    encoder_layers: int = 0  # 0 = architecture default
    decoder_layers: int = 0
    preset: str = "toy"

    def __post_init__(self) -> None:
        if self.kd_mode not in ("sample", "greedy"):
            raise ConfigError(f"kd_mode must be sample or greedy, got {self.kd_mode!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.epochs < 0 or self.instances_per_epoch < 1 or self.batch_size < 1:
            raise ConfigError("epochs, instances_per_epoch and batch_size must be positive")

    @property
    def kd_batch_size(self) -> int:
        return self.per_task_batch * len(self.tasks)

    def teacher_config(self) -> TeacherConfig:
        return TeacherConfig(
            encoder_layers=self.encoder_layers or 6,
            embed_dim=self.embed_dim,
            heads=self.heads,
            ff_hidden=self.ff_hidden,
        )

    def student_config(self) -> StudentConfig:
        return StudentConfig(
            encoder_layers=self.encoder_layers or 1,
            decoder_layers=self.decoder_layers or 6,
            embed_dim=self.embed_dim,
            heads=self.heads,
            ff_hidden=self.ff_hidden,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tasks"] = list(self.tasks)
        return d

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in sorted(self.to_dict().items()))

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def override(self, **kv) -> "TrainConfig":
        return replace(self, **{k: _coerce(k, v) for k, v in kv.items()})


PRESETS = {
    "toy": TrainConfig(),
    "paper-teacher": TrainConfig(
        epochs=4000, instances_per_epoch=20000, batch_size=128, n=100, lr0=1e-4,
        lr_halve_after=10**9, multi_start=100, embed_dim=128, heads=8, ff_hidden=512, preset="paper-teacher",
    ),
    "paper-student": TrainConfig(
        epochs=850, instances_per_epoch=24000, per_task_batch=250, n=100, lr0=1e-4,
        embed_dim=128, heads=8, ff_hidden=512, preset="paper-student",
    ),
}


def _fmt(v) -> str:
    if isinstance(v, (list, tuple)):
        return ",".join(str(x) for x in v)
    return str(v).lower() if isinstance(v, bool) else str(v)


_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def _coerce(key: str, raw):
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    if not isinstance(raw, str):
        return tuple(raw) if key == "tasks" else raw
    typ = _TYPES[key]
    try:
        if key == "tasks":
            return tuple(t.strip() for t in raw.split(",") if t.strip())
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        if typ == "bool":
            return raw.strip().lower() in ("1", "true", "yes")
        return raw.strip()
    except ValueError as e:
        raise ConfigError(f"bad value for {key}: {raw!r}") from e


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def load_config(path=None, overrides: dict | None = None) -> TrainConfig:
    """Preset (from the file's ``preset`` key, default toy), then file values, then overrides."""
    values: dict = {}
    if path is not None:
        with open(path) as fh:
            values.update(parse_config_text(fh.read()))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    preset = values.pop("preset", "toy")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}")
    try:
        return PRESETS[preset].override(**values)
    except TypeError as e:
        raise ConfigError(str(e)) from e


__all__ = ["ConfigError", "PRESETS", "TrainConfig", "load_config", "parse_config_text"]
