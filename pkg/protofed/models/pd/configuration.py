""" Experiment configuration and preset resolution """

import os
from pathlib import Path
from typing import Any, Dict, Optional, Type

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ...errors import ConfigError
from ...utils.utils import parse_addr
from ..enums.all import Mode
from .dataset import DatasetSpec
from .model import LcnnConfig
from .rounds import RoundConfig

CONFIG_PATH = Path(__file__).resolve().parents[2] / "config.yml"
DEFAULT_PORT = 7355


def default_port() -> int:
    return int(os.environ.get("PROTOFED_PORT", DEFAULT_PORT))


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "metadata": {
                "label": "Experiment",
                "section": "experiment",
            }
        }
    )

    mode: Mode = Mode.FEDHPB
    preset: Optional[str] = None
    seed: Optional[int] = Field(None, description="Overrides dataset and round seeds when set")
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    rounds: RoundConfig = Field(default_factory=RoundConfig)
    model: LcnnConfig = Field(default_factory=LcnnConfig)
    transport: str = Field("inproc", description="inproc | tcp | tcp:host:port")
    output_dir: Path = Path("runs/latest")
    save_checkpoints: bool = False

    @field_validator("transport")
    @classmethod
    def _check_transport(cls, value: str) -> str:
        if value == "inproc" or value == "tcp":
            return value
        if value.startswith("tcp:"):
            parse_addr(value[len("tcp:"):])
            return value
        raise ValueError(f"Unknown transport {value!r}, expected inproc or tcp[:host:port]")

    @model_validator(mode="after")
    def _sync_sections(self):
        # the dataset is the source of truth for shapes and client count
        if self.seed is not None:
            self.dataset.seed = self.seed
            self.rounds.seed = self.seed
        self.model.input_dim = self.dataset.channels
        self.model.window = self.dataset.window
        self.rounds.clients = self.dataset.clients
        return self

    @property
    def tcp_address(self) -> Optional[tuple]:
        if self.transport == "inproc":
            return None
        if self.transport == "tcp":
            return "127.0.0.1", default_port()
        return parse_addr(self.transport[len("tcp:"):])

    @property
    def ablation(self) -> Dict[str, str]:
        return {
            "loss_second_term": self.rounds.loss.second_term.value,
            "activation": self.model.activation.value,
            "optimizer": self.rounds.optimizer.value,
            "aggregation": self.rounds.aggregation.value,
        }


def deep_merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def canonical_keys(model: Type[BaseModel], data: dict) -> dict:
    """Rename field aliases (rounds.loss.lambda) to field names so every source merges on one key."""
    result = dict(data)
    for name, info in model.model_fields.items():
        alias = info.alias
        if alias and alias != name and alias in result:
            if name in result:
                raise ConfigError(f"{model.__name__}: both {name!r} and its alias {alias!r} are set")
            result[name] = result.pop(alias)
        section = info.annotation
        if isinstance(result.get(name), dict) and isinstance(section, type) and issubclass(section, BaseModel):
            result[name] = canonical_keys(section, result[name])
    return result


def load_yaml(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as file:
            data = yaml.safe_load(file) or {}
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a key/value mapping")
    return data


def load_presets(path=CONFIG_PATH) -> Dict[str, dict]:
    return load_yaml(path).get("presets", {})


def resolve_config(
    preset: Optional[str] = None,
    config_file: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Build an ExperimentConfig from defaults, a preset, a YAML file and overrides.

    Later sources win; nested sections are merged key by key.
    """
    data: dict = {}
    if preset:
        presets = load_presets()
        if preset not in presets:
            raise ConfigError(f"Unknown preset {preset!r}, known: {', '.join(sorted(presets))}")
        data = deep_merge(data, canonical_keys(ExperimentConfig, presets[preset]))
        data["preset"] = preset
    if config_file:
        data = deep_merge(data, canonical_keys(ExperimentConfig, load_yaml(config_file)))
    if overrides:
        data = deep_merge(data, canonical_keys(ExperimentConfig, overrides))
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
