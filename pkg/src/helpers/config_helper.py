import hashlib
import json
import os
from os import path
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar, Union

from pydantic import BaseModel, Field, ValidationError

from helpers.errors import ConfigError
from py_models.configs import ExperimentConfig, GenConfig, PredictorJobConfig

M = TypeVar('M', bound=BaseModel)


class ProjectSettings(BaseModel):
    data_dir: str = 'data'
    runs_dir: str = 'runs'
    datasets_dir: str = 'datasets'
    logs_dir: str = 'logs'
    default_jobs: int = Field(default=1, ge=1)


class ConfigHelper:
    """Project-wide settings from the root config.json; environment variables win"""

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = config_path or path.join(path.dirname(__file__), '../../config.json')
        self.configuration = self._load()

    def _load(self) -> ProjectSettings:
        settings = ProjectSettings()
        if path.exists(self.config_path):
            with open(self.config_path, 'r') as f:
                settings = ProjectSettings(**json.load(f))
        if os.getenv('FRZ_DATA_DIR'):
            settings.data_dir = os.environ['FRZ_DATA_DIR']
        return settings

    def get_config(self, key: str) -> Any:
        return getattr(self.configuration, key, None)

    @property
    def config(self) -> ProjectSettings:
        return self.configuration


def _key_path(error: Dict[str, Any]) -> str:
    return '.'.join(str(part) for part in error['loc']) or '<root>'


def parse_model(model: Type[M], data: Any, source: str = '<config>') -> M:
    """Validate `data` into `model`, turning the first validation failure into a ConfigError with its key path"""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(f"{first['msg']} (in {source})", key_path=_key_path(first)) from e


def read_json(config_path: Union[str, Path]) -> Dict[str, Any]:
    """Top-level JSON object of a config file"""
    config_path = Path(config_path)
    if not config_path.exists():
        raise ConfigError(f"configuration file not found: {config_path}")
    try:
        data = json.loads(config_path.read_text(encoding='utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"{config_path} is not valid UTF-8 JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{config_path} must hold a JSON object, got {type(data).__name__}")
    return data


def check_paths(cfg: Union[ExperimentConfig, PredictorJobConfig]) -> None:
    if isinstance(cfg, ExperimentConfig) and cfg.predictor and not Path(cfg.predictor).exists():
        raise ConfigError(f"predictor file not found: {cfg.predictor}", key_path='predictor')
    if isinstance(cfg, PredictorJobConfig):
        for i, dataset in enumerate(cfg.datasets):
            if not Path(dataset).exists():
                raise ConfigError(f"dataset file not found: {dataset}", key_path=f"datasets.{i}")


def load_config(config_path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Experiment config with defaults filled; `overrides` replace top-level keys before validation"""
    data = read_json(config_path)
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = parse_model(ExperimentConfig, data, str(config_path))
    check_paths(cfg)
    return cfg


def load_gen_config(config_path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> GenConfig:
    data = read_json(config_path)
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    return parse_model(GenConfig, data, str(config_path))


def load_predictor_job(config_path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> PredictorJobConfig:
    data = read_json(config_path)
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = parse_model(PredictorJobConfig, data, str(config_path))
    check_paths(cfg)
    return cfg


def canonical_json(cfg: BaseModel, exclude: Optional[set] = None) -> str:
    return json.dumps(cfg.model_dump(mode='json', exclude=exclude), sort_keys=True, separators=(',', ':'))


def dump_config(cfg: BaseModel, config_path: Optional[Union[str, Path]] = None) -> str:
    """Pretty JSON of the validated config, written to `config_path` when given"""
    text = json.dumps(cfg.model_dump(mode='json'), indent=4, sort_keys=True)
    if config_path is not None:
        config_path = Path(config_path)
        config_path.parent.mkdir(parents=True, exist_ok=True)
        config_path.write_text(text + '\n', encoding='utf-8')
    return text


def config_digest(cfg: BaseModel, exclude: Optional[set] = None) -> str:
    """sha256 of the canonical JSON; fields from the model's get_skip_fields() are left out by default"""
    if exclude is None:
        skip = getattr(type(cfg), 'get_skip_fields', None)
        exclude = skip() if skip else set()
    return hashlib.sha256(canonical_json(cfg, exclude).encode('utf-8')).hexdigest()
