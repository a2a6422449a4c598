#!/usr/bin/env python3
"""
Training and experiment configuration

Flat `key = value` config files (read with python-dotenv), overridable by CLI
flags of the same names. The SHOESTRING_DATA_DIR environment variable gives
the default dataset root.
"""

import hashlib
import json
import logging
import os
import typing
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
from dotenv import dotenv_values

from graph_filters import FilterKind, FilterSpec, default_filter_spec
from metric_head import DEFAULT_LAMBDA, SimilarityKind
from shoestring_errors import ConfigurationError

logger = logging.getLogger(__name__)

METHODS = ('gcn', 'igcn_rnm', 'igcn_ar', 'lp', 'glp_rnm', 'glp_ar')
MODES = ('baseline', 'shoestring', 'both')
EMBEDDING_LAYERS = ('final', 'hidden')
WEIGHT_DECAY_SCOPES = ('first', 'all')
LAPLACIANS = ('unnormalized', 'normalized')
DEFAULT_BUDGETS = [1, 2, 3, 4, 5, 20]

# config-file spelling -> attribute name
KEY_ALIASES = {'lambda': 'lam'}

FILTER_KIND_BY_METHOD = {
    'igcn_rnm': FilterKind.RNM,
    'glp_rnm': FilterKind.RNM,
    'igcn_ar': FilterKind.AR,
    'glp_ar': FilterKind.AR,
}


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run"""
    method: str = 'gcn'
    shoestring: bool = False
    metric: str = 'cos'
    lam: Optional[float] = None
    lr: float = 0.01
    dropout: float = 0.5
    weight_decay: float = 5e-4
    weight_decay_scope: str = 'first'
    epochs: int = 200
    hidden: int = 16
    filter_k: Optional[int] = None
    filter_alpha: Optional[float] = None
    lp_alpha: float = 1.0
    seed: int = 0
    embedding_layer: str = 'final'
    stop_gradient_centroids: bool = False
    laplacian: str = 'unnormalized'
    cg_tol: float = 1e-8

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"Unknown method '{self.method}'. Available: {', '.join(METHODS)}")
        try:
            SimilarityKind(self.metric)
        except ValueError:
            raise ConfigurationError(f"Unknown metric '{self.metric}'. Available: cos, l1, l2") from None
        if not self.lr > 0:
            raise ConfigurationError(f"lr must be positive, got {self.lr}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be at least 1, got {self.epochs}")
        if self.hidden < 1:
            raise ConfigurationError(f"hidden must be at least 1, got {self.hidden}")
        if self.lam is not None and self.lam < 0:
            raise ConfigurationError(f"lambda must be non-negative, got {self.lam}")
        if self.weight_decay < 0:
            raise ConfigurationError(f"weight_decay must be non-negative, got {self.weight_decay}")
        if not self.lp_alpha > 0:
            raise ConfigurationError(f"lp_alpha must be positive, got {self.lp_alpha}")
        if not self.cg_tol > 0:
            raise ConfigurationError(f"cg_tol must be positive, got {self.cg_tol}")
        for name, value, allowed in (
            ('embedding_layer', self.embedding_layer, EMBEDDING_LAYERS),
            ('weight_decay_scope', self.weight_decay_scope, WEIGHT_DECAY_SCOPES),
            ('laplacian', self.laplacian, LAPLACIANS),
        ):
            if value not in allowed:
                raise ConfigurationError(f"{name} must be one of {', '.join(allowed)}, got '{value}'")

    @property
    def similarity_kind(self) -> SimilarityKind:
        return SimilarityKind(self.metric)

    @property
    def effective_lambda(self) -> float:
        """Configured lambda, or the per-metric default"""
        return self.lam if self.lam is not None else DEFAULT_LAMBDA[self.similarity_kind]

    @property
    def normalized_laplacian(self) -> bool:
        return self.laplacian == 'normalized'

    def filter_spec(self, labels_per_class: int) -> FilterSpec:
        """Filter for this method; unset strengths follow the label budget"""
        kind = FILTER_KIND_BY_METHOD.get(self.method, FilterKind.NONE)
        spec = default_filter_spec(kind, labels_per_class)
        try:
            return replace(
                spec,
                k=self.filter_k if self.filter_k is not None else spec.k,
                alpha=self.filter_alpha if self.filter_alpha is not None else spec.alpha,
            )
        except ConfigurationError as e:
            raise ConfigurationError(f"Invalid filter strength for {self.method}: {e}") from None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def fingerprint(self) -> str:
        return settings_fingerprint(self.to_dict())


def _default_data_dir() -> str:
    return os.getenv('SHOESTRING_DATA_DIR', 'data')


@dataclass(frozen=True)
class ExperimentConfig:
    """A method x mode x metric x budget x seed grid on one dataset"""
    dataset: str = 'cora'
    data_dir: str = field(default_factory=_default_data_dir)
    methods: List[str] = field(default_factory=lambda: list(METHODS))
    modes: str = 'both'
    metrics: List[str] = field(default_factory=lambda: [k.value for k in SimilarityKind])
    labels_per_class: List[int] = field(default_factory=lambda: list(DEFAULT_BUDGETS))
    seeds: int = 20
    base_seed: int = 0
    out_dir: str = 'results'
    jobs: int = 1
    row_normalize: bool = True
    sbm_n: int = 400
    sbm_classes: int = 4
    sbm_p_in: float = 0.10
    sbm_p_out: float = 0.01
    sbm_feature_dim: int = 16
    sbm_noise: float = 0.5
    sbm_seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        for method in self.methods:
            if method not in METHODS:
                raise ConfigurationError(f"Unknown method '{method}'. Available: {', '.join(METHODS)}")
        for metric in self.metrics:
            try:
                SimilarityKind(metric)
            except ValueError:
                raise ConfigurationError(f"Unknown metric '{metric}'. Available: cos, l1, l2") from None
        if self.modes not in MODES:
            raise ConfigurationError(f"modes must be one of {', '.join(MODES)}, got '{self.modes}'")
        if not self.methods or not self.labels_per_class:
            raise ConfigurationError("The grid needs at least one method and one label budget")
        if self.modes != 'baseline' and not self.metrics:
            raise ConfigurationError("Shoestring runs need at least one metric")
        if any(b < 1 for b in self.labels_per_class):
            raise ConfigurationError(f"Label budgets must be positive, got {self.labels_per_class}")
        if self.seeds < 1:
            raise ConfigurationError(f"seeds must be at least 1, got {self.seeds}")
        if self.jobs < 1:
            raise ConfigurationError(f"jobs must be at least 1, got {self.jobs}")

    @property
    def seed_list(self) -> List[int]:
        """Run seeds: base_seed + run_index"""
        return [self.base_seed + i for i in range(self.seeds)]

    @property
    def shoestring_modes(self) -> List[bool]:
        return {'baseline': [False], 'shoestring': [True], 'both': [False, True]}[self.modes]

    def to_dict(self) -> Dict[str, Any]:
        settings = asdict(self)
        settings['train'] = self.train.to_dict()
        return settings

    def fingerprint(self) -> str:
        return settings_fingerprint(self.to_dict())

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> 'ExperimentConfig':
        """Build from flat key/value pairs (strings or typed values)"""
        experiment_hints = typing.get_type_hints(cls)
        train_hints = typing.get_type_hints(TrainConfig)
        experiment_args: Dict[str, Any] = {}
        train_args: Dict[str, Any] = {}

        for raw_key, raw_value in values.items():
            if raw_value is None:
                continue
            key = normalize_key(raw_key)
            if key in experiment_hints and key != 'train':
                experiment_args[key] = _convert(key, raw_value, experiment_hints[key])
            elif key in train_hints:
                train_args[key] = _convert(key, raw_value, train_hints[key])
            else:
                raise ConfigurationError(f"Unknown configuration key '{raw_key}'")

        return cls(**experiment_args, train=TrainConfig(**train_args))

    @classmethod
    def from_config(cls, config_file: Optional[str] = None,
                    overrides: Optional[Mapping[str, Any]] = None) -> 'ExperimentConfig':
        """
        Load a config file and apply overrides

        Args:
            config_file: flat key = value file (optional)
            overrides: values that win over the file (None entries are ignored)

        Returns:
            ExperimentConfig
        """
        values: Dict[str, Any] = {}
        if config_file:
            path = Path(config_file)
            if not path.is_file():
                raise ConfigurationError(f"Config file not found: {config_file}")
            values.update({normalize_key(k): v for k, v in dotenv_values(path).items()})
            logger.info(f"Loaded {len(values)} settings from {config_file}")
        for key, value in (overrides or {}).items():
            if value is not None:
                values[normalize_key(key)] = value
        return cls.from_mapping(values)


def normalize_key(key: str) -> str:
    key = key.strip().lower().replace('-', '_')
    return KEY_ALIASES.get(key, key)


def _parse_bool(key: str, value: Any) -> bool:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    text = str(value).strip().lower()
    if text in ('true', 'yes', '1', 'on'):
        return True
    if text in ('false', 'no', '0', 'off'):
        return False
    raise ConfigurationError(f"'{key}' expects true/false, got '{value}'")


def _convert(key: str, value: Any, hint) -> Any:
    """Convert a raw config value to the annotated field type"""
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin is typing.Union and type(None) in args:
        if isinstance(value, str) and value.strip().lower() in ('', 'none', 'default'):
            return None
        hint = next(a for a in args if a is not type(None))
        origin = typing.get_origin(hint)
        args = typing.get_args(hint)

    try:
        if origin in (list, List):
            items = value if isinstance(value, (list, tuple)) else [v for v in str(value).split(',') if v.strip()]
            return [_convert(key, item.strip() if isinstance(item, str) else item, args[0]) for item in items]
        if hint is bool:
            return _parse_bool(key, value)
        if hint is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if hint is float:
            return float(value)
        return str(value).strip()
    except (TypeError, ValueError):
        raise ConfigurationError(f"'{key}' expects {getattr(hint, '__name__', hint)}, got '{value}'") from None


def settings_fingerprint(settings: Dict[str, Any]) -> str:
    payload = json.dumps(settings, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()[:16]
