"""
Configuration records for trace generation, the GBDT learner and the HR-Cache window.
"""

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, Optional

from hrcache_sim.core.errors import ConfigError

HAZARD_MODES = ("kernel", "poisson")
HRO_MODES = ("hr_e", "hr_fc")
# how calibrate_sampling charges labeling work against the op budget
SAMPLING_COSTS = ("window", "sampled")


def _from_dict(cls, data: Dict[str, Any]):
    """Build a flat dataclass from a dict, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{cls.__name__} expects an object, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"Unknown {cls.__name__} keys: {', '.join(sorted(unknown))}")
    return cls(**data)


@dataclass(frozen=True)
class InterarrivalModel:
    """Per-object inter-request process: poisson(rate) or generalized_pareto(sigma, xi)."""

    kind: str = "poisson"
    rate: float = 1.0
    sigma: float = 1.0
    xi: float = 0.0

    @classmethod
    def poisson(cls, rate: float) -> "InterarrivalModel":
        return cls(kind="poisson", rate=rate)

    @classmethod
    def generalized_pareto(cls, sigma: float, xi: float) -> "InterarrivalModel":
        return cls(kind="generalized_pareto", sigma=sigma, xi=xi)

    def validate(self) -> None:
        if self.kind == "poisson":
            if not self.rate > 0:
                raise ConfigError(f"poisson rate must be > 0, got {self.rate}")
        elif self.kind == "generalized_pareto":
            if not self.sigma > 0:
                raise ConfigError(f"generalized_pareto sigma must be > 0, got {self.sigma}")
            if self.xi < 0:
                raise ConfigError(f"generalized_pareto xi must be >= 0, got {self.xi}")
        else:
            raise ConfigError(f"Unknown interarrival model: {self.kind}")


@dataclass(frozen=True)
class SizeModel:
    """Per-object size: constant(bytes) or lognormal(mu, sigma_ln)."""

    kind: str = "constant"
    bytes: int = 1
    mu: float = 0.0
    sigma_ln: float = 1.0

    @classmethod
    def constant(cls, size: int) -> "SizeModel":
        return cls(kind="constant", bytes=size)

    @classmethod
    def lognormal(cls, mu: float, sigma_ln: float) -> "SizeModel":
        return cls(kind="lognormal", mu=mu, sigma_ln=sigma_ln)

    def validate(self) -> None:
        if self.kind == "constant":
            if self.bytes < 1:
                raise ConfigError(f"constant size must be >= 1, got {self.bytes}")
        elif self.kind == "lognormal":
            if self.sigma_ln < 0:
                raise ConfigError(f"lognormal sigma_ln must be >= 0, got {self.sigma_ln}")
        else:
            raise ConfigError(f"Unknown size model: {self.kind}")


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of one synthetic traffic class."""

    n_objects: int
    n_requests: int
    popularity_alpha: float = 0.8
    interarrival: InterarrivalModel = field(default_factory=InterarrivalModel)
    size_model: SizeModel = field(default_factory=SizeModel)
    seed: int = 0

    def validate(self) -> None:
        if self.n_objects < 1 or self.n_requests < 1:
            raise ConfigError("n_objects and n_requests must be >= 1")
        # alpha = 0 is accepted as the uniform-popularity limit
        if self.popularity_alpha < 0:
            raise ConfigError(f"popularity_alpha must be >= 0, got {self.popularity_alpha}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed}")
        self.interarrival.validate()
        self.size_model.validate()

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SyntheticConfig":
        data = dict(data)
        if "interarrival" in data:
            data["interarrival"] = _from_dict(InterarrivalModel, data["interarrival"])
        if "size_model" in data:
            data["size_model"] = _from_dict(SizeModel, data["size_model"])
        config = _from_dict(cls, data)
        config.validate()
        return config

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class GbdtParams:
    """Gradient boosting hyper-parameters."""

    learning_rate: float = 0.1
    max_depth: int = 50
    n_trees: int = 100
    max_bins: int = 255
    objective: str = "logistic"
    min_samples_leaf: int = 20
    l2_leaf_reg: float = 1.0

    def validate(self) -> None:
        if not 0 < self.learning_rate <= 1:
            raise ConfigError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if not 2 <= self.max_bins <= 255:
            raise ConfigError(f"max_bins must be in [2, 255], got {self.max_bins}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ConfigError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.l2_leaf_reg < 0:
            raise ConfigError(f"l2_leaf_reg must be >= 0, got {self.l2_leaf_reg}")
        if self.objective != "logistic":
            raise ConfigError(f"Only the logistic objective is supported, got {self.objective}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GbdtParams":
        params = _from_dict(cls, data)
        params.validate()
        return params


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window training settings of the HR-Cache policy."""

    multiplier: float = 3.0
    op_budget: int = 5_000_000
    batch_size: int = 128
    decay: float = 0.9
    look_back: bool = True
    hazard_mode: str = "kernel"
    label_mode: str = "hr_fc"
    sampling_cost: str = "sampled"
    min_labels: int = 200
    bandwidth_scale: float = 1.0
    # 0 disables hazard quantization
    hazard_grid_points: int = 128
    random_ties: bool = False

    def validate(self) -> None:
        if not self.multiplier > 0:
            raise ConfigError(f"window multiplier must be > 0, got {self.multiplier}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.op_budget < 1:
            raise ConfigError(f"op_budget must be >= 1, got {self.op_budget}")
        if not 0 < self.decay < 1:
            raise ConfigError(f"decay must be in (0, 1), got {self.decay}")
        if self.hazard_mode not in HAZARD_MODES:
            raise ConfigError(f"hazard_mode must be one of {HAZARD_MODES}, got {self.hazard_mode}")
        if self.label_mode not in HRO_MODES:
            raise ConfigError(f"label_mode must be one of {HRO_MODES}, got {self.label_mode}")
        if self.sampling_cost not in SAMPLING_COSTS:
            raise ConfigError(f"sampling_cost must be one of {SAMPLING_COSTS}, got {self.sampling_cost}")
        if not self.bandwidth_scale > 0:
            raise ConfigError(f"bandwidth_scale must be > 0, got {self.bandwidth_scale}")
        if self.hazard_grid_points < 0:
            raise ConfigError("hazard_grid_points must be >= 0")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WindowConfig":
        config = _from_dict(cls, data)
        config.validate()
        return config


def load_json_config(path: str) -> Dict[str, Any]:
    """Read a JSON configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e


def load_simulation_config(path: Optional[str]) -> Dict[str, Any]:
    """
    Load the optional simulation config file.

    Recognized sections are "window" (WindowConfig keys) and "gbdt" (GbdtParams keys).
    """
    if not path:
        return {"window": WindowConfig(), "gbdt": GbdtParams()}
    data = load_json_config(path)
    unknown = set(data) - {"window", "gbdt"}
    if unknown:
        raise ConfigError(f"Unknown config sections: {', '.join(sorted(unknown))}")
    return {
        "window": WindowConfig.from_dict(data.get("window", {})),
        "gbdt": GbdtParams.from_dict(data.get("gbdt", {})),
    }
