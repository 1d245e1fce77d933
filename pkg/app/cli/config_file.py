"""
Experiment config files - YAML validated by pydantic schemas

Unknown keys are rejected everywhere; a config file must validate
completely before any computation starts.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.config import config
from app.core.agents import CutoffMode, HyperConfig
from app.core.exceptions import ConfigurationError
from app.core.harness import EvalMode, ExperimentSpec, PairingMode
from app.core.hyperstudy import SweepSpec, power_grid

logger = logging.getLogger(__name__)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class EnvSection(_Strict):
    id: str
    params: Dict[str, Any] = Field(default_factory=dict)


class EvalSection(_Strict):
    mode: str = "online"
    interval: int = 0
    rollouts: int = 0
    episode_cap: int = Field(config.EVAL_EPISODE_CAP, ge=1)

    @field_validator("mode")
    @classmethod
    def check_mode(cls, v: str) -> str:
        if v not in ("online", "offline"):
            raise ValueError(f"eval mode must be online or offline, got {v}")
        return v


class ExperimentSection(_Strict):
    name: str = "experiment"
    env: EnvSection
    algorithm: str
    config: Dict[str, Any]
    step_budget: int = Field(..., ge=1)
    cutoff: Optional[int] = Field(None, ge=1)
    cutoff_mode: CutoffMode = CutoffMode.BOOTSTRAP
    eval: EvalSection = Field(default_factory=EvalSection)


class SeedsSection(_Strict):
    base_seed: int = Field(0, ge=0, lt=2 ** 64)
    runs: int = Field(30, ge=1)
    pairing: PairingMode = PairingMode.REPEATED_MEASURES


class GridSection(_Strict):
    base: float = 2.0
    lo_exp: int
    hi_exp: int

    @model_validator(mode="after")
    def check_range(self):
        if self.lo_exp > self.hi_exp:
            raise ValueError(f"lo_exp {self.lo_exp} exceeds hi_exp {self.hi_exp}")
        return self


class SweepSection(_Strict):
    parameter: str
    grid: Optional[GridSection] = None
    values: Optional[List[Any]] = None
    runs_per_config: int = Field(10, ge=1)

    @model_validator(mode="after")
    def check_values(self):
        if (self.grid is None) == (self.values is None):
            raise ValueError("sweep needs exactly one of grid or values")
        if self.values is not None and not self.values:
            raise ValueError("sweep values are empty")
        return self

    def value_list(self) -> List[Any]:
        if self.values is not None:
            return list(self.values)
        return power_grid(self.grid.base, self.grid.lo_exp, self.grid.hi_exp)


class AnalysisSection(_Strict):
    metric: str = "return_rate"
    method: str = "t"
    alpha: float = Field(0.05, gt=0, lt=1)
    beta: Optional[float] = Field(0.9, gt=0, lt=1)

    @field_validator("method")
    @classmethod
    def check_method(cls, v: str) -> str:
        if v not in ("t", "bootstrap", "bernstein", "tolerance"):
            raise ValueError(f"unknown interval method: {v}")
        return v


class ConfigFile(_Strict):
    """Top-level experiment config file"""
    output_dir: Optional[str] = None
    experiment: ExperimentSection
    seeds: SeedsSection = Field(default_factory=SeedsSection)
    sweep: Optional[SweepSection] = None
    analysis: AnalysisSection = Field(default_factory=AnalysisSection)

    def experiment_spec(self) -> ExperimentSpec:
        """Build and validate the ExperimentSpec"""
        e = self.experiment
        if e.eval.mode == "offline":
            eval_mode = EvalMode.offline(e.eval.interval, e.eval.rollouts, e.eval.episode_cap)
        else:
            eval_mode = EvalMode()
        spec = ExperimentSpec(
            env_id=e.env.id,
            algorithm=e.algorithm,
            config=HyperConfig.from_dict(e.config),
            step_budget=e.step_budget,
            env_params=dict(e.env.params),
            cutoff=e.cutoff,
            cutoff_mode=e.cutoff_mode,
            eval_mode=eval_mode,
        )
        return spec.validate()

    def sweep_spec(self) -> SweepSpec:
        if self.sweep is None:
            raise ConfigurationError("config file has no sweep section")
        return SweepSpec(axes={self.sweep.parameter: self.sweep.value_list()},
                         runs_per_config=self.sweep.runs_per_config)


def load_config_file(path: str) -> ConfigFile:
    """
    Read and validate a YAML config file

    Raises:
        ConfigurationError: unreadable file, bad YAML, or schema violations
    """
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigurationError(f"cannot read config file {path}: {e}")
    except yaml.YAMLError as e:
        raise ConfigurationError(f"invalid YAML in {path}: {e}")
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config file {path} must contain a mapping")

    try:
        parsed = ConfigFile.model_validate(raw)
    except ValidationError as e:
        raise ConfigurationError(f"invalid config file {path}:\n{e}")
    parsed.experiment_spec()
    logger.debug(f"Loaded config {path}: {parsed.experiment.name}")
    return parsed
