"""
Run configuration.

Defaults live on the models; a YAML file overlays them and command-line flags
overlay the YAML. The resolved configuration is echoed into every output.
"""
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union
import logging

import pydantic
import yaml
from pydantic import BaseModel, Field

from .exceptions import InputOutputError, MalformedInputError, ValidationError
from .experiments.models import SyntheticSpec

logger = logging.getLogger(__name__)


class EigenSettings(BaseModel):
	"""Power iteration controls."""
	tolerance: float = Field(default=1e-10, gt=0)
	max_iterations: int = Field(default=10_000, ge=1)
	dense_fallback_limit: int = Field(default=2000, ge=0)

	def options(self) -> Dict[str, Any]:
		return self.model_dump()


class HardeningSettings(BaseModel):
	epsilon: float = Field(default=1e-5, ge=0.0, lt=1.0)
	alpha: float = Field(default=1.0, ge=0.0, le=1.0)


class ExperimentSettings(BaseModel):
	trials: int = Field(default=10, ge=1)
	seed: int = Field(default=2017, ge=0)
	nonzero_fraction: float = Field(default=0.1, ge=0.0, le=1.0)
	compromise_fraction: float = Field(default=0.001, ge=0.0, le=1.0)
	budget_fractions: List[float] = Field(default_factory=lambda: [0.0, 0.05, 0.1, 0.15, 0.2])
	reachability_model: Literal["tripartite", "host-app"] = "tripartite"  # cascade used to score hardening curves


class BenchmarkSettings(BaseModel):
	branching: int = Field(default=4, ge=1)
	rounds: int = Field(default=8, ge=1)
	origin: int = Field(default=0, ge=0)


class RunConfig(BaseModel):
	"""Fully resolved settings of one run."""
	eigen: EigenSettings = Field(default_factory=EigenSettings)
	hardening: HardeningSettings = Field(default_factory=HardeningSettings)
	experiment: ExperimentSettings = Field(default_factory=ExperimentSettings)
	benchmark: BenchmarkSettings = Field(default_factory=BenchmarkSettings)
	synthetic: SyntheticSpec = Field(default_factory=SyntheticSpec)
	output_dir: str = "results"

	def overlay(self, updates: Dict[str, Any]) -> "RunConfig":
		"""Return a copy with ``updates`` merged in section by section."""
		return build_config(_merge(self.model_dump(mode="json"), updates))


def _merge(base: Dict[str, Any], updates: Dict[str, Any]) -> Dict[str, Any]:
	merged = dict(base)
	for key, value in updates.items():
		if isinstance(value, dict) and isinstance(merged.get(key), dict):
			merged[key] = _merge(merged[key], value)
		elif value is not None:
			merged[key] = value
	return merged


def build_config(data: Dict[str, Any]) -> RunConfig:
	try:
		return RunConfig(**data)
	except pydantic.ValidationError as e:
		raise ValidationError(f"Invalid configuration: {e}")


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
	"""
	Load a RunConfig, overlaying the YAML file at ``path`` on the defaults.

	Raises:
		InputOutputError: The file cannot be read
		MalformedInputError: The file is not valid YAML or not a mapping
		ValidationError: A value is out of range
	"""
	config = RunConfig()
	if path is None:
		return config
	path = Path(path)
	try:
		with open(path, encoding="utf-8") as f:
			data = yaml.safe_load(f)
	except OSError as e:
		raise InputOutputError(path, str(e))
	except yaml.YAMLError as e:
		mark = getattr(e, "problem_mark", None)
		raise MalformedInputError(path, mark.line + 1 if mark else 0, f"invalid YAML ({e})")
	if not data:
		return config
	if not isinstance(data, dict):
		raise MalformedInputError(path, 1, "configuration must be a mapping")
	logger.debug(f"Loaded configuration overlay from {path}")
	return config.overlay(data)
