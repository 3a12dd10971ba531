"""
Records produced and consumed by the experiment protocols.
"""
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from ..exceptions import BrokenTraceError, InfeasibleSpecError

Step = Tuple[int, int, int]


class DegreeModel(str, Enum):
	"""How host popularity is distributed in synthetic graphs."""
	UNIFORM = "uniform"
	POWER_LAW = "power-law"


class ExperimentKind(str, Enum):
	SEGMENTATION = "seg"
	EDGE = "edge"
	NODE = "node"
	JOINT = "joint"
	BENCHMARK = "benchmark"


class SyntheticSpec(BaseModel):
	"""Shape of a synthetic tripartite instance."""
	users: int = Field(default=600, ge=1)
	hosts: int = Field(default=450, ge=2)
	apps: int = Field(default=3, ge=1)
	user_host_edges: int = Field(default=850, ge=0)
	flows: int = Field(default=630, ge=0)
	seed: int = Field(default=2017, ge=0, lt=2**64)
	degree_model: DegreeModel = DegreeModel.POWER_LAW
	exponent: float = 2.5
	services: Optional[int] = Field(default=None, ge=1)  # applications each host serves; None serves all

	@property
	def access_capacity(self) -> int:
		return self.users * self.hosts

	@property
	def flow_capacity(self) -> int:
		served = self.apps if self.services is None else self.services
		return served * self.hosts * (self.hosts - 1)

	def check_feasible(self) -> None:
		"""
		Fewer access edges than users is allowed; the remaining users hold no access.

		Raises:
			InfeasibleSpecError: A count exceeds its relation's capacity, hosts serve more applications
				than exist, or the exponent is not above 1
		"""
		if self.services is not None and self.services > self.apps:
			raise InfeasibleSpecError(f"Hosts cannot serve {self.services} of only {self.apps} applications")
		if self.user_host_edges > self.access_capacity:
			raise InfeasibleSpecError(
				f"{self.user_host_edges} access edges requested, only {self.access_capacity} user-host pairs exist"
			)
		if self.flows > self.flow_capacity:
			raise InfeasibleSpecError(f"{self.flows} flows requested, only {self.flow_capacity} triples exist")
		if self.degree_model == DegreeModel.POWER_LAW and self.exponent <= 1:
			raise InfeasibleSpecError(f"Power-law exponent must exceed 1, got {self.exponent}")


class AttackTrace(BaseModel):
	"""Lateral-movement paths replayed from one origin host."""
	origin: int
	paths: List[List[Step]] = Field(default_factory=list)
	stalled: bool = False  # origin had no outgoing flows

	@property
	def path_count(self) -> int:
		return len(self.paths)

	def reached_hosts(self) -> List[int]:
		return sorted({self.origin} | {dst for path in self.paths for _, _, dst in path})

	def validate_chain(self) -> None:
		"""
		Raises:
			BrokenTraceError: A path does not start at the origin or two consecutive steps do not chain
		"""
		for number, path in enumerate(self.paths):
			if not path:
				raise BrokenTraceError(f"Path {number} is empty")
			if path[0][0] != self.origin:
				raise BrokenTraceError(f"Path {number} starts at host {path[0][0]}, not at origin {self.origin}")
			for position in range(1, len(path)):
				if path[position - 1][2] != path[position][0]:
					raise BrokenTraceError(f"Path {number} breaks between steps {position - 1} and {position}")


class CurvePoint(BaseModel):
	"""Mean and spread of reachability for one strategy at one budget."""
	strategy: str
	budget: int = Field(ge=0)
	budget_fraction: float = Field(ge=0.0)
	mean_reachability: float = Field(ge=0.0, le=1.0)
	std_reachability: float = Field(ge=0.0)


class PathStatistics(BaseModel):
	"""Per-budget containment statistics of a trace replay."""
	strategy: str
	budget: int
	mean_path_length: float
	fully_contained_paths: int


class ExperimentResult(BaseModel):
	"""Reachability-versus-budget curves over randomized trials."""
	kind: ExperimentKind
	strategies: List[str] = Field(default_factory=list)
	budget_axis: List[int] = Field(default_factory=list)
	budget_fractions: List[float] = Field(default_factory=list)
	curves: List[CurvePoint] = Field(default_factory=list)
	trials: int = 0
	seed: int = 0
	per_trial: Dict[str, List[List[float]]] = Field(default_factory=dict)  # strategy -> trial -> budget
	new_account_fractions: Dict[str, List[float]] = Field(default_factory=dict)
	path_statistics: List[PathStatistics] = Field(default_factory=list)
	notes: List[str] = Field(default_factory=list)
	config: Optional[dict] = None

	def curve(self, strategy: str) -> List[float]:
		"""Mean reachability of ``strategy`` along the budget axis."""
		return [point.mean_reachability for point in self.curves if point.strategy == strategy]
