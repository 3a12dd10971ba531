import importlib.metadata

from lateralguard.exceptions import LateralGuardException, ValidationError, InputOutputError
from lateralguard.graph import (
	BipartiteAccessGraph, CompromiseProbabilities, EntityIndex, HostAppFlows, InducedHostMatrix, PropagationOperator,
	SecurityPosture, build_host_app_flows, build_user_host_graph, induced_host_matrix, propagation_operator
)
from lateralguard.spectral import LeadingEigenpair, leading_eigenpair_nonnegative, leading_eigenpair_symmetric
from lateralguard.reachability import host_app_cascade, tripartite_cascade, user_host_cascade
from lateralguard.segmentation import SegmentationPlan, apply_segmentation, degree_first_segment, greedy_segment
from lateralguard.hardening import (
	EdgeHardeningPlan, NodeHardeningPlan, apply_edge_plan, apply_node_plan, greedy_edge_harden, greedy_node_harden,
	node_scores
)
from lateralguard.config import RunConfig, load_config

try:
	__version__ = importlib.metadata.version("lateralguard")
except importlib.metadata.PackageNotFoundError:
	__version__ = ""
__author__ = "LateralGuard contributors"
__package_name__ = "lateralguard"
__project_name__ = "LateralGuard"
__description__ = "Lateral-movement reachability, segmentation and hardening on user-host-application graphs."
__url__ = ""
__email__ = ""
__license__ = "MIT License"
__all__ = [
	"LateralGuardException",
	"ValidationError",
	"InputOutputError",
	"EntityIndex",
	"BipartiteAccessGraph",
	"HostAppFlows",
	"CompromiseProbabilities",
	"SecurityPosture",
	"InducedHostMatrix",
	"PropagationOperator",
	"build_user_host_graph",
	"build_host_app_flows",
	"induced_host_matrix",
	"propagation_operator",
	"LeadingEigenpair",
	"leading_eigenpair_symmetric",
	"leading_eigenpair_nonnegative",
	"user_host_cascade",
	"host_app_cascade",
	"tripartite_cascade",
	"SegmentationPlan",
	"greedy_segment",
	"degree_first_segment",
	"apply_segmentation",
	"EdgeHardeningPlan",
	"NodeHardeningPlan",
	"greedy_edge_harden",
	"greedy_node_harden",
	"node_scores",
	"apply_edge_plan",
	"apply_node_plan",
	"RunConfig",
	"load_config",
]
