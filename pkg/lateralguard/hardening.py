"""
Edge and node hardening on the host-application graph.

Edge hardening lowers [P]_{kj} to a residual epsilon; node hardening raises a
host's level [a]_j to alpha_j. Greedy planners score candidates against the
leading eigenvector y of the propagation operator J.
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union
import logging

import numpy as np
import scipy.sparse as sp

from .exceptions import (
	BudgetError, InvalidEpsilonError, InvalidHardeningLevelError, PlanInconsistencyError, ShapeMismatchError,
	ValidationError
)
from .graph import CompromiseProbabilities, HostAppFlows, PropagationOperator, SecurityPosture, propagation_operator
from .spectral import LeadingEigenpair, leading_eigenpair_nonnegative

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-5
DEFAULT_ALPHA = 1.0
RESIDUE_CUTOFF = 1e-14

AppHost = Tuple[int, int]
EpsilonSpec = Union[float, Mapping[AppHost, float]]
AlphaSpec = Union[float, Mapping[int, float]]

EDGE_STRATEGIES = ("phi", "phi-recalc", "max-p")
NODE_SCORES = ("rho", "rho-a", "rho-j", "min-a")


@dataclass(frozen=True)
class EdgeHardeningPlan:
	"""Ordered (application, host) edges lowered to their residual probabilities."""
	strategy: str
	hardened_edges: Tuple[AppHost, ...]
	epsilon: Dict[AppHost, float]
	resulting_P: CompromiseProbabilities
	selection_scores: Tuple[float, ...] = ()
	lambda_before: Optional[float] = None
	lambda_after: Optional[float] = None


@dataclass(frozen=True)
class NodeHardeningPlan:
	"""Ordered hosts raised to new hardening levels."""
	strategy: str
	hardened_hosts: Tuple[int, ...]
	alpha: Dict[int, float]
	resulting_posture: SecurityPosture
	selection_scores: Tuple[float, ...] = ()


def epsilon_for(eps: EpsilonSpec, edge: AppHost) -> float:
	if isinstance(eps, Mapping):
		return float(eps.get(edge, DEFAULT_EPSILON))
	return float(eps)


def alpha_for(alpha: AlphaSpec, host: int) -> float:
	if isinstance(alpha, Mapping):
		return float(alpha.get(host, DEFAULT_ALPHA))
	return float(alpha)


def _check_shapes(flows: HostAppFlows, p: CompromiseProbabilities) -> None:
	if p.shape != (flows.app_count, flows.host_count):
		raise ShapeMismatchError(f"P has shape {p.shape}, expected {(flows.app_count, flows.host_count)}")


def _incoming_mass(flows: HostAppFlows, y: np.ndarray) -> np.ndarray:
	"""K x N matrix with entry (k, j) = sum_i [A_k]_{ij} [y]_i."""
	return np.vstack([a_k.T @ y for a_k in flows.matrices]) if flows.app_count else np.zeros((0, flows.host_count))


def _incoming_pairs(flows: HostAppFlows) -> List[AppHost]:
	return sorted(set((k, dst) for _, k, dst in flows.triples))


def eligible_edges(flows: HostAppFlows, p: CompromiseProbabilities, eps: EpsilonSpec = DEFAULT_EPSILON) -> List[AppHost]:
	"""(k, j) pairs with at least one flow into j via k and [P]_{kj} > eps_kj, in lexicographic order."""
	_check_shapes(flows, p)
	return [(k, j) for k, j in _incoming_pairs(flows) if p.matrix[k, j] > epsilon_for(eps, (k, j))]


def _validated_epsilon(p: CompromiseProbabilities, edge: AppHost, eps: float) -> float:
	k, j = edge
	if eps < 0:
		raise InvalidEpsilonError(f"Residual probability for {edge} must be nonnegative, got {eps}")
	if eps >= p.matrix[k, j]:
		raise InvalidEpsilonError(f"Residual probability {eps} for {edge} is not below [P]_kj = {p.matrix[k, j]}")
	return eps


def edge_hardening_score(
	j: PropagationOperator,
	y: LeadingEigenpair,
	flows: HostAppFlows,
	p: CompromiseProbabilities,
	edge: AppHost,
	eps: float = DEFAULT_EPSILON
) -> float:
	"""
	Score phi((k, j)) = ([P]_{kj} - eps) [y]_j sum_i [A_k]_{ij} [y]_i.

	This is y^T Delta J_H y for H = {(k, j)}.

	Raises:
		InvalidEpsilonError: eps is negative or not below [P]_{kj}
	"""
	_check_shapes(flows, p)
	if j.host_count != flows.host_count:
		raise ShapeMismatchError(f"J covers {j.host_count} hosts, flows {flows.host_count}")
	k, host = edge
	eps = _validated_epsilon(p, edge, eps)
	vector = np.asarray(y.eigenvector, dtype=float)
	incoming = float(flows.matrices[k].getcol(host).toarray().reshape(-1) @ vector)
	return float((p.matrix[k, host] - eps) * vector[host] * incoming)


def edge_score_table(
	flows: HostAppFlows,
	p: CompromiseProbabilities,
	y: LeadingEigenpair,
	eps: EpsilonSpec = DEFAULT_EPSILON
) -> Dict[AppHost, float]:
	"""phi for every eligible edge."""
	vector = np.asarray(y.eigenvector, dtype=float)
	incoming = _incoming_mass(flows, vector)
	return {
		(k, j): float((p.matrix[k, j] - epsilon_for(eps, (k, j))) * vector[j] * incoming[k, j])
		for k, j in eligible_edges(flows, p, eps)
	}


def set_score_phi(
	flows: HostAppFlows,
	p: CompromiseProbabilities,
	y: LeadingEigenpair,
	edges: Sequence[AppHost],
	eps: EpsilonSpec = DEFAULT_EPSILON
) -> float:
	"""phi(H) = y^T Delta J_H y, the sum of the single-edge scores over distinct edges of H."""
	vector = np.asarray(y.eigenvector, dtype=float)
	delta = delta_probabilities(p, edges, eps)
	incoming = _incoming_mass(flows, vector)
	return float(np.sum(delta * incoming * vector[np.newaxis, :]))


def delta_probabilities(p: CompromiseProbabilities, edges: Sequence[AppHost], eps: EpsilonSpec = DEFAULT_EPSILON) -> np.ndarray:
	"""Reduction matrix Delta P with ([P]_{kj} - eps_kj) at every hardened (k, j)."""
	delta = np.zeros(p.shape)
	for edge in set(tuple(e) for e in edges):
		delta[edge] = p.matrix[edge] - _validated_epsilon(p, edge, epsilon_for(eps, edge))
	return delta


def efficient_J_update(
	j: PropagationOperator,
	flows: HostAppFlows,
	edge: AppHost,
	psi: float,
	eps: float
) -> PropagationOperator:
	"""
	Update J after lowering [P]_{k*j*} from psi to eps.

	Only row j* changes: [J]_{j*,i} decreases by (psi - eps) [A_{k*}]_{i,j*}.
	Residues below 1e-14 are dropped.
	"""
	k, host = edge
	sources = flows.sources_into(k, host)
	n = j.host_count
	if not len(sources) or psi == eps:
		return j
	correction = sp.csr_matrix(
		(np.full(len(sources), psi - eps), (np.full(len(sources), host), sources)),
		shape=(n, n)
	)
	updated = (j.matrix - correction).tocsr()
	updated.data[np.abs(updated.data) < RESIDUE_CUTOFF] = 0.0
	updated.eliminate_zeros()
	return PropagationOperator(updated)


def build_edge_plan(
	p: CompromiseProbabilities,
	edges: Sequence[AppHost],
	eps: EpsilonSpec,
	strategy: str,
	selection_scores: Sequence[float] = ()
) -> EdgeHardeningPlan:
	"""Plan hardening ``edges`` in order, each lowered to its residual probability."""
	edges = tuple(tuple(e) for e in edges)
	if len(set(edges)) != len(edges):
		raise PlanInconsistencyError("Hardening list repeats an edge")
	epsilon = {edge: _validated_epsilon(p, edge, epsilon_for(eps, edge)) for edge in edges}
	return EdgeHardeningPlan(
		strategy=strategy,
		hardened_edges=edges,
		epsilon=epsilon,
		resulting_P=p.with_entries(epsilon),
		selection_scores=tuple(float(s) for s in selection_scores)
	)


def edge_plan_prefix(p: CompromiseProbabilities, plan: EdgeHardeningPlan, eta: int) -> EdgeHardeningPlan:
	edges = plan.hardened_edges[:eta]
	return build_edge_plan(p, edges, {e: plan.epsilon[e] for e in edges}, plan.strategy, plan.selection_scores[:eta])


def _check_eta(eta: int, eligible: Sequence[AppHost]) -> None:
	if not 1 <= eta <= len(eligible):
		raise BudgetError(f"Edge hardening budget eta={eta} must be between 1 and {len(eligible)} eligible edges")


def greedy_edge_harden(
	flows: HostAppFlows,
	p: CompromiseProbabilities,
	eta: int,
	eps: EpsilonSpec = DEFAULT_EPSILON,
	recalculate: bool = False,
	eigen_options: Optional[Dict[str, Any]] = None
) -> EdgeHardeningPlan:
	"""
	Greedy edge hardening by phi.

	Without recalculation the eta edges of highest phi under one eigenvector are
	hardened. With recalculation J is corrected in place of a rebuild after every
	step and y is recomputed from scratch.

	Raises:
		BudgetError: eta is not between 1 and the number of eligible edges
	"""
	eligible = eligible_edges(flows, p, eps)
	_check_eta(eta, eligible)
	eigen_options = eigen_options or {}
	operator = propagation_operator(flows, p)
	y = leading_eigenpair_nonnegative(operator, **eigen_options)
	lambda_before = y.eigenvalue

	chosen: List[AppHost] = []
	scores: List[float] = []
	if not recalculate:
		table = edge_score_table(flows, p, y, eps)
		ranked = sorted(table, key=lambda e: (-table[e], e))[:eta]
		chosen.extend(ranked)
		scores.extend(table[e] for e in ranked)
	else:
		current = p
		for step in range(eta):
			if step:
				y = leading_eigenpair_nonnegative(operator, **eigen_options)
			table = edge_score_table(flows, current, y, eps)
			best = min(table, key=lambda e: (-table[e], e))
			residual = epsilon_for(eps, best)
			logger.debug(f"Step {step + 1}: harden {best} (phi {table[best]:.6g}, lambda {y.eigenvalue:.6g})")
			operator = efficient_J_update(operator, flows, best, current.matrix[best], residual)
			current = current.with_entries({best: residual})
			chosen.append(best)
			scores.append(table[best])

	plan = build_edge_plan(p, chosen, eps, "phi-recalc" if recalculate else "phi", scores)
	lambda_after = leading_eigenpair_nonnegative(propagation_operator(flows, plan.resulting_P), **eigen_options).eigenvalue
	logger.info(f"{plan.strategy}: hardened {eta} edges, lambda_max {lambda_before:.6g} -> {lambda_after:.6g}")
	return EdgeHardeningPlan(
		strategy=plan.strategy,
		hardened_edges=plan.hardened_edges,
		epsilon=plan.epsilon,
		resulting_P=plan.resulting_P,
		selection_scores=plan.selection_scores,
		lambda_before=lambda_before,
		lambda_after=lambda_after
	)


def heuristic_edge_order(flows: HostAppFlows, p: CompromiseProbabilities, eps: EpsilonSpec = DEFAULT_EPSILON) -> List[AppHost]:
	"""Eligible edges by descending [P]_{kj}."""
	return sorted(eligible_edges(flows, p, eps), key=lambda e: (-p.matrix[e], e))


def harden_edges(
	flows: HostAppFlows,
	p: CompromiseProbabilities,
	eta: int,
	strategy: str = "phi",
	eps: EpsilonSpec = DEFAULT_EPSILON,
	eigen_options: Optional[Dict[str, Any]] = None
) -> EdgeHardeningPlan:
	"""Dispatch to the planner named by ``strategy`` (one of EDGE_STRATEGIES)."""
	if strategy in ("phi", "phi-recalc"):
		return greedy_edge_harden(flows, p, eta, eps, strategy == "phi-recalc", eigen_options)
	if strategy == "max-p":
		order = heuristic_edge_order(flows, p, eps)
		_check_eta(eta, order)
		return build_edge_plan(p, order[:eta], eps, strategy, [p.matrix[e] for e in order[:eta]])
	raise ValidationError(f"Unknown edge hardening strategy: {strategy!r}")


def apply_edge_plan(p: CompromiseProbabilities, plan: EdgeHardeningPlan) -> CompromiseProbabilities:
	"""Lower every hardened entry of ``p`` to the plan's residual."""
	for edge in plan.hardened_edges:
		if edge not in plan.epsilon:
			raise PlanInconsistencyError(f"No residual probability for hardened edge {edge}")
		if not 0 <= plan.epsilon[edge] < p.matrix[edge]:
			raise PlanInconsistencyError(f"Residual {plan.epsilon[edge]} for {edge} is not below [P]_kj = {p.matrix[edge]}")
	return p.with_entries({edge: plan.epsilon[edge] for edge in plan.hardened_edges})


def node_scores(
	kind: str,
	flows: Optional[HostAppFlows] = None,
	p: Optional[CompromiseProbabilities] = None,
	j: Optional[PropagationOperator] = None,
	y: Optional[LeadingEigenpair] = None,
	a: Optional[SecurityPosture] = None,
	eps: EpsilonSpec = DEFAULT_EPSILON
) -> np.ndarray:
	"""
	Per-host priority scores for node hardening.

	Args:
		kind: ``rho`` (sum of phi over applications), ``rho-a`` (1 / [a]_j, +inf at 0)
			or ``rho-j`` (row sums of J)
		flows, p, y: Needed by ``rho``
		j: Needed by ``rho-j``
		a: Needed by ``rho-a``
		eps: Residual probabilities used by ``rho``
	"""
	kind = kind.replace("_", "-").lower()
	if kind == "rho":
		if flows is None or p is None or y is None:
			raise ValidationError("rho scores need flows, P and the eigenvector y")
		scores = np.zeros(flows.host_count)
		for (_, host), value in edge_score_table(flows, p, y, eps).items():
			scores[host] += value
		return scores
	if kind == "rho-a":
		if a is None:
			raise ValidationError("rho-a scores need the security posture")
		levels = a.levels
		scores = np.full(levels.size, np.inf)
		positive = levels > 0
		scores[positive] = 1.0 / levels[positive]
		return scores
	if kind == "rho-j":
		if j is None:
			raise ValidationError("rho-j scores need the propagation operator")
		return np.asarray(j.matrix.sum(axis=1)).reshape(-1).astype(float)
	raise ValidationError(f"Unknown node score kind: {kind!r}")


def build_node_plan(
	a: SecurityPosture,
	hosts: Sequence[int],
	alpha: AlphaSpec,
	strategy: str,
	selection_scores: Sequence[float] = ()
) -> NodeHardeningPlan:
	"""
	Plan raising ``hosts`` to their alpha levels.

	Raises:
		InvalidHardeningLevelError: alpha_j is outside [[a]_j, 1]
	"""
	hosts = tuple(int(h) for h in hosts)
	if len(set(hosts)) != len(hosts):
		raise PlanInconsistencyError("Hardening list repeats a host")
	levels = {}
	for host in hosts:
		value = alpha_for(alpha, host)
		if not a.levels[host] <= value <= 1.0:
			raise InvalidHardeningLevelError(f"alpha={value} for host {host} is outside [{a.levels[host]}, 1]")
		levels[host] = value
	return NodeHardeningPlan(
		strategy=strategy,
		hardened_hosts=hosts,
		alpha=levels,
		resulting_posture=a.with_levels(levels),
		selection_scores=tuple(float(s) for s in selection_scores)
	)


def node_plan_prefix(a: SecurityPosture, plan: NodeHardeningPlan, zeta: int) -> NodeHardeningPlan:
	hosts = plan.hardened_hosts[:zeta]
	return build_node_plan(a, hosts, {h: plan.alpha[h] for h in hosts}, plan.strategy, plan.selection_scores[:zeta])


def _check_zeta(zeta: int, host_count: int) -> None:
	if not 1 <= zeta <= host_count:
		raise BudgetError(f"Node hardening budget zeta={zeta} must be between 1 and N={host_count}")


def greedy_node_harden(
	scores,
	zeta: int,
	a: SecurityPosture,
	alpha: AlphaSpec = DEFAULT_ALPHA,
	strategy: str = "greedy"
) -> NodeHardeningPlan:
	"""Harden the zeta top-scored hosts; ties go to the smallest host index."""
	scores = np.asarray(scores, dtype=float)
	if scores.size != a.host_count:
		raise ShapeMismatchError(f"Got {scores.size} scores for {a.host_count} hosts")
	_check_zeta(zeta, a.host_count)
	order = sorted(range(scores.size), key=lambda h: (-scores[h], h))[:zeta]
	return build_node_plan(a, order, alpha, strategy, [scores[h] for h in order])


def heuristic_node_order(a: SecurityPosture) -> List[int]:
	"""Hosts by ascending hardening level."""
	return sorted(range(a.host_count), key=lambda h: (a.levels[h], h))


def harden_nodes(
	flows: HostAppFlows,
	p: CompromiseProbabilities,
	a: SecurityPosture,
	zeta: int,
	score: str = "rho",
	alpha: AlphaSpec = DEFAULT_ALPHA,
	eps: EpsilonSpec = DEFAULT_EPSILON,
	eigen_options: Optional[Dict[str, Any]] = None
) -> NodeHardeningPlan:
	"""Node hardening driven by a score kind from NODE_SCORES."""
	score = score.replace("_", "-").lower()
	if score == "min-a":
		_check_zeta(zeta, a.host_count)
		order = heuristic_node_order(a)[:zeta]
		return build_node_plan(a, order, alpha, score, [a.levels[h] for h in order])
	if score not in NODE_SCORES:
		raise ValidationError(f"Unknown node score kind: {score!r}")
	operator = propagation_operator(flows, p)
	y = leading_eigenpair_nonnegative(operator, **(eigen_options or {})) if score == "rho" else None
	values = node_scores(score, flows=flows, p=p, j=operator, y=y, a=a, eps=eps)
	plan = greedy_node_harden(values, zeta, a, alpha, strategy=score)
	logger.info(f"{score}: hardened hosts {list(plan.hardened_hosts)}")
	return plan


def apply_node_plan(a: SecurityPosture, plan: NodeHardeningPlan) -> SecurityPosture:
	"""Raise every hardened host of ``a`` to the plan's level."""
	for host in plan.hardened_hosts:
		value = plan.alpha.get(host)
		if value is None or not a.levels[host] <= value <= 1.0:
			raise PlanInconsistencyError(f"Level {value} for host {host} is not within [{a.levels[host]}, 1]")
	return a.with_levels({host: plan.alpha[host] for host in plan.hardened_hosts})
