"""
Reachability-versus-budget experiments over randomized trials.

Each trial draws its own P, posture and initial compromise from a stream
spawned off the master seed, so trials are independent of evaluation order.
Plans are computed once at the largest budget and evaluated by prefix.
"""
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np

from ..exceptions import BudgetError, ValidationError
from ..graph import (
	BipartiteAccessGraph, CompromiseProbabilities, HostAppFlows, SecurityPosture, induced_host_matrix,
	propagation_operator
)
from ..hardening import (
	DEFAULT_ALPHA, DEFAULT_EPSILON, EDGE_STRATEGIES, NODE_SCORES, AlphaSpec, EpsilonSpec, apply_edge_plan,
	apply_node_plan, edge_plan_prefix, eligible_edges, harden_edges, harden_nodes, node_plan_prefix
)
from ..reachability import host_app_cascade, reachability_fraction, tripartite_cascade
from ..segmentation import SEGMENTATION_STRATEGIES, plan_prefix, segment
from .models import CurvePoint, ExperimentKind, ExperimentResult
from .synthetic import gen_random_P, gen_random_posture, initial_compromise_count, pick_initial_compromise

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 10
DEFAULT_SEED = 2017
DEFAULT_NONZERO_FRACTION = 0.1
DEFAULT_COMPROMISE_FRACTION = 0.001
REACHABILITY_MODELS = ("tripartite", "host-app")


class Trial:
	"""Randomized inputs of one trial."""

	def __init__(self, number: int, p: CompromiseProbabilities, a: SecurityPosture, r0: np.ndarray):
		self.number = number
		self.p = p
		self.a = a
		self.r0 = r0


def draw_trials(
	flows: HostAppFlows,
	trials: int,
	seed: int,
	p: Optional[CompromiseProbabilities] = None,
	a: Optional[SecurityPosture] = None,
	nonzero_fraction: float = DEFAULT_NONZERO_FRACTION,
	compromise_fraction: float = DEFAULT_COMPROMISE_FRACTION
) -> List[Trial]:
	"""
	Draw per-trial P, posture and seed compromise.

	A given ``p`` or ``a`` is reused by every trial instead of being drawn.
	"""
	if trials < 1:
		raise ValidationError(f"At least one trial is required, got {trials}")
	n, k_count = flows.host_count, flows.app_count
	count = initial_compromise_count(n, compromise_fraction)
	drawn = []
	for number, stream in enumerate(np.random.SeedSequence(seed).spawn(trials)):
		rng = np.random.default_rng(stream)
		trial_p = p if p is not None else gen_random_P(k_count, n, nonzero_fraction, rng)
		trial_a = a if a is not None else gen_random_posture(n, rng)
		drawn.append(Trial(number, trial_p, trial_a, pick_initial_compromise(n, count, rng)))
	return drawn


def _reach(
	b,
	p: CompromiseProbabilities,
	flows: HostAppFlows,
	a: SecurityPosture,
	r0: np.ndarray,
	model: str = "tripartite"
) -> float:
	j = propagation_operator(flows, p)
	trace = host_app_cascade(j, a, r0) if model == "host-app" else tripartite_cascade(b, j, a, r0)
	return reachability_fraction(trace.final)


def _check_budgets(budgets: Sequence[int], capacity: int, what: str) -> List[int]:
	budgets = [int(b) for b in budgets]
	if not budgets:
		raise BudgetError("The budget axis is empty")
	for budget in budgets:
		if not 0 <= budget <= capacity:
			raise BudgetError(f"Budget {budget} must be between 0 and the {capacity} available {what}")
	return budgets


def _result(
	kind: ExperimentKind,
	strategies: Sequence[str],
	budgets: Sequence[int],
	capacity: int,
	per_trial: Dict[str, List[List[float]]],
	trials: int,
	seed: int,
	fractions: Optional[Sequence[float]] = None
) -> ExperimentResult:
	fractions = list(fractions) if fractions is not None else [b / capacity if capacity else 0.0 for b in budgets]
	curves = []
	for strategy in strategies:
		values = np.asarray(per_trial[strategy], dtype=float)
		for position, budget in enumerate(budgets):
			column = values[:, position]
			curves.append(CurvePoint(
				strategy=strategy,
				budget=budget,
				budget_fraction=fractions[position],
				mean_reachability=float(column.mean()),
				std_reachability=float(column.std())
			))
	return ExperimentResult(
		kind=kind,
		strategies=list(strategies),
		budget_axis=list(budgets),
		budget_fractions=fractions,
		curves=curves,
		trials=trials,
		seed=seed,
		per_trial={s: [list(row) for row in per_trial[s]] for s in strategies}
	)


def budgets_from_fractions(fractions: Sequence[float], capacity: int) -> List[int]:
	"""Absolute budgets round(fraction * capacity)."""
	budgets = []
	for fraction in fractions:
		if not 0.0 <= fraction <= 1.0:
			raise BudgetError(f"Budget fraction {fraction} is outside [0, 1]")
		budgets.append(int(round(fraction * capacity)))
	return budgets


def run_segmentation_experiment(
	g: BipartiteAccessGraph,
	flows: HostAppFlows,
	strategies: Sequence[str] = SEGMENTATION_STRATEGIES,
	budgets: Sequence[int] = (0,),
	trials: int = DEFAULT_TRIALS,
	seed: int = DEFAULT_SEED,
	p: Optional[CompromiseProbabilities] = None,
	a: Optional[SecurityPosture] = None,
	nonzero_fraction: float = DEFAULT_NONZERO_FRACTION,
	compromise_fraction: float = DEFAULT_COMPROMISE_FRACTION,
	eigen_options: Optional[Dict[str, Any]] = None
) -> ExperimentResult:
	"""
	Reachability of each segmentation strategy along the budget axis.

	Segmentation plans depend only on the access graph, so they are built once;
	every trial then evaluates the tripartite cascade on the segmented graph,
	new accounts included. The mean new-account fraction per budget is recorded.

	Raises:
		BudgetError: A budget exceeds |E|
	"""
	budgets = _check_budgets(budgets, g.edge_count, "access edges")
	top = max(budgets)
	induced: Dict[str, List] = {}
	accounts: Dict[str, List[float]] = {}
	for strategy in strategies:
		if strategy not in SEGMENTATION_STRATEGIES:
			raise ValidationError(f"Unknown segmentation strategy: {strategy!r}")
		plan = segment(g, top, strategy, eigen_options, measure_spectrum=False) if top else None
		induced[strategy], accounts[strategy] = [], []
		for budget in budgets:
			if budget == 0:
				induced[strategy].append(induced_host_matrix(g))
				accounts[strategy].append(0.0)
				continue
			prefix = plan_prefix(g, plan, budget)
			induced[strategy].append(induced_host_matrix(prefix.resulting_graph))
			accounts[strategy].append(prefix.new_account_count / g.user_count)

	per_trial: Dict[str, List[List[float]]] = {s: [] for s in strategies}
	for trial in draw_trials(flows, trials, seed, p, a, nonzero_fraction, compromise_fraction):
		for strategy in strategies:
			per_trial[strategy].append([_reach(b, trial.p, flows, trial.a, trial.r0) for b in induced[strategy]])
		logger.debug(f"Segmentation trial {trial.number + 1}/{trials} done")

	result = _result(ExperimentKind.SEGMENTATION, strategies, budgets, g.edge_count, per_trial, trials, seed)
	result.new_account_fractions = accounts
	logger.info(f"Segmentation experiment finished: {len(strategies)} strategies, {len(budgets)} budgets, {trials} trials")
	return result


def _edge_plan(flows, p, strategy, top, eps, eigen_options):
	eligible = len(eligible_edges(flows, p, eps))
	if not min(top, eligible):
		return None
	return harden_edges(flows, p, min(top, eligible), strategy, eps, eigen_options)


def _hardened_p(p, plan, budget):
	if plan is None or budget == 0:
		return p
	return apply_edge_plan(p, edge_plan_prefix(p, plan, min(budget, len(plan.hardened_edges))))


def _hardened_a(a, plan, budget):
	if plan is None or budget == 0:
		return a
	return apply_node_plan(a, node_plan_prefix(a, plan, budget))


def run_hardening_experiment(
	g: BipartiteAccessGraph,
	flows: HostAppFlows,
	kind: str = "edge",
	strategies: Optional[Sequence[str]] = None,
	budgets: Sequence[int] = (0,),
	trials: int = DEFAULT_TRIALS,
	seed: int = DEFAULT_SEED,
	p: Optional[CompromiseProbabilities] = None,
	a: Optional[SecurityPosture] = None,
	eps: EpsilonSpec = DEFAULT_EPSILON,
	alpha: AlphaSpec = DEFAULT_ALPHA,
	nonzero_fraction: float = DEFAULT_NONZERO_FRACTION,
	compromise_fraction: float = DEFAULT_COMPROMISE_FRACTION,
	eigen_options: Optional[Dict[str, Any]] = None,
	model: str = "tripartite"
) -> ExperimentResult:
	"""
	Reachability of edge or node hardening strategies along the budget axis.

	Edge budgets count (application, host) pairs with an incoming flow; in a
	trial whose P leaves fewer eligible pairs, larger budgets harden them all.
	Node budgets count hosts.

	The ``model`` picks the cascade used for evaluation: ``tripartite`` spreads
	over B + J, ``host-app`` over J alone.

	Raises:
		BudgetError: A budget exceeds the number of candidate pairs or hosts
		ValidationError: Unknown kind, strategy or reachability model
	"""
	if model not in REACHABILITY_MODELS:
		raise ValidationError(f"Unknown reachability model: {model!r}")
	b = induced_host_matrix(g) if model == "tripartite" else None
	if kind == "edge":
		strategies = list(strategies or EDGE_STRATEGIES)
		capacity = len(set((k, dst) for _, k, dst in flows.triples))
		unknown = [s for s in strategies if s not in EDGE_STRATEGIES]
	elif kind == "node":
		strategies = list(strategies or ("rho", "rho-j", "min-a"))
		capacity = flows.host_count
		unknown = [s for s in strategies if s not in NODE_SCORES]
	else:
		raise ValidationError(f"Unknown hardening kind: {kind!r}")
	if unknown:
		raise ValidationError(f"Unknown {kind} hardening strategies: {unknown}")
	budgets = _check_budgets(budgets, capacity, "candidates")
	top = max(budgets)

	per_trial: Dict[str, List[List[float]]] = {s: [] for s in strategies}
	for trial in draw_trials(flows, trials, seed, p, a, nonzero_fraction, compromise_fraction):
		for strategy in strategies:
			if kind == "edge":
				plan = _edge_plan(flows, trial.p, strategy, top, eps, eigen_options)
				row = [_reach(b, _hardened_p(trial.p, plan, budget), flows, trial.a, trial.r0, model) for budget in budgets]
			else:
				plan = harden_nodes(flows, trial.p, trial.a, top, strategy, alpha, eps, eigen_options) if top else None
				row = [_reach(b, trial.p, flows, _hardened_a(trial.a, plan, budget), trial.r0, model) for budget in budgets]
			per_trial[strategy].append(row)
		logger.debug(f"{kind.capitalize()} hardening trial {trial.number + 1}/{trials} done")

	logger.info(f"{kind.capitalize()} hardening experiment finished: {len(strategies)} strategies, {trials} trials")
	experiment_kind = ExperimentKind.EDGE if kind == "edge" else ExperimentKind.NODE
	result = _result(experiment_kind, strategies, budgets, capacity, per_trial, trials, seed)
	if model != "tripartite":
		result.notes.append(f"Reachability evaluated with the {model} cascade")
	return result


def joint_label(combination: Tuple[Optional[str], Optional[str], Optional[str]]) -> str:
	return "+".join(stage or "none" for stage in combination)


def run_joint_experiment(
	g: BipartiteAccessGraph,
	flows: HostAppFlows,
	combinations: Sequence[Tuple[Optional[str], Optional[str], Optional[str]]],
	budget_fractions: Sequence[float] = (0.0,),
	trials: int = DEFAULT_TRIALS,
	seed: int = DEFAULT_SEED,
	p: Optional[CompromiseProbabilities] = None,
	a: Optional[SecurityPosture] = None,
	eps: EpsilonSpec = DEFAULT_EPSILON,
	alpha: AlphaSpec = DEFAULT_ALPHA,
	nonzero_fraction: float = DEFAULT_NONZERO_FRACTION,
	compromise_fraction: float = DEFAULT_COMPROMISE_FRACTION,
	eigen_options: Optional[Dict[str, Any]] = None
) -> ExperimentResult:
	"""
	Chain segmentation, edge hardening and node hardening.

	Each combination names a (segmentation, edge, node) strategy triple; ``None``
	skips a stage. A budget fraction applies to every stage's own capacity
	(|E|, candidate pairs, N). Edge hardening sees the trial's P and node
	scoring sees the edge-hardened P. The budget axis records the segmentation
	counts.
	"""
	pair_count = len(set((k, dst) for _, k, dst in flows.triples))
	seg_budgets = budgets_from_fractions(budget_fractions, g.edge_count)
	edge_budgets = budgets_from_fractions(budget_fractions, pair_count)
	node_budgets = budgets_from_fractions(budget_fractions, flows.host_count)
	labels = [joint_label(c) for c in combinations]

	induced: Dict[str, List] = {}
	for label, (seg_strategy, _, _) in zip(labels, combinations):
		top = max(seg_budgets)
		plan = segment(g, top, seg_strategy, eigen_options, measure_spectrum=False) if seg_strategy and top else None
		induced[label] = [
			induced_host_matrix(g if plan is None or q == 0 else plan_prefix(g, plan, q).resulting_graph)
			for q in seg_budgets
		]

	per_trial: Dict[str, List[List[float]]] = {label: [] for label in labels}
	for trial in draw_trials(flows, trials, seed, p, a, nonzero_fraction, compromise_fraction):
		for label, (_, edge_strategy, node_strategy) in zip(labels, combinations):
			edge_plan = _edge_plan(flows, trial.p, edge_strategy, max(edge_budgets), eps, eigen_options) if edge_strategy else None
			row = []
			for position, b in enumerate(induced[label]):
				hardened_p = _hardened_p(trial.p, edge_plan, edge_budgets[position])
				hardened_a = trial.a
				zeta = node_budgets[position]
				if node_strategy and zeta:
					node_plan = harden_nodes(flows, hardened_p, trial.a, zeta, node_strategy, alpha, eps, eigen_options)
					hardened_a = apply_node_plan(trial.a, node_plan)
				row.append(_reach(b, hardened_p, flows, hardened_a, trial.r0))
			per_trial[label].append(row)

	logger.info(f"Joint experiment finished: {len(labels)} combinations, {trials} trials")
	return _result(
		ExperimentKind.JOINT, labels, seg_budgets, g.edge_count, per_trial, trials, seed, fractions=list(budget_fractions)
	)
