"""
Tests for edge and node hardening.
"""
from itertools import combinations

import numpy as np
import pytest
from scipy.sparse.csgraph import connected_components

from lateralguard.exceptions import (
	BudgetError, InvalidEpsilonError, InvalidHardeningLevelError, PlanInconsistencyError, ValidationError
)
from lateralguard.graph import CompromiseProbabilities, SecurityPosture, propagation_operator
from lateralguard.hardening import (
	apply_edge_plan, apply_node_plan, build_edge_plan, delta_probabilities, edge_hardening_score, edge_plan_prefix,
	edge_score_table, efficient_J_update, eligible_edges, greedy_edge_harden, greedy_node_harden, harden_edges,
	harden_nodes, heuristic_edge_order, heuristic_node_order, node_scores, set_score_phi
)
from lateralguard.spectral import LeadingEigenpair, kronecker_reference_delta, leading_eigenpair_nonnegative
from tests.factories import host_flows, random_flows, random_posture, random_probabilities, two_host_cycle

HALF = CompromiseProbabilities([[0.5, 0.5]])

@pytest.fixture
def cycle():
	"""Two hosts exchanging flows over one application, P = 0.5."""
	flows = two_host_cycle()
	operator = propagation_operator(flows, HALF)
	return flows, operator, leading_eigenpair_nonnegative(operator)

def _radius(matrix) -> float:
	dense = matrix.toarray() if hasattr(matrix, "toarray") else np.asarray(matrix)
	return float(np.abs(np.linalg.eigvals(dense)).max()) if dense.size else 0.0

def _random_instance(rng, hosts=None, apps=2, density=0.4):
	hosts = hosts or int(rng.integers(2, 6))
	flows = random_flows(rng, hosts, apps, density)
	return flows, random_probabilities(rng, apps, hosts)

def test_edge_hardening_score_cycle(cycle):
	"""Test phi = 0.25 on either edge of the cycle."""
	flows, operator, y = cycle
	assert edge_hardening_score(operator, y, flows, HALF, (0, 1), eps=0.0) == pytest.approx(0.25)
	assert edge_hardening_score(operator, y, flows, HALF, (0, 0), eps=0.0) == pytest.approx(0.25)

def test_edge_hardening_score_degenerate(cycle):
	"""Test a zero eigenvector scores 0."""
	flows, operator, _ = cycle
	zero = LeadingEigenpair(0.0, np.zeros(2), 0.0, 0, degenerate=True)
	assert edge_hardening_score(operator, zero, flows, HALF, (0, 1), eps=0.0) == 0.0

def test_edge_hardening_score_without_incoming_flow():
	"""Test an edge into a host with no flows via that application scores 0."""
	flows = host_flows([[[0, 1], [0, 0]]])
	p = CompromiseProbabilities([[1.0, 1.0]])
	operator = propagation_operator(flows, p)
	y = leading_eigenpair_nonnegative(operator)
	assert edge_hardening_score(operator, y, flows, p, (0, 0), eps=0.0) == 0.0
	assert eligible_edges(flows, p, 0.0) == [(0, 1)]

def test_edge_hardening_score_invalid_epsilon(cycle):
	"""Test eps must lie below [P]_kj."""
	flows, operator, y = cycle
	with pytest.raises(InvalidEpsilonError):
		edge_hardening_score(operator, y, flows, HALF, (0, 1), eps=0.5)
	with pytest.raises(InvalidEpsilonError):
		edge_hardening_score(operator, y, flows, HALF, (0, 1), eps=-0.1)

def test_phi_matches_kronecker_reference():
	"""Test phi(H) equals y^T Delta J y with Delta J from the dense construction."""
	rng = np.random.default_rng(41)
	for _ in range(30):
		flows, p = _random_instance(rng)
		y = leading_eigenpair_nonnegative(propagation_operator(flows, p))
		eligible = eligible_edges(flows, p, 1e-5)
		chosen = [e for e in eligible if rng.random() < 0.5]
		delta = kronecker_reference_delta(delta_probabilities(p, chosen, 1e-5), flows)
		vector = y.eigenvector
		assert set_score_phi(flows, p, y, chosen, 1e-5) == pytest.approx(vector @ delta @ vector, abs=1e-10)

def test_phi_additive_and_monotone():
	"""Test phi is additive over single edges and grows with the set."""
	rng = np.random.default_rng(42)
	for _ in range(20):
		flows, p = _random_instance(rng, hosts=4)
		y = leading_eigenpair_nonnegative(propagation_operator(flows, p))
		table = edge_score_table(flows, p, y)
		eligible = list(table)[:8]
		assert set_score_phi(flows, p, y, []) == 0.0
		previous = 0.0
		for size in range(1, len(eligible) + 1):
			subset = eligible[:size]
			value = set_score_phi(flows, p, y, subset)
			assert value == pytest.approx(sum(table[e] for e in subset), abs=1e-12)
			assert value >= previous - 1e-12
			previous = value

def test_greedy_edge_set_is_optimal():
	"""Test the single-pass greedy set maximizes phi among eta-subsets."""
	rng = np.random.default_rng(43)
	checked = 0
	while checked < 20:
		flows, p = _random_instance(rng, hosts=3, apps=2, density=0.5)
		eligible = eligible_edges(flows, p)
		if not 1 <= len(eligible) <= 10:
			continue
		checked += 1
		y = leading_eigenpair_nonnegative(propagation_operator(flows, p))
		for eta in range(1, min(3, len(eligible)) + 1):
			plan = greedy_edge_harden(flows, p, eta)
			best = max(set_score_phi(flows, p, y, subset) for subset in combinations(eligible, eta))
			assert set_score_phi(flows, p, y, plan.hardened_edges) == pytest.approx(best, abs=1e-12)

def test_hardening_never_raises_spectral_radius():
	"""Test lambda_max(J) does not grow under random hardening sets."""
	rng = np.random.default_rng(44)
	for _ in range(40):
		flows, p = _random_instance(rng)
		eligible = eligible_edges(flows, p)
		chosen = [e for e in eligible if rng.random() < 0.5]
		hardened = build_edge_plan(p, chosen, 1e-5, "random").resulting_P
		before = _radius(propagation_operator(flows, p).matrix)
		assert _radius(propagation_operator(flows, hardened).matrix) <= before + 1e-8

def test_symmetric_part_lower_bound():
	"""Test lambda_max of the symmetric part of the hardened J is at least lambda_max(J) - phi(H)."""
	rng = np.random.default_rng(45)
	checked = 0
	while checked < 30:
		flows, p = _random_instance(rng)
		operator = propagation_operator(flows, p)
		y = leading_eigenpair_nonnegative(operator)
		if y.degenerate or y.residual > 1e-9:
			continue
		checked += 1
		chosen = [e for e in eligible_edges(flows, p) if rng.random() < 0.5]
		hardened = propagation_operator(flows, build_edge_plan(p, chosen, 1e-5, "random").resulting_P).dense()
		symmetric = (hardened + hardened.T) / 2
		phi = set_score_phi(flows, p, y, chosen)
		assert np.linalg.eigvalsh(symmetric).max() >= y.eigenvalue - phi - 1e-8

def test_greedy_edge_harden_cycle(cycle):
	"""Test one hardened edge makes the cycle nilpotent."""
	flows, _, _ = cycle
	plan = greedy_edge_harden(flows, HALF, 1, eps=0.0)
	assert plan.hardened_edges == ((0, 0),)
	assert plan.lambda_before == pytest.approx(0.5)
	assert plan.lambda_after == 0.0
	assert greedy_edge_harden(flows, HALF, 1, eps=0.0, recalculate=True).hardened_edges == plan.hardened_edges

def test_greedy_edge_harden_all_eligible():
	"""Test eta = all eligible edges lowers every eligible entry to eps."""
	rng = np.random.default_rng(46)
	flows, p = _random_instance(rng, hosts=4, density=0.6)
	eligible = eligible_edges(flows, p)
	plan = greedy_edge_harden(flows, p, len(eligible))
	assert sorted(plan.hardened_edges) == eligible
	for edge in eligible:
		assert plan.resulting_P.matrix[edge] == 1e-5
	untouched = [(k, j) for k in range(2) for j in range(4) if (k, j) not in eligible]
	for edge in untouched:
		assert plan.resulting_P.matrix[edge] == p.matrix[edge]

def test_greedy_edge_harden_budget(cycle):
	"""Test eta beyond the eligible edges is rejected."""
	flows, _, _ = cycle
	with pytest.raises(BudgetError):
		greedy_edge_harden(flows, HALF, 3)
	with pytest.raises(BudgetError):
		greedy_edge_harden(flows, HALF, 0)

def test_recalculation_is_non_increasing():
	"""Test lambda_max(J) never grows along the recalculating greedy."""
	rng = np.random.default_rng(47)
	for _ in range(10):
		flows, p = _random_instance(rng, hosts=5, density=0.5)
		eligible = eligible_edges(flows, p)
		if not eligible:
			continue
		plan = greedy_edge_harden(flows, p, len(eligible), recalculate=True)
		current = p
		radius = _radius(propagation_operator(flows, p).matrix)
		for edge in plan.hardened_edges:
			current = current.with_entries({edge: plan.epsilon[edge]})
			nxt = _radius(propagation_operator(flows, current).matrix)
			assert nxt <= radius + 1e-9
			radius = nxt

def test_recalculation_strictly_decreases_on_irreducible_J():
	"""Test each recalculating step lowers lambda_max(J) while J is irreducible and the chosen phi is positive."""
	rng = np.random.default_rng(49)
	checked = 0
	for _ in range(50):
		flows, p = _random_instance(rng, hosts=int(rng.integers(3, 7)), density=0.5)
		eligible = eligible_edges(flows, p)
		if not eligible:
			continue
		plan = greedy_edge_harden(flows, p, len(eligible), recalculate=True)
		current = p
		for edge, score in zip(plan.hardened_edges, plan.selection_scores):
			before_matrix = propagation_operator(flows, current).matrix
			before = _radius(before_matrix)
			irreducible = connected_components(before_matrix, directed=True, connection="strong")[0] == 1
			current = current.with_entries({edge: plan.epsilon[edge]})
			after = _radius(propagation_operator(flows, current).matrix)
			if irreducible and before > 1e-9 and score > 1e-9:
				assert after < before - 1e-12
				checked += 1
	assert checked > 0

def test_efficient_update_cycle():
	"""Test hardening (0, 1) on the cycle clears row 1 of J."""
	flows = two_host_cycle()
	operator = propagation_operator(flows, HALF)
	updated = efficient_J_update(operator, flows, (0, 1), 0.5, 0.0)
	assert updated.dense().tolist() == [[0.0, 0.5], [0.0, 0.0]]
	assert efficient_J_update(operator, flows, (0, 1), 0.5, 0.5) is operator

def test_efficient_update_matches_recompute():
	"""Test chained updates along greedy runs equal rebuilding J."""
	rng = np.random.default_rng(48)
	for _ in range(20):
		flows, p = _random_instance(rng, hosts=5, apps=3, density=0.4)
		eligible = eligible_edges(flows, p)
		if not eligible:
			continue
		plan = greedy_edge_harden(flows, p, len(eligible), recalculate=True)
		operator = propagation_operator(flows, p)
		current = p
		for edge in plan.hardened_edges:
			operator = efficient_J_update(operator, flows, edge, current.matrix[edge], plan.epsilon[edge])
			current = current.with_entries({edge: plan.epsilon[edge]})
			assert np.allclose(operator.dense(), propagation_operator(flows, current).dense(), atol=1e-12)

def test_node_scores_examples(cycle):
	"""Test rho, rho-a and rho-j on small inputs."""
	flows, operator, y = cycle
	assert node_scores("rho", flows=flows, p=HALF, y=y, eps=0.0) == pytest.approx([0.25, 0.25])
	assert node_scores("rho-a", a=SecurityPosture([0.2, 0.8])).tolist() == [5.0, 1.25]
	assert node_scores("rho_J", j=operator).tolist() == [0.5, 0.5]
	assert node_scores("rho-a", a=SecurityPosture([0.0, 0.5])).tolist() == [np.inf, 2.0]
	with pytest.raises(ValidationError):
		node_scores("rho-j")
	with pytest.raises(ValidationError):
		node_scores("degree")

def test_greedy_node_harden_examples():
	"""Test top-scored hosts are hardened with ties to the smallest index."""
	zero = SecurityPosture.zeros(2)
	assert greedy_node_harden([0.25, 0.25], 1, zero).hardened_hosts == (0,)
	assert greedy_node_harden([0.1, 0.9], 1, zero).hardened_hosts == (1,)
	plan = greedy_node_harden([0.1, 0.9], 2, zero, alpha=0.7)
	assert plan.resulting_posture.levels.tolist() == [0.7, 0.7]

def test_infinite_scores_rank_first():
	"""Test unhardened hosts lead the rho-a order, ties by index."""
	posture = SecurityPosture([0.0, 0.5, 0.0])
	scores = node_scores("rho-a", a=posture)
	assert greedy_node_harden(scores, 2, posture).hardened_hosts == (0, 2)

def test_greedy_node_harden_invalid_alpha():
	"""Test alpha below the current level is rejected."""
	with pytest.raises(InvalidHardeningLevelError):
		greedy_node_harden([0.5, 0.1], 1, SecurityPosture([0.6, 0.0]), alpha=0.5)
	with pytest.raises(BudgetError):
		greedy_node_harden([0.5, 0.1], 3, SecurityPosture.zeros(2))

def test_harden_edges_dispatch(cycle):
	"""Test strategies dispatch and the max-P heuristic order."""
	flows, _, _ = cycle
	p = CompromiseProbabilities([[0.3, 0.9]])
	assert heuristic_edge_order(flows, p) == [(0, 1), (0, 0)]
	plan = harden_edges(flows, p, 1, "max-p")
	assert plan.hardened_edges == ((0, 1),)
	assert plan.resulting_P.matrix.tolist() == [[0.3, 1e-5]]
	with pytest.raises(ValidationError):
		harden_edges(flows, p, 1, "random")

def test_harden_nodes_strategies():
	"""Test every node score kind yields a plan of the requested size."""
	rng = np.random.default_rng(49)
	flows, p = _random_instance(rng, hosts=5, density=0.5)
	posture = random_posture(rng, 5)
	for score in ("rho", "rho-a", "rho-j", "min-a"):
		plan = harden_nodes(flows, p, posture, 2, score)
		assert len(plan.hardened_hosts) == 2
		assert all(plan.resulting_posture.levels[h] == 1.0 for h in plan.hardened_hosts)
	assert heuristic_node_order(SecurityPosture([0.4, 0.1, 0.4])) == [1, 0, 2]
	assert harden_nodes(flows, p, SecurityPosture([0.4, 0.1, 0.4, 0.9, 0.2]), 2, "min-a").hardened_hosts == (1, 4)

def test_plan_application(cycle):
	"""Test plans apply to matching inputs and reject stale ones."""
	flows, _, _ = cycle
	plan = greedy_edge_harden(flows, HALF, 2, eps=0.0)
	assert apply_edge_plan(HALF, plan).matrix.tolist() == [[0.0, 0.0]]
	prefix = edge_plan_prefix(HALF, plan, 1)
	assert prefix.hardened_edges == plan.hardened_edges[:1]
	with pytest.raises(PlanInconsistencyError):
		apply_edge_plan(CompromiseProbabilities([[0.0, 0.0]]), plan)

	posture = SecurityPosture([0.2, 0.4])
	node_plan = greedy_node_harden([1.0, 0.0], 1, posture, alpha=0.3)
	assert apply_node_plan(posture, node_plan).levels.tolist() == [0.3, 0.4]
	with pytest.raises(PlanInconsistencyError):
		apply_node_plan(SecurityPosture([0.9, 0.4]), node_plan)
