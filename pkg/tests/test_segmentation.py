"""
Tests for edge scoring and the segmentation planners.
"""
from itertools import combinations

import numpy as np
import pytest

from lateralguard.exceptions import BudgetError, EdgeNotInGraphError, PlanInconsistencyError, ValidationError
from lateralguard.graph import induced_host_matrix
from lateralguard.segmentation import (
	apply_segmentation, build_plan, degree_first_segment, degree_row_sum_bound, edge_scores, greedy_segment,
	marginal_greedy_removal, plan_prefix, segment, set_score_f, set_score_f_expanded
)
from lateralguard.spectral import LeadingEigenpair, leading_eigenpair_symmetric
from tests.factories import access_graph, all_subsets, random_graph_with_edges

@pytest.fixture
def example_graph():
	"""A_C = [[1, 1], [0, 1]]."""
	return access_graph([[1, 1], [0, 1]])

def _eig(graph):
	return leading_eigenpair_symmetric(induced_host_matrix(graph))

def _lambda(graph):
	return _eig(graph).eigenvalue

def _set_scores(graph, eig):
	"""f for every subset of edges, keyed by bitmask over ``graph.edges``."""
	edges = graph.edges
	return [
		set_score_f(graph, eig, [edges[bit] for bit in range(len(edges)) if mask >> bit & 1])
		for mask in range(1 << len(edges))
	]

def test_edge_scores_example(example_graph):
	"""Test the closed-form scores on the 2x2 example."""
	table = edge_scores(example_graph, _eig(example_graph))
	assert table.score((0, 0)) == pytest.approx(1.1708, abs=1e-4)
	assert table.score((0, 1)) == pytest.approx(1.6180, abs=1e-4)
	assert table.score((1, 1)) == pytest.approx(0.7236, abs=1e-4)
	assert table.ranked() == [(0, 1), (0, 0), (1, 1)]
	assert table.matrix.toarray()[1, 0] == 0.0

def test_edge_scores_single_edge():
	"""Test f = 2 - 1 = 1 on a single edge."""
	graph = access_graph([[1]])
	assert edge_scores(graph, _eig(graph)).score((0, 0)) == pytest.approx(1.0)

def test_edge_scores_zero_eigenvector(example_graph):
	"""Test a zero eigenvector scores every edge 0."""
	zero = LeadingEigenpair(0.0, np.zeros(2), 0.0, 0, degenerate=True)
	assert edge_scores(example_graph, zero).values.tolist() == [0.0, 0.0, 0.0]

def test_edge_scores_match_direct_formula():
	"""Test the vectorized scores equal 2 u^T A_C^T e_i [u]_j - [u]_j^2 per edge."""
	rng = np.random.default_rng(31)
	for _ in range(20):
		graph = random_graph_with_edges(rng, 20, 6, 6)
		eig = _eig(graph)
		u = eig.eigenvector
		a_c = graph.dense()
		table = edge_scores(graph, eig)
		for i, j in graph.edges:
			assert table.score((i, j)) == pytest.approx(2 * (a_c[i] @ u) * u[j] - u[j] ** 2, abs=1e-10)

def test_score_missing_edge(example_graph):
	"""Test scoring an edge outside the graph raises."""
	table = edge_scores(example_graph, _eig(example_graph))
	with pytest.raises(EdgeNotInGraphError):
		table.score((1, 0))
	with pytest.raises(EdgeNotInGraphError):
		set_score_f(example_graph, _eig(example_graph), [(1, 0)])

def test_set_score_empty_and_singleton(example_graph):
	"""Test f(empty) = 0 and singletons match edge scores."""
	eig = _eig(example_graph)
	table = edge_scores(example_graph, eig)
	assert set_score_f(example_graph, eig, []) == 0.0
	for edge in example_graph.edges:
		assert set_score_f(example_graph, eig, [edge]) == pytest.approx(table.score(edge), abs=1e-12)

def test_set_score_expanded_form():
	"""Test the double-sum form agrees with the compact form."""
	rng = np.random.default_rng(32)
	for _ in range(30):
		graph = random_graph_with_edges(rng, 12, 5, 5)
		eig = _eig(graph)
		chosen = [e for e in graph.edges if rng.random() < 0.5]
		assert set_score_f(graph, eig, chosen) == pytest.approx(set_score_f_expanded(graph, eig, chosen), abs=1e-10)

def test_set_score_monotone_and_submodular():
	"""Test f is nonnegative, monotone and submodular over every subset pair."""
	rng = np.random.default_rng(33)
	for _ in range(8):
		graph = random_graph_with_edges(rng, 7)
		scores = _set_scores(graph, _eig(graph))
		size = graph.edge_count
		full = (1 << size) - 1
		for big in range(full + 1):
			assert scores[big] >= 0.0
			small = big
			while True:
				for bit in range(size):
					if big >> bit & 1:
						continue
					gain_big = scores[big | 1 << bit] - scores[big]
					gain_small = scores[small | 1 << bit] - scores[small]
					assert gain_big >= -1e-10
					assert gain_big <= gain_small + 1e-10
				if small == 0:
					break
				small = (small - 1) & big

def test_marginal_greedy_guarantee():
	"""Test marginal greedy is within (1 - 1/q)^q of the exhaustive optimum."""
	rng = np.random.default_rng(34)
	for _ in range(15):
		graph = random_graph_with_edges(rng, 8)
		eig = _eig(graph)
		for q in range(1, min(3, graph.edge_count) + 1):
			best = max(set_score_f(graph, eig, subset) for subset in combinations(graph.edges, q))
			greedy = set_score_f(graph, eig, marginal_greedy_removal(graph, eig, q))
			assert best - greedy <= (1 - 1 / q) ** q * best + 1e-10

def test_top_scores_reach_fraction_of_optimum():
	"""Test the single-pass top-q removal scores at least opt / q."""
	rng = np.random.default_rng(35)
	for _ in range(15):
		graph = random_graph_with_edges(rng, 8)
		eig = _eig(graph)
		for q in range(1, min(3, graph.edge_count) + 1):
			best = max(set_score_f(graph, eig, subset) for subset in combinations(graph.edges, q))
			plan = greedy_segment(graph, q, measure_spectrum=False)
			assert list(plan.removed_edges) == edge_scores(graph, eig).ranked()[:q]
			assert set_score_f(graph, eig, plan.removed_edges) >= best / q - 1e-10

def test_spectral_radius_lower_bound():
	"""Test lambda_max after removal is at least lambda_max - f."""
	rng = np.random.default_rng(36)
	for _ in range(50):
		graph = random_graph_with_edges(rng, 25, 6, 6)
		eig = _eig(graph)
		chosen = [e for e in graph.edges if rng.random() < 0.4]
		after = _lambda(graph.without(chosen))
		assert after >= eig.eigenvalue - set_score_f(graph, eig, chosen) - 1e-8

def test_recalculation_is_non_increasing():
	"""Test lambda_max never increases along the recalculating greedy."""
	rng = np.random.default_rng(37)
	for _ in range(10):
		graph = random_graph_with_edges(rng, 20, 6, 6)
		q = graph.edge_count
		plan = greedy_segment(graph, q, recalculate=True, measure_spectrum=False)
		current = _lambda(graph)
		for edge in plan.removed_edges:
			graph = graph.without([edge])
			nxt = _lambda(graph)
			assert nxt <= current + 1e-9
			current = nxt
		assert current == 0.0

def test_recalculation_strictly_decreases_simple_spectrum():
	"""Test each recalculating step lowers a simple lambda_max whenever the chosen score is positive."""
	rng = np.random.default_rng(39)
	checked = 0
	for _ in range(50):
		graph = random_graph_with_edges(rng, 20, 6, 6)
		plan = greedy_segment(graph, graph.edge_count, recalculate=True, measure_spectrum=False)
		for edge, score in zip(plan.removed_edges, plan.selection_scores):
			values = np.linalg.eigvalsh(induced_host_matrix(graph).matrix.toarray().astype(float))
			simple = values.size == 1 or values[-1] - values[-2] > 1e-6
			graph = graph.without([edge])
			after = np.linalg.eigvalsh(induced_host_matrix(graph).matrix.toarray().astype(float))[-1]
			if simple and score > 1e-9:
				assert after < values[-1] - 1e-10
				checked += 1
	assert checked > 0

def test_score_table_lookup_matches_positions():
	"""Test score lookups agree with the values aligned to the graph's edges."""
	rng = np.random.default_rng(40)
	graph = random_graph_with_edges(rng, 40, 8, 8)
	table = edge_scores(graph, _eig(graph))
	for position, edge in enumerate(graph.edges):
		assert table.score(list(edge)) == table.values[position]

def test_recalculation_strict_decrease(example_graph):
	"""Test the first recalculating step strictly lowers lambda_max on a connected example."""
	plan = greedy_segment(example_graph, 1, recalculate=True)
	assert plan.lambda_before == pytest.approx((3 + np.sqrt(5)) / 2)
	assert plan.lambda_removed == pytest.approx(1.0)
	assert plan.lambda_after == pytest.approx(2.0)

def test_degree_row_sum_bound():
	"""Test the row-sum bound equals the row sums of the reduced B and bounds its spectrum."""
	rng = np.random.default_rng(38)
	for _ in range(30):
		graph = random_graph_with_edges(rng, 25, 6, 6)
		lam = _lambda(graph)
		for edge in graph.edges:
			row_bound, degree_bound = degree_row_sum_bound(graph, edge)
			reduced = induced_host_matrix(graph.without([edge])).dense()
			assert row_bound == pytest.approx(reduced.sum(axis=1).max())
			assert np.linalg.eigvalsh(reduced.astype(float)).max() <= row_bound + 1e-8
			assert lam <= degree_bound + 1e-8

def test_greedy_segment_examples(example_graph):
	"""Test q = 1 removes the top-scored edge with or without recalculation."""
	plan = greedy_segment(example_graph, 1)
	assert plan.removed_edges == ((0, 1),)
	assert greedy_segment(example_graph, 1, recalculate=True).removed_edges == plan.removed_edges

def test_greedy_segment_all_edges(example_graph):
	"""Test q = |E| moves every user's hosts onto one new account."""
	plan = greedy_segment(example_graph, 3, measure_spectrum=False)
	assert sorted(plan.removed_edges) == [(0, 0), (0, 1), (1, 1)]
	assert plan.new_accounts == {0: (0, 1), 1: (1,)}
	assert plan.resulting_graph.dense().tolist() == [[0, 0], [0, 0], [1, 1], [0, 1]]

def test_budget_errors(example_graph):
	"""Test budgets outside [1, |E|] are rejected."""
	with pytest.raises(BudgetError):
		greedy_segment(example_graph, 0)
	with pytest.raises(BudgetError):
		greedy_segment(example_graph, 4)
	with pytest.raises(BudgetError):
		degree_first_segment(example_graph, 4)

def test_degree_first_examples(example_graph):
	"""Test user-first and host-first on the 2x2 example."""
	assert degree_first_segment(example_graph, 1, "user-first").removed_edges == ((0, 1),)
	assert degree_first_segment(example_graph, 1, "host-first").removed_edges == ((0, 1),)

def test_degree_first_star_tie_break():
	"""Test ties on a star go to the smallest host index."""
	star = access_graph([[1, 1, 1]])
	assert degree_first_segment(star, 1, "user-first", measure_spectrum=False).removed_edges == ((0, 0),)
	assert degree_first_segment(star, 1, "host-first", measure_spectrum=False).removed_edges == ((0, 0),)

def test_segment_dispatch(example_graph):
	"""Test strategy names dispatch to the planners."""
	assert segment(example_graph, 1, "score", measure_spectrum=False).strategy == "score"
	assert segment(example_graph, 2, "host-first", measure_spectrum=False).strategy == "host-first"
	with pytest.raises(ValidationError):
		segment(example_graph, 1, "random")

def test_segmentation_preserves_access():
	"""Test every human keeps the same hosts across original and new accounts."""
	rng = np.random.default_rng(39)
	for strategy in ("score", "score-recalc", "user-first", "host-first"):
		for _ in range(10):
			graph = random_graph_with_edges(rng, 25, 6, 6)
			q = int(rng.integers(1, graph.edge_count + 1))
			plan = segment(graph, q, strategy, measure_spectrum=False)
			result = plan.resulting_graph
			names = result.index.users
			assert result.user_count == graph.user_count + plan.new_account_count
			assert set(plan.new_accounts) == {i for i, _ in plan.removed_edges}
			for user in range(graph.user_count):
				owned = set(result.hosts_of(user))
				for account in range(graph.user_count, result.user_count):
					if names[account].split("#")[0] == names[user]:
						owned |= set(result.hosts_of(account))
				assert owned == set(graph.hosts_of(user))

def test_apply_segmentation_examples(example_graph):
	"""Test applying plans reproduces A_C^q and the new-account fraction."""
	empty = build_plan(example_graph, [], "score")
	graph, fraction = apply_segmentation(example_graph, empty)
	assert graph == example_graph and fraction == 0.0

	plan = build_plan(example_graph, [(0, 0), (0, 1)], "score")
	graph, fraction = apply_segmentation(example_graph, plan)
	assert graph.dense().tolist() == [[0, 0], [0, 1], [1, 1]]
	assert graph.index.users[2] == "u0#seg"
	assert fraction == 0.5

	plan = build_plan(example_graph, [(0, 0), (1, 1)], "score")
	assert apply_segmentation(example_graph, plan)[1] == 1.0

def test_apply_segmentation_inconsistent(example_graph):
	"""Test a plan built for another graph is rejected."""
	other = access_graph([[1, 0], [1, 1]])
	plan = build_plan(other, [(1, 0)], "score")
	with pytest.raises(PlanInconsistencyError):
		apply_segmentation(example_graph, plan)

def test_plan_prefix(example_graph):
	"""Test truncating a plan keeps the selection order."""
	plan = greedy_segment(example_graph, 3, measure_spectrum=False)
	prefix = plan_prefix(example_graph, plan, 1)
	assert prefix.removed_edges == plan.removed_edges[:1]
	assert prefix.selection_scores == plan.selection_scores[:1]
