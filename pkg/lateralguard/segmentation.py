"""
Segmentation of the user-host access graph.

Segmenting an edge (i, j) moves user i's access to host j onto a new account
owned by the same person. Every planner here returns a SegmentationPlan whose
resulting graph keeps all original users and appends one new account per user
that lost at least one edge.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple
import logging

import numpy as np
import scipy.sparse as sp

from .exceptions import BudgetError, EdgeNotInGraphError, PlanInconsistencyError, ValidationError
from .graph import BipartiteAccessGraph, Edge, degree_vectors, induced_host_matrix
from .spectral import LeadingEigenpair, leading_eigenpair_symmetric

logger = logging.getLogger(__name__)

NEW_ACCOUNT_SUFFIX = "#seg"

SEGMENTATION_STRATEGIES = ("score", "score-recalc", "user-first", "host-first")


@dataclass(frozen=True)
class EdgeScoreTable:
	"""Scores f((i, j)) over the existing edges, aligned with ``graph.edges``."""
	graph: BipartiteAccessGraph
	eigenpair: LeadingEigenpair
	values: np.ndarray
	_positions: Dict[Edge, int] = field(init=False, repr=False, compare=False)

	def __post_init__(self):
		object.__setattr__(self, "_positions", {edge: position for position, edge in enumerate(self.graph.edges)})

	@property
	def matrix(self) -> sp.csr_matrix:
		"""Sparse U x N view F; nonzero only on edges."""
		edges = self.graph.edges
		rows = [i for i, _ in edges]
		cols = [j for _, j in edges]
		return sp.csr_matrix((self.values, (rows, cols)), shape=(self.graph.user_count, self.graph.host_count))

	def score(self, edge: Edge) -> float:
		edge = tuple(edge)
		position = self._positions.get(edge)
		if position is None:
			raise EdgeNotInGraphError(edge)
		return float(self.values[position])

	def ranked(self) -> List[Edge]:
		"""Edges by descending score; ties by smallest (user, host)."""
		order = sorted(range(len(self.values)), key=lambda e: (-self.values[e], self.graph.edges[e]))
		return [self.graph.edges[e] for e in order]


@dataclass(frozen=True)
class SegmentationPlan:
	"""Ordered removed edges, the new accounts they form and the resulting graph A_C^q."""
	strategy: str
	removed_edges: Tuple[Edge, ...]
	new_accounts: Dict[int, Tuple[int, ...]]
	resulting_graph: BipartiteAccessGraph
	selection_scores: Tuple[float, ...] = ()
	lambda_before: Optional[float] = None
	lambda_removed: Optional[float] = None  # after edge removal, before new accounts
	lambda_after: Optional[float] = None  # on A_C^q including new accounts

	@property
	def new_account_count(self) -> int:
		return len(self.new_accounts)


def _eigenpair(graph: BipartiteAccessGraph, eigen_options: Optional[Dict[str, Any]]) -> LeadingEigenpair:
	return leading_eigenpair_symmetric(induced_host_matrix(graph), **(eigen_options or {}))


def edge_scores(g: BipartiteAccessGraph, eig: LeadingEigenpair) -> EdgeScoreTable:
	"""
	Score every edge with f((i, j)) = 2 u^T A_C^T e_i [u]_j - [u]_j^2.

	Uses the matrix form F = [2 A_C u u^T - 1_U (u * u)^T] * A_C restricted to edges.
	"""
	u = np.asarray(eig.eigenvector, dtype=float)
	if u.size != g.host_count:
		raise ValidationError(f"Eigenvector has length {u.size}, graph has {g.host_count} hosts")
	if not g.edge_count:
		return EdgeScoreTable(g, eig, np.zeros(0))
	rows = np.fromiter((i for i, _ in g.edges), dtype=np.int64, count=g.edge_count)
	cols = np.fromiter((j for _, j in g.edges), dtype=np.int64, count=g.edge_count)
	user_mass = g.matrix @ u
	values = 2.0 * user_mass[rows] * u[cols] - u[cols] ** 2
	values.setflags(write=False)
	return EdgeScoreTable(g, eig, values)


def _removal_by_user(g: BipartiteAccessGraph, removal_set: Iterable[Edge]) -> Dict[int, List[int]]:
	by_user: Dict[int, List[int]] = {}
	for edge in set(tuple(e) for e in removal_set):
		if not g.has_edge(edge):
			raise EdgeNotInGraphError(edge)
		by_user.setdefault(edge[0], []).append(edge[1])
	return by_user


def set_score_f(g: BipartiteAccessGraph, eig: LeadingEigenpair, removal_set: Iterable[Edge]) -> float:
	"""
	Evaluate f(E_R) = 2 sum_{(i,j) in E_R} u^T A_C^T e_i [u]_j - sum_i sum_{j,s in E_R(i)} [u]_j [u]_s.

	The function lower-bounds the spectral radius drop: lambda_max(B~(E_R)) >= lambda_max(B) - f(E_R).

	Raises:
		EdgeNotInGraphError: An edge of ``removal_set`` is not in ``g``
	"""
	u = np.asarray(eig.eigenvector, dtype=float)
	user_mass = g.matrix @ u
	total = 0.0
	for user, hosts in _removal_by_user(g, removal_set).items():
		removed_mass = float(u[hosts].sum())
		total += 2.0 * user_mass[user] * removed_mass - removed_mass ** 2
	return max(total, 0.0)


def set_score_f_expanded(g: BipartiteAccessGraph, eig: LeadingEigenpair, removal_set: Iterable[Edge]) -> float:
	"""
	Equivalent nonnegative form of f as explicit double sums:
	sum_i sum_{j,s in E_R(i)} [u]_j [u]_s + 2 sum_i sum_{j in E_R(i)} sum_{s in E(i) \\ E_R(i)} [u]_j [u]_s.
	"""
	u = np.asarray(eig.eigenvector, dtype=float)
	total = 0.0
	for user, removed in _removal_by_user(g, removal_set).items():
		kept = [s for s in g.hosts_of(user) if s not in removed]
		for j in removed:
			for s in removed:
				total += u[j] * u[s]
			for s in kept:
				total += 2.0 * u[j] * u[s]
	return total


def marginal_greedy_removal(g: BipartiteAccessGraph, eig: LeadingEigenpair, q: int) -> List[Edge]:
	"""
	Classical greedy maximization of f: repeatedly add the edge of largest marginal gain.

	With user mass T_i = (A_C u)_i and removed mass x_i, adding (i, j) gains
	[u]_j (2 T_i - 2 x_i - [u]_j).
	"""
	_check_budget(g, q)
	u = np.asarray(eig.eigenvector, dtype=float)
	user_mass = g.matrix @ u
	removed_mass = np.zeros(g.user_count)
	remaining = list(g.edges)
	chosen: List[Edge] = []
	for _ in range(q):
		best = max(
			remaining,
			key=lambda e: (u[e[1]] * (2.0 * user_mass[e[0]] - 2.0 * removed_mass[e[0]] - u[e[1]]), -e[0], -e[1])
		)
		chosen.append(best)
		remaining.remove(best)
		removed_mass[best[0]] += u[best[1]]
	return chosen


def degree_row_sum_bound(g: BipartiteAccessGraph, edge: Edge) -> Tuple[float, float]:
	"""
	Upper bounds on lambda_max(B~(i, j)) after removing one edge.

	Returns:
		(max_s [B 1_N - (d_i^U - 1) e_j - A_C^T e_i]_s, d_max^user * d_max^host)
	"""
	edge = tuple(edge)
	if not g.has_edge(edge):
		raise EdgeNotInGraphError(edge)
	i, j = edge
	user_degrees, host_degrees = degree_vectors(g)
	row_sums = np.asarray(induced_host_matrix(g).matrix.sum(axis=1)).reshape(-1).astype(float)
	row_sums -= g.matrix.getrow(i).toarray().reshape(-1)
	row_sums[j] -= user_degrees[i] - 1
	degree_bound = float(user_degrees.max() * host_degrees.max()) if g.edge_count else 0.0
	return float(row_sums.max()), degree_bound


def _check_budget(g: BipartiteAccessGraph, q: int) -> None:
	if not 1 <= q <= g.edge_count:
		raise BudgetError(f"Segmentation budget q={q} must be between 1 and |E|={g.edge_count}")


def _account_name(g: BipartiteAccessGraph, user: int, taken: set) -> str:
	base = f"{g.index.users[user]}{NEW_ACCOUNT_SUFFIX}"
	name, counter = base, 1
	while name in taken:
		counter += 1
		name = f"{base}{counter}"
	taken.add(name)
	return name


def _segment_graph(
	g: BipartiteAccessGraph,
	removed: Sequence[Edge],
	accounts: Dict[int, Tuple[int, ...]]
) -> BipartiteAccessGraph:
	taken = set(g.index.users)
	names = [_account_name(g, user, taken) for user in accounts]
	index = g.index.with_users(names)
	drop = set(removed)
	edges = [e for e in g.edges if e not in drop]
	for offset, hosts in enumerate(accounts.values()):
		edges.extend((g.user_count + offset, host) for host in hosts)
	return BipartiteAccessGraph(index, edges)


def _accounts_for(removed: Sequence[Edge]) -> Dict[int, Tuple[int, ...]]:
	grouped: Dict[int, List[int]] = {}
	for user, host in removed:
		grouped.setdefault(user, []).append(host)
	return {user: tuple(sorted(grouped[user])) for user in sorted(grouped)}


def build_plan(
	g: BipartiteAccessGraph,
	removed: Sequence[Edge],
	strategy: str,
	selection_scores: Sequence[float] = ()
) -> SegmentationPlan:
	"""Turn an ordered removal list into a plan, creating one new account per affected user."""
	removed = tuple(tuple(e) for e in removed)
	for edge in removed:
		if not g.has_edge(edge):
			raise EdgeNotInGraphError(edge)
	if len(set(removed)) != len(removed):
		raise PlanInconsistencyError("Removal list repeats an edge")
	accounts = _accounts_for(removed)
	return SegmentationPlan(
		strategy=strategy,
		removed_edges=removed,
		new_accounts=accounts,
		resulting_graph=_segment_graph(g, removed, accounts),
		selection_scores=tuple(float(s) for s in selection_scores)
	)


def plan_prefix(g: BipartiteAccessGraph, plan: SegmentationPlan, q: int) -> SegmentationPlan:
	"""Plan made of the first ``q`` removals of ``plan``."""
	return build_plan(g, plan.removed_edges[:q], plan.strategy, plan.selection_scores[:q])


def _with_spectrum(
	g: BipartiteAccessGraph,
	plan: SegmentationPlan,
	eigen_options: Optional[Dict[str, Any]],
	before: Optional[float] = None
) -> SegmentationPlan:
	if before is None:
		before = _eigenpair(g, eigen_options).eigenvalue
	removed = _eigenpair(g.without(plan.removed_edges), eigen_options).eigenvalue
	after = _eigenpair(plan.resulting_graph, eigen_options).eigenvalue
	logger.info(
		f"{plan.strategy}: removed {len(plan.removed_edges)} edges, {plan.new_account_count} new accounts, "
		f"lambda_max {before:.6g} -> {removed:.6g} (edges removed) -> {after:.6g} (accounts added)"
	)
	return SegmentationPlan(
		strategy=plan.strategy,
		removed_edges=plan.removed_edges,
		new_accounts=plan.new_accounts,
		resulting_graph=plan.resulting_graph,
		selection_scores=plan.selection_scores,
		lambda_before=before,
		lambda_removed=removed,
		lambda_after=after
	)


def greedy_segment(
	g: BipartiteAccessGraph,
	q: int,
	recalculate: bool = False,
	eigen_options: Optional[Dict[str, Any]] = None,
	measure_spectrum: bool = True
) -> SegmentationPlan:
	"""
	Greedy score segmentation.

	Args:
		g: Access graph
		q: Number of edges to segment, 1 <= q <= |E|
		recalculate: Recompute the eigenvector and scores after every removal
		eigen_options: Keyword arguments for the eigen-solver
		measure_spectrum: Record lambda_max before, after removal and after account creation

	Raises:
		BudgetError: q outside [1, |E|]
	"""
	_check_budget(g, q)
	first = _eigenpair(g, eigen_options)
	if not recalculate:
		table = edge_scores(g, first)
		removed = table.ranked()[:q]
		scores = [table.score(e) for e in removed]
	else:
		removed, scores = [], []
		current, eig = g, first
		for step in range(q):
			if step:
				eig = _eigenpair(current, eigen_options)
			table = edge_scores(current, eig)
			best = table.ranked()[0]
			removed.append(best)
			scores.append(table.score(best))
			logger.debug(f"Step {step + 1}: segment {best} (score {scores[-1]:.6g}, lambda {eig.eigenvalue:.6g})")
			current = current.without([best])
	plan = build_plan(g, removed, "score-recalc" if recalculate else "score", scores)
	if measure_spectrum:
		plan = _with_spectrum(g, plan, eigen_options, before=first.eigenvalue)
	return plan


def degree_first_segment(
	g: BipartiteAccessGraph,
	q: int,
	mode: str = "user-first",
	eigen_options: Optional[Dict[str, Any]] = None,
	measure_spectrum: bool = True
) -> SegmentationPlan:
	"""
	Greedy user-first or host-first segmentation driven by degrees.

	user-first picks the user of largest degree, then its accessible host of
	largest degree; host-first picks the host first. Ties go to the smallest index.
	"""
	if mode not in ("user-first", "host-first"):
		raise ValidationError(f"Unknown degree-first mode: {mode!r}")
	_check_budget(g, q)
	user_degrees, host_degrees = (d.copy() for d in degree_vectors(g))
	user_hosts = {i: set(g.hosts_of(i)) for i in range(g.user_count)}
	host_users: Dict[int, set] = {j: set() for j in range(g.host_count)}
	for i, j in g.edges:
		host_users[j].add(i)

	removed: List[Edge] = []
	for _ in range(q):
		if mode == "user-first":
			i = int(np.argmax(user_degrees))
			j = max(user_hosts[i], key=lambda h: (host_degrees[h], -h))
		else:
			j = int(np.argmax(host_degrees))
			i = max(host_users[j], key=lambda u: (user_degrees[u], -u))
		removed.append((i, j))
		user_hosts[i].discard(j)
		host_users[j].discard(i)
		user_degrees[i] -= 1
		host_degrees[j] -= 1
	plan = build_plan(g, removed, mode)
	if measure_spectrum:
		plan = _with_spectrum(g, plan, eigen_options)
	return plan


def segment(
	g: BipartiteAccessGraph,
	q: int,
	strategy: str,
	eigen_options: Optional[Dict[str, Any]] = None,
	measure_spectrum: bool = True
) -> SegmentationPlan:
	"""Dispatch to the planner named by ``strategy`` (one of SEGMENTATION_STRATEGIES)."""
	if strategy in ("score", "score-recalc"):
		return greedy_segment(g, q, strategy == "score-recalc", eigen_options, measure_spectrum)
	if strategy in ("user-first", "host-first"):
		return degree_first_segment(g, q, strategy, eigen_options, measure_spectrum)
	raise ValidationError(f"Unknown segmentation strategy: {strategy!r}")


def apply_segmentation(g: BipartiteAccessGraph, plan: SegmentationPlan) -> Tuple[BipartiteAccessGraph, float]:
	"""
	Apply ``plan`` to ``g``.

	Returns:
		(A_C^q with appended new-account rows, number of new accounts / U)

	Raises:
		PlanInconsistencyError: The plan was not built for ``g``
	"""
	removed = tuple(tuple(e) for e in plan.removed_edges)
	for edge in removed:
		if not g.has_edge(edge):
			raise PlanInconsistencyError(f"Removed edge {edge} is not in the graph")
	expected = _accounts_for(removed)
	given = {user: tuple(sorted(hosts)) for user, hosts in plan.new_accounts.items()}
	if given != expected:
		raise PlanInconsistencyError("New accounts do not match the removed edges")
	if not removed:
		return g, 0.0
	return _segment_graph(g, removed, expected), len(expected) / g.user_count
