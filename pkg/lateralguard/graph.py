"""
Tripartite user-host-application graph model.

This module owns the index spaces shared by every other module and the two
derived operators that govern lateral movement:

1. B = A_C^T A_C, the induced host matrix of the user-host access graph
2. J, the propagation operator of the host-application graph, with
   [J]_{ji} = sum_k [A_k]_{ij} [P]_{kj}
"""
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import logging

import numpy as np
import scipy.sparse as sp

from .exceptions import (
	SelfLoopError, ShapeMismatchError, UnknownIdentifierError, ValidationError, ValueRangeError
)

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]
Flow = Tuple[int, int, int]


def _readonly(values: np.ndarray) -> np.ndarray:
	values.setflags(write=False)
	return values


class EntityIndex:
	"""Bijection between external identifiers and dense user, host and application indices."""

	def __init__(self, users: Sequence[str], hosts: Sequence[str], apps: Sequence[str]):
		self._users = tuple(users)
		self._hosts = tuple(hosts)
		self._apps = tuple(apps)
		self._user_lookup = self._lookup(self._users, "user")
		self._host_lookup = self._lookup(self._hosts, "host")
		self._app_lookup = self._lookup(self._apps, "app")

	@staticmethod
	def _lookup(ids: Tuple[str, ...], kind: str) -> Dict[str, int]:
		if not ids:
			raise ValidationError(f"At least one {kind} is required")
		lookup = {name: i for i, name in enumerate(ids)}
		if len(lookup) != len(ids):
			raise ValidationError(f"Duplicate {kind} identifiers in index")
		return lookup

	@classmethod
	def from_records(
		cls,
		access: Iterable[Tuple[str, str]] = (),
		flows: Iterable[Tuple[str, str, str]] = (),
		users: Iterable[str] = (),
		hosts: Iterable[str] = (),
		apps: Iterable[str] = ()
	) -> "EntityIndex":
		"""
		Build an index assigning dense indices in first-seen order.

		Args:
			access: (user id, host id) records
			flows: (src host id, app id, dst host id) records
			users: Identifiers registered before any record
			hosts: Identifiers registered before any record
			apps: Identifiers registered before any record
		"""
		seen_users: Dict[str, None] = dict.fromkeys(users)
		seen_hosts: Dict[str, None] = dict.fromkeys(hosts)
		seen_apps: Dict[str, None] = dict.fromkeys(apps)
		for user, host in access:
			seen_users.setdefault(user)
			seen_hosts.setdefault(host)
		for src, app, dst in flows:
			seen_hosts.setdefault(src)
			seen_apps.setdefault(app)
			seen_hosts.setdefault(dst)
		return cls(list(seen_users), list(seen_hosts), list(seen_apps))

	@property
	def user_count(self) -> int:
		return len(self._users)

	@property
	def host_count(self) -> int:
		return len(self._hosts)

	@property
	def app_count(self) -> int:
		return len(self._apps)

	@property
	def users(self) -> Tuple[str, ...]:
		return self._users

	@property
	def hosts(self) -> Tuple[str, ...]:
		return self._hosts

	@property
	def apps(self) -> Tuple[str, ...]:
		return self._apps

	def user_index(self, user_id: str) -> int:
		try:
			return self._user_lookup[user_id]
		except KeyError:
			raise UnknownIdentifierError(user_id, "user") from None

	def host_index(self, host_id: str) -> int:
		try:
			return self._host_lookup[host_id]
		except KeyError:
			raise UnknownIdentifierError(host_id, "host") from None

	def app_index(self, app_id: str) -> int:
		try:
			return self._app_lookup[app_id]
		except KeyError:
			raise UnknownIdentifierError(app_id, "app") from None

	def with_users(self, extra_users: Sequence[str]) -> "EntityIndex":
		"""Return a new index with ``extra_users`` appended after the existing users."""
		return EntityIndex(self._users + tuple(extra_users), self._hosts, self._apps)

	def __eq__(self, other) -> bool:
		if not isinstance(other, EntityIndex):
			return NotImplemented
		return (self._users, self._hosts, self._apps) == (other._users, other._hosts, other._apps)

	def __repr__(self) -> str:
		return f"<EntityIndex U={self.user_count} N={self.host_count} K={self.app_count}>"


class BipartiteAccessGraph:
	"""User-host access relation E and its U x N binary matrix A_C."""

	def __init__(self, index: EntityIndex, edges: Iterable[Edge]):
		self.index = index
		unique = sorted(set((int(i), int(j)) for i, j in edges))
		for i, j in unique:
			if not (0 <= i < index.user_count and 0 <= j < index.host_count):
				raise ShapeMismatchError(f"Edge ({i}, {j}) outside {index.user_count}x{index.host_count}")
		self._edges: Tuple[Edge, ...] = tuple(unique)
		self._edge_set = frozenset(unique)
		rows = np.fromiter((i for i, _ in unique), dtype=np.int64, count=len(unique))
		cols = np.fromiter((j for _, j in unique), dtype=np.int64, count=len(unique))
		matrix = sp.csr_matrix(
			(np.ones(len(unique), dtype=np.int64), (rows, cols)),
			shape=(index.user_count, index.host_count)
		)
		matrix.sort_indices()
		self._matrix = matrix

	@property
	def edges(self) -> Tuple[Edge, ...]:
		"""Edges sorted lexicographically by (user, host)."""
		return self._edges

	@property
	def matrix(self) -> sp.csr_matrix:
		return self._matrix

	@property
	def user_count(self) -> int:
		return self.index.user_count

	@property
	def host_count(self) -> int:
		return self.index.host_count

	@property
	def edge_count(self) -> int:
		return len(self._edges)

	def has_edge(self, edge: Edge) -> bool:
		return tuple(edge) in self._edge_set

	def hosts_of(self, user: int) -> List[int]:
		start, end = self._matrix.indptr[user], self._matrix.indptr[user + 1]
		return self._matrix.indices[start:end].tolist()

	def users_of(self, host: int) -> List[int]:
		return [i for i, j in self._edges if j == host]

	def without(self, removed: Iterable[Edge]) -> "BipartiteAccessGraph":
		"""Return the graph with ``removed`` edges deleted and the same index."""
		drop = set(tuple(e) for e in removed)
		return BipartiteAccessGraph(self.index, [e for e in self._edges if e not in drop])

	def dense(self) -> np.ndarray:
		return self._matrix.toarray()

	def __eq__(self, other) -> bool:
		if not isinstance(other, BipartiteAccessGraph):
			return NotImplemented
		return self.index == other.index and self._edges == other._edges

	def __repr__(self) -> str:
		return f"<BipartiteAccessGraph U={self.user_count} N={self.host_count} |E|={self.edge_count}>"


class HostAppFlows:
	"""Host-application-host triples T and the per-application N x N matrices A_k."""

	def __init__(self, index: EntityIndex, triples: Iterable[Flow]):
		self.index = index
		n, k_count = index.host_count, index.app_count
		unique = sorted(set((int(s), int(k), int(d)) for s, k, d in triples))
		for src, app, dst in unique:
			if not (0 <= src < n and 0 <= dst < n and 0 <= app < k_count):
				raise ShapeMismatchError(f"Flow ({src}, {app}, {dst}) outside N={n}, K={k_count}")
			if src == dst:
				raise SelfLoopError(f"Flow ({src}, {app}, {dst}) is a self-loop")
		self._triples: Tuple[Flow, ...] = tuple(unique)
		self._triple_set = frozenset(unique)
		matrices = []
		for app in range(k_count):
			rows = [s for s, k, _ in unique if k == app]
			cols = [d for _, k, d in unique if k == app]
			a_k = sp.csr_matrix(
				(np.ones(len(rows), dtype=np.int64), (rows, cols)),
				shape=(n, n)
			)
			a_k.sort_indices()
			matrices.append(a_k)
		self._matrices = tuple(matrices)
		self._columns = tuple(m.tocsc() for m in matrices)

	@property
	def triples(self) -> Tuple[Flow, ...]:
		return self._triples

	@property
	def matrices(self) -> Tuple[sp.csr_matrix, ...]:
		return self._matrices

	@property
	def host_count(self) -> int:
		return self.index.host_count

	@property
	def app_count(self) -> int:
		return self.index.app_count

	@property
	def flow_count(self) -> int:
		return len(self._triples)

	def has_flow(self, flow: Flow) -> bool:
		return tuple(flow) in self._triple_set

	def sources_into(self, app: int, host: int) -> np.ndarray:
		"""Indices i with [A_app]_{i,host} = 1."""
		column = self._columns[app]
		return column.indices[column.indptr[host]:column.indptr[host + 1]]

	def outgoing(self, host: int) -> List[Flow]:
		return [t for t in self._triples if t[0] == host]

	def concatenated(self) -> sp.csr_matrix:
		"""A = [A_1 ... A_K], shape N x KN."""
		return sp.hstack(self._matrices, format="csr")

	def collapsed(self) -> sp.csr_matrix:
		"""Host-host adjacency with an edge wherever any application carries a flow."""
		total = sum(self._matrices, sp.csr_matrix((self.host_count, self.host_count), dtype=np.int64))
		total = (total > 0).astype(np.int64)
		return sp.csr_matrix(total)

	def __eq__(self, other) -> bool:
		if not isinstance(other, HostAppFlows):
			return NotImplemented
		return self.index == other.index and self._triples == other._triples

	def __repr__(self) -> str:
		return f"<HostAppFlows N={self.host_count} K={self.app_count} |T|={self.flow_count}>"


class CompromiseProbabilities:
	"""K x N matrix P of per-(application, host) compromise probabilities."""

	def __init__(self, matrix):
		values = np.array(matrix, dtype=float, copy=True)
		if values.ndim != 2:
			raise ShapeMismatchError(f"Compromise probabilities must be a K x N matrix, got shape {values.shape}")
		if values.size and (np.isnan(values).any() or values.min() < 0.0 or values.max() > 1.0):
			raise ValueRangeError("Compromise probabilities must lie in [0, 1]")
		self._matrix = _readonly(values)

	@classmethod
	def ones(cls, app_count: int, host_count: int) -> "CompromiseProbabilities":
		return cls(np.ones((app_count, host_count)))

	@property
	def matrix(self) -> np.ndarray:
		return self._matrix

	@property
	def shape(self) -> Tuple[int, int]:
		return self._matrix.shape

	def with_entries(self, updates: Dict[Tuple[int, int], float]) -> "CompromiseProbabilities":
		values = self._matrix.copy()
		for (k, j), value in updates.items():
			values[k, j] = value
		return CompromiseProbabilities(values)

	def __repr__(self) -> str:
		return f"<CompromiseProbabilities K={self.shape[0]} N={self.shape[1]} nnz={np.count_nonzero(self._matrix)}>"


class SecurityPosture:
	"""Per-host hardening levels a in [0, 1]."""

	def __init__(self, levels):
		values = np.array(levels, dtype=float, copy=True).reshape(-1)
		if values.size and (np.isnan(values).any() or values.min() < 0.0 or values.max() > 1.0):
			raise ValueRangeError("Hardening levels must lie in [0, 1]")
		self._levels = _readonly(values)

	@classmethod
	def zeros(cls, host_count: int) -> "SecurityPosture":
		return cls(np.zeros(host_count))

	@property
	def levels(self) -> np.ndarray:
		return self._levels

	@property
	def host_count(self) -> int:
		return self._levels.size

	def with_levels(self, updates: Dict[int, float]) -> "SecurityPosture":
		values = self._levels.copy()
		for j, level in updates.items():
			values[j] = level
		return SecurityPosture(values)

	def __repr__(self) -> str:
		return f"<SecurityPosture N={self.host_count}>"


class InducedHostMatrix:
	"""B = A_C^T A_C; [B]_{ij} counts users with access to both host i and host j."""

	def __init__(self, matrix: sp.spmatrix):
		self._matrix = sp.csr_matrix(matrix)
		self._matrix.sort_indices()

	@property
	def matrix(self) -> sp.csr_matrix:
		return self._matrix

	@property
	def host_count(self) -> int:
		return self._matrix.shape[0]

	def dense(self) -> np.ndarray:
		return self._matrix.toarray()


class PropagationOperator:
	"""J with [J]_{ji} = sum_k [A_k]_{ij} [P]_{kj}; nonnegative, generally nonsymmetric."""

	def __init__(self, matrix: sp.spmatrix):
		self._matrix = sp.csr_matrix(matrix, dtype=float)
		self._matrix.sort_indices()

	@property
	def matrix(self) -> sp.csr_matrix:
		return self._matrix

	@property
	def host_count(self) -> int:
		return self._matrix.shape[0]

	def dense(self) -> np.ndarray:
		return self._matrix.toarray()


def build_user_host_graph(edge_list: Iterable[Tuple[str, str]], index: EntityIndex) -> BipartiteAccessGraph:
	"""
	Build the access graph from external (user id, host id) pairs.

	Duplicate records collapse into a single binary edge.

	Raises:
		UnknownIdentifierError: An identifier is missing from ``index``
	"""
	edges = [(index.user_index(user), index.host_index(host)) for user, host in edge_list]
	graph = BipartiteAccessGraph(index, edges)
	if graph.edge_count < len(edges):
		logger.debug(f"Collapsed {len(edges) - graph.edge_count} duplicate access records")
	return graph


def build_host_app_flows(triples: Iterable[Tuple[str, str, str]], index: EntityIndex) -> HostAppFlows:
	"""Build the host-application graph from external (src host, app, dst host) triples."""
	flows = [(index.host_index(src), index.app_index(app), index.host_index(dst)) for src, app, dst in triples]
	return HostAppFlows(index, flows)


def induced_host_matrix(g: BipartiteAccessGraph) -> InducedHostMatrix:
	"""Return B = A_C^T A_C."""
	a_c = g.matrix
	return InducedHostMatrix((a_c.T @ a_c).tocsr())


def propagation_operator(flows: HostAppFlows, p: CompromiseProbabilities) -> PropagationOperator:
	"""
	Return J directly from [J]_{ji} = sum_k [A_k]_{ij} [P]_{kj}.

	The Kronecker factors are never materialized; see
	``spectral.kronecker_reference_operator`` for the dense construction.

	Raises:
		ShapeMismatchError: P is not K x N for the flows' index
	"""
	expected = (flows.app_count, flows.host_count)
	if p.shape != expected:
		raise ShapeMismatchError(f"P has shape {p.shape}, expected {expected}")
	n = flows.host_count
	weighted = sp.csr_matrix((n, n), dtype=float)
	for k, a_k in enumerate(flows.matrices):
		# right-multiplying by diag(P[k]) scales column j by [P]_{kj}
		weighted = weighted + a_k.astype(float) @ sp.diags(p.matrix[k])
	j_matrix = weighted.T.tocsr()
	j_matrix.eliminate_zeros()
	return PropagationOperator(j_matrix)


def degree_vectors(g: BipartiteAccessGraph) -> Tuple[np.ndarray, np.ndarray]:
	"""Return (d^U, d^N) = (A_C 1_N, A_C^T 1_U)."""
	a_c = g.matrix
	user_degrees = np.asarray(a_c.sum(axis=1)).reshape(-1).astype(np.int64)
	host_degrees = np.asarray(a_c.sum(axis=0)).reshape(-1).astype(np.int64)
	return user_degrees, host_degrees


def as_binary_vector(values, host_count: Optional[int] = None) -> np.ndarray:
	"""Validate a compromise vector and return it as an int8 array."""
	vector = np.asarray(values).reshape(-1)
	if host_count is not None and vector.size != host_count:
		raise ShapeMismatchError(f"Vector has length {vector.size}, expected {host_count}")
	if not np.isin(vector, (0, 1)).all():
		raise ValueRangeError("Compromise vectors must be binary")
	return vector.astype(np.int8)
