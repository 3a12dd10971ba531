"""
Cascade computation of lateral-movement reachability.

Each cascade iterates r_{t+1} = max(r_t, H_a(T(r_t + M r_t))) from a binary
seed vector until a fixed point, with M = B (user-host), M = J
(host-application) or M = B + J (tripartite). Compromise is absorbing: a host
that is compromised stays compromised.
"""
from dataclasses import dataclass, field
from typing import List, Optional
import logging

import numpy as np
import scipy.sparse as sp

from .exceptions import ShapeMismatchError, ValueRangeError
from .graph import InducedHostMatrix, PropagationOperator, SecurityPosture, as_binary_vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompromiseState:
	"""Binary compromise vector after ``hop`` hops."""
	r: np.ndarray
	hop: int
	converged: bool = False

	@property
	def host_count(self) -> int:
		return self.r.size

	@property
	def compromised(self) -> List[int]:
		return np.flatnonzero(self.r).tolist()


@dataclass
class CascadeTrace:
	"""Per-hop compromise states and, when recorded, walk counts w_h = M^h r_0."""
	states: List[CompromiseState] = field(default_factory=list)
	walk_counts: List[np.ndarray] = field(default_factory=list)

	@property
	def final(self) -> CompromiseState:
		return self.states[-1]

	@property
	def hops(self) -> int:
		return self.final.hop


def threshold_T(x) -> np.ndarray:
	"""
	Clamp a nonnegative vector into [0, 1] entrywise.

	Raises:
		ValueRangeError: An entry is negative
	"""
	values = np.asarray(x, dtype=float)
	if values.size and values.min() < 0:
		raise ValueRangeError("Threshold input must be nonnegative", location=int(np.argmin(values)))
	return np.minimum(values, 1.0)


def indicator_H(x, a: SecurityPosture) -> np.ndarray:
	"""[H_a(x)]_i = 1 iff [x]_i > [a]_i (strict)."""
	values = np.asarray(x, dtype=float)
	if values.shape != a.levels.shape:
		raise ShapeMismatchError(f"Vector has shape {values.shape}, posture has {a.levels.shape}")
	return (values > a.levels).astype(np.int8)


def _as_matrix(operator) -> sp.csr_matrix:
	return sp.csr_matrix(getattr(operator, "matrix", operator), dtype=float)


def _cascade(
	matrix: sp.csr_matrix,
	a: Optional[SecurityPosture],
	r0,
	max_hops: Optional[int],
	record_walks: bool
) -> CascadeTrace:
	n = matrix.shape[0]
	r = as_binary_vector(r0, n)
	if a is not None and a.host_count != n:
		raise ShapeMismatchError(f"Posture covers {a.host_count} hosts, operator {n}")
	if max_hops is None:
		max_hops = n
	if max_hops < 1:
		raise ValueRangeError(f"max_hops must be at least 1, got {max_hops}")

	def step(current: np.ndarray) -> np.ndarray:
		mass = threshold_T(current + matrix @ current)
		gated = (mass > 0).astype(np.int8) if a is None else indicator_H(mass, a)
		return np.maximum(current, gated)

	trace = CascadeTrace()
	walk = r.astype(float)
	if record_walks:
		trace.walk_counts.append(walk)
	converged = False
	for hop in range(1, max_hops + 1):
		nxt = step(r)
		if np.array_equal(nxt, r):
			converged = True
			break
		trace.states.append(CompromiseState(r, hop - 1))
		if record_walks:
			walk = matrix @ walk
			trace.walk_counts.append(walk)
		r = nxt
	else:
		converged = np.array_equal(step(r), r)
	trace.states.append(CompromiseState(r, len(trace.states), converged))
	logger.debug(f"Cascade stopped after {trace.hops} hops with {int(r.sum())}/{n} hosts compromised")
	return trace


def user_host_cascade(b: InducedHostMatrix, r0, max_hops: Optional[int] = None, record_walks: bool = False) -> CascadeTrace:
	"""
	Iterate r_{t+1} = T(r_t + B r_t) to its fixed point.

	Args:
		b: Induced host matrix
		r0: Binary seed vector of length N
		max_hops: Hop limit (defaults to N)
		record_walks: Also keep w_h = B^h r_0 per hop
	"""
	return _cascade(_as_matrix(b), None, r0, max_hops, record_walks)


def host_app_cascade(
	j: PropagationOperator,
	a: SecurityPosture,
	r0,
	max_hops: Optional[int] = None,
	record_walks: bool = False
) -> CascadeTrace:
	"""Iterate r_{t+1} = max(r_t, H_a(T(r_t + J r_t))) to its fixed point."""
	return _cascade(_as_matrix(j), a, r0, max_hops, record_walks)


def tripartite_cascade(
	b: InducedHostMatrix,
	j: PropagationOperator,
	a: SecurityPosture,
	r0,
	max_hops: Optional[int] = None,
	record_walks: bool = False
) -> CascadeTrace:
	"""Iterate r_{t+1} = max(r_t, H_a(T(r_t + (B + J) r_t))) to its fixed point."""
	combined = _as_matrix(b) + _as_matrix(j)
	return _cascade(combined, a, r0, max_hops, record_walks)


def accumulated_state(operator, r0, hops: int, a: Optional[SecurityPosture] = None) -> np.ndarray:
	"""
	Accumulation form r_t = H_a(T(sum_{h=0}^{t} w_h)) with w_h = M^h r_0.

	Without ``a`` any positive mass counts as compromise. Agrees with the
	recursive cascades when every hardening level is zero.
	"""
	matrix = _as_matrix(operator)
	walk = as_binary_vector(r0, matrix.shape[0]).astype(float)
	total = walk.copy()
	for _ in range(hops):
		walk = matrix @ walk
		total = total + walk
	mass = threshold_T(total)
	if a is None:
		return (mass > 0).astype(np.int8)
	return indicator_H(mass, a)


def reachability_fraction(state: CompromiseState) -> float:
	"""Fraction of hosts compromised in ``state``."""
	return float(state.r.sum()) / state.host_count
