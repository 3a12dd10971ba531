"""
Leading eigenpairs of the induced host matrix B and the propagation operator J.

Both operators are nonnegative, so their spectral radius is a real eigenvalue
with an entrywise nonnegative eigenvector. Power iteration runs on the shifted
matrix M + I, which keeps that eigenvalue dominant in magnitude even for
periodic (bipartite-like) patterns.
"""
from dataclasses import dataclass
from typing import Optional, Union
import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .exceptions import EigenSolverConvergenceError, ReferenceSizeError, ShapeMismatchError, ValueRangeError
from .graph import CompromiseProbabilities, HostAppFlows, InducedHostMatrix, PropagationOperator

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITERATIONS = 10_000
DEFAULT_DENSE_FALLBACK_LIMIT = 2000
REFERENCE_ENTRY_LIMIT = 10**6

Operator = Union[InducedHostMatrix, PropagationOperator, sp.spmatrix, np.ndarray]


@dataclass(frozen=True)
class LeadingEigenpair:
	"""Largest eigenvalue, unit nonnegative eigenvector and convergence record."""
	eigenvalue: float
	eigenvector: np.ndarray
	residual: float
	iterations: int
	degenerate: bool = False  # eigenvector carries no spectral information (zero or nilpotent operator)
	method: str = "power"


def _as_csr(operator: Operator) -> sp.csr_matrix:
	matrix = getattr(operator, "matrix", operator)
	matrix = sp.csr_matrix(matrix, dtype=float)
	if matrix.shape[0] != matrix.shape[1]:
		raise ShapeMismatchError(f"Operator must be square, got {matrix.shape}")
	return matrix


def _residual(matrix: sp.csr_matrix, eigenvalue: float, vector: np.ndarray) -> float:
	return float(np.linalg.norm(matrix @ vector - eigenvalue * vector))


def _finish(vector: np.ndarray) -> np.ndarray:
	vector = np.where(vector < 0.0, 0.0, vector)
	norm = np.linalg.norm(vector)
	if norm > 0:
		vector = vector / norm
	vector.setflags(write=False)
	return vector


def _power_iteration(
	matrix: sp.csr_matrix,
	tolerance: float,
	max_iterations: int,
	start: Optional[np.ndarray]
):
	n = matrix.shape[0]
	if start is None:
		vector = np.full(n, 1.0 / np.sqrt(n))
	else:
		vector = np.abs(np.asarray(start, dtype=float))
		norm = np.linalg.norm(vector)
		vector = vector / norm if norm > 0 else np.full(n, 1.0 / np.sqrt(n))

	residual = np.inf
	for iteration in range(1, max_iterations + 1):
		product = matrix @ vector
		eigenvalue = float(vector @ product)
		residual = float(np.linalg.norm(product - eigenvalue * vector))
		if residual <= tolerance * max(eigenvalue, 1.0):
			return max(eigenvalue, 0.0), vector, residual, iteration, True
		shifted = product + vector
		vector = shifted / np.linalg.norm(shifted)
	return max(float(vector @ (matrix @ vector)), 0.0), vector, residual, max_iterations, False


def _dense_eigenpair(matrix: sp.csr_matrix, symmetric: bool):
	dense = matrix.toarray()
	if symmetric:
		values, vectors = np.linalg.eigh(dense)
		index = int(np.argmax(values))
		eigenvalue = float(values[index])
		vector = vectors[:, index]
	else:
		values, vectors = np.linalg.eig(dense)
		index = int(np.argmax(values.real))
		eigenvalue = float(values[index].real)
		vector = vectors[:, index].real
	if vector.sum() < 0:
		vector = -vector
	return max(eigenvalue, 0.0), vector


def _solve(
	matrix: sp.csr_matrix,
	symmetric: bool,
	tolerance: float,
	max_iterations: int,
	start: Optional[np.ndarray],
	dense_fallback_limit: int
) -> LeadingEigenpair:
	if tolerance <= 0:
		raise ValueRangeError(f"Tolerance must be positive, got {tolerance}")
	eigenvalue, vector, residual, iterations, converged = _power_iteration(matrix, tolerance, max_iterations, start)
	if converged:
		logger.debug(f"Power iteration converged in {iterations} iterations: lambda={eigenvalue:.12g}")
		return LeadingEigenpair(eigenvalue, _finish(vector), residual, iterations)

	n = matrix.shape[0]
	if n > dense_fallback_limit:
		raise EigenSolverConvergenceError(residual, iterations)
	logger.warning(
		f"Power iteration stalled at residual {residual:.3e} after {iterations} iterations; "
		f"solving the {n}x{n} eigenproblem densely"
	)
	eigenvalue, vector = _dense_eigenpair(matrix, symmetric)
	vector = _finish(vector)
	return LeadingEigenpair(eigenvalue, vector, _residual(matrix, eigenvalue, vector), iterations, method="dense")


def is_nilpotent(operator: Operator) -> bool:
	"""
	Whether a nonnegative operator has spectral radius 0.

	For nonnegative matrices this holds exactly when the nonzero pattern is a
	directed acyclic graph: no self-loops and only singleton strongly
	connected components.
	"""
	matrix = _as_csr(operator)
	matrix.eliminate_zeros()
	if matrix.nnz == 0:
		return True
	if np.any(matrix.diagonal() != 0):
		return False
	components, _ = connected_components(matrix, directed=True, connection="strong")
	return components == matrix.shape[0]


def leading_eigenpair_symmetric(
	b: Operator,
	tolerance: float = DEFAULT_TOLERANCE,
	max_iterations: int = DEFAULT_MAX_ITERATIONS,
	start: Optional[np.ndarray] = None,
	dense_fallback_limit: int = DEFAULT_DENSE_FALLBACK_LIMIT
) -> LeadingEigenpair:
	"""
	Compute (lambda_max(B), u) for a symmetric nonnegative matrix.

	Args:
		b: Induced host matrix (or any symmetric nonnegative square matrix)
		tolerance: Relative residual target, ||Bu - lambda u|| <= tolerance * max(lambda, 1)
		max_iterations: Power iteration budget
		start: Optional warm-start vector (absolute values are used)
		dense_fallback_limit: Largest dimension solved densely when power iteration stalls

	Returns:
		LeadingEigenpair; the all-zero matrix yields lambda = 0 and e_0

	Raises:
		EigenSolverConvergenceError: Power iteration stalled and the matrix is too large to solve densely
	"""
	matrix = _as_csr(b)
	if matrix.nnz and abs(matrix - matrix.T).max() > 1e-12:
		raise ShapeMismatchError("Matrix is not symmetric")
	if matrix.nnz and matrix.data.min() < 0:
		raise ValueRangeError("Matrix has negative entries")
	if matrix.count_nonzero() == 0:
		basis = np.zeros(matrix.shape[0])
		basis[0] = 1.0
		basis.setflags(write=False)
		return LeadingEigenpair(0.0, basis, 0.0, 0, degenerate=True, method="zero")
	return _solve(matrix, True, tolerance, max_iterations, start, dense_fallback_limit)


def leading_eigenpair_nonnegative(
	j: Operator,
	tolerance: float = DEFAULT_TOLERANCE,
	max_iterations: int = DEFAULT_MAX_ITERATIONS,
	start: Optional[np.ndarray] = None,
	dense_fallback_limit: int = DEFAULT_DENSE_FALLBACK_LIMIT
) -> LeadingEigenpair:
	"""
	Compute (lambda_max(J), y) for an entrywise nonnegative matrix.

	A nilpotent J has no informative eigenvector; it is reported with
	``degenerate=True`` and the uniform vector 1/sqrt(N) so scoring can proceed.
	"""
	matrix = _as_csr(j)
	if matrix.nnz and matrix.data.min() < 0:
		raise ValueRangeError("Propagation operator has negative entries")
	if is_nilpotent(matrix):
		n = matrix.shape[0]
		uniform = np.full(n, 1.0 / np.sqrt(n))
		logger.debug("Propagation operator is nilpotent; using the uniform vector")
		return LeadingEigenpair(
			0.0, _finish(uniform), _residual(matrix, 0.0, uniform), 0, degenerate=True, method="nilpotent"
		)
	return _solve(matrix, False, tolerance, max_iterations, start, dense_fallback_limit)


def _dense_flows(flows: HostAppFlows) -> np.ndarray:
	return flows.concatenated().toarray().astype(float)


def _check_reference_size(app_count: int, host_count: int, limit: int) -> None:
	if app_count * host_count * host_count > limit:
		raise ReferenceSizeError(
			f"Dense reference needs K*N^2 = {app_count * host_count * host_count} entries (limit {limit})"
		)


def _kronecker_operator(values: np.ndarray, flows: HostAppFlows, limit: int) -> np.ndarray:
	k_count, n = flows.app_count, flows.host_count
	if values.shape != (k_count, n):
		raise ShapeMismatchError(f"Expected a {k_count}x{n} matrix, got {values.shape}")
	_check_reference_size(k_count, n, limit)
	expanded = np.kron(values, np.ones((n, 1)))  # P (x) 1_N, KN x N
	selector = np.kron(np.ones((k_count, 1)), np.eye(n))  # 1_K (x) I_N keeps row kN+j for column j
	return (expanded * selector).T @ _dense_flows(flows).T


def kronecker_reference_operator(
	p: CompromiseProbabilities,
	flows: HostAppFlows,
	limit: int = REFERENCE_ENTRY_LIMIT
) -> np.ndarray:
	"""
	Dense reference construction of J from the Kronecker factors.

	Materializes P (x) 1_N (KN x N) and the concatenation A (N x KN). Stacking
	the per-host expressions e_j^T (col_j(P)^T (x) I_N) A^T selects, in column
	j of P (x) 1_N, only the rows kN + j; that selector is 1_K (x) I_N applied
	entrywise.

	Raises:
		ReferenceSizeError: K * N^2 exceeds ``limit``
	"""
	return _kronecker_operator(p.matrix, flows, limit)


def stacked_reference_operator(
	p: CompromiseProbabilities,
	flows: HostAppFlows,
	limit: int = REFERENCE_ENTRY_LIMIT
) -> np.ndarray:
	"""Dense J built row by row as e_j^T (col_j(P)^T (x) I_N) A^T."""
	k_count, n = flows.app_count, flows.host_count
	_check_reference_size(k_count, n, limit)
	a_t = _dense_flows(flows).T
	identity = np.eye(n)
	rows = []
	for j in range(n):
		selector = np.kron(p.matrix[:, j].reshape(1, k_count), identity)  # N x KN
		rows.append(identity[j] @ selector @ a_t)
	return np.vstack(rows)


def kronecker_reference_delta(
	delta: np.ndarray,
	flows: HostAppFlows,
	limit: int = REFERENCE_ENTRY_LIMIT
) -> np.ndarray:
	"""Dense Delta J_H = [Delta P (x) 1_N]^T A^T for a K x N reduction matrix Delta P."""
	return _kronecker_operator(np.asarray(delta, dtype=float), flows, limit)
