class LateralGuardException(Exception):
	""" Base class for all LateralGuard exceptions. """
	pass

class ValidationError(LateralGuardException):
	""" Exception thrown when inputs or preconditions are invalid. """
	pass

class InputOutputError(LateralGuardException):
	""" Exception thrown when a file cannot be read or written. """

	def __init__(self, path, message: str):
		self.path = str(path)
		super().__init__(f"{self.path}: {message}")

class UnknownIdentifierError(ValidationError):
	""" Exception thrown when an external identifier is not in the entity index. """

	def __init__(self, identifier: str, kind: str):
		self.identifier = identifier
		self.kind = kind
		super().__init__(f"Unknown {kind} identifier: {identifier!r}")

class ShapeMismatchError(ValidationError):
	""" Exception thrown when matrix or vector shapes disagree. """
	pass

class ValueRangeError(ValidationError):
	""" Exception thrown when a value lies outside its allowed range. """

	def __init__(self, message: str, location=None):
		self.location = location
		super().__init__(message if location is None else f"{message} (at {location})")

class SelfLoopError(ValidationError):
	""" Exception thrown when a host-application flow starts and ends on the same host. """
	pass

class EdgeNotInGraphError(ValidationError):
	""" Exception thrown when an edge is referenced that the access graph does not contain. """

	def __init__(self, edge):
		self.edge = tuple(edge)
		super().__init__(f"Edge {self.edge} is not in the access graph")

class BudgetError(ValidationError):
	""" Exception thrown when a budget is outside the feasible range. """
	pass

class InvalidEpsilonError(ValidationError):
	""" Exception thrown when a residual probability is not below the current probability. """
	pass

class InvalidHardeningLevelError(ValidationError):
	""" Exception thrown when a node hardening level is outside [a_j, 1]. """
	pass

class PlanInconsistencyError(ValidationError):
	""" Exception thrown when a plan does not match the graph it is applied to. """
	pass

class InfeasibleSpecError(ValidationError):
	""" Exception thrown when a synthetic specification asks for more edges than exist. """
	pass

class EigenSolverConvergenceError(LateralGuardException):
	""" Exception thrown when power iteration does not reach the residual tolerance. """

	def __init__(self, residual: float, iterations: int):
		self.residual = residual
		self.iterations = iterations
		super().__init__(f"Power iteration did not converge after {iterations} iterations (residual {residual:.3e})")

class ReferenceSizeError(ValidationError):
	""" Exception thrown when the dense reference operator would be too large to materialize. """
	pass

class MalformedInputError(ValidationError):
	""" Exception thrown when an input file does not follow its schema. """

	def __init__(self, path, line: int, message: str):
		self.path = str(path)
		self.line = line
		super().__init__(f"{self.path}:{line}: {message}")

class BrokenTraceError(ValidationError):
	""" Exception thrown when consecutive attack steps do not chain. """
	pass

class UnknownFlowError(ValidationError):
	""" Exception thrown when an attack trace uses a flow that is not in the host-application graph. """

	def __init__(self, step):
		self.step = tuple(step)
		super().__init__(f"Attack step {self.step} is not a known flow")
