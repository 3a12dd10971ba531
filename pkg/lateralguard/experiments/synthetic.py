"""
Seeded synthetic inputs: tripartite graphs, compromise probabilities,
security postures, initial compromise sets and attack traces.

Every generator accepts either an integer seed or a numpy Generator, so an
experiment can hand each trial its own spawned stream.
"""
from typing import List, Tuple, Union
import logging

import numpy as np

from ..exceptions import BudgetError, ValueRangeError
from ..graph import (
	BipartiteAccessGraph, CompromiseProbabilities, EntityIndex, HostAppFlows, SecurityPosture
)
from .models import AttackTrace, DegreeModel, Step, SyntheticSpec

logger = logging.getLogger(__name__)

Seed = Union[int, np.random.Generator, np.random.SeedSequence]


def _rng(seed: Seed) -> np.random.Generator:
	return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def host_weights(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
	"""Normalized host popularity; power-law weights follow rank^(-1/(exponent-1)) over a random ranking."""
	if spec.degree_model == DegreeModel.UNIFORM:
		return np.full(spec.hosts, 1.0 / spec.hosts)
	ranks = rng.permutation(spec.hosts) + 1
	weights = ranks.astype(float) ** (-1.0 / (spec.exponent - 1.0))
	return weights / weights.sum()


def _sample(rng: np.random.Generator, weights: np.ndarray, count: int) -> np.ndarray:
	if count == 0:
		return np.zeros(0, dtype=np.int64)
	return np.sort(rng.choice(weights.size, size=count, replace=False, p=weights / weights.sum()))


def gen_synthetic_tripartite(spec: SyntheticSpec) -> Tuple[BipartiteAccessGraph, HostAppFlows]:
	"""
	Generate an access graph and host-application flows from ``spec``.

	Access edges and flow triples are sampled without replacement, so realized
	counts equal the requested counts. When there are at least as many access
	edges as users, every user holds one; otherwise some users hold none.
	Users pick hosts by host popularity;
	flows connect popular sources to popular destinations, never a host to itself.
	With ``spec.services`` set, each host serves that many applications drawn
	at random and every flow into it uses one of them.

	Raises:
		InfeasibleSpecError: A requested count exceeds its capacity
	"""
	spec.check_feasible()
	rng = np.random.default_rng(spec.seed)
	users = [f"u{i}" for i in range(spec.users)]
	hosts = [f"h{j}" for j in range(spec.hosts)]
	apps = [f"app{k}" for k in range(spec.apps)]
	index = EntityIndex(users, hosts, apps)
	weights = host_weights(spec, rng)
	n = spec.hosts

	# flat index i * N + j
	access_weights = np.tile(weights, spec.users)
	if spec.user_host_edges >= spec.users:
		first = rng.choice(n, size=spec.users, p=weights)
		access_weights[np.arange(spec.users) * n + first] = 0.0
		edges = [(i, int(j)) for i, j in enumerate(first)]
		picked = _sample(rng, access_weights, spec.user_host_edges - spec.users)
	else:
		edges = []
		picked = _sample(rng, access_weights, spec.user_host_edges)
	edges += [(int(c // n), int(c % n)) for c in picked]

	# flat index (k * N + src) * (N - 1) + d, with dst = d + (d >= src)
	others = np.arange(n - 1)
	destinations = np.concatenate([others + (others >= src) for src in range(n)])
	sources = np.repeat(np.arange(n), n - 1)
	flow_weights = np.tile(weights[sources] * weights[destinations], spec.apps)
	if spec.services is not None:
		served = np.zeros((spec.apps, n), dtype=bool)
		for host in range(n):
			served[rng.choice(spec.apps, size=spec.services, replace=False), host] = True
		flow_weights = flow_weights * served[:, destinations].reshape(-1)
	picked = _sample(rng, flow_weights, spec.flows)
	triples = []
	for c in picked:
		block, d = divmod(int(c), n - 1)
		app, src = divmod(block, n)
		triples.append((src, app, d + (d >= src)))

	graph = BipartiteAccessGraph(index, edges)
	flows = HostAppFlows(index, triples)
	logger.info(f"Generated {graph!r} and {flows!r} (seed {spec.seed}, {spec.degree_model.value})")
	return graph, flows


def gen_random_P(app_count: int, host_count: int, nonzero_fraction: float = 0.1, seed: Seed = None) -> CompromiseProbabilities:
	"""
	K x N probabilities with exactly round(fraction * K * N) nonzero entries, each uniform in (0, 1).

	Raises:
		ValueRangeError: ``nonzero_fraction`` is outside [0, 1]
	"""
	if not 0.0 <= nonzero_fraction <= 1.0:
		raise ValueRangeError(f"Nonzero fraction must lie in [0, 1], got {nonzero_fraction}")
	rng = _rng(seed)
	size = app_count * host_count
	count = int(round(nonzero_fraction * size))
	values = np.zeros(size)
	positions = rng.choice(size, size=count, replace=False)
	values[positions] = rng.uniform(np.nextafter(0.0, 1.0), 1.0, size=count)
	return CompromiseProbabilities(values.reshape(app_count, host_count))


def gen_random_posture(host_count: int, seed: Seed = None) -> SecurityPosture:
	"""Hardening levels drawn i.i.d. uniform on [0, 1]."""
	return SecurityPosture(_rng(seed).uniform(0.0, 1.0, size=host_count))


def initial_compromise_count(host_count: int, fraction: float = 0.001) -> int:
	return max(1, int(round(fraction * host_count)))


def pick_initial_compromise(host_count: int, count: int, seed: Seed = None) -> np.ndarray:
	"""
	Binary seed vector with exactly ``count`` compromised hosts, chosen uniformly without replacement.

	Raises:
		BudgetError: ``count`` is not between 1 and ``host_count``
	"""
	if not 1 <= count <= host_count:
		raise BudgetError(f"Initial compromise count {count} must be between 1 and N={host_count}")
	vector = np.zeros(host_count, dtype=np.int8)
	vector[_rng(seed).choice(host_count, size=count, replace=False)] = 1
	return vector


def gen_attack_traces(flows: HostAppFlows, origin: int, branching: int = 4, rounds: int = 8, seed: Seed = None) -> AttackTrace:
	"""
	Replicate an attack breadth-wise from ``origin``.

	Every round, each host compromised in the previous round copies itself along
	up to ``branching`` of its outgoing flows into hosts not yet compromised.
	Paths are the root-to-leaf step chains of the resulting tree.

	Args:
		flows: Host-application flows the attack may use
		origin: Initially compromised host
		branching: Flows sampled per host and round
		rounds: Number of replication rounds
		seed: Seed or generator for the per-host sampling
	"""
	if branching < 1 or rounds < 1:
		raise ValueRangeError(f"branching and rounds must be at least 1, got {branching} and {rounds}")
	if not 0 <= origin < flows.host_count:
		raise ValueRangeError(f"Origin host {origin} is outside N={flows.host_count}")
	rng = _rng(seed)
	if not flows.outgoing(origin):
		logger.warning(f"Origin host {origin} has no outgoing flows; the trace is empty")
		return AttackTrace(origin=origin, paths=[], stalled=True)

	compromised = {origin}
	frontier: List[Tuple[int, List[Step]]] = [(origin, [])]
	leaves: List[List[Step]] = []
	for _ in range(rounds):
		next_frontier = []
		for host, prefix in frontier:
			candidates = [t for t in flows.outgoing(host) if t[2] not in compromised]
			children = 0
			if candidates:
				picks = rng.choice(len(candidates), size=min(branching, len(candidates)), replace=False)
				for pick in picks:
					step = candidates[int(pick)]
					if step[2] in compromised:
						continue
					compromised.add(step[2])
					next_frontier.append((step[2], prefix + [step]))
					children += 1
			if not children and prefix:
				leaves.append(prefix)
		frontier = next_frontier
		if not frontier:
			break
	leaves.extend(prefix for _, prefix in frontier)
	trace = AttackTrace(origin=origin, paths=leaves)
	logger.debug(f"Attack from host {origin}: {trace.path_count} paths, {len(compromised)} hosts compromised")
	return trace
