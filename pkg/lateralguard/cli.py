"""
Command-line interface.

	lateralguard gen-synthetic --out data/
	lateralguard reach --access data/access.csv --flows data/flows.csv
	lateralguard segment --access ... --flows ... --q 20 --strategy host-first --out plans/
	lateralguard experiment --kind edge --budget-fractions 0,0.1,0.2 --out results/

Exit codes: 0 on success, 1 on invalid input or usage, 2 on file errors.
"""
from pathlib import Path
from typing import List, Optional, Sequence
import argparse
import logging
import sys

import numpy as np

from .config import RunConfig, load_config
from .exceptions import InputOutputError, LateralGuardException, ValidationError
from .experiments import (
	REACHABILITY_MODELS, SyntheticSpec, benchmark_curves, budgets_from_fractions, gen_attack_traces, gen_random_P,
	gen_random_posture, gen_synthetic_tripartite, initial_compromise_count, pick_initial_compromise,
	run_hardening_experiment, run_joint_experiment, run_segmentation_experiment
)
from .experiments.benchmark import BASELINE_STRATEGY, hardenable_edge_count
from .graph import CompromiseProbabilities, SecurityPosture, induced_host_matrix, propagation_operator
from .hardening import EDGE_STRATEGIES, NODE_SCORES, harden_edges, harden_nodes
from .io import InputBundle, load_inputs, load_traces_csv, write_inputs, write_plan, write_results, write_traces
from .reachability import host_app_cascade, reachability_fraction, tripartite_cascade, user_host_cascade
from .segmentation import SEGMENTATION_STRATEGIES, segment

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


class UsageError(Exception):
	pass


class ArgumentParser(argparse.ArgumentParser):
	"""Parser whose usage errors surface as exit code 1 instead of 2."""

	def error(self, message):
		self.print_usage(sys.stderr)
		print(f"{self.prog}: error: {message}", file=sys.stderr)
		raise UsageError(message)


def _int_list(text: str) -> List[int]:
	try:
		return [int(v) for v in text.split(",") if v.strip()]
	except ValueError:
		raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> List[float]:
	try:
		return [float(v) for v in text.split(",") if v.strip()]
	except ValueError:
		raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_common(parser: argparse.ArgumentParser, inputs: bool = True, required: bool = True) -> None:
	parser.add_argument("--config", type=str, default=None, help="YAML file overriding the default settings")
	parser.add_argument("--out", type=str, default=None, help="Output directory (default: output_dir from config)")
	parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
	if inputs:
		parser.add_argument("--access", type=str, required=required, help="CSV with header user_id,host_id")
		parser.add_argument("--flows", type=str, required=required, help="CSV with header src_host,app,dst_host")
		parser.add_argument("--probabilities", type=str, default=None, help="CSV with header app,host,prob (default: all ones)")
		parser.add_argument("--posture", type=str, default=None, help="CSV with header host,level (default: all zero)")


def build_parser() -> ArgumentParser:
	parser = ArgumentParser(prog="lateralguard", description="Lateral-movement reachability, segmentation and hardening")
	commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

	reach = commands.add_parser("reach", help="Cascade reachability from a seed compromise")
	_add_common(reach)
	reach.add_argument("--compromised", type=str, default=None, help="Comma-separated seed host ids")
	reach.add_argument("--seed", type=int, default=None, help="Seed for a random initial compromise")
	reach.add_argument("--model", choices=("tripartite", "user-host", "host-app"), default="tripartite")
	reach.add_argument("--max-hops", type=int, default=None)

	seg = commands.add_parser("segment", help="Plan user-host segmentation")
	_add_common(seg)
	seg.add_argument("--q", type=int, required=True, help="Number of access edges to segment")
	seg.add_argument("--strategy", choices=SEGMENTATION_STRATEGIES, default="score")

	edges = commands.add_parser("harden-edges", help="Plan application-host edge hardening")
	_add_common(edges)
	edges.add_argument("--eta", type=int, required=True, help="Number of edges to harden")
	edges.add_argument("--strategy", choices=EDGE_STRATEGIES, default="phi")
	edges.add_argument("--eps", type=float, default=None, help="Residual probability (default from config)")

	nodes = commands.add_parser("harden-nodes", help="Plan host hardening")
	_add_common(nodes)
	nodes.add_argument("--zeta", type=int, required=True, help="Number of hosts to harden")
	nodes.add_argument("--score", choices=NODE_SCORES, default="rho")
	nodes.add_argument("--alpha", type=float, default=None, help="New hardening level (default from config)")
	nodes.add_argument("--eps", type=float, default=None)

	experiment = commands.add_parser("experiment", help="Reachability-versus-budget curves over random trials")
	_add_common(experiment, required=False)
	experiment.add_argument("--kind", choices=("seg", "edge", "node", "joint"), required=True)
	experiment.add_argument("--budgets", type=_int_list, default=None, help="Absolute budgets, e.g. 0,10,20")
	experiment.add_argument("--budget-fractions", type=_float_list, default=None, help="Budgets as fractions of capacity")
	experiment.add_argument("--strategies", type=str, default=None, help="Comma-separated strategy names")
	experiment.add_argument(
		"--combinations", type=str, default=None,
		help="Joint stages seg:edge:node separated by commas, 'none' skips a stage"
	)
	experiment.add_argument("--trials", type=int, default=None)
	experiment.add_argument("--seed", type=int, default=None)
	experiment.add_argument(
		"--model", choices=REACHABILITY_MODELS, default=None, help="Cascade used to evaluate edge and node hardening"
	)

	benchmark = commands.add_parser("benchmark", help="Replay attack traces against hardening plans")
	_add_common(benchmark)
	benchmark.add_argument("--traces", type=str, default=None, help="Trace CSV (default: generate from --origin)")
	benchmark.add_argument("--origin", type=str, default=None, help="Origin host id for generated traces")
	benchmark.add_argument("--budgets", type=_int_list, default=None)
	benchmark.add_argument("--budget-fractions", type=_float_list, default=None)
	benchmark.add_argument("--seed", type=int, default=None)

	gen = commands.add_parser("gen-synthetic", help="Write synthetic input CSVs")
	_add_common(gen, inputs=False)
	gen.add_argument("--users", type=int, default=None)
	gen.add_argument("--hosts", type=int, default=None)
	gen.add_argument("--apps", type=int, default=None)
	gen.add_argument("--edges", type=int, default=None)
	gen.add_argument("--flows", type=int, default=None)
	gen.add_argument("--seed", type=int, default=None)
	gen.add_argument("--degree-model", choices=("uniform", "power-law"), default=None)
	gen.add_argument("--exponent", type=float, default=None)
	gen.add_argument("--services", type=int, default=None, help="Applications each host serves (default: all)")
	gen.add_argument("--traces", action="store_true", help="Also write traces.csv from host 0")
	return parser


def _resolve_config(args) -> RunConfig:
	config = load_config(args.config)
	updates = {"output_dir": args.out, "hardening": {}, "experiment": {}, "synthetic": {}, "benchmark": {}}
	if getattr(args, "eps", None) is not None:
		updates["hardening"]["epsilon"] = args.eps
	if getattr(args, "alpha", None) is not None:
		updates["hardening"]["alpha"] = args.alpha
	if args.command == "experiment":
		updates["experiment"].update(trials=args.trials, seed=args.seed, reachability_model=args.model)
		if args.budget_fractions is not None:
			updates["experiment"]["budget_fractions"] = args.budget_fractions
	if args.command == "benchmark":
		updates["experiment"]["seed"] = args.seed
	if args.command == "gen-synthetic":
		updates["synthetic"].update(
			users=args.users, hosts=args.hosts, apps=args.apps, user_host_edges=args.edges, flows=args.flows,
			seed=args.seed, degree_model=args.degree_model, exponent=args.exponent, services=args.services
		)
	return config.overlay(updates)


def _inputs(args, config: RunConfig):
	if args.access and args.flows:
		return load_inputs(args.access, args.flows, args.probabilities, args.posture)
	if args.access or args.flows:
		raise ValidationError("--access and --flows must be given together")
	logger.info("No inputs given; generating the configured synthetic instance")
	graph, flows = gen_synthetic_tripartite(config.synthetic)
	return InputBundle(
		graph.index, graph, flows, CompromiseProbabilities.ones(flows.app_count, flows.host_count),
		SecurityPosture.zeros(flows.host_count)
	)


def _run_reach(args, config: RunConfig) -> int:
	bundle = _inputs(args, config)
	n = bundle.index.host_count
	if args.compromised:
		r0 = np.zeros(n, dtype=np.int8)
		for host in args.compromised.split(","):
			r0[bundle.index.host_index(host.strip())] = 1
	else:
		seed = config.experiment.seed if args.seed is None else args.seed
		r0 = pick_initial_compromise(n, initial_compromise_count(n, config.experiment.compromise_fraction), seed)
	b = induced_host_matrix(bundle.graph)
	j = propagation_operator(bundle.flows, bundle.probabilities)
	if args.model == "user-host":
		trace = user_host_cascade(b, r0, args.max_hops)
	elif args.model == "host-app":
		trace = host_app_cascade(j, bundle.posture, r0, args.max_hops)
	else:
		trace = tripartite_cascade(b, j, bundle.posture, r0, args.max_hops)
	logger.info(f"{args.model} cascade reached {len(trace.final.compromised)}/{n} hosts in {trace.hops} hops")
	print(repr(reachability_fraction(trace.final)))
	return EXIT_OK


def _run_segment(args, config: RunConfig) -> int:
	bundle = _inputs(args, config)
	plan = segment(bundle.graph, args.q, args.strategy, config.eigen.options())
	write_plan(plan, bundle.index, config.output_dir, config=config.model_dump(mode="json"))
	print(f"segmented {len(plan.removed_edges)} edges into {plan.new_account_count} new accounts; "
		  f"lambda_max {plan.lambda_before:.6g} -> {plan.lambda_after:.6g}")
	return EXIT_OK


def _run_harden_edges(args, config: RunConfig) -> int:
	bundle = _inputs(args, config)
	plan = harden_edges(bundle.flows, bundle.probabilities, args.eta, args.strategy, config.hardening.epsilon, config.eigen.options())
	write_plan(plan, bundle.index, config.output_dir, original=bundle.probabilities, config=config.model_dump(mode="json"))
	print(f"hardened {len(plan.hardened_edges)} edges with {plan.strategy}")
	return EXIT_OK


def _run_harden_nodes(args, config: RunConfig) -> int:
	bundle = _inputs(args, config)
	plan = harden_nodes(
		bundle.flows, bundle.probabilities, bundle.posture, args.zeta, args.score, config.hardening.alpha,
		config.hardening.epsilon, config.eigen.options()
	)
	write_plan(plan, bundle.index, config.output_dir, original=bundle.posture, config=config.model_dump(mode="json"))
	print(f"hardened {len(plan.hardened_hosts)} hosts with {plan.strategy}")
	return EXIT_OK


def _strategies(text: Optional[str]) -> Optional[List[str]]:
	return [s.strip() for s in text.split(",") if s.strip()] if text else None


def _combinations(text: Optional[str]):
	if not text:
		return [("host-first", "phi", "rho")]
	combinations = []
	for item in text.split(","):
		stages = [s.strip() for s in item.split(":")]
		if len(stages) != 3:
			raise ValidationError(f"Joint combination {item!r} must name three stages seg:edge:node")
		combinations.append(tuple(None if s in ("", "none") else s for s in stages))
	return combinations


def _run_experiment(args, config: RunConfig) -> int:
	settings = config.experiment
	if args.kind == "joint" and args.budgets is not None:
		raise ValidationError("--budgets does not apply to joint experiments; use --budget-fractions")
	if args.kind in ("seg", "joint") and settings.reachability_model != "tripartite":
		raise ValidationError(f"The {settings.reachability_model} model only evaluates edge and node experiments")
	bundle = _inputs(args, config)
	common = dict(
		trials=settings.trials,
		seed=settings.seed,
		p=bundle.probabilities if args.probabilities else None,
		a=bundle.posture if args.posture else None,
		nonzero_fraction=settings.nonzero_fraction,
		compromise_fraction=settings.compromise_fraction,
		eigen_options=config.eigen.options()
	)
	hardening = dict(eps=config.hardening.epsilon, alpha=config.hardening.alpha)
	pair_count = len(set((k, dst) for _, k, dst in bundle.flows.triples))
	capacity = {"seg": bundle.graph.edge_count, "edge": pair_count, "node": bundle.flows.host_count}.get(args.kind)
	budgets = args.budgets
	if args.kind != "joint" and budgets is None:
		budgets = budgets_from_fractions(settings.budget_fractions, capacity)

	if args.kind == "seg":
		result = run_segmentation_experiment(
			bundle.graph, bundle.flows, _strategies(args.strategies) or SEGMENTATION_STRATEGIES, budgets, **common
		)
	elif args.kind in ("edge", "node"):
		result = run_hardening_experiment(
			bundle.graph, bundle.flows, args.kind, _strategies(args.strategies), budgets, **common, **hardening,
			model=settings.reachability_model
		)
	else:
		fractions = settings.budget_fractions
		result = run_joint_experiment(
			bundle.graph, bundle.flows, _combinations(args.combinations), fractions, **common, **hardening
		)
	write_results(result, config.output_dir, config=config.model_dump(mode="json"))
	for strategy in result.strategies:
		curve = ", ".join(f"{v:.4f}" for v in result.curve(strategy))
		print(f"{strategy}: {curve}")
	return EXIT_OK


def _run_benchmark(args, config: RunConfig) -> int:
	bundle = _inputs(args, config)
	if args.traces:
		trace = load_traces_csv(args.traces, bundle.index, args.origin)
	else:
		origin = bundle.index.host_index(args.origin) if args.origin else config.benchmark.origin
		trace = gen_attack_traces(
			bundle.flows, origin, config.benchmark.branching, config.benchmark.rounds, config.experiment.seed
		)
	budgets = args.budgets
	if budgets is None:
		fractions = args.budget_fractions or config.experiment.budget_fractions
		budgets = budgets_from_fractions(fractions, hardenable_edge_count(bundle.flows))
	result = benchmark_curves(
		trace, bundle.flows, budgets, ("phi", "phi-recalc", BASELINE_STRATEGY), config.hardening.epsilon,
		config.eigen.options()
	)
	write_results(result, config.output_dir, config=config.model_dump(mode="json"))
	for strategy in result.strategies:
		print(f"{strategy}: " + ", ".join(f"{v:.4f}" for v in result.curve(strategy)))
	return EXIT_OK


def _run_gen_synthetic(args, config: RunConfig) -> int:
	spec: SyntheticSpec = config.synthetic
	graph, flows = gen_synthetic_tripartite(spec)
	rng = np.random.default_rng(np.random.SeedSequence(spec.seed).spawn(1)[0])
	p = gen_random_P(flows.app_count, flows.host_count, config.experiment.nonzero_fraction, rng)
	posture = gen_random_posture(flows.host_count, rng)
	written = write_inputs(config.output_dir, graph, flows, p, posture)
	if args.traces:
		trace = gen_attack_traces(flows, config.benchmark.origin, config.benchmark.branching, config.benchmark.rounds, rng)
		written.append(write_traces(trace, graph.index, Path(config.output_dir) / "traces.csv"))
	for path in written:
		print(path)
	return EXIT_OK


COMMANDS = {
	"reach": _run_reach,
	"segment": _run_segment,
	"harden-edges": _run_harden_edges,
	"harden-nodes": _run_harden_nodes,
	"experiment": _run_experiment,
	"benchmark": _run_benchmark,
	"gen-synthetic": _run_gen_synthetic,
}


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
	"""Run one subcommand and return its exit code."""
	parser = build_parser()
	try:
		args = parser.parse_args(argv)
	except UsageError:
		return EXIT_INVALID
	except SystemExit as e:
		return int(e.code or 0)

	logging.basicConfig(
		level=logging.DEBUG if args.verbose else logging.INFO,
		format="%(asctime)s %(levelname)s %(name)s: %(message)s",
		stream=sys.stderr
	)
	try:
		config = _resolve_config(args)
		return COMMANDS[args.command](args, config)
	except InputOutputError as e:
		logger.error(str(e))
		return EXIT_IO
	except ValidationError as e:
		logger.error(str(e))
		return EXIT_INVALID
	except LateralGuardException as e:
		logger.error(str(e))
		return EXIT_INVALID


def main() -> None:
	sys.exit(cli_dispatch())
