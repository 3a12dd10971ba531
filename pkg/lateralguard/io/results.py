"""
Deterministic writers for experiment results, plans and generated inputs.
"""
from pathlib import Path
from typing import Any, Dict, List, Optional, Union
import json
import logging

import pandas as pd

from ..exceptions import InputOutputError, ValidationError
from ..experiments.models import AttackTrace, ExperimentResult
from ..graph import BipartiteAccessGraph, CompromiseProbabilities, EntityIndex, HostAppFlows, SecurityPosture
from ..hardening import EdgeHardeningPlan, NodeHardeningPlan
from ..segmentation import SegmentationPlan
from .inputs import ACCESS_HEADER, FLOWS_HEADER, POSTURE_HEADER, PROBABILITIES_HEADER, TRACES_HEADER

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Plan = Union[SegmentationPlan, EdgeHardeningPlan, NodeHardeningPlan]

CURVES_HEADER = ("strategy", "budget", "budget_fraction", "mean_reachability", "std_reachability")


def _directory(directory: PathLike) -> Path:
	directory = Path(directory)
	try:
		directory.mkdir(parents=True, exist_ok=True)
	except OSError as e:
		raise InputOutputError(directory, f"cannot create output directory ({e})")
	return directory


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
	try:
		frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
	except OSError as e:
		raise InputOutputError(path, str(e))
	logger.debug(f"Wrote {len(frame)} rows to {path}")
	return path


def write_json(data: Dict[str, Any], path: Path) -> Path:
	try:
		with open(path, "w", encoding="utf-8", newline="\n") as f:
			json.dump(data, f, indent=2, sort_keys=True, allow_nan=False)
			f.write("\n")
	except (OSError, ValueError) as e:
		raise InputOutputError(path, str(e))
	return path


def write_results(result: ExperimentResult, directory: PathLike, config: Optional[Dict[str, Any]] = None) -> List[Path]:
	"""
	Write ``result.json`` (config echo, curves, per-trial data) and ``curves.csv``.

	Returns:
		Paths written
	"""
	directory = _directory(directory)
	data = result.model_dump(mode="json")
	if config is not None:
		data["config"] = config
	curves = pd.DataFrame([point.model_dump(mode="json") for point in result.curves], columns=list(CURVES_HEADER))
	written = [write_json(data, directory / "result.json"), write_csv(curves, directory / "curves.csv")]
	logger.info(f"Wrote {result.kind.value} results to {directory}")
	return written


def plan_rows(plan: Plan, index: EntityIndex, original=None) -> pd.DataFrame:
	"""
	Ordered plan actions as a table.

	Args:
		plan: Any plan type
		index: Index of the graph the plan was built for
		original: P for edge plans or the posture for node plans, to report old values
	"""
	if isinstance(plan, SegmentationPlan):
		names = plan.resulting_graph.index.users
		account_of = {user: names[index.user_count + offset] for offset, user in enumerate(plan.new_accounts)}
		rows = [
			{
				"order": order,
				"user_id": index.users[user],
				"host_id": index.hosts[host],
				"new_account": account_of[user],
				"score": plan.selection_scores[order] if order < len(plan.selection_scores) else None
			}
			for order, (user, host) in enumerate(plan.removed_edges)
		]
		return pd.DataFrame(rows, columns=["order", "user_id", "host_id", "new_account", "score"])
	if isinstance(plan, EdgeHardeningPlan):
		rows = [
			{
				"order": order,
				"app": index.apps[app],
				"host": index.hosts[host],
				"old_prob": float(original.matrix[app, host]) if original is not None else None,
				"new_prob": plan.epsilon[(app, host)],
				"score": plan.selection_scores[order] if order < len(plan.selection_scores) else None
			}
			for order, (app, host) in enumerate(plan.hardened_edges)
		]
		return pd.DataFrame(rows, columns=["order", "app", "host", "old_prob", "new_prob", "score"])
	if isinstance(plan, NodeHardeningPlan):
		rows = [
			{
				"order": order,
				"host": index.hosts[host],
				"old_level": float(original.levels[host]) if original is not None else None,
				"new_level": plan.alpha[host],
				"score": plan.selection_scores[order] if order < len(plan.selection_scores) else None
			}
			for order, host in enumerate(plan.hardened_hosts)
		]
		return pd.DataFrame(rows, columns=["order", "host", "old_level", "new_level", "score"])
	raise ValidationError(f"Cannot serialize plan of type {type(plan).__name__}")


def plan_summary(plan: Plan) -> Dict[str, Any]:
	summary: Dict[str, Any] = {"strategy": plan.strategy, "type": type(plan).__name__}
	if isinstance(plan, SegmentationPlan):
		summary.update(
			removed_edges=len(plan.removed_edges),
			new_accounts=plan.new_account_count,
			lambda_before=plan.lambda_before,
			lambda_removed=plan.lambda_removed,
			lambda_after=plan.lambda_after
		)
	elif isinstance(plan, EdgeHardeningPlan):
		summary.update(
			hardened_edges=len(plan.hardened_edges), lambda_before=plan.lambda_before, lambda_after=plan.lambda_after
		)
	else:
		summary.update(hardened_hosts=len(plan.hardened_hosts))
	return summary


def write_plan(
	plan: Plan,
	index: EntityIndex,
	directory: PathLike,
	original=None,
	config: Optional[Dict[str, Any]] = None
) -> List[Path]:
	"""Write ``plan.csv`` with ordered actions and ``result.json`` with the plan summary."""
	directory = _directory(directory)
	summary = plan_summary(plan)
	if config is not None:
		summary["config"] = config
	written = [
		write_csv(plan_rows(plan, index, original), directory / "plan.csv"),
		write_json(summary, directory / "result.json")
	]
	logger.info(f"Wrote {plan.strategy} plan to {directory}")
	return written


def write_inputs(
	directory: PathLike,
	graph: BipartiteAccessGraph,
	flows: HostAppFlows,
	probabilities: CompromiseProbabilities,
	posture: SecurityPosture
) -> List[Path]:
	"""
	Write access.csv, flows.csv, probabilities.csv and posture.csv.

	Every host appears in posture.csv and every (app, host) pair in
	probabilities.csv, in index order, so loading the files back rebuilds
	the same index.
	"""
	directory = _directory(directory)
	index = graph.index
	access = pd.DataFrame(
		[(index.users[i], index.hosts[j]) for i, j in graph.edges], columns=list(ACCESS_HEADER)
	)
	flow_rows = pd.DataFrame(
		[(index.hosts[s], index.apps[k], index.hosts[d]) for s, k, d in flows.triples], columns=list(FLOWS_HEADER)
	)
	probability_rows = pd.DataFrame(
		[
			(index.apps[k], index.hosts[j], float(probabilities.matrix[k, j]))
			for k in range(index.app_count) for j in range(index.host_count)
		],
		columns=list(PROBABILITIES_HEADER)
	)
	posture_rows = pd.DataFrame(
		[(index.hosts[j], float(posture.levels[j])) for j in range(index.host_count)], columns=list(POSTURE_HEADER)
	)
	written = [
		write_csv(access, directory / "access.csv"),
		write_csv(flow_rows, directory / "flows.csv"),
		write_csv(probability_rows, directory / "probabilities.csv"),
		write_csv(posture_rows, directory / "posture.csv")
	]
	logger.info(f"Wrote inputs for {graph!r} to {directory}")
	return written


def write_traces(trace: AttackTrace, index: EntityIndex, path: PathLike) -> Path:
	"""Write ``trace`` as ``path_id,step,src_host,app,dst_host`` rows."""
	rows = [
		(f"p{number:06d}", step, index.hosts[src], index.apps[app], index.hosts[dst])
		for number, steps in enumerate(trace.paths)
		for step, (src, app, dst) in enumerate(steps)
	]
	return write_csv(pd.DataFrame(rows, columns=list(TRACES_HEADER)), Path(path))
