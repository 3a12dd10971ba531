"""
CSV ingestion for access records, flows, probabilities, postures and attack traces.

Files are UTF-8, comma-separated, with a header row and no quoting; identifiers
must not contain commas. Line numbers in errors count the header as line 1.
"""
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union
import csv
import logging
import re

import numpy as np
import pandas as pd

from ..exceptions import InputOutputError, MalformedInputError, UnknownIdentifierError, ValueRangeError
from ..experiments.models import AttackTrace
from ..graph import (
	BipartiteAccessGraph, CompromiseProbabilities, EntityIndex, HostAppFlows, SecurityPosture,
	build_host_app_flows, build_user_host_graph
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

ACCESS_HEADER = ("user_id", "host_id")
FLOWS_HEADER = ("src_host", "app", "dst_host")
PROBABILITIES_HEADER = ("app", "host", "prob")
POSTURE_HEADER = ("host", "level")
TRACES_HEADER = ("path_id", "step", "src_host", "app", "dst_host")

_LINE_PATTERN = re.compile(r"line (\d+)")


def _read_rows(path: PathLike, header: Sequence[str]) -> List[Tuple[int, List[str]]]:
	"""Return (line number, fields) for every data row after checking the header and arity."""
	path = Path(path)
	try:
		frame = pd.read_csv(
			path, header=None, dtype=str, keep_default_na=False, quoting=csv.QUOTE_NONE, encoding="utf-8"
		)
	except FileNotFoundError:
		raise InputOutputError(path, "file does not exist")
	except pd.errors.EmptyDataError:
		raise MalformedInputError(path, 1, f"missing header {','.join(header)}")
	except pd.errors.ParserError as e:
		match = _LINE_PATTERN.search(str(e))
		raise MalformedInputError(path, int(match.group(1)) if match else 0, f"wrong number of fields ({e})")
	except (OSError, UnicodeDecodeError) as e:
		raise InputOutputError(path, str(e))

	rows = frame.to_numpy(dtype=object).tolist()
	if not rows or [str(v).strip() for v in rows[0]] != list(header):
		raise MalformedInputError(path, 1, f"expected header {','.join(header)}")
	parsed = []
	for offset, values in enumerate(rows[1:]):
		line = offset + 2
		if any(not isinstance(v, str) for v in values):
			raise MalformedInputError(path, line, f"expected {len(header)} fields")
		fields = [v.strip() for v in values]
		if any(not v for v in fields):
			raise MalformedInputError(path, line, "empty field")
		parsed.append((line, fields))
	return parsed


def _number(path: Path, line: int, text: str, what: str) -> float:
	try:
		value = float(text)
	except ValueError:
		raise MalformedInputError(path, line, f"{what} {text!r} is not a number")
	if not 0.0 <= value <= 1.0:
		raise ValueRangeError(f"{what} {value} outside [0, 1]", location=f"{path}:{line}")
	return value


def load_access_csv(path: PathLike) -> List[Tuple[str, str]]:
	"""Read ``user_id,host_id`` records."""
	rows = [tuple(fields) for _, fields in _read_rows(path, ACCESS_HEADER)]
	logger.debug(f"Read {len(rows)} access records from {path}")
	return rows


def load_flows_csv(path: PathLike) -> List[Tuple[str, str, str]]:
	"""Read ``src_host,app,dst_host`` records."""
	rows = [tuple(fields) for _, fields in _read_rows(path, FLOWS_HEADER)]
	logger.debug(f"Read {len(rows)} flow records from {path}")
	return rows


def read_probability_records(path: PathLike) -> List[Tuple[int, str, str, float]]:
	"""(line, app id, host id, probability) per row, range-checked."""
	path = Path(path)
	return [(line, app, host, _number(path, line, prob, "probability")) for line, (app, host, prob) in _read_rows(path, PROBABILITIES_HEADER)]


def read_posture_records(path: PathLike) -> List[Tuple[int, str, float]]:
	"""(line, host id, level) per row, range-checked."""
	path = Path(path)
	return [(line, host, _number(path, line, level, "level")) for line, (host, level) in _read_rows(path, POSTURE_HEADER)]


def _resolve(path: Path, line: int, lookup, identifier: str) -> int:
	try:
		return lookup(identifier)
	except UnknownIdentifierError as e:
		raise MalformedInputError(path, line, str(e))


def load_probabilities_csv(path: PathLike, index: EntityIndex) -> CompromiseProbabilities:
	"""
	Read ``app,host,prob`` into a K x N matrix; pairs not listed are 0.

	Raises:
		ValueRangeError: A probability lies outside [0, 1]
		MalformedInputError: A row is malformed or names an unknown app or host
	"""
	path = Path(path)
	matrix = np.zeros((index.app_count, index.host_count))
	for line, app, host, prob in read_probability_records(path):
		matrix[_resolve(path, line, index.app_index, app), _resolve(path, line, index.host_index, host)] = prob
	return CompromiseProbabilities(matrix)


def load_posture_csv(path: PathLike, index: EntityIndex) -> SecurityPosture:
	"""Read ``host,level``; hosts not listed have level 0."""
	path = Path(path)
	levels = np.zeros(index.host_count)
	for line, host, level in read_posture_records(path):
		levels[_resolve(path, line, index.host_index, host)] = level
	return SecurityPosture(levels)


def load_traces_csv(path: PathLike, index: EntityIndex, origin: Optional[str] = None) -> AttackTrace:
	"""
	Read ``path_id,step,src_host,app,dst_host`` into an AttackTrace.

	Steps are ordered by (path_id, step). The origin defaults to the source of
	the first step of the first path.

	Raises:
		BrokenTraceError: Consecutive steps of a path do not chain
	"""
	path = Path(path)
	records = []
	for line, (path_id, step, src, app, dst) in _read_rows(path, TRACES_HEADER):
		try:
			position = int(step)
		except ValueError:
			raise MalformedInputError(path, line, f"step {step!r} is not an integer")
		triple = (
			_resolve(path, line, index.host_index, src),
			_resolve(path, line, index.app_index, app),
			_resolve(path, line, index.host_index, dst)
		)
		records.append((path_id, position, triple))
	if not records:
		return AttackTrace(origin=index.host_index(origin) if origin else 0, paths=[])

	frame = pd.DataFrame(records, columns=["path_id", "step", "triple"]).sort_values(["path_id", "step"], kind="stable")
	paths = [list(group["triple"]) for _, group in frame.groupby("path_id", sort=True)]
	start = index.host_index(origin) if origin else paths[0][0][0]
	trace = AttackTrace(origin=start, paths=paths)
	trace.validate_chain()
	logger.debug(f"Read {trace.path_count} attack paths from {path}")
	return trace


class InputBundle:
	"""The four input files resolved against one shared EntityIndex."""

	def __init__(
		self,
		index: EntityIndex,
		graph: BipartiteAccessGraph,
		flows: HostAppFlows,
		probabilities: CompromiseProbabilities,
		posture: SecurityPosture
	):
		self.index = index
		self.graph = graph
		self.flows = flows
		self.probabilities = probabilities
		self.posture = posture


def load_inputs(
	access_path: PathLike,
	flows_path: PathLike,
	probabilities_path: Optional[PathLike] = None,
	posture_path: Optional[PathLike] = None
) -> InputBundle:
	"""
	Load access, flows, probabilities and posture into one index.

	Hosts are registered in posture-file order, then applications in
	probability-file order, then whatever the access and flow records add.
	Without a probabilities file P is all ones; without a posture file a is 0.
	"""
	access = load_access_csv(access_path)
	flow_records = load_flows_csv(flows_path)
	probability_rows = read_probability_records(probabilities_path) if probabilities_path else []
	posture_rows = read_posture_records(posture_path) if posture_path else []
	index = EntityIndex.from_records(
		access,
		flow_records,
		hosts=[host for _, host, _ in posture_rows] + [host for _, _, host, _ in probability_rows],
		apps=[app for _, app, _, _ in probability_rows]
	)
	graph = build_user_host_graph(access, index)
	flows = build_host_app_flows(flow_records, index)
	probabilities = (
		load_probabilities_csv(probabilities_path, index) if probabilities_path
		else CompromiseProbabilities.ones(index.app_count, index.host_count)
	)
	posture = load_posture_csv(posture_path, index) if posture_path else SecurityPosture.zeros(index.host_count)
	logger.info(f"Loaded {graph!r} and {flows!r}")
	return InputBundle(index, graph, flows, probabilities, posture)
