"""
Tests for the command-line interface.
"""
import json

import pandas as pd
import pytest

from lateralguard.cli import EXIT_INVALID, EXIT_IO, EXIT_OK, cli_dispatch

SMALL = ["--users", "30", "--hosts", "20", "--apps", "2", "--edges", "45", "--flows", "40", "--seed", "5"]

@pytest.fixture
def data_dir(tmp_path):
	"""Synthetic inputs written by gen-synthetic."""
	out = tmp_path / "data"
	assert cli_dispatch(["gen-synthetic", *SMALL, "--traces", "--out", str(out)]) == EXIT_OK
	return out

def _inputs(data_dir, with_params=True):
	args = ["--access", str(data_dir / "access.csv"), "--flows", str(data_dir / "flows.csv")]
	if with_params:
		args += ["--probabilities", str(data_dir / "probabilities.csv"), "--posture", str(data_dir / "posture.csv")]
	return args

def test_gen_synthetic(data_dir):
	"""Test gen-synthetic writes the four inputs and the trace file."""
	for name in ("access.csv", "flows.csv", "probabilities.csv", "posture.csv", "traces.csv"):
		assert (data_dir / name).exists()
	assert len(pd.read_csv(data_dir / "access.csv")) == 45
	assert len(pd.read_csv(data_dir / "flows.csv")) == 40

def test_reach(data_dir, capsys):
	"""Test reach prints a fraction in [0, 1]."""
	assert cli_dispatch(["reach", *_inputs(data_dir), "--compromised", "h0,h1"]) == EXIT_OK
	value = float(capsys.readouterr().out.strip())
	assert 0.0 < value <= 1.0

def test_reach_models(data_dir, capsys):
	"""Test each cascade model runs from a seeded compromise."""
	for model in ("tripartite", "user-host", "host-app"):
		assert cli_dispatch(["reach", *_inputs(data_dir), "--model", model, "--seed", "3"]) == EXIT_OK
	assert len(capsys.readouterr().out.split()) == 3

def test_segment(data_dir, tmp_path):
	"""Test segment writes plan.csv with q rows."""
	out = tmp_path / "seg"
	assert cli_dispatch(["segment", *_inputs(data_dir), "--q", "5", "--strategy", "host-first", "--out", str(out)]) == EXIT_OK
	assert len(pd.read_csv(out / "plan.csv")) == 5
	assert json.loads((out / "result.json").read_text(encoding="utf-8"))["strategy"] == "host-first"

def test_segment_zero_budget(data_dir, tmp_path):
	"""Test an empty segmentation budget exits with 1."""
	assert cli_dispatch(["segment", *_inputs(data_dir), "--q", "0", "--out", str(tmp_path)]) == EXIT_INVALID

def test_harden_commands(data_dir, tmp_path):
	"""Test edge and node hardening write their plans."""
	edges_out, nodes_out = tmp_path / "edges", tmp_path / "nodes"
	assert cli_dispatch(["harden-edges", *_inputs(data_dir, with_params=False), "--eta", "1", "--out", str(edges_out)]) == EXIT_OK
	assert len(pd.read_csv(edges_out / "plan.csv")) == 1
	args = ["harden-nodes", *_inputs(data_dir, with_params=False), "--zeta", "3", "--score", "min-a", "--out", str(nodes_out)]
	assert cli_dispatch(args) == EXIT_OK
	assert (pd.read_csv(nodes_out / "plan.csv")["new_level"] == 1.0).all()

def test_unknown_subcommand():
	"""Test usage errors exit with 1."""
	assert cli_dispatch(["collapse"]) == EXIT_INVALID
	assert cli_dispatch(["segment", "--q", "1"]) == EXIT_INVALID

def test_missing_input_file(tmp_path):
	"""Test a missing input file exits with 2."""
	args = ["reach", "--access", str(tmp_path / "nope.csv"), "--flows", str(tmp_path / "nope.csv")]
	assert cli_dispatch(args) == EXIT_IO

def test_invalid_input_file(data_dir, tmp_path):
	"""Test a malformed input file exits with 1."""
	bad = tmp_path / "bad.csv"
	bad.write_text("user,host\nu0,h0\n", encoding="utf-8")
	assert cli_dispatch(["reach", "--access", str(bad), "--flows", str(data_dir / "flows.csv")]) == EXIT_INVALID

def test_experiment(data_dir, tmp_path):
	"""Test one strategy over two budgets yields two curve rows."""
	out = tmp_path / "exp"
	args = ["experiment", *_inputs(data_dir), "--kind", "seg", "--strategies", "host-first", "--budgets", "0,5",
			"--trials", "2", "--out", str(out)]
	assert cli_dispatch(args) == EXIT_OK
	curves = pd.read_csv(out / "curves.csv")
	assert len(curves) == 2
	assert curves["budget"].tolist() == [0, 5]

def test_experiment_deterministic(data_dir, tmp_path):
	"""Test repeated runs write identical results."""
	outputs = []
	for name in ("first", "second"):
		out = tmp_path / name
		args = ["experiment", *_inputs(data_dir, with_params=False), "--kind", "node", "--budget-fractions", "0,0.25",
				"--trials", "2", "--seed", "7", "--out", str(out)]
		assert cli_dispatch(args) == EXIT_OK
		data = json.loads((out / "result.json").read_text(encoding="utf-8"))
		data["config"].pop("output_dir")
		outputs.append((data, (out / "curves.csv").read_bytes()))
	assert outputs[0] == outputs[1]

def test_experiment_joint(data_dir, tmp_path):
	"""Test joint combinations are labelled in the output."""
	out = tmp_path / "joint"
	args = ["experiment", *_inputs(data_dir), "--kind", "joint", "--combinations", "host-first:phi:none,none:none:rho",
			"--budget-fractions", "0,0.2", "--trials", "1", "--out", str(out)]
	assert cli_dispatch(args) == EXIT_OK
	strategies = json.loads((out / "result.json").read_text(encoding="utf-8"))["strategies"]
	assert strategies == ["host-first+phi+none", "none+none+rho"]

def test_benchmark(data_dir, tmp_path):
	"""Test the trace benchmark writes curves for every strategy."""
	out = tmp_path / "bench"
	args = ["benchmark", *_inputs(data_dir, with_params=False), "--traces", str(data_dir / "traces.csv"),
			"--budget-fractions", "0,0.5,1", "--out", str(out)]
	assert cli_dispatch(args) == EXIT_OK
	curves = pd.read_csv(out / "curves.csv")
	assert sorted(set(curves["strategy"])) == ["host-pair-surrogate", "phi", "phi-recalc"]
	assert (curves[curves["budget_fraction"] == 1.0]["mean_reachability"] <= curves[curves["budget"] == 0]["mean_reachability"].min()).all()

def test_experiment_joint_rejects_budgets(data_dir, tmp_path):
	"""Test absolute budgets are refused for joint experiments instead of ignored."""
	args = ["experiment", *_inputs(data_dir), "--kind", "joint", "--combinations", "host-first:phi:none",
			"--budgets", "0,5", "--trials", "1", "--out", str(tmp_path)]
	assert cli_dispatch(args) == EXIT_INVALID
	assert not (tmp_path / "result.json").exists()

def test_experiment_host_app_model(data_dir, tmp_path):
	"""Test edge hardening curves under the host-application cascade."""
	out = tmp_path / "host-app"
	args = ["experiment", *_inputs(data_dir, with_params=False), "--kind", "edge", "--strategies", "phi,max-p",
			"--budgets", "0,2", "--trials", "2", "--model", "host-app", "--out", str(out)]
	assert cli_dispatch(args) == EXIT_OK
	data = json.loads((out / "result.json").read_text(encoding="utf-8"))
	assert data["config"]["experiment"]["reachability_model"] == "host-app"
	assert data["notes"] == ["Reachability evaluated with the host-app cascade"]
	seg = ["experiment", *_inputs(data_dir), "--kind", "seg", "--model", "host-app", "--out", str(tmp_path / "seg")]
	assert cli_dispatch(seg) == EXIT_INVALID

def test_gen_synthetic_services(tmp_path):
	"""Test --services restricts every host to one incoming application."""
	out = tmp_path / "single"
	assert cli_dispatch(["gen-synthetic", *SMALL, "--services", "1", "--out", str(out)]) == EXIT_OK
	flows = pd.read_csv(out / "flows.csv")
	assert len(flows) == 40
	assert (flows.groupby(flows.columns[2])[flows.columns[1]].nunique() == 1).all()
