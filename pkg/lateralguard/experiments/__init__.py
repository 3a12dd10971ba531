from .models import (
	AttackTrace, CurvePoint, DegreeModel, ExperimentKind, ExperimentResult, PathStatistics, SyntheticSpec
)
from .synthetic import (
	gen_attack_traces, gen_random_P, gen_random_posture, gen_synthetic_tripartite, initial_compromise_count,
	pick_initial_compromise
)
from .protocol import (
	REACHABILITY_MODELS, budgets_from_fractions, draw_trials, run_hardening_experiment, run_joint_experiment,
	run_segmentation_experiment
)
from .benchmark import baseline_host_pair_harden, benchmark_curves, replay, run_trace_benchmark
