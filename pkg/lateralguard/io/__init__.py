from .inputs import (
	InputBundle, load_access_csv, load_flows_csv, load_inputs, load_posture_csv, load_probabilities_csv,
	load_traces_csv
)
from .results import write_inputs, write_plan, write_results, write_traces
