from .baselines import eval_baseline, median_sigma, prototype_predictions
from .evaluate import LabelNoise, evaluate, evaluate_model, run_episodes
from .reports import (
    EvalReport,
    confidence_interval,
    report_table,
    standard_error,
    write_report_csv,
    write_sweep_csv,
)
from .semi import semi_eval
from .sweep import SWEEP_PARAMS, parse_values, sweep
