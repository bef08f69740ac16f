from .engine import run_benchmark, scaling_slope
from .study import run_study, summarize_study
