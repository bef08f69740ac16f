import logging
import time
from typing import Callable, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import DEFAULT_DELTA, DEFAULT_GAMMA_RATIO
from ..core.model import DetectorConfig
from ..detection import DETECTORS
from ..detection.cache import FitCache
from ..simulation.models import GroundTruthModel
from ..simulation.sampler import sample_dataset
from ..tuning.metrics import tuning_rule

logger = logging.getLogger(__name__)

TruthFactory = Callable[[int], GroundTruthModel]


def run_benchmark(
    make_truth: TruthFactory,
    n_list: Sequence[int],
    reps: int,
    master_seed: int = 0,
    delta: float = DEFAULT_DELTA,
    gamma_ratio: float = DEFAULT_GAMMA_RATIO,
    methods: Sequence[str] = ("dp", "bs"),
    n_jobs: int = 1,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Time both detectors on seeded replications for every sample size.

    Both methods see the same dataset per (n, rep). Lasso calls are counted as
    cache misses of a fresh cache per run.

    Returns:
        (runs, summary): one row per (n, rep, method), and per (n, method) the
        mean and standard deviation of wall time plus mean Lasso calls.
        With reps == 1 the standard deviation is reported as 0.0.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    records = []
    for n in n_list:
        truth = make_truth(n)
        lam, gamma = tuning_rule(n, truth.p, delta, gamma_ratio)
        cfg = DetectorConfig(lam=lam, gamma=gamma, delta=delta, n_jobs=n_jobs)
        for rep in range(reps):
            seed = master_seed + rep
            data = sample_dataset(truth, n, seed)
            for method in methods:
                detector = DETECTORS[method](cfg)
                cache = FitCache.for_config(data, cfg)
                start = time.perf_counter()
                model = detector.detect(data, cache)
                elapsed = time.perf_counter() - start
                records.append(
                    {
                        "n": n,
                        "rep": rep,
                        "seed": seed,
                        "method": method,
                        "seconds": elapsed,
                        "cache_misses": cache.misses,
                        "k_hat": model.k,
                    }
                )
                logger.info(
                    f"bench n={n} rep={rep} {method}: {elapsed:.3f}s, {cache.misses} Lasso calls"
                )
    runs = pd.DataFrame.from_records(records)
    summary = (
        runs.groupby(["n", "method"], sort=True)
        .agg(
            mean_seconds=("seconds", "mean"),
            sd_seconds=("seconds", lambda s: float(s.std(ddof=1)) if len(s) > 1 else 0.0),
            cache_misses=("cache_misses", "mean"),
        )
        .reset_index()
    )
    return runs, summary


def scaling_slope(summary: pd.DataFrame, method: str, column: str = "cache_misses") -> float:
    """Least-squares slope of log(column) against log(n) for one method."""
    rows = summary[summary["method"] == method].sort_values("n")
    if len(rows) < 2:
        raise ValueError(f"need at least two sample sizes for {method}")
    slope, _ = np.polyfit(np.log(rows["n"].to_numpy(float)), np.log(rows[column].to_numpy(float)), 1)
    return float(slope)
