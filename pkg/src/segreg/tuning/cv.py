"""
Ordered-data cross-validation over (lambda, k).

Odd rows (1-based) train, even rows test. Each cell fits the best k-segment
model on the training rows and scores it by residual sum of squares on the
test rows, matching test rows to segments by grid position.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .. import config
from ..core.model import Alpha, Dataset, DetectorConfig
from ..detection.binseg import bs_fixed_k
from ..detection.cache import FitCache
from ..detection.dynamic import dp_path
from ..exceptions import ConfigError, InfeasibleError

logger = logging.getLogger(__name__)

CV_METHODS = ("dp", "bs")


def ordered_split(data: Dataset) -> Tuple[Dataset, Dataset]:
    """Train = rows 1, 3, 5, ...; test = rows 2, 4, ...; order preserved."""
    if data.n < 2:
        raise ValueError("need at least 2 rows to split")
    rows = np.arange(data.n)
    return data.take(rows[0::2], min_n=1), data.take(rows[1::2], min_n=1)


def segment_of_rows(alpha: Alpha, n_test: int) -> np.ndarray:
    """
    0-based segment of each test row: row i belongs to segment j iff
    i / n_test lies in (a_{j-1}, a_j]. Integer arithmetic, no float compares.
    """
    i = np.arange(1, n_test + 1, dtype=np.int64)
    interior = np.asarray(alpha.change_points, dtype=np.int64)
    if interior.size == 0:
        return np.zeros(n_test, dtype=int)
    # count of change points a_j with a_j < i / n_test
    below = interior[None, :] * n_test < i[:, None] * alpha.n
    return below.sum(axis=1)


def predict_rss(alpha_hat: Alpha, betas_hat: Sequence[np.ndarray], test: Dataset) -> float:
    if len(betas_hat) != alpha_hat.k:
        raise ValueError(f"{len(betas_hat)} coefficient vectors for {alpha_hat.k} segments")
    labels = segment_of_rows(alpha_hat, test.n)
    coef = np.stack([np.asarray(b, dtype=float) for b in betas_hat])[labels]
    resid = test.y - np.einsum("ij,ij->i", test.x, coef)
    return float(resid @ resid)


@dataclass
class CvResult:
    """One row per (lambda, k) cell; test_rss is NaN for infeasible cells."""

    table: pd.DataFrame
    alphas: Dict[Tuple[float, int], Alpha] = field(default_factory=dict)
    method: str = "dp"

    @property
    def argmin(self) -> Optional[Tuple[float, int]]:
        feasible = self.table.dropna(subset=["test_rss"])
        if feasible.empty:
            return None
        best = feasible.sort_values(["test_rss", "k", "lam"], kind="mergesort").iloc[0]
        return float(best["lam"]), int(best["k"])

    @property
    def best_rss(self) -> Optional[float]:
        cell = self.argmin
        if cell is None:
            return None
        lam, k = cell
        row = self.table[(self.table["lam"] == lam) & (self.table["k"] == k)]
        return float(row["test_rss"].iloc[0])


def _lambda_column(
    train: Dataset,
    test: Dataset,
    lam: float,
    ks: Sequence[int],
    delta: float,
    method: str,
    tol: float,
    max_sweeps: int,
):
    cfg = DetectorConfig(lam=lam, gamma=0.0, delta=delta, solver_tol=tol, solver_max_sweeps=max_sweeps)
    cache = FitCache.for_config(train, cfg)
    if method == "dp":
        models = dp_path(train, cfg, ks, cache)
    else:
        models = {}
        for k in ks:
            try:
                models[k] = bs_fixed_k(train, cfg, k, cache)
            except InfeasibleError:
                continue
    cells = []
    for k in ks:
        model = models.get(k)
        if model is None:
            cells.append((lam, k, np.nan, None))
            continue
        cells.append((lam, k, predict_rss(model.alpha, model.betas, test), model.alpha))
    return cells


def cv_grid(
    data: Dataset,
    lambda_grid: Sequence[float],
    k_range: Sequence[int],
    delta: float,
    method: str = "dp",
    tol: float = config.DEFAULT_SOLVER_TOL,
    max_sweeps: int = config.DEFAULT_MAX_SWEEPS,
    n_jobs: int = 1,
) -> CvResult:
    """Fit every (lambda, k) cell on the training half and score it on the test half."""
    if not lambda_grid or not k_range:
        raise ConfigError("lambda grid and k range must be nonempty")
    if method not in CV_METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {CV_METHODS}")
    lambdas = sorted(set(float(lam) for lam in lambda_grid))
    ks = sorted(set(int(k) for k in k_range))
    if ks[0] < 1:
        raise ConfigError(f"k must be >= 1, got {ks[0]}")
    train, test = ordered_split(data)
    if train.n < 2:
        raise ConfigError(
            f"ordered split of n={data.n} rows leaves {train.n} training row(s) and "
            f"{test.n} test row(s); cross-validation needs at least 2 training rows"
        )
    # validates delta and floor(delta * n_train) >= 1
    DetectorConfig(lam=lambdas[0], gamma=0.0, delta=delta).min_rows(train.n)

    args = (ks, delta, method, tol, max_sweeps)
    if n_jobs == 1:
        columns = [_lambda_column(train, test, lam, *args) for lam in lambdas]
    else:
        columns = Parallel(n_jobs=n_jobs)(
            delayed(_lambda_column)(train, test, lam, *args) for lam in lambdas
        )

    records, alphas = [], {}
    for cells in columns:
        for lam, k, rss, alpha in cells:
            records.append(
                {
                    "lam": lam,
                    "k": k,
                    "test_rss": rss,
                    "alpha": None if alpha is None else " ".join(f"{a:.17g}" for a in alpha.points),
                }
            )
            if alpha is None:
                logger.warning(f"CV cell lambda={lam:g}, k={k} is infeasible")
            else:
                alphas[(lam, k)] = alpha
    table = pd.DataFrame.from_records(records, columns=["lam", "k", "test_rss", "alpha"])
    table = table.sort_values(["lam", "k"], kind="mergesort").reset_index(drop=True)
    result = CvResult(table=table, alphas=alphas, method=method)
    logger.info(f"cv_grid ({method}): {len(table)} cells, argmin {result.argmin}")
    return result
