"""
Exact minimisation of G(alpha) by dynamic programming.

F_1(v) = H(0, v) for v >= d, F_k(v) = min_u F_{k-1}(u) + H(u, v) over
u <= v - d, with d = floor(delta * n) rows. Ties go to the smallest u and
the smallest k.
"""

from __future__ import annotations

import logging
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..core.model import Alpha, Dataset, DetectorConfig, SegmentedModel
from ..exceptions import InfeasibleError
from .base import BaseDetector
from .cache import FitCache, h_cost

logger = logging.getLogger(__name__)


def candidate_pairs(n: int, d: int) -> List[Tuple[int, int]]:
    """
    Row pairs (lo, hi) the recursion can ever use: both ends are 0, n or an
    admissible change point (at least d rows from either end) and hi - lo >= d.
    """
    ends = [0] + list(range(d, n - d + 1)) + [n]
    ends = sorted(set(ends))
    pairs = []
    for hi in ends:
        if hi == 0:
            continue
        for lo in ends:
            if lo >= hi:
                break
            if hi - lo >= d:
                pairs.append((lo, hi))
    return pairs


def h_table(data: Dataset, cfg: DetectorConfig, cache: FitCache, d: int) -> np.ndarray:
    n = data.n
    pairs = candidate_pairs(n, d)
    cache.prefetch(pairs)
    table = np.full((n + 1, n + 1), np.inf)
    for lo, hi in pairs:
        table[lo, hi] = h_cost(data, lo, hi, cfg, cache)
    return table


def f_tables(table: np.ndarray, n: int, d: int, kmax: int) -> Tuple[np.ndarray, np.ndarray]:
    """F[k, v] and the argmin u behind it, for k = 1..kmax (row 0 unused)."""
    F = np.full((kmax + 1, n + 1), np.inf)
    arg = np.full((kmax + 1, n + 1), -1, dtype=int)
    F[1, d:] = table[0, d:]
    arg[1, d:] = 0
    for k in range(2, kmax + 1):
        for v in range(k * d, n + 1):
            lo_min, lo_max = (k - 1) * d, v - d
            candidates = F[k - 1, lo_min : lo_max + 1] + table[lo_min : lo_max + 1, v]
            best = int(np.argmin(candidates))
            if np.isfinite(candidates[best]):
                F[k, v] = candidates[best]
                arg[k, v] = lo_min + best
    return F, arg


def backtrack(arg: np.ndarray, k: int, n: int) -> Tuple[int, ...]:
    breaks = [n]
    v = n
    for j in range(k, 0, -1):
        v = int(arg[j, v])
        breaks.append(v)
    if breaks[-1] != 0:
        raise RuntimeError(f"backtracking for k={k} ended at row {breaks[-1]}")
    return tuple(reversed(breaks))


def _model(
    data: Dataset,
    breaks: Tuple[int, ...],
    objective: float,
    cfg: DetectorConfig,
    cache: FitCache,
    method: str,
    extras: Optional[dict] = None,
) -> SegmentedModel:
    alpha = Alpha(breaks, data.n)
    fits = tuple(cache.fit(iv.lo, iv.hi) for iv in alpha.intervals())
    return SegmentedModel(
        alpha=alpha,
        fits=fits,
        objective=float(objective),
        gamma=cfg.gamma,
        method=method,
        extras=extras or {},
    )


def _prepare(data: Dataset, cfg: DetectorConfig, cache: Optional[FitCache]) -> FitCache:
    if cache is None:
        return FitCache.for_config(data, cfg)
    if not cache.matches(data, cfg):
        raise ValueError("fit cache was built for different data or settings")
    return cache


def dp_detect(
    data: Dataset, cfg: DetectorConfig, cache: Optional[FitCache] = None
) -> SegmentedModel:
    """Global minimiser of G(alpha) over r(alpha) >= delta and k <= kmax."""
    cache = _prepare(data, cfg, cache)
    n = data.n
    d = cfg.min_rows(n)
    kmax = cfg.kmax(n)
    logger.info(f"dp_detect: n={n}, p={data.p}, d={d}, kmax={kmax}, lambda={cfg.lam:.4g}")
    table = h_table(data, cfg, cache, d)
    F, arg = f_tables(table, n, d, kmax)
    finals = F[1:, n]
    if not np.isfinite(finals).any():
        raise InfeasibleError(f"no admissible segmentation for n={n}, delta={cfg.delta}")
    k_hat = int(np.argmin(finals)) + 1
    breaks = backtrack(arg, k_hat, n)
    path = {k: float(F[k, n]) for k in range(1, kmax + 1) if np.isfinite(F[k, n])}
    model = _model(data, breaks, F[k_hat, n], cfg, cache, "dp", {"objective_by_k": path})
    logger.info(
        f"dp_detect: k_hat={k_hat}, objective={model.objective:.6g}, cache={cache.stats}"
    )
    return model


def dp_path(
    data: Dataset,
    cfg: DetectorConfig,
    ks: Iterable[int],
    cache: Optional[FitCache] = None,
) -> Dict[int, SegmentedModel]:
    """
    Best segmentation with exactly k segments for every feasible k in ks.

    One F-table serves all k. Infeasible k are left out of the result. The
    objective of each model is the sum of losses plus cfg.gamma * k.
    """
    cache = _prepare(data, cfg, cache)
    n = data.n
    d = cfg.min_rows(n)
    ks = sorted(set(int(k) for k in ks))
    feasible = [k for k in ks if 1 <= k <= cfg.kmax(n)]
    if not feasible:
        return {}
    table = h_table(data, cfg, cache, d)
    F, arg = f_tables(table, n, d, max(feasible))
    models = {}
    for k in feasible:
        if not np.isfinite(F[k, n]):
            continue
        models[k] = _model(data, backtrack(arg, k, n), F[k, n], cfg, cache, "dp")
    return models


def dp_fixed_k(
    data: Dataset,
    cfg: DetectorConfig,
    k: int,
    cache: Optional[FitCache] = None,
) -> SegmentedModel:
    """Best segmentation with exactly k segments; gamma only shifts the objective by gamma * k."""
    n = data.n
    d = cfg.min_rows(n)
    if k < 1 or k > cfg.kmax(n) or k * d > n:
        raise InfeasibleError(
            f"k={k} segments infeasible for n={n}, delta={cfg.delta} (kmax={cfg.kmax(n)})"
        )
    models = dp_path(data, cfg, [k], cache)
    if k not in models:
        raise InfeasibleError(f"no admissible segmentation with k={k}")
    return models[k]


class DynamicProgrammingDetector(BaseDetector):
    """Exact detector."""

    name = "dp"

    def detect(self, data: Dataset, cache: Optional[FitCache] = None) -> SegmentedModel:
        return dp_detect(data, self.config, cache)

    def detect_fixed_k(
        self, data: Dataset, k: int, cache: Optional[FitCache] = None
    ) -> SegmentedModel:
        return dp_fixed_k(data, self.config, k, cache)
