"""Memoised interval fits shared by the detectors."""

from __future__ import annotations

import logging
import threading
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

from ..core.model import Dataset, DetectorConfig, Interval
from ..models.lasso import SegmentFit, interval_fit

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


def _fit_pairs(
    data: Dataset, pairs: Sequence[Pair], lam: float, delta: float, tol: float, max_sweeps: int
) -> List[SegmentFit]:
    # one BLAS thread per worker keeps results independent of the pool size
    with threadpool_limits(limits=1):
        return [
            interval_fit(data, Interval(lo, hi, data.n), lam, delta, tol, max_sweeps)
            for lo, hi in pairs
        ]


def _chunks(items: Sequence[Pair], parts: int) -> List[Sequence[Pair]]:
    size = max(1, -(-len(items) // parts))
    return [items[i : i + size] for i in range(0, len(items), size)]


class FitCache:
    """
    Interval fits keyed by integer row pairs (lo, hi) for one dataset and one
    (lambda, delta, solver) setting.

    Fits are deterministic, so concurrent fills of the same key are harmless;
    insertion is still serialised by a lock. With enabled=False every lookup
    recomputes, which is how cache transparency is tested.
    """

    def __init__(
        self,
        data: Dataset,
        lam: float,
        delta: float,
        tol: float,
        max_sweeps: int,
        n_jobs: int = 1,
        enabled: bool = True,
    ):
        self.data = data
        self.lam = lam
        self.delta = delta
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.n_jobs = n_jobs
        self.enabled = enabled
        self.hits = 0
        self.misses = 0
        self._fits: Dict[Pair, SegmentFit] = {}
        self._lock = threading.Lock()

    @classmethod
    def for_config(
        cls, data: Dataset, cfg: DetectorConfig, enabled: bool = True
    ) -> "FitCache":
        return cls(
            data,
            cfg.lam,
            cfg.delta,
            cfg.solver_tol,
            cfg.solver_max_sweeps,
            n_jobs=cfg.n_jobs,
            enabled=enabled,
        )

    def matches(self, data: Dataset, cfg: DetectorConfig) -> bool:
        return (
            self.data is data
            and self.lam == cfg.lam
            and self.delta == cfg.delta
            and self.tol == cfg.solver_tol
            and self.max_sweeps == cfg.solver_max_sweeps
        )

    def __len__(self) -> int:
        return len(self._fits)

    def __contains__(self, pair: Pair) -> bool:
        return pair in self._fits

    @property
    def stats(self) -> Dict[str, int]:
        return {"hits": self.hits, "misses": self.misses, "entries": len(self._fits)}

    def fit(self, lo: int, hi: int) -> SegmentFit:
        key = (lo, hi)
        if self.enabled:
            cached = self._fits.get(key)
            if cached is not None:
                with self._lock:
                    self.hits += 1
                return cached
        result = _fit_pairs(
            self.data, [key], self.lam, self.delta, self.tol, self.max_sweeps
        )[0]
        with self._lock:
            self.misses += 1
            if self.enabled:
                self._fits.setdefault(key, result)
        return result

    def prefetch(self, pairs: Iterable[Pair]) -> None:
        """Fill every missing pair, in parallel when n_jobs > 1."""
        if not self.enabled:
            return
        missing = list(dict.fromkeys(p for p in pairs if p not in self._fits))
        if not missing:
            return
        if self.n_jobs == 1 or len(missing) < 2 * self.n_jobs:
            fits = _fit_pairs(
                self.data, missing, self.lam, self.delta, self.tol, self.max_sweeps
            )
        else:
            batches = _chunks(missing, 4 * self.n_jobs)
            parts = Parallel(n_jobs=self.n_jobs)(
                delayed(_fit_pairs)(
                    self.data, batch, self.lam, self.delta, self.tol, self.max_sweeps
                )
                for batch in batches
            )
            fits = [fit for part in parts for fit in part]
        with self._lock:
            for key, fit in zip(missing, fits):
                self._fits.setdefault(key, fit)
            self.misses += len(missing)
        logger.debug(f"prefetched {len(missing)} interval fits (n_jobs={self.n_jobs})")


def h_cost(
    data: Dataset, lo: int, hi: int, cfg: DetectorConfig, cache: Optional[FitCache] = None
) -> float:
    """H(u, v): interval loss plus gamma, or 0 for an empty interval."""
    if hi - lo < 1:
        return 0.0
    if cache is None:
        cache = FitCache.for_config(data, cfg)
    return cache.fit(lo, hi).loss + cfg.gamma
