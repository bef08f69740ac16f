from typing import Optional

from .model import Alpha, Dataset, DetectorConfig
from ..models.lasso import interval_fit


def objective_G(
    data: Dataset, alpha: Alpha, cfg: DetectorConfig, cache: Optional[object] = None
) -> float:
    """
    G(alpha) = sum_j L_n(I_j, beta_hat_{I_j}) + gamma * k.

    Segments shorter than delta are allowed here; only the grid is enforced
    (by Alpha itself). Summation runs left to right, as in the detectors, so
    equal segmentations give bit-equal objectives.
    """
    if alpha.n != data.n:
        raise ValueError(f"alpha is on the grid of n={alpha.n}, data has n={data.n}")
    total = 0.0
    for iv in alpha.intervals():
        if cache is not None:
            fit = cache.fit(iv.lo, iv.hi)
        else:
            fit = interval_fit(
                data, iv, cfg.lam, cfg.delta, cfg.solver_tol, cfg.solver_max_sweeps
            )
        total += fit.loss + cfg.gamma
    return total
