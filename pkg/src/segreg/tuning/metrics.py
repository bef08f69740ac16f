import math
from dataclasses import dataclass
from typing import Optional, Tuple

import pandas as pd

from ..config import DEFAULT_GAMMA_RATIO
from ..core.model import SegmentedModel
from ..exceptions import ConfigError
from ..simulation.models import GroundTruthModel


def tuning_rule(
    n: int, p: int, delta: float, gamma_ratio: float = DEFAULT_GAMMA_RATIO
) -> Tuple[float, float]:
    """lambda = sqrt(log(p) / (delta * n)), gamma = gamma_ratio * lambda."""
    if n < 1 or p < 1 or delta <= 0:
        raise ConfigError(f"invalid sizes for the tuning rule: n={n}, p={p}, delta={delta}")
    lam = math.sqrt(math.log(p) / (delta * n))
    return lam, gamma_ratio * lam


@dataclass(frozen=True)
class EvalReport:
    k_hat: int
    alpha_hat: Tuple[float, ...]
    k_match: bool
    alpha_l1_error: Optional[float] = None
    first_cp: Optional[float] = None
    first_cp_error: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "k_hat": self.k_hat,
            "alpha_hat": list(self.alpha_hat),
            "k_match": self.k_match,
            "alpha_l1_error": self.alpha_l1_error,
            "first_cp": self.first_cp,
            "first_cp_error": self.first_cp_error,
        }


def evaluate(estimated: SegmentedModel, truth: GroundTruthModel) -> EvalReport:
    """
    Compare an estimate with the truth. The l1 error needs equal lengths; a
    single-segment estimate has no first change point (reported as missing).
    """
    alpha_hat = estimated.alpha.points
    k_hat = estimated.k
    k_match = k_hat == truth.k0
    l1 = None
    if k_match:
        l1 = float(sum(abs(a - b) for a, b in zip(alpha_hat, truth.alpha0)))
    first_cp = first_cp_error = None
    if k_hat >= 2:
        first_cp = alpha_hat[1]
        if truth.k0 >= 2:
            first_cp_error = abs(first_cp - truth.alpha0[1])
    return EvalReport(
        k_hat=k_hat,
        alpha_hat=alpha_hat,
        k_match=k_match,
        alpha_l1_error=l1,
        first_cp=first_cp,
        first_cp_error=first_cp_error,
    )


def k_hat_proportions(reps: pd.DataFrame, top: int = 4) -> pd.DataFrame:
    """Share of replications estimating 1, 2, ..., top-1 and >= top segments, per (n, method)."""
    buckets = reps["k_hat"].clip(upper=top).map(
        lambda k: f"k>={top}" if k >= top else f"k={k}"
    )
    labels = [f"k={k}" for k in range(1, top)] + [f"k>={top}"]
    counts = pd.crosstab([reps["n"], reps["method"]], buckets, normalize="index")
    counts = counts.reindex(columns=labels, fill_value=0.0)
    counts.columns.name = None
    return counts.reset_index()
