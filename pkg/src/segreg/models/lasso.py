"""
Interval Lasso.

For an interval (u, v] holding m = (v-u)n rows the fitted coefficient minimises

    ||Y_iv - X_iv b||^2 / m + lam / sqrt(max(v-u, delta)) * ||b||_1

by cyclic coordinate descent with covariance updates. Coordinates are swept in
index order over a working set; coordinates outside it are checked against the
KKT bound after each converged pass and admitted when they violate it, so the
returned point is a KKT point of the full problem.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .. import config
from ..core.model import Dataset, Interval, segment_loss
from ..exceptions import ConfigError, SolverError

logger = logging.getLogger(__name__)

FLAG_MAX_SWEEPS = "max-sweeps"
FLAG_ZERO_VARIANCE = "zero-variance-column"
FLAG_NON_UNIQUE = "non-unique"


@dataclass(frozen=True, eq=False)
class LassoResult:
    beta: np.ndarray
    sweeps: int
    converged: bool
    flags: Tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class SegmentFit:
    interval: Interval
    beta: np.ndarray
    loss: float
    penalty_scale: float
    kkt_gap: float
    sweeps_used: int
    converged: bool = True
    flags: Tuple[str, ...] = ()

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta)


def _soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def lasso_objective(x: np.ndarray, y: np.ndarray, beta: np.ndarray, weight: float) -> float:
    resid = y - x @ beta
    return float(resid @ resid) / x.shape[0] + weight * float(np.abs(beta).sum())


def lasso_solve(
    x_block: np.ndarray,
    y_block: np.ndarray,
    weight: float,
    total_n: Optional[int] = None,
    tol: float = config.DEFAULT_SOLVER_TOL,
    max_sweeps: int = config.DEFAULT_MAX_SWEEPS,
    beta0: Optional[np.ndarray] = None,
    check_monotone: Optional[bool] = None,
) -> LassoResult:
    """
    Minimise ||y - X b||^2 / m + weight * ||b||_1 over b.

    Parameters:
        x_block: m x p design rows of one interval
        y_block: m responses
        weight: l1 weight, already scaled for the interval
        total_n: sample size of the full dataset; only used in log messages
        tol: convergence threshold on the largest coordinate change in a sweep
        max_sweeps: sweep budget; when exhausted the last iterate is returned
            with converged=False
        beta0: optional warm start
        check_monotone: assert that no sweep increases the objective
            (defaults to config.DEBUG)

    Returns:
        LassoResult with the coefficient vector, sweeps used and flags.
    """
    x = np.asarray(x_block, dtype=float)
    y = np.asarray(y_block, dtype=float).reshape(-1)
    if x.ndim != 2:
        raise ValueError(f"x_block must be a matrix, got shape {x.shape}")
    m, p = x.shape
    if m < 1:
        raise ValueError("x_block must have at least one row")
    if y.shape[0] != m:
        raise ValueError(f"y_block has {y.shape[0]} rows, x_block has {m}")
    if not (math.isfinite(weight) and weight >= 0):
        raise ConfigError(f"weight must be finite and nonnegative, got {weight}")
    if check_monotone is None:
        check_monotone = config.DEBUG

    col_sq = np.einsum("ij,ij->j", x, x)
    xty = x.T @ y
    zero_cols = col_sq <= 0.0
    flags = []
    if weight == 0.0 and zero_cols.any():
        flags.append(FLAG_ZERO_VARIANCE)
    if weight == 0.0 and p > m:
        flags.append(FLAG_NON_UNIQUE)

    if beta0 is None:
        beta = np.zeros(p)
    else:
        beta = np.array(beta0, dtype=float, copy=True).reshape(-1)
        if beta.shape[0] != p:
            raise ValueError(f"beta0 has length {beta.shape[0]}, expected {p}")
    beta[zero_cols] = 0.0

    # per-coordinate threshold in the x_j^T r scale, and KKT slack in the same scale
    thresh = 0.5 * m * weight
    slack = 0.5 * m * tol

    gram: Dict[int, np.ndarray] = {}

    def gram_col(j: int) -> np.ndarray:
        col = gram.get(j)
        if col is None:
            col = x.T @ x[:, j]
            gram[j] = col
        return col

    # x^T x beta, kept current under coordinate updates
    xtxb = x.T @ (x @ beta) if beta.any() else np.zeros(p)

    def violators(active: set) -> list:
        grad = np.abs(xty - xtxb)
        grad[zero_cols] = 0.0
        cand = np.flatnonzero(grad > thresh + slack)
        return [int(j) for j in cand if int(j) not in active]

    active = set(int(j) for j in np.flatnonzero(beta))
    active.update(violators(active))
    working = sorted(active)

    sweeps = 0
    converged = False
    previous = lasso_objective(x, y, beta, weight) if check_monotone else None
    while sweeps < max_sweeps:
        max_change = 0.0
        for j in working:
            a_j = col_sq[j]
            if a_j <= 0.0:
                continue
            b_old = beta[j]
            rho = xty[j] - xtxb[j] + a_j * b_old
            b_new = _soft_threshold(rho, thresh) / a_j
            step = b_new - b_old
            if step != 0.0:
                beta[j] = b_new
                xtxb += step * gram_col(j)
                if abs(step) > max_change:
                    max_change = abs(step)
        sweeps += 1
        if check_monotone:
            current = lasso_objective(x, y, beta, weight)
            assert current <= previous + 1e-12 * max(1.0, abs(previous)), (
                f"sweep {sweeps} increased the objective {previous!r} -> {current!r}"
            )
            previous = current
        if max_change < tol:
            # refresh the running product before the KKT scan to drop accumulated drift
            xtxb = x.T @ (x @ beta)
            new = violators(active)
            if not new:
                converged = True
                break
            active.update(new)
            working = sorted(active)

    if not converged:
        flags.append(FLAG_MAX_SWEEPS)
        logger.warning(
            f"Lasso did not converge in {max_sweeps} sweeps "
            f"(m={m}, p={p}, n={total_n if total_n is not None else m}, weight={weight:.3g})"
        )
    if FLAG_NON_UNIQUE in flags:
        logger.warning(f"Lasso with weight 0 and p={p} > m={m}: solution is not unique")
    return LassoResult(beta=beta, sweeps=sweeps, converged=converged, flags=tuple(flags))


def penalty_scale(lam: float, width: float, delta: float) -> float:
    """lam / sqrt(max(v - u, delta))."""
    return lam / math.sqrt(max(width, delta))


def kkt_gap(
    data: Dataset, iv: Interval, beta: np.ndarray, lam: float, delta: float
) -> float:
    """
    Excess of the stationarity residual over its bound on the interval.

    max(0, ||2 X_iv^T (Y_iv - X_iv beta) / n||_inf - lam (v-u) / sqrt(max(v-u, delta)))
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != data.p:
        raise ValueError(f"beta has length {beta.shape[0]}, expected p={data.p}")
    x, y = data.block(iv.lo, iv.hi)
    score = 2.0 * (x.T @ (y - x @ beta)) / data.n
    bound = iv.width * penalty_scale(lam, iv.width, delta)
    return max(0.0, float(np.abs(score).max()) - bound)


def interval_fit(
    data: Dataset,
    iv: Interval,
    lam: float,
    delta: float,
    tol: float = config.DEFAULT_SOLVER_TOL,
    max_sweeps: int = config.DEFAULT_MAX_SWEEPS,
    beta0: Optional[np.ndarray] = None,
) -> SegmentFit:
    """Lasso fit on one interval; `loss` is L_n so fits add up to G(alpha)."""
    if iv.n != data.n:
        raise ValueError(f"interval is on the grid of n={iv.n}, data has n={data.n}")
    scale = penalty_scale(lam, iv.width, delta)
    x, y = data.block(iv.lo, iv.hi)
    result = lasso_solve(
        x, y, scale, total_n=data.n, tol=tol, max_sweeps=max_sweeps, beta0=beta0
    )
    if not np.all(np.isfinite(result.beta)):
        raise SolverError(f"non-finite coefficients on interval ({iv.u:g}, {iv.v:g}]")
    if not result.converged:
        raise SolverError(
            f"Lasso did not converge on interval ({iv.u:g}, {iv.v:g}] "
            f"after {result.sweeps} sweeps"
        )
    beta = result.beta
    beta.setflags(write=False)
    return SegmentFit(
        interval=iv,
        beta=beta,
        loss=segment_loss(data, iv, beta),
        penalty_scale=scale,
        kkt_gap=kkt_gap(data, iv, beta, lam, delta),
        sweeps_used=result.sweeps,
        converged=result.converged,
        flags=result.flags,
    )
