"""
Domain value types for segmented sparse regression.

Change points live on the grid {i/n}. Everything here stores integer row
bounds and only converts to grid fractions at the API boundary, so interval
arithmetic never compares floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import DEFAULT_MAX_SWEEPS, DEFAULT_SOLVER_TOL, GRID_EPS
from ..exceptions import ConfigError, DataFormatError, InfeasibleError

if TYPE_CHECKING:
    from ..models.lasso import SegmentFit


def to_row(fraction: float, n: int) -> int:
    """Map a grid fraction i/n to its row index i, rejecting off-grid values."""
    scaled = float(fraction) * n
    row = int(round(scaled))
    if abs(scaled - row) > GRID_EPS * max(1, n):
        raise ValueError(f"{fraction!r} is not on the grid {{i/{n}}}")
    return row


def min_segment_rows(delta: float, n: int) -> int:
    """floor(delta * n), tolerant to representation error (1/3 * 12 -> 4)."""
    return int(math.floor(delta * n + GRID_EPS))


def max_segments(delta: float) -> int:
    return int(math.floor(1.0 / delta + GRID_EPS))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered sample of (y_i, x_i) rows; row order carries the change-point structure."""

    y: np.ndarray
    x: np.ndarray
    columns: Tuple[str, ...] = ()
    # split halves may hold a single row
    min_n: int = field(default=2, repr=False)

    def __post_init__(self):
        y = np.array(self.y, dtype=float, copy=True).reshape(-1)
        x = np.array(self.x, dtype=float, copy=True)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2:
            raise DataFormatError(f"x must be a matrix, got {x.ndim} dimensions")
        if x.shape[0] != y.shape[0]:
            raise DataFormatError(
                f"y has {y.shape[0]} rows but x has {x.shape[0]} rows"
            )
        if y.shape[0] < self.min_n:
            raise DataFormatError(
                f"need at least {self.min_n} observations, got {y.shape[0]}"
            )
        if x.shape[1] < 1:
            raise DataFormatError("need at least one covariate column")
        bad_y = np.flatnonzero(~np.isfinite(y))
        if bad_y.size:
            raise DataFormatError(f"non-finite response at row {int(bad_y[0]) + 1}")
        bad_x = np.argwhere(~np.isfinite(x))
        if bad_x.size:
            row, col = bad_x[0]
            raise DataFormatError(
                f"non-finite covariate at row {int(row) + 1}, column {int(col) + 1}"
            )
        y.setflags(write=False)
        x = np.ascontiguousarray(x)
        x.setflags(write=False)
        columns = tuple(self.columns) or tuple(f"x{j + 1}" for j in range(x.shape[1]))
        if len(columns) != x.shape[1]:
            raise DataFormatError(
                f"{len(columns)} column names for {x.shape[1]} covariates"
            )
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "columns", columns)

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    def block(self, lo: int, hi: int) -> Tuple[np.ndarray, np.ndarray]:
        """Rows lo+1..hi (the interval (lo/n, hi/n])."""
        return self.x[lo:hi], self.y[lo:hi]

    def take(self, rows: Sequence[int], min_n: Optional[int] = None) -> "Dataset":
        idx = np.asarray(rows, dtype=int)
        return Dataset(
            y=self.y[idx],
            x=self.x[idx],
            columns=self.columns,
            min_n=self.min_n if min_n is None else min_n,
        )


@dataclass(frozen=True)
class Interval:
    """Half-open interval (lo/n, hi/n] holding rows lo+1..hi."""

    lo: int
    hi: int
    n: int

    def __post_init__(self):
        if not (0 <= self.lo < self.hi <= self.n):
            raise ValueError(
                f"invalid interval rows ({self.lo}, {self.hi}] for n={self.n}"
            )

    @classmethod
    def from_fractions(cls, u: float, v: float, n: int) -> "Interval":
        return cls(to_row(u, n), to_row(v, n), n)

    @property
    def u(self) -> float:
        return self.lo / self.n

    @property
    def v(self) -> float:
        return self.hi / self.n

    @property
    def rows(self) -> int:
        return self.hi - self.lo

    @property
    def width(self) -> float:
        return self.rows / self.n


@dataclass(frozen=True)
class Alpha:
    """Change-point vector 0 = a_0 < ... < a_k = 1, stored as row indices."""

    breaks: Tuple[int, ...]
    n: int

    def __post_init__(self):
        breaks = tuple(int(b) for b in self.breaks)
        if len(breaks) < 2:
            raise ValueError("alpha needs at least the two endpoints 0 and 1")
        if breaks[0] != 0 or breaks[-1] != self.n:
            raise ValueError(
                f"alpha must start at 0 and end at 1, got rows {breaks[0]}..{breaks[-1]} of {self.n}"
            )
        for j in range(1, len(breaks)):
            if breaks[j] <= breaks[j - 1]:
                raise ValueError(f"alpha not increasing at index {j}")
        object.__setattr__(self, "breaks", breaks)

    @classmethod
    def from_fractions(cls, points: Sequence[float], n: int) -> "Alpha":
        return cls(tuple(to_row(a, n) for a in points), n)

    @classmethod
    def single(cls, n: int) -> "Alpha":
        return cls((0, n), n)

    @property
    def points(self) -> Tuple[float, ...]:
        return tuple(b / self.n for b in self.breaks)

    @property
    def k(self) -> int:
        return len(self.breaks) - 1

    @property
    def change_points(self) -> Tuple[int, ...]:
        """Interior rows, i.e. the change points proper."""
        return self.breaks[1:-1]

    def intervals(self) -> Iterator[Interval]:
        for lo, hi in zip(self.breaks[:-1], self.breaks[1:]):
            yield Interval(lo, hi, self.n)

    @property
    def min_rows(self) -> int:
        return min(hi - lo for lo, hi in zip(self.breaks[:-1], self.breaks[1:]))

    @property
    def spacing(self) -> float:
        """r(alpha): the smallest segment width."""
        return self.min_rows / self.n


def validate_alpha(
    alpha: Union[Alpha, Sequence[float]], n: int, delta: float
) -> Optional[str]:
    """
    Check a change-point vector against the grid, ordering and spacing rules.

    Spacing is checked in rows: every segment needs at least floor(delta * n)
    rows, the same minimum the detectors search over. When delta * n is not
    an integer a segment may be slightly narrower than delta (n=10,
    delta=0.25 admits width 0.2).

    Returns None when the vector is admissible, otherwise a description of the
    first violated rule.
    """
    points = alpha.points if isinstance(alpha, Alpha) else tuple(float(a) for a in alpha)
    if len(points) < 2:
        return "alpha needs at least two points"
    rows = []
    for j, a in enumerate(points):
        try:
            rows.append(to_row(a, n))
        except ValueError:
            return f"alpha[{j}]={a!r} is not on the grid {{i/{n}}}"
    if rows[0] != 0:
        return f"alpha[0]={points[0]!r} must be 0"
    if rows[-1] != n:
        return f"alpha[{len(points) - 1}]={points[-1]!r} must be 1"
    for j in range(1, len(rows)):
        if rows[j] <= rows[j - 1]:
            return (
                f"not increasing at index {j}: alpha[{j - 1}]={points[j - 1]!r} "
                f">= alpha[{j}]={points[j]!r}"
            )
    d = min_segment_rows(delta, n)
    for j in range(1, len(rows)):
        if rows[j] - rows[j - 1] < d:
            width = (rows[j] - rows[j - 1]) / n
            return f"r(alpha)={width:g} < delta={delta:g} at segment {j}"
    return None


@dataclass(frozen=True)
class DetectorConfig:
    lam: float
    gamma: float
    delta: float
    solver_tol: float = DEFAULT_SOLVER_TOL
    solver_max_sweeps: int = DEFAULT_MAX_SWEEPS
    n_jobs: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ConfigError(f"lambda must be a finite nonnegative number, got {self.lam}")
        if not (np.isfinite(self.gamma) and self.gamma >= 0):
            raise ConfigError(f"gamma must be a finite nonnegative number, got {self.gamma}")
        if not (0 < self.delta <= 0.5):
            raise ConfigError(f"delta must lie in (0, 0.5], got {self.delta}")
        if not self.solver_tol > 0:
            raise ConfigError(f"solver_tol must be positive, got {self.solver_tol}")
        if self.solver_max_sweeps < 1:
            raise ConfigError(
                f"solver_max_sweeps must be >= 1, got {self.solver_max_sweeps}"
            )
        if self.n_jobs < 1:
            raise ConfigError(f"n_jobs must be >= 1, got {self.n_jobs}")

    def min_rows(self, n: int) -> int:
        d = min_segment_rows(self.delta, n)
        if d < 1:
            raise InfeasibleError(
                f"floor(delta*n) = floor({self.delta}*{n}) = 0; need at least one row per segment"
            )
        if d > n:
            raise InfeasibleError(f"minimal segment of {d} rows exceeds n={n}")
        return d

    def kmax(self, n: int) -> int:
        return min(max_segments(self.delta), n // self.min_rows(n))


@dataclass(frozen=True, eq=False)
class SegmentedModel:
    """A change-point vector with its per-segment Lasso fits and G(alpha)."""

    alpha: Alpha
    fits: Tuple["SegmentFit", ...]
    objective: float
    gamma: float
    method: str = "dp"
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        fits = tuple(self.fits)
        if len(fits) != self.alpha.k:
            raise ValueError(
                f"{len(fits)} segment fits for a {self.alpha.k}-segment alpha"
            )
        object.__setattr__(self, "fits", fits)
        recomputed = sum(fit.loss for fit in fits) + self.gamma * len(fits)
        scale = max(1.0, abs(recomputed))
        if abs(recomputed - self.objective) > 1e-10 * scale:
            raise ValueError(
                f"objective {self.objective!r} disagrees with its parts {recomputed!r}"
            )

    @property
    def k(self) -> int:
        return self.alpha.k

    @property
    def betas(self) -> Tuple[np.ndarray, ...]:
        return tuple(fit.beta for fit in self.fits)

    @property
    def per_segment_loss(self) -> Tuple[float, ...]:
        return tuple(fit.loss for fit in self.fits)

    @property
    def kkt_gaps(self) -> Tuple[float, ...]:
        return tuple(fit.kkt_gap for fit in self.fits)


def segment_loss(data: Dataset, iv: Interval, beta: np.ndarray) -> float:
    """L_n((u,v], beta) = ||Y_iv - X_iv beta||^2 / n, with the total n as divisor."""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != data.p:
        raise ValueError(f"beta has length {beta.shape[0]}, expected p={data.p}")
    if iv.n != data.n:
        raise ValueError(f"interval is on the grid of n={iv.n}, data has n={data.n}")
    x, y = data.block(iv.lo, iv.hi)
    resid = y - x @ beta
    return float(resid @ resid) / data.n
