"""
Ground-truth models for simulation: covariance structures and piecewise
constant coefficient vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.linalg import toeplitz

from ..exceptions import ConfigError

COVARIANCE_KINDS = ("identity", "toeplitz", "equicorr")


@dataclass(frozen=True)
class CovarianceSpec:
    """
    identity: S_ij = 1{i=j}
    toeplitz: S_ij = rho^|i-j|, |rho| < 1
    equicorr: S_ij = 1 - c * 1{i!=j}, 0 <= c < 1 (off-diagonal 1 - c)
    """

    kind: str = "identity"
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in COVARIANCE_KINDS:
            raise ConfigError(
                f"unknown covariance kind {self.kind!r}; expected one of {COVARIANCE_KINDS}"
            )
        if self.kind == "toeplitz" and not abs(self.param) < 1:
            raise ConfigError(f"toeplitz needs |rho| < 1, got {self.param}")
        if self.kind == "equicorr" and not 0 <= self.param < 1:
            raise ConfigError(f"equicorr needs 0 <= c < 1, got {self.param}")

    @classmethod
    def parse(cls, text: str) -> "CovarianceSpec":
        """'identity', 'toeplitz:0.8' or 'equicorr:0.8'."""
        kind, _, raw = text.strip().partition(":")
        kind = kind.strip().lower()
        if kind == "identity":
            if raw:
                raise ConfigError("identity covariance takes no parameter")
            return cls("identity")
        if not raw:
            raise ConfigError(f"{kind} covariance needs a parameter, e.g. {kind}:0.8")
        try:
            param = float(raw)
        except ValueError:
            raise ConfigError(f"invalid covariance parameter {raw!r}")
        return cls(kind, param)

    def __str__(self) -> str:
        return self.kind if self.kind == "identity" else f"{self.kind}:{self.param:g}"


def covariance_matrix(spec: CovarianceSpec, p: int) -> np.ndarray:
    if p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    if spec.kind == "identity":
        return np.eye(p)
    if spec.kind == "toeplitz":
        return toeplitz(spec.param ** np.arange(p))
    sigma = np.full((p, p), 1.0 - spec.param)
    np.fill_diagonal(sigma, 1.0)
    return sigma


@dataclass(frozen=True, eq=False)
class GroundTruthModel:
    """True change fractions alpha0 with one coefficient vector per segment."""

    alpha0: Tuple[float, ...]
    betas0: Tuple[np.ndarray, ...]
    cov: CovarianceSpec = CovarianceSpec()
    sigma: float = 1.0

    def __post_init__(self):
        alpha0 = tuple(float(a) for a in self.alpha0)
        betas = tuple(np.array(b, dtype=float).reshape(-1) for b in self.betas0)
        if len(alpha0) < 2 or alpha0[0] != 0.0 or alpha0[-1] != 1.0:
            raise ConfigError(f"alpha0 must run from 0 to 1, got {alpha0}")
        if any(b <= a for a, b in zip(alpha0[:-1], alpha0[1:])):
            raise ConfigError(f"alpha0 must be strictly increasing, got {alpha0}")
        if len(betas) != len(alpha0) - 1:
            raise ConfigError(
                f"{len(betas)} coefficient vectors for {len(alpha0) - 1} segments"
            )
        p = betas[0].shape[0]
        if p < 1 or any(b.shape[0] != p for b in betas):
            raise ConfigError("all coefficient vectors must share one length p >= 1")
        for j in range(1, len(betas)):
            if np.abs(betas[j] - betas[j - 1]).sum() == 0:
                raise ConfigError(f"segments {j} and {j + 1} share the same coefficients")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ConfigError(f"sigma must be finite and nonnegative, got {self.sigma}")
        for b in betas:
            b.setflags(write=False)
        object.__setattr__(self, "alpha0", alpha0)
        object.__setattr__(self, "betas0", betas)

    @property
    def p(self) -> int:
        return int(self.betas0[0].shape[0])

    @property
    def k0(self) -> int:
        return len(self.betas0)

    def breaks(self, n: int) -> Tuple[int, ...]:
        """Change rows on the grid of n; off-grid fractions round half up."""
        rows = tuple(int(np.floor(a * n + 0.5)) for a in self.alpha0)
        if any(b <= a for a, b in zip(rows[:-1], rows[1:])):
            raise ConfigError(f"n={n} too small to place change points {self.alpha0}")
        return rows

    def to_dict(self) -> dict:
        return {
            "alpha0": list(self.alpha0),
            "betas0": [sparse_vector(b) for b in self.betas0],
            "p": self.p,
            "covariance": str(self.cov),
            "sigma": self.sigma,
        }

    @classmethod
    def from_dict(cls, spec: dict, cov: CovarianceSpec = None, sigma: float = None) -> "GroundTruthModel":
        try:
            alpha0 = [float(a) for a in spec["alpha0"]]
            raw_betas = spec["betas0"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"model spec needs 'alpha0' and 'betas0': {exc}")
        p = spec.get("p")
        if p is None:
            p = max((int(i) for b in raw_betas for i in b), default=0)
        betas = [dense_vector(b, int(p)) for b in raw_betas]
        if cov is None:
            cov = CovarianceSpec.parse(spec.get("covariance", "identity"))
        if sigma is None:
            sigma = float(spec.get("sigma", 1.0))
        return cls(tuple(alpha0), tuple(betas), cov, sigma)


def sparse_vector(beta: np.ndarray) -> Dict[str, float]:
    """1-based index -> value for the nonzero entries."""
    return {str(int(i) + 1): float(beta[i]) for i in np.flatnonzero(beta)}


def dense_vector(entries: Dict, p: int) -> np.ndarray:
    beta = np.zeros(p)
    for key, value in entries.items():
        index = int(key)
        if not 1 <= index <= p:
            raise ConfigError(f"coefficient index {index} outside 1..{p}")
        beta[index - 1] = float(value)
    return beta


def _head_tail(p: int) -> Tuple[np.ndarray, np.ndarray]:
    if p < 2:
        raise ConfigError(f"the preset models need p >= 2, got {p}")
    head = np.zeros(p)
    head[:2] = 1.0
    tail = np.zeros(p)
    tail[-2:] = 1.0
    if p < 4:
        # head and tail overlap; keep them distinct
        tail = np.zeros(p)
        tail[-1] = 1.0
    return head, tail


def two_segment_model(
    p: int, cov: CovarianceSpec = CovarianceSpec(), sigma: float = 1.0
) -> GroundTruthModel:
    """alpha0 = (0, 0.5, 1), beta(1) = (1,1,0,...,0), beta(2) = (0,...,0,1,1)."""
    head, tail = _head_tail(p)
    return GroundTruthModel((0.0, 0.5, 1.0), (head, tail), cov, sigma)


def three_segment_model(
    p: int, cov: CovarianceSpec = CovarianceSpec(), sigma: float = 1.0
) -> GroundTruthModel:
    """alpha0 = (0, 0.3, 0.7, 1) with beta(3) = beta(1)."""
    head, tail = _head_tail(p)
    return GroundTruthModel((0.0, 0.3, 0.7, 1.0), (head, tail, head), cov, sigma)


PRESETS = {"two": two_segment_model, "three": three_segment_model}


def load_model(
    name_or_path: str, p: int, cov: CovarianceSpec, sigma: float
) -> GroundTruthModel:
    """A preset name ('two', 'three') or the path of a JSON model spec."""
    if name_or_path in PRESETS:
        return PRESETS[name_or_path](p, cov, sigma)
    try:
        with open(name_or_path, encoding="utf-8") as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read model spec {name_or_path!r}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model spec {name_or_path!r} is not valid JSON: {exc}")
    if not isinstance(spec, dict):
        raise ConfigError(f"model spec {name_or_path!r} must be a JSON object")
    spec = dict(spec)
    spec.setdefault("p", p)
    return GroundTruthModel.from_dict(spec, cov=cov, sigma=sigma)
