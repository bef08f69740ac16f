"""
Binary segmentation.

Each interval (u, v] is split at h(u, v), the minimiser of H(u, s) + H(s, v)
over s in {u} and the grid points of [u + delta, v - delta]; s = u means the
node stays terminal. The terminal intervals give the estimate.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..config import GRID_EPS
from ..core.model import Alpha, Dataset, DetectorConfig, SegmentedModel
from ..exceptions import InfeasibleError
from .base import BaseDetector
from .cache import FitCache, h_cost
from .dynamic import _prepare

logger = logging.getLogger(__name__)


@dataclass
class BsNode:
    lo: int
    hi: int
    depth: int = 0
    parent: Optional[int] = None
    children: Tuple[int, ...] = ()
    split: Optional[int] = None

    @property
    def terminal(self) -> bool:
        return not self.children


@dataclass
class BsTree:
    n: int
    nodes: List[BsNode] = field(default_factory=list)

    def add(self, lo: int, hi: int, parent: Optional[int] = None) -> int:
        depth = 0 if parent is None else self.nodes[parent].depth + 1
        self.nodes.append(BsNode(lo, hi, depth, parent))
        return len(self.nodes) - 1

    def split(self, index: int, s: int) -> Tuple[int, int]:
        node = self.nodes[index]
        if not node.terminal:
            raise ValueError(f"node {index} is already split")
        left = self.add(node.lo, s, index)
        right = self.add(s, node.hi, index)
        node.children = (left, right)
        node.split = s
        return left, right

    def terminals(self) -> List[BsNode]:
        return sorted((node for node in self.nodes if node.terminal), key=lambda nd: nd.lo)

    def breaks(self) -> Tuple[int, ...]:
        leaves = self.terminals()
        return tuple([leaves[0].lo] + [leaf.hi for leaf in leaves])


def split_margin(delta: float, n: int) -> int:
    """ceil(delta * n): rows a split must keep on either side."""
    return int(math.ceil(delta * n - GRID_EPS))


def _split_range(lo: int, hi: int, margin: int) -> range:
    return range(lo + margin, hi - margin + 1)


def best_split(
    data: Dataset, lo: int, hi: int, cfg: DetectorConfig, cache: Optional[FitCache] = None
) -> int:
    """
    h(u, v) in rows. Smallest s wins ties; "no split" (returning lo) only
    when it is strictly better than every admissible split.
    """
    if hi - lo < 1:
        raise ValueError(f"empty interval ({lo}, {hi}]")
    cache = _prepare(data, cfg, cache)
    splits = _split_range(lo, hi, split_margin(cfg.delta, data.n))
    if len(splits) == 0:
        return lo
    cache.prefetch([(lo, hi)] + [pair for s in splits for pair in ((lo, s), (s, hi))])
    costs = np.array(
        [h_cost(data, lo, s, cfg, cache) + h_cost(data, s, hi, cfg, cache) for s in splits]
    )
    best = int(np.argmin(costs))
    no_split = h_cost(data, lo, lo, cfg, cache) + h_cost(data, lo, hi, cfg, cache)
    if no_split < costs[best]:
        return lo
    return splits[best]


def grow_tree(data: Dataset, cfg: DetectorConfig, cache: FitCache) -> BsTree:
    """Breadth-first expansion until no terminal node splits."""
    tree = BsTree(data.n)
    queue = deque([tree.add(0, data.n)])
    while queue:
        index = queue.popleft()
        node = tree.nodes[index]
        s = best_split(data, node.lo, node.hi, cfg, cache)
        if s > node.lo:
            queue.extend(tree.split(index, s))
    return tree


def model_from_breaks(
    data: Dataset,
    breaks: Tuple[int, ...],
    cfg: DetectorConfig,
    cache: FitCache,
    method: str,
    extras: Optional[dict] = None,
) -> SegmentedModel:
    # G(alpha) accumulated left to right, matching the F recursion
    alpha = Alpha(breaks, data.n)
    fits = []
    objective = 0.0
    for iv in alpha.intervals():
        fits.append(cache.fit(iv.lo, iv.hi))
        objective += h_cost(data, iv.lo, iv.hi, cfg, cache)
    return SegmentedModel(
        alpha=alpha,
        fits=tuple(fits),
        objective=objective,
        gamma=cfg.gamma,
        method=method,
        extras=extras or {},
    )


def bs_detect(
    data: Dataset, cfg: DetectorConfig, cache: Optional[FitCache] = None
) -> SegmentedModel:
    cache = _prepare(data, cfg, cache)
    cfg.min_rows(data.n)
    logger.info(f"bs_detect: n={data.n}, p={data.p}, lambda={cfg.lam:.4g}")
    tree = grow_tree(data, cfg, cache)
    model = model_from_breaks(
        data, tree.breaks(), cfg, cache, "bs", {"tree_size": len(tree.nodes)}
    )
    logger.info(
        f"bs_detect: k_hat={model.k}, objective={model.objective:.6g}, cache={cache.stats}"
    )
    return model


def _best_gain(
    data: Dataset, node: BsNode, margin: int, cfg: DetectorConfig, cache: FitCache
) -> Tuple[Optional[int], float]:
    splits = _split_range(node.lo, node.hi, margin)
    if len(splits) == 0:
        return None, -np.inf
    cache.prefetch(
        [(node.lo, node.hi)] + [pair for s in splits for pair in ((node.lo, s), (s, node.hi))]
    )
    losses = np.array(
        [cache.fit(node.lo, s).loss + cache.fit(s, node.hi).loss for s in splits]
    )
    best = int(np.argmin(losses))
    return splits[best], cache.fit(node.lo, node.hi).loss - losses[best]


def bs_fixed_k(
    data: Dataset, cfg: DetectorConfig, k: int, cache: Optional[FitCache] = None
) -> SegmentedModel:
    """
    Greedy tree with exactly k terminal nodes: repeatedly split the leaf whose
    best admissible split lowers the unpenalised loss the most (leftmost leaf
    on ties).
    """
    cache = _prepare(data, cfg, cache)
    n = data.n
    cfg.min_rows(n)
    if k < 1 or k > cfg.kmax(n):
        raise InfeasibleError(f"k={k} segments infeasible for n={n}, delta={cfg.delta}")
    margin = split_margin(cfg.delta, n)
    tree = BsTree(n)
    tree.add(0, n)
    gains = {}
    while len(tree.terminals()) < k:
        choice, choice_gain = None, -np.inf
        for index in sorted(
            (i for i, nd in enumerate(tree.nodes) if nd.terminal),
            key=lambda i: tree.nodes[i].lo,
        ):
            if index not in gains:
                gains[index] = _best_gain(data, tree.nodes[index], margin, cfg, cache)
            s, gain = gains[index]
            if s is not None and gain > choice_gain:
                choice, choice_gain = index, gain
        if choice is None:
            raise InfeasibleError(
                f"binary segmentation cannot reach k={k} segments with delta={cfg.delta}"
            )
        tree.split(choice, gains[choice][0])
    return model_from_breaks(data, tree.breaks(), cfg, cache, "bs")


class BinarySegmentationDetector(BaseDetector):
    """Greedy approximation; G(alpha_bs) >= G(alpha_dp)."""

    name = "bs"

    def detect(self, data: Dataset, cache: Optional[FitCache] = None) -> SegmentedModel:
        return bs_detect(data, self.config, cache)

    def detect_fixed_k(
        self, data: Dataset, k: int, cache: Optional[FitCache] = None
    ) -> SegmentedModel:
        return bs_fixed_k(data, self.config, k, cache)
