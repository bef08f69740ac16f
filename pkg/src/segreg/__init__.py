"""
segreg: change points and per-segment sparse regression coefficients in
high-dimensional linear models.
"""

__version__ = "0.1.0"

from .core import Alpha, Dataset, DetectorConfig, Interval, SegmentedModel, validate_alpha
from .detection import bs_detect, dp_detect, dp_fixed_k
from .models import interval_fit, kkt_gap, lasso_solve
