# Models package
from .lasso import LassoResult, SegmentFit, interval_fit, kkt_gap, lasso_solve
