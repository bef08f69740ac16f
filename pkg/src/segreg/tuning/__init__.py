from .cv import CvResult, cv_grid, ordered_split, predict_rss
from .metrics import EvalReport, evaluate, k_hat_proportions, tuning_rule
