from .models import (
    PRESETS,
    CovarianceSpec,
    GroundTruthModel,
    covariance_matrix,
    load_model,
    three_segment_model,
    two_segment_model,
)
from .sampler import oracle_beta_star, overlap_weights, sample_dataset
