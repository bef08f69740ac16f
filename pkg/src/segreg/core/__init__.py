from .model import (
    Alpha,
    Dataset,
    DetectorConfig,
    Interval,
    SegmentedModel,
    max_segments,
    min_segment_rows,
    segment_loss,
    to_row,
    validate_alpha,
)
