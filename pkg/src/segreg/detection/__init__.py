from .base import BaseDetector
from .binseg import BinarySegmentationDetector, BsTree, best_split, bs_detect, bs_fixed_k
from .cache import FitCache, h_cost
from .dynamic import DynamicProgrammingDetector, dp_detect, dp_fixed_k, dp_path

DETECTORS = {
    DynamicProgrammingDetector.name: DynamicProgrammingDetector,
    BinarySegmentationDetector.name: BinarySegmentationDetector,
}
