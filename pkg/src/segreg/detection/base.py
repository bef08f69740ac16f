from abc import ABC, abstractmethod

from ..core.model import Dataset, DetectorConfig, SegmentedModel


class BaseDetector(ABC):
    name = ""

    def __init__(self, config: DetectorConfig):
        self.config = config

    @abstractmethod
    def detect(self, data: Dataset, cache=None) -> SegmentedModel:
        pass

    @abstractmethod
    def detect_fixed_k(self, data: Dataset, k: int, cache=None) -> SegmentedModel:
        pass

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.config!r})"
