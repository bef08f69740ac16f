import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional


@dataclass
class RunManifest:
    """What produced an output: command, settings, seeds, input digest, version and timings."""

    command: str
    config: Dict[str, object] = field(default_factory=dict)
    seeds: List[int] = field(default_factory=list)
    input_digest: Optional[str] = None
    version: str = ""
    timings: Dict[str, float] = field(default_factory=dict)

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start

    def to_dict(self) -> dict:
        return asdict(self)
