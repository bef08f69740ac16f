"""Atomic output: every file is written to a temporary sibling and renamed into place."""

import json
import logging
import os
import tempfile

import numpy as np
import pandas as pd

from ..config import CSV_FLOAT_FORMAT
from ..core.model import Dataset
from .transforms import dataset_to_frame

logger = logging.getLogger(__name__)


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{os.path.basename(path)}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.info(f"Wrote {path}")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def to_json(payload) -> str:
    # float repr is the shortest string that round-trips exactly
    return json.dumps(payload, indent=2, default=_json_default, allow_nan=False) + "\n"


def write_json(path: str, payload) -> None:
    atomic_write_text(path, to_json(payload))


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def write_csv(path: str, frame: pd.DataFrame) -> None:
    atomic_write_text(path, frame_to_csv(frame))


def write_dataset_csv(path: str, data: Dataset) -> None:
    write_csv(path, dataset_to_frame(data))
