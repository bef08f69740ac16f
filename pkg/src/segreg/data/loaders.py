import hashlib
import logging
from typing import Optional

import numpy as np
import pandas as pd

from ..core.model import Dataset
from ..exceptions import DataFormatError
from .transforms import center_dataset, order_rows

logger = logging.getLogger(__name__)

RESPONSE_COLUMN = "y"


def file_digest(file_path: str) -> str:
    """sha256 of the raw file bytes."""
    digest = hashlib.sha256()
    with open(file_path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return f"sha256:{digest.hexdigest()}"


def frame_to_dataset(df: pd.DataFrame) -> Dataset:
    """First column `y`, every other column a covariate, row order preserved."""
    if df.shape[1] < 2:
        raise DataFormatError("need a `y` column and at least one covariate column")
    if str(df.columns[0]).strip() != RESPONSE_COLUMN:
        raise DataFormatError(
            f"first column must be `{RESPONSE_COLUMN}`, got `{df.columns[0]}`"
        )
    numeric = df.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna() & ~df.isna()
    if bad.to_numpy().any():
        row, col = np.argwhere(bad.to_numpy())[0]
        raise DataFormatError(
            f"non-numeric value {df.iat[row, col]!r} at data row {row + 1}, column `{df.columns[col]}`"
        )
    if numeric.isna().to_numpy().any():
        row, col = np.argwhere(numeric.isna().to_numpy())[0]
        raise DataFormatError(f"missing value at data row {row + 1}, column `{df.columns[col]}`")
    values = numeric.to_numpy(dtype=float)
    return Dataset(
        y=values[:, 0], x=values[:, 1:], columns=tuple(str(c) for c in df.columns[1:])
    )


def load_data_from_csv(
    file_path: str, order_by: Optional[str] = None, center: bool = False
) -> Dataset:
    """
    Read a dataset CSV: header row, `y` first, covariates after, '.' decimals.

    order_by names a column to sort rows by (stable) before it is dropped;
    center subtracts column means from y and every covariate.
    """
    try:
        df = pd.read_csv(
            file_path, encoding="utf-8", skipinitialspace=True, float_precision="round_trip"
        )
    except FileNotFoundError:
        raise DataFormatError(f"input file not found: {file_path}")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"cannot parse {file_path}: {exc}")
    if order_by is not None:
        df = order_rows(df, order_by)
    data = frame_to_dataset(df)
    if center:
        data = center_dataset(data)
    logger.info(f"Loaded {file_path}: n={data.n}, p={data.p}")
    return data


def load_data(source: str, **kwargs) -> Dataset:
    """Load a dataset from a CSV file or from a simulation model."""
    if source == "csv":
        return load_data_from_csv(
            kwargs["file_path"], kwargs.get("order_by"), kwargs.get("center", False)
        )
    elif source == "simulation":
        from ..simulation.sampler import sample_dataset

        return sample_dataset(kwargs["truth"], kwargs["n"], kwargs["seed"])
    else:
        raise ValueError(f"Unsupported data source {source!r}")
