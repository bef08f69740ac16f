import pandas as pd

from ..core.model import Dataset
from ..exceptions import DataFormatError


def order_rows(df: pd.DataFrame, column: str) -> pd.DataFrame:
    """Stable sort by `column`, then drop it (ties keep their file order)."""
    if column not in df.columns:
        raise DataFormatError(f"--order-by column `{column}` not in the input")
    if column == df.columns[0]:
        raise DataFormatError("cannot order by the response column")
    ordered = df.sort_values(column, kind="mergesort")
    return ordered.drop(columns=[column]).reset_index(drop=True)


def center_dataset(data: Dataset) -> Dataset:
    """Subtract column means from the response and every covariate."""
    return Dataset(
        y=data.y - data.y.mean(), x=data.x - data.x.mean(axis=0), columns=data.columns
    )


def dataset_to_frame(data: Dataset) -> pd.DataFrame:
    frame = pd.DataFrame(data.x, columns=list(data.columns))
    frame.insert(0, "y", data.y)
    return frame
