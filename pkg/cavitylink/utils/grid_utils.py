"""Row-wise evaluation of parameter grids held in DataFrames."""
import logging

import pandas as pd
from pandarallel import pandarallel

logger = logging.getLogger(__name__)


def apply_rows(grid, row_function, workers=1):
    """Evaluate ``row_function`` on every row of ``grid`` and return the results as a DataFrame.

    With ``workers > 1`` rows are spread over processes with pandarallel; the result keeps the row
    order of ``grid`` either way.

    :param grid: pandas.DataFrame, one grid point per row
    :param row_function: callable(row) -> pandas.Series
    :param workers: number of worker processes
    :return: pandas.DataFrame indexed like ``grid``
    """
    if grid.empty:
        raise ValueError('Cannot evaluate an empty grid')
    if workers > 1:
        pandarallel.initialize(nb_workers=workers, progress_bar=False, verbose=0)
        logger.debug(f'Evaluating {len(grid)} grid points on {workers} workers')
        result = grid.parallel_apply(row_function, axis=1)
    else:
        result = grid.apply(row_function, axis=1)
    return pd.DataFrame(result)
