"""Small statistical helpers for comparing paired metric samples."""

from __future__ import annotations

import numpy as np
from scipy import stats as sp_stats

from ..errors import InsufficientDataError, ShapeMismatchError, UndefinedStatisticError
from ..validation import as_float_array


def paired_t_test(a, b) -> tuple[float, float, int]:
    """Two-sided paired t-test on matched samples.

    Parameters
    ----------
    a, b : array-like
        Equal-length samples measured on the same units.

    Returns
    -------
    (t, p, dof)
        The t statistic of the mean difference, its two-sided p-value
        under the t distribution with ``len(a) - 1`` degrees of freedom,
        and that degree-of-freedom count.
    """
    a = as_float_array(a, "a")
    b = as_float_array(b, "b")
    if a.size != b.size:
        raise ShapeMismatchError(f"paired samples differ in length: {a.size} vs {b.size}")
    if a.size < 2:
        raise InsufficientDataError("paired t-test needs at least 2 pairs")
    d = a - b
    n = d.size
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise UndefinedStatisticError(
            "paired differences have zero variance; t statistic is undefined"
        )
    t = float(d.mean() / (sd / np.sqrt(n)))
    p = float(2.0 * sp_stats.t.sf(abs(t), n - 1))
    return t, p, n - 1
