"""Directed polymers on the planar lattice in the intermediate-disorder regime.

Transfer-matrix partition functions on keyed random environments, exact
second-moment oracles, and the statistics used to check log-normal
fluctuations of the normalized partition function.
"""
__version__ = "0.1.0"

from .walk import coupling_constant, overlap_sum, return_probability  # noqa: E402
from .disorder import DisorderSpec, Family, cumulants  # noqa: E402
from .engine import (dyadic_decompose, log_partition_functions,  # noqa: E402
                     partition_function, sample_all, sample_batch, TimeWindow)
from .oracle import exact_second_moment, lambda_MN, moment_table  # noqa: E402

__all__ = [
    "__version__", "coupling_constant", "overlap_sum", "return_probability",
    "DisorderSpec", "Family", "cumulants", "dyadic_decompose",
    "log_partition_functions", "partition_function", "sample_all", "sample_batch",
    "TimeWindow", "exact_second_moment", "lambda_MN", "moment_table",
]
