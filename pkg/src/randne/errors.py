"""Exception types shared across the package.

The CLI maps these onto exit codes: DataError -> 2, NumericError -> 3.
"""


class DataError(ValueError):
    """Malformed or inconsistent input data (files, ids, weights)."""


class NumericError(ArithmeticError):
    """Numerical failure, e.g. a rank-deficient projection matrix."""
