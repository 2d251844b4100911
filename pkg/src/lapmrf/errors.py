"""Exception types raised across the package."""


class MRFError(Exception):
    """Base class for all errors raised by lapmrf."""


class DimensionError(MRFError, ValueError):
    """A configuration or array does not match the model size."""


class InvalidCliqueError(MRFError, ValueError):
    """A clique is empty, unsorted, not complete, or not maximal where required."""


class InvalidDimensionError(MRFError, ValueError):
    """A model builder received a non-positive size parameter."""


class TooLargeError(MRFError):
    """Brute-force enumeration was requested above the configured variable cap."""


class WidthExceededError(MRFError):
    """Variable elimination produced a bucket table above the memory cap."""

    def __init__(self, bucket_vars, cap):
        self.bucket_vars = tuple(bucket_vars)
        self.cap = cap
        super().__init__(
            f"elimination bucket over {len(self.bucket_vars)} variables "
            f"({2 ** len(self.bucket_vars)} entries) exceeds cap of {cap} entries"
        )

    def __reduce__(self):
        return (type(self), (self.bucket_vars, self.cap))


class PositivityError(MRFError, ValueError):
    """A probability table contains zero or negative entries."""


class NumericalError(MRFError, FloatingPointError):
    """An objective returned a non-finite value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point

    def __reduce__(self):
        return (type(self), (self.args[0], self.point))


class EmptyDatasetError(MRFError, ValueError):
    """Estimation was requested on a dataset with no samples."""


class SubproblemError(MRFError):
    """A LAP sub-problem for one maximal clique could not be solved."""

    def __init__(self, clique, reason):
        self.clique = tuple(clique)
        self.reason = reason
        super().__init__(f"LAP sub-problem for clique {self.clique} failed: {reason}")

    def __reduce__(self):
        return (type(self), (self.clique, self.reason))
