"""Exception taxonomy shared by the library and the CLI.

The CLI maps InputError to exit code 2 (validation) and ComputeError to
exit code 3 (computation); everything else is a bug.
"""


class FragilisError(Exception):
    """Base class for all errors raised by this package."""


class InputError(FragilisError, ValueError):
    """Invalid argument, malformed file, or violated precondition."""


class ComputeError(FragilisError, RuntimeError):
    """Inputs were valid but the requested computation is undefined."""


class CalibrationError(ComputeError):
    """A distribution tail cannot be calibrated to the requested mean."""


class DegenerateSampleError(ComputeError):
    """A statistic is undefined because the sample carries no variance."""
