"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: usage errors exit 2 (argparse),
format/dimension problems exit 3, capacity and fingerprint refusals exit 4,
numeric failures exit 5.
"""


class VidstegError(Exception):
    """Base class for all package errors."""


class DimensionError(VidstegError):
    """Array shapes are inconsistent with the operation's contract."""


class ContractError(VidstegError):
    """A precondition on arguments or call order was violated."""


class CapacityError(VidstegError):
    """More secret videos than the model can carry."""


class FormatError(VidstegError):
    """A file or byte stream does not match its documented layout."""


class NumericError(VidstegError):
    """Non-finite values appeared where finite math was required."""
