#
# For licensing see accompanying LICENSE.md file.
#
from typing import Optional


class NearFieldKitError(Exception):
    """ Base class for errors the experiment harness maps to exit codes
    """
    exit_code: int = 1


class ConfigError(NearFieldKitError, ValueError):
    """ Invalid experiment configuration, `field` holds the dotted path of the offending key
    """
    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None) -> None:
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class CapacityError(NearFieldKitError, MemoryError):
    exit_code = 3


class UnsatisfiableConstraintError(NearFieldKitError, ValueError):
    exit_code = 4


class RankDeficiencyError(NearFieldKitError, ArithmeticError):
    pass
