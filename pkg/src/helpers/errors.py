"""
Exception hierarchy shared by every package.

The CLI maps the three families to exit codes: config errors (1),
run errors (2) and format errors (3).
"""
from typing import Optional


class FreezeHelperError(Exception):
    """Base class for all errors raised by this project"""


class ConfigError(FreezeHelperError, ValueError):
    def __init__(self, message: str, key_path: Optional[str] = None):
        self.key_path = key_path
        if key_path:
            message = f"{key_path}: {message}"
        super().__init__(message)


class SpecificationError(ConfigError):
    """Network specification does not compose"""


class DatasetError(ConfigError):
    """Predictor dataset is empty or holds a single class"""


class ReportError(ConfigError):
    """Summaries given to the report are not comparable"""


class RunError(FreezeHelperError, RuntimeError):
    pass


class NumericOverflowError(RunError):
    def __init__(self, layer_index: int, message: Optional[str] = None):
        self.layer_index = layer_index
        super().__init__(message or f"non-finite activation at layer {layer_index}")


class DivergenceError(RunError):
    def __init__(self, iteration: int, loss: float):
        self.iteration = iteration
        self.loss = loss
        super().__init__(f"training diverged at iteration {iteration} (loss={loss})")


class FormatError(FreezeHelperError, ValueError):
    pass


class DimensionMismatchError(FormatError):
    pass


class ContractError(FreezeHelperError, AssertionError):
    """An internal contract between components was violated"""


class DegenerateInputError(FreezeHelperError, ValueError):
    pass


EXIT_CODES = {
    ConfigError: 1,
    RunError: 2,
    FormatError: 3,
}


def exit_code_for(error: BaseException) -> int:
    for error_type, code in EXIT_CODES.items():
        if isinstance(error, error_type):
            return code
    # OSError and anything unexpected count as run failures
    return 2
