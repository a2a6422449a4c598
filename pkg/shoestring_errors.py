#!/usr/bin/env python3
"""
Shoestring error hierarchy
Every failure the library raises on purpose derives from ShoestringError
"""

from typing import Optional, Tuple


class ShoestringError(Exception):
    """Base class for all library errors"""


class DimensionMismatchError(ShoestringError, ValueError):
    """Operand shapes violate an operation's precondition"""


class InputError(ShoestringError, ValueError):
    """Invalid argument values (empty masks, bad generator parameters, ...)"""


class GraphInputError(InputError):
    """An edge references a node outside [0, n)"""

    def __init__(self, message: str, pair: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.pair = pair


class ConfigurationError(ShoestringError, ValueError):
    """Experiment or training configuration cannot be honoured"""


class SolverError(ShoestringError, RuntimeError):
    """Conjugate gradient did not reach the requested tolerance"""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DivergenceError(ShoestringError, RuntimeError):
    """Training produced a non-finite loss"""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class StaleCacheError(ShoestringError, RuntimeError):
    """A forward cache was used with parameters it was not computed from"""


class DataFormatError(ShoestringError, ValueError):
    """Dataset file content is unusable"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        super().__init__(message)
        self.line_number = line_number


class ParseError(DataFormatError):
    """A line could not be parsed"""


class FeatureWidthError(DataFormatError):
    """Feature rows do not all have the same width"""


class ExportError(ShoestringError, OSError):
    """Writing an output file failed"""

    def __init__(self, message: str, path: str):
        super().__init__(message)
        self.path = path


class DownloadError(ShoestringError, RuntimeError):
    """A dataset archive could not be fetched"""
