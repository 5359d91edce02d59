"""
MMC - Error Types
Every failure raised by the library derives from MmcError
"""

from typing import Any, Dict, Optional


class MmcError(Exception):
    """Base error for the MMC library"""

    def __init__(self, detail: str = "MMC failure", context: Optional[Dict[str, Any]] = None):
        self.detail = detail
        self.context = dict(context or {})
        super().__init__(self._render())

    def with_context(self, **context: Any) -> 'MmcError':
        """Attach where the failure happened and refresh the message"""
        self.context.update(context)
        self.args = (self._render(),)
        return self

    def _render(self) -> str:
        if not self.context:
            return self.detail
        where = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{self.detail} ({where})"


class DimensionError(MmcError):
    """Shapes or counts are inconsistent"""
    def __init__(self, detail: str = "Dimension mismatch", context: Optional[Dict[str, Any]] = None):
        super().__init__(detail, context)


class NumericError(MmcError):
    """Non-finite values or a broken numerical invariant"""
    def __init__(self, detail: str = "Non-finite or invalid numeric input", context: Optional[Dict[str, Any]] = None):
        super().__init__(detail, context)


class DegenerateBandwidthError(NumericError):
    """Median pairwise distance is zero, no usable kernel bandwidth"""
    def __init__(self, detail: str = "All pairwise distances are zero", context: Optional[Dict[str, Any]] = None):
        super().__init__(detail, context)


class DisconnectedInstanceError(NumericError):
    """A kernel row sum is below the degree floor"""
    def __init__(self, row: int, row_sum: float, context: Optional[Dict[str, Any]] = None):
        self.row = row
        self.row_sum = row_sum
        super().__init__(f"Instance {row} is disconnected (row sum {row_sum:.3e})", context)


class DegenerateMappingError(NumericError):
    """Rank-deficient block cannot be orthogonalized"""
    def __init__(self, detail: str = "Rank-deficient mapping block", context: Optional[Dict[str, Any]] = None):
        super().__init__(detail, context)


class DegenerateConsensusError(NumericError):
    """Consensus Laplacian is identically zero"""
    def __init__(self, detail: str = "All view weights are zero", context: Optional[Dict[str, Any]] = None):
        super().__init__(detail, context)


class OneToOneViolationError(MmcError):
    """Known pairs map an instance more than once"""
    def __init__(self, detail: str = "Known mapping is not one-to-one", context: Optional[Dict[str, Any]] = None):
        super().__init__(detail, context)


class DataFormatError(MmcError):
    """Input file is missing or malformed"""
    def __init__(self, detail: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        context: Dict[str, Any] = {}
        if path is not None:
            context['path'] = path
        if line is not None:
            context['line'] = line
        super().__init__(detail, context)


class ConfigError(MmcError):
    """Invalid configuration or usage"""
    def __init__(self, detail: str = "Invalid configuration", context: Optional[Dict[str, Any]] = None):
        super().__init__(detail, context)


class FitError(MmcError):
    """A sub-operation failed during fit; context names where"""
    def __init__(self, detail: str, cause: MmcError, **where: Any):
        self.cause = cause
        super().__init__(f"{detail}: {cause}", {k: v for k, v in where.items() if v is not None})
