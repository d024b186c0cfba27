"""Exception types raised across the package."""


class SvgpError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(SvgpError, ValueError):
    pass


class DimensionMismatch(SvgpError, ValueError):
    pass


class ShapeMismatch(DimensionMismatch):
    pass


class LengthMismatch(DimensionMismatch):
    pass


class NegativeVariance(SvgpError, ValueError):
    pass


class ParseError(SvgpError, ValueError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class MissingColumn(SvgpError, KeyError):
    pass


class InsufficientPositives(SvgpError, ValueError):
    def __init__(self, message: str, max_ratio: float = 0.0):
        self.max_ratio = max_ratio
        super().__init__(f"{message} (max achievable ratio {max_ratio:.6g})")


class SingleClass(SvgpError, ValueError):
    pass


class MTooLarge(SvgpError, ValueError):
    pass


class ModelVersionMismatch(SvgpError, ValueError):
    pass


class SplitMismatch(SvgpError, UserWarning):
    pass
