"""Exception hierarchy shared by all fafscreen modules.

The CLI maps these onto exit codes: data problems exit 3, solver
non-convergence exits 4 (usage errors are argparse's 2).
"""

from __future__ import annotations


class FafScreenError(Exception):
    """Base class for all errors raised by this package."""


class DataError(FafScreenError):
    """Invalid input data: bad files, schema violations, infeasible requests."""


class ImageFormatError(DataError):
    """Malformed, truncated, or unsupported image bytes."""


class SchemaError(DataError):
    """A structured document (CSV, JSON model file, manifest) violates its schema."""


class EmptySectorError(DataError):
    """A grid sector contains no in-bounds pixels; the grid is misplaced or too small."""

    def __init__(self, sector) -> None:
        self.sector = sector
        super().__init__(f"sector {getattr(sector, 'name', sector)} contains no in-bounds pixels")


class DegenerateModelError(DataError):
    """The trained boundary has zero weight norm; distances are undefined."""


class ConvergenceError(FafScreenError):
    """Solver failed to reach the KKT tolerance; carries the best model found."""

    def __init__(self, message: str, model=None) -> None:
        self.model = model
        super().__init__(message)
