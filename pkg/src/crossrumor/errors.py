"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError (and
subclasses) -> 2, InvariantError -> 3.
"""


class ShapeError(ValueError):
    """Operand shapes do not conform; the message names both shapes."""


class DegenerateInputError(ValueError):
    """Input is structurally valid but numerically unusable (e.g. zero norm)."""


class DeterminismError(RuntimeError):
    """A closure that must be deterministic returned different values."""


class ConfigError(RuntimeError):
    """Bad or incomplete run configuration (missing files, invalid settings)."""


class DataError(RuntimeError):
    """Dataset violates a precondition (missing labels, single class, ...)."""


class CorpusLoadError(DataError):
    """Corpus files failed validation; carries the per-row error report."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        preview = "; ".join(self.problems[:5])
        more = "" if len(self.problems) <= 5 else f" (+{len(self.problems) - 5} more)"
        super().__init__(f"{len(self.problems)} invalid corpus rows: {preview}{more}")


class InvariantError(RuntimeError):
    """An internal invariant was violated; indicates a bug, not bad input."""
