"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: ConfigError -> 2, OSError -> 3,
partial sweep failures -> 4. Everything else is a genuine bug.
"""


class DomainError(ValueError):
    """An argument violates a mathematical precondition (non-finite input,
    symmetry hypothesis not satisfied, empty trajectory, ...)."""


class ConfigError(ValueError):
    """A run configuration is invalid or inconsistent."""


class NumericError(RuntimeError):
    """A numerical operation produced or encountered a non-finite /
    impossible value (overflow at a quadrature node, bracket failure, ...)."""


class RunawayRateError(RuntimeError):
    """The thinning loop exceeded its proposal budget, which indicates an
    unbounded effective jump rate rather than a long run."""
