"""Exception types shared across the package."""


class InfeasibleError(RuntimeError):
    """No operating point satisfies the requested constraints."""


class ConsistencyError(RuntimeError):
    """Two internally redundant computations disagreed beyond tolerance."""
