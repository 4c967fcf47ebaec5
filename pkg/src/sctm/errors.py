"""Exception types shared across the package."""


class NetworkValidationError(ValueError):
    """Raised when a network violates structural invariants."""

    def __init__(self, report):
        self.report = report
        msgs = "; ".join(i.message for i in report.errors)
        super().__init__(f"invalid network: {msgs}")


class MemoryBudgetExceeded(MemoryError):
    """The DP tables would not fit in the configured memory budget."""

    def __init__(self, estimated_bytes, budget_bytes, worst_case_entries=None):
        self.estimated_bytes = int(estimated_bytes)
        self.budget_bytes = int(budget_bytes)
        self.worst_case_entries = worst_case_entries
        super().__init__(
            f"estimated DP memory {self.estimated_bytes} bytes exceeds budget "
            f"{self.budget_bytes} bytes"
        )


class InternalConsistencyError(RuntimeError):
    """A returned seed set failed post-hoc verification by simulation."""


class CapExceeded(Exception):
    """Brute force found no activating seed set within the size cap."""

    def __init__(self, size_cap):
        self.size_cap = size_cap
        super().__init__(f"no fully activating seed set of size <= {size_cap}")


class PaceFormatError(ValueError):
    """Malformed PACE .gr / .td input."""


class TruncatedError(RuntimeError):
    """Path enumeration hit its cap and truncation was not allowed."""
