"""Exception types shared across the runtime."""


class CompositionError(Exception):
    """A topology violates a structural rule (raised while building)."""


class CausalityCycleError(CompositionError):
    """The reaction precedence graph contains a cycle.

    ``cycle`` lists the reactions forming one offending cycle; consecutive
    entries are graph edges and the first entry is repeated at the end.
    """

    def __init__(self, cycle):
        self.cycle = list(cycle)
        names = " -> ".join(r.label() for r in self.cycle)
        super().__init__(f"causality cycle: {names}")


class ContractViolationError(RuntimeError):
    """A reaction body used a port or action it did not declare."""


class ExecutionError(RuntimeError):
    """A reaction body raised; execution was aborted.

    The offending reaction's label is part of the message and the original
    exception is chained as ``__cause__``.
    """


class ShutdownError(RuntimeError):
    """The environment has terminated and can no longer accept events."""
