"""Exception types shared across the presolve pipeline."""


class InstanceError(ValueError):
    """Raised when raw model data cannot form a valid instance."""


class MpsParseError(ValueError):
    """Raised on malformed MPS input; carries the offending line number."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class ProvenInfeasible(Exception):
    """The model has no feasible solution; ``reason`` says which stage proved it."""

    def __init__(self, reason):
        self.reason = reason
        super().__init__(reason)


class AggregationContradiction(Exception):
    """Two aggregations of the same variable disagree.

    Solving them simultaneously pins ``root`` to ``value``.  When ``value`` is
    not admissible for ``root`` the model is infeasible; otherwise the caller
    should fix ``root`` to ``value``.
    """

    def __init__(self, var, root, value):
        self.var = var
        self.root = root
        self.value = value
        super().__init__(f"aggregations of x{var} force x{root} = {value!r}")


class SearchSpaceTooLarge(ValueError):
    """The brute-force oracle refuses instances beyond its enumeration limit."""
