"""Exception hierarchy shared by all alw modules."""


class AlwError(Exception):
    """Base class for all tool errors."""


class InvalidParameterError(AlwError):
    """A numeric or structural parameter is outside its allowed range."""


class StructureMismatchError(AlwError):
    """An element was used with a structure it does not belong to."""


class SpecError(AlwError):
    """An input specification (colour rules, rainbow spec, JSON file) is ill-formed."""


class PreconditionError(AlwError):
    """A documented operation precondition failed; carries a counterexample."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class BudgetExceededError(AlwError):
    """A configured enumeration or search budget was exhausted."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = dict(stats or {})
