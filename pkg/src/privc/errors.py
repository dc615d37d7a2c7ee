"""Exception hierarchy shared by the parser, memory model, protocols and interpreters."""


class PrivcError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PrivcError):
    """Source text does not parse; carries 1-based line and column."""

    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class UnsupportedConstruct(PrivcError):
    """A C feature outside the supported subset (structs, multi-dim arrays, ...)."""


class UnboundVariable(PrivcError):
    pass


class RuntimeFault(PrivcError):
    """Interpreter fault on the legal (in-semantics) path.

    `kind` is a short machine-readable tag, e.g. "use-after-free".
    """

    kind = "generic"

    def __init__(self, message=""):
        super().__init__(f"{self.kind}: {message}" if message else self.kind)


class UseAfterFree(RuntimeFault):
    kind = "use-after-free"


class DoubleFree(RuntimeFault):
    kind = "double-free"


class NotFreeable(RuntimeFault):
    kind = "not-freeable"


class AddressBeyondMemory(RuntimeFault):
    kind = "address-beyond-memory"


class SizeMismatch(RuntimeFault):
    kind = "size-mismatch"


class MalformedPointer(RuntimeFault):
    kind = "malformed-pointer"


class MalformedShare(RuntimeFault):
    kind = "malformed-share"


class DivisionByZero(RuntimeFault):
    kind = "division-by-zero"


class LabelViolation(RuntimeFault):
    kind = "label-violation"


class PrivateLoopGuard(RuntimeFault):
    kind = "private-loop-guard"


class LoopBudgetExceeded(RuntimeFault):
    kind = "loop-budget-exceeded"


class MissingInput(RuntimeFault):
    kind = "missing-input"


class IndexOutOfParties(RuntimeFault):
    kind = "party-index-out-of-range"


class ShapeMismatch(RuntimeFault):
    kind = "shape-mismatch"


class NotEnoughShares(PrivcError):
    pass


class ObliviousFault(PrivcError):
    """A public side effect was attempted inside a private-conditioned branch."""
