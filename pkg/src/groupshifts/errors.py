"""Exception hierarchy shared by the whole package.

Three failure classes matter operationally and map onto distinct CLI exit
codes: bad input (2), a computation cap that was exceeded (3), and an
internal invariant violation that should never happen (4).
"""


class GroupShiftError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GroupShiftError):
    """Invalid input: malformed spec, arity mismatch, non-homomorphic rule,
    incompatible alphabets, violated precondition."""


class CapacityError(GroupShiftError):
    """A configured cap was exceeded (materialization order, window search,
    iteration count).  Always diagnostic, never a wrong answer; the message
    names the cap and how to raise it."""


class InvariantError(GroupShiftError):
    """An internal invariant failed.  Any occurrence is a bug."""
