"""Exception hierarchy.

Every error carries a ``category`` used by the command line runner to pick an
exit code: ``bad_input`` (2), ``budget`` (3), ``internal`` (4).
"""


class LabError(Exception):
    category = "bad_input"


class BadInput(LabError):
    category = "bad_input"


class NotAPermutation(BadInput):
    pass


class Disconnected(BadInput):
    pass


class NotReduced(BadInput):
    pass


class Inconclusive(BadInput):
    pass


class NotInVeechGroup(BadInput):
    pass


class CutoffTooLarge(BadInput):
    pass


class RadiusTooLarge(BadInput):
    pass


class EmptyShell(BadInput):
    pass


class InsufficientGrowth(BadInput):
    pass


class BudgetExceeded(LabError):
    category = "budget"


class SupportExplosion(BudgetExceeded):
    pass


class InternalInconsistency(LabError):
    category = "internal"


EXIT_CODES = {"bad_input": 2, "budget": 3, "internal": 4}
