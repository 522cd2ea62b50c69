"""Exception hierarchy shared by all modules.

Each error that the command line surfaces carries its process exit code.
"""


class UMPError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 1


class ConfigInvalid(UMPError):
    exit_code = 2


class PrecisionExceeded(UMPError):
    """The weight's dynamic range exceeds the precision mode's budget."""

    exit_code = 3

    def __init__(self, dynamic_range, budget, mode):
        self.dynamic_range = dynamic_range
        self.budget = budget
        self.mode = mode
        super().__init__(
            f"weight dynamic range {dynamic_range:.3e} exceeds the "
            f"{mode} budget {budget:.1e}"
        )


class NoConvergence(UMPError):
    exit_code = 4

    def __init__(self, max_iter, last_update, reason=None):
        self.max_iter = max_iter
        self.last_update = last_update
        msg = (f"no convergence after {max_iter} iterations "
               f"(last sup-update {last_update:.3e})")
        super().__init__(f"{msg}: {reason}" if reason else msg)


class IdentityFailure(UMPError):
    exit_code = 5


class NodeMismatch(UMPError, ValueError):
    """An evaluation point that must be a grid node is not one."""


class TooCloseToAxis(UMPError, ValueError):
    """|Im z| is below the resolution limit of the quadrature grid."""


class OrthogonalityLoss(UMPError):
    pass


class DimensionTooLarge(UMPError, ValueError):
    pass


class OutOfWindow(UMPError, ValueError):
    """Requested points fall outside the admissible window; a config problem."""

    exit_code = 2


class DegenerateFit(UMPError, ValueError):
    pass


class NumericalBreakdown(UMPError):
    pass


class TooFewSamples(UMPError, ValueError):
    pass
