"""Exception taxonomy shared across the package.

Three base classes map onto the CLI exit codes: bad user input (2),
mathematically invalid requests (3), and numerical solver trouble (4).
"""

from __future__ import annotations


class InputError(ValueError):
    """Malformed user input: bad shapes, bad JSON, bad parameters."""


class DomainError(ValueError):
    """Request is well-formed but mathematically inapplicable."""


class SolverError(RuntimeError):
    """A numerical routine failed to reach its advertised tolerance."""


# ---- numerics ----

class NotHermitian(InputError):
    pass


class NotPSD(InputError):
    pass


# ---- channel ----

class ShapeError(InputError):
    pass


class NotTracePreserving(InputError):
    pass


class InvalidParams(InputError):
    pass


class TooLarge(InputError):
    pass


# ---- sdp / qfi ----

class BetaInfeasible(DomainError):
    """No Kraus gauge makes beta vanish; doubles as an HNKS witness."""


class HnksViolated(DomainError):
    """Operation requires H inside the Kraus span but it is not."""


class HnksSatisfied(DomainError):
    """Operation requires H outside the Kraus span but it is inside."""


class NotDensityMatrix(InputError):
    pass


class NotTraceless(InputError):
    pass


class FeasibilityFailed(SolverError):
    """Stationarity feasibility could not be met on the top eigenspace."""


# ---- qec ----

class KLViolated(SolverError):
    """Knill-Laflamme residual of an assembled code exceeded tolerance."""


class NotFullRank(DomainError):
    pass


class DegenerateDenominator(DomainError):
    pass


class ZeroSignal(DomainError):
    pass


class ZeroQfi(DomainError):
    pass


class InvalidEta(InputError):
    pass


class PerfectCoherence(DomainError):
    pass


class NotDephasing(SolverError):
    """Logical channel leaked outside the dephasing block structure."""


class EpsilonExhausted(SolverError):
    """Perturbation strength halving ran out before the gap target held."""

    def __init__(self, message, achieved=None, gap=None):
        super().__init__(message)
        self.achieved = achieved
        self.gap = gap


# ---- dephasing ----

class SplitCheckFailed(SolverError):
    """Additive QFI split F = F_p + F_phi violated beyond tolerance."""


# ---- catalog ----

class TruncationError(SolverError):
    """Truncated Kraus family failed the completeness identity."""
