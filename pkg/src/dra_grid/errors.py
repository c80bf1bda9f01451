"""Exception hierarchy shared by all dra_grid modules."""


class DraGridError(Exception):
    """Base class for every error raised by this package."""


class RangeError(DraGridError, ValueError):
    """A scalar field lies outside its documented range."""


class ShapeError(DraGridError, ValueError):
    """Array or list lengths disagree with the scenario's slot count."""


class SizeError(DraGridError, ValueError):
    """A size argument is too small for the requested construction."""


class InfeasibleDemand(DraGridError):
    """A PEV's energy demand cannot fit inside its charger/SoC limits."""


class CollapsedInterval(DraGridError):
    """A feasible interval has zero or negative width."""


class DomainError(DraGridError, ValueError):
    """A value was evaluated outside the open interval it must stay in."""


class StepCollapse(DraGridError):
    """No step halving kept the state feasible (barrier too stiff).

    Carries the offending PEV index and slot index (0-based).
    """

    def __init__(self, message: str, pev: int = -1, slot: int = -1):
        super().__init__(message)
        self.pev = pev
        self.slot = slot


class NoRoot(DraGridError):
    """Equilibrium bracketing failed in the brute-force solver."""


class MultiRoot(DraGridError):
    """The output function admits several interior roots at the solved level."""


class BoundViolation(DraGridError):
    """A state-of-charge trajectory left its allowed box."""


class ParseError(DraGridError, ValueError):
    """A scenario document is structurally malformed."""
