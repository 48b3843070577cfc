"""Exception and warning types shared by all modules."""


class ArtifactError(Exception):
    """Base class for library errors."""


class DomainError(ArtifactError, ValueError):
    """Argument outside the domain of a function or branch."""


class PoleError(DomainError):
    """Argument sits on a pole (e.g. log-gamma at a nonpositive integer)."""


class BranchCutError(DomainError):
    """Argument sits on a branch cut."""


class BranchPointError(DomainError):
    """Lambert W argument beyond -1/e: the curves never cross."""


class DegenerateError(ArtifactError):
    """A formula is singular at the requested parameters."""


class ConvergenceError(ArtifactError, RuntimeError):
    """An iteration or quadrature failed to converge."""


class BasinEscapeError(ConvergenceError):
    """Newton left the lower half-plane during pole refinement."""


class NoRootError(ArtifactError):
    """No sub-barrier root exists for the requested index."""


class EarlyTimeError(ArtifactError):
    """Late-time expansion requested before its validity bound."""


class StabilityError(ArtifactError):
    """Time step violates the configured stability margin."""


class ContainmentError(ArtifactError):
    """Probability reached the far wall of the simulation box."""


class WindowError(ArtifactError, ValueError):
    """Fit window is empty, too short, or outside the recorded range."""


class ConfigError(ArtifactError, ValueError):
    """Malformed configuration file."""


class NotFoundError(ArtifactError):
    """A crossover could not be located in the recorded data."""


class ThinBarrierWarning(UserWarning):
    """Thick-barrier formula used outside its regime (delta^2 > 0.01)."""
