"""Exception and warning types shared across modules."""


class ModuliError(Exception):
    """Base class for numerical and contract failures."""


class InvariantViolation(ModuliError, ValueError):
    """A constructed value fails its numerical invariants."""


class AlcoveAmbiguity(UserWarning):
    """Eigenvalue phases do not pin down a single alcove representative."""


class PatternTooCoarse(ModuliError, ValueError):
    pass


class PathTooCloseToSingularity(ModuliError, ValueError):
    pass


class LoopEnclosesBothDivisors(ModuliError, ValueError):
    pass


class NoConvergence(ModuliError, RuntimeError):
    def __init__(self, message, *, starts=0, best_residual=float("inf")):
        super().__init__(message)
        self.starts = starts
        self.best_residual = best_residual


class RankAmbiguous(ModuliError, RuntimeError):
    def __init__(self, message, *, singular_values=None):
        super().__init__(message)
        self.singular_values = singular_values


class IllegalSymmetry(ModuliError, ValueError):
    pass


class NotNested(ModuliError, ValueError):
    pass


class Incompatible(ModuliError, ValueError):
    pass


class IllegalPattern(ModuliError, ValueError):
    pass


class AsymmetricStrata(ModuliError, ValueError):
    pass


class DegenerateTorsion(ModuliError, ValueError):
    pass
