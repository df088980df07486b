"""Exception taxonomy for the locdiff package.

Every failure mode that callers are expected to branch on gets its own
class; anything not listed here is a plain bug and surfaces as the
underlying numpy/scipy exception.
"""


class LocdiffError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(LocdiffError):
    """Problem descriptor is malformed or violates a declared precondition."""


class AdmissibilityError(LocdiffError):
    """A coefficient or profile fails one of the admissibility inequalities."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"{len(self.violations)} admissibility violation(s): {lines}")


class RefineRequestError(LocdiffError):
    """Mesh breakpoints collide; a finer background mesh or larger eps is needed."""


class AssemblyError(LocdiffError):
    """Assembled operator failed a structural check (symmetry, definiteness)."""


class SingularOperatorError(LocdiffError):
    """Sparse factorization of the system matrix failed."""


class ContractViolation(LocdiffError):
    """An argument violates a documented precondition (wrong space, bad shape)."""


class AmbiguityError(LocdiffError):
    """Requested eigenvalue is not numerically simple, pairing is ill-defined."""


class CutSelectionError(LocdiffError):
    """No usable spectral gap at the requested cut index."""

    def __init__(self, m, gaps):
        self.m = m
        self.gaps = gaps
        super().__init__(
            f"no spectral gap at cut m={m}; nearby gaps {gaps}"
        )


class NonconvergenceError(LocdiffError):
    """Newton iteration hit the iteration cap; carries the last iterate."""

    def __init__(self, message, last_iterate=None, residuals=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residuals = residuals or []


class UniquenessViolationError(LocdiffError):
    """Continued equilibrium left the matching ball around its seed."""


class HyperbolicityError(LocdiffError):
    """An equilibrium fails the hyperbolicity margin; names the culprit."""


class StiffnessError(LocdiffError):
    """Time step rejection cascade exceeded the halving cap."""


class DenseCostGuardError(LocdiffError):
    """Dense oracle requested above its size guard."""


class BoxEscapeError(LocdiffError):
    """Backward slow flow left the graph interpolation box; enlarge rho_box."""


class NoContractionError(LocdiffError):
    """Lyapunov-Perron iteration is not contracting (kappa >= 1)."""

    def __init__(self, kappa_history):
        self.kappa_history = list(kappa_history)
        super().__init__(f"graph iteration not contracting: kappa history {kappa_history}")


class AlignmentError(LocdiffError):
    """Slow eigenbases of the two operators cannot be sign-aligned."""


class DynamicsAnomalyError(LocdiffError):
    """A sampled trajectory neither converges nor stays bounded."""


class StructuralChangeError(LocdiffError):
    """Equilibrium count changed across the eps sweep; rates are meaningless."""


class FitRejectedError(LocdiffError):
    """Too few positive rows to fit a rate; carries the excluded rows."""

    def __init__(self, message, excluded=None):
        super().__init__(message)
        self.excluded = excluded or []
