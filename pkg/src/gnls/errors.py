"""Exception hierarchy shared by the gnls modules."""


class GnlsError(Exception):
    """Base class for all library errors."""


class InvalidNonlinearity(GnlsError, ValueError):
    """Coefficients do not describe an admissible nonlinearity."""


class NotFound(GnlsError):
    """No admissible root xi_c exists for the requested speed."""


class Degenerate(GnlsError):
    """A root exists but N_c' vanishes there (double-root suspicion)."""


class QuadratureFailure(GnlsError):
    """Adaptive quadrature could not reach the requested tolerance."""


class DomainError(GnlsError):
    """N_c is nonnegative strictly inside (0, xi_c)."""


class DecayError(GnlsError):
    """The profile has not decayed below threshold at the grid edge."""


class PhaseSingularity(GnlsError):
    """|v| underflows for a non-vanishing wave."""


class InsufficientData(GnlsError):
    """A branch does not cover enough momenta for the requested estimate."""


class NoGap(GnlsError):
    """The branch has no speed gap to fit an asymptote to."""


class InvalidN(GnlsError):
    """Test-sequence index too small for a non-vanishing construction."""


class KdvDegenerate(GnlsError):
    """k = 0: the KdV scaling is degenerate."""


class SeamError(GnlsError):
    """The periodic field is discontinuous at the domain seam."""


class WindowError(GnlsError):
    """The requested window does not fit inside the tracked half-domain."""


class BoundaryError(GnlsError):
    """|psi| at the evaluation boundary is too far from 1."""
