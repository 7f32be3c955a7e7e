"""Exception hierarchy shared by all dgrkit modules."""


class DgrkitError(Exception):
    """Base class for every error raised by dgrkit."""


class InvalidInput(DgrkitError, ValueError):
    """Malformed, non-finite or dimensionally inconsistent arguments."""


class NotSchurStable(DgrkitError):
    pass


class DareDiverged(DgrkitError):
    pass


class DefectiveMatrix(DgrkitError):
    """Eigenvector matrix too ill-conditioned to treat A as diagonalizable."""


class InvalidWitness(DgrkitError, ValueError):
    pass


class InvalidOrder(DgrkitError, ValueError):
    """Instability order outside 1..n."""


class BoundNotApplicable(DgrkitError):
    pass


class DegenerateStart(DgrkitError):
    pass


class InsufficientData(DgrkitError):
    pass
