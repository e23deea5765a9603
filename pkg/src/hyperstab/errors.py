"""Exception hierarchy shared by all modules."""


class HyperstabError(ValueError):
    """Base class for every error raised by the package."""


class PositivityViolation(HyperstabError):
    """A weight family would vanish or change sign on ``[-L, L]``.

    ``value`` is the quantity that failed to clear ``bound`` (for hyperbolic
    weights: ``upsilon`` against ``tanh(psi*L)**2``).
    """

    def __init__(self, value, bound, what="upsilon", relation="tanh^2(psi L)"):
        self.value = value
        self.bound = bound
        super().__init__(
            f"weights lose positivity: {what}={value!r} vs {relation}={bound!r}"
        )


class DomainViolation(HyperstabError):
    pass


class GridTooCoarse(HyperstabError):
    pass


class CFLViolation(HyperstabError):
    pass


class BufferUnderrun(HyperstabError):
    pass


class CompatibilityViolation(HyperstabError):
    def __init__(self, residuals):
        self.residuals = dict(residuals)
        parts = ", ".join(f"{k}={v:.3e}" for k, v in self.residuals.items())
        super().__init__(f"initial data incompatible with feedback: {parts}")


class NonpositiveEnergy(HyperstabError):
    pass


class PoleProximity(HyperstabError):
    pass


class DegenerateGain(HyperstabError):
    pass


class AssumptionViolation(HyperstabError):
    pass


class AdmissibilityViolation(HyperstabError):
    def __init__(self, message, log=None):
        self.log = log
        super().__init__(message)


class ParseError(HyperstabError):
    def __init__(self, line, message):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


class ValidationError(HyperstabError):
    def __init__(self, field, constraint):
        self.field = field
        self.constraint = constraint
        super().__init__(f"{field}: {constraint}")


class ConfigErrors(HyperstabError):
    """Every parse and validation problem found in one config text."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))
