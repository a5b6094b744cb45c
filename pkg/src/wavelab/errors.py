"""Exception hierarchy shared by all wavelab modules.

Each error carries the CLI exit code it maps to: 2 for domain errors
(the requested wave does not exist or violates a hypothesis), 3 for
numerical non-convergence.
"""


class WaveLabError(Exception):
    exit_code = 2

    @property
    def kind(self):
        return type(self).__name__


class DomainError(WaveLabError):
    exit_code = 2


class ConvergenceError(WaveLabError):
    exit_code = 3


class NoOrbit(DomainError):
    pass


class DegenerateTurningPoint(DomainError):
    pass


class NoBracket(DomainError):
    pass


class StencilCrossesSeparatrix(DomainError):
    pass


class DegenerateJacobian(DomainError):
    pass


class SingularSystem(DomainError):
    pass


class QuadratureNoConvergence(ConvergenceError):
    pass


class ClosureFailure(ConvergenceError):
    pass


class IntegrationFailure(ConvergenceError):
    pass


class ContourNotResolved(ConvergenceError):
    pass


class NoStabilization(ConvergenceError):
    pass


class NewtonDivergence(ConvergenceError):
    pass
