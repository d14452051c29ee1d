"""Exception types shared across the toolkit.

Every error condition named by an operation has its own class so callers
(and the command line runner) can map failures to exit codes without
string matching.
"""


class HardyCritError(Exception):
    """Base class for all toolkit errors."""


class InvalidRange(HardyCritError, ValueError):
    pass


class DimensionTooSmall(HardyCritError, ValueError):
    pass


class NonFiniteIntegrand(HardyCritError, ArithmeticError):
    pass


class CouplingOutOfRange(HardyCritError, ValueError):
    pass


class NonpositiveScale(HardyCritError, ValueError):
    pass


class SingularEvaluation(HardyCritError, ValueError):
    pass


class InvalidParams(HardyCritError, ValueError):
    pass


class ThetaOutOfRange(InvalidParams):
    pass


class ZeroField(HardyCritError, ValueError):
    pass


class NonpositiveNumerator(HardyCritError, ValueError):
    pass


class NonpositiveDenominator(HardyCritError, ValueError):
    pass


class NonpositiveForm(HardyCritError, ValueError):
    pass


class LinearSolveFailure(HardyCritError, ArithmeticError):
    pass


class HypothesisViolated(HardyCritError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotRadial(HardyCritError, ValueError):
    pass


class InfeasibleInit(HardyCritError, ValueError):
    pass


class TrustRegionViolation(HardyCritError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NondifferentiablePreset(HardyCritError, ValueError):
    pass


class ConfigError(HardyCritError, ValueError):
    pass
