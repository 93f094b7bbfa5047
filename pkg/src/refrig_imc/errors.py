"""Exception types raised across the toolkit."""


class RefrigImcError(Exception):
    """Base class for all toolkit errors."""


class IllConditionedGain(RefrigImcError):
    """Steady-state gain cannot be trusted (denominator too close to zero)."""

    def __init__(self, message, channel=None):
        if channel is not None:
            message = f"{channel}: {message}"
        super().__init__(message)
        self.channel = channel


class DegenerateDenominator(RefrigImcError):
    pass


class SingularGainMatrix(RefrigImcError):
    pass


class AmbiguousPairing(RefrigImcError):
    pass


class NotSettled(RefrigImcError):
    pass


class DegenerateFit(RefrigImcError):
    pass


class NonMinimumPhase(RefrigImcError):
    pass


class ImproperResult(RefrigImcError):
    pass


class ZeroGainPlant(RefrigImcError):
    pass


class WindowOutOfRange(RefrigImcError):
    pass


class ZeroBaselineIndex(RefrigImcError):
    def __init__(self, index_name):
        super().__init__(f"baseline index {index_name} is zero; ratio undefined")
        self.index_name = index_name


class AllUnstable(RefrigImcError):
    pass


class ScenarioError(RefrigImcError):
    """Invalid scenario definition."""


class ConfigError(RefrigImcError):
    pass
