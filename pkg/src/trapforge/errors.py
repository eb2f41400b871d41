"""Exception hierarchy. CLI exit codes are attached to the classes."""


class TrapForgeError(Exception):
    exit_code = 5


class ConfigError(TrapForgeError, ValueError):
    exit_code = 2


class InvalidPoint(TrapForgeError, ValueError):
    """Evaluation requested on or below the electrode plane."""


class NoTrappingPoint(TrapForgeError):
    exit_code = 3


class NoEscapePoint(TrapForgeError):
    pass


class DegenerateModes(TrapForgeError):
    pass


class IllConditioned(TrapForgeError):
    pass


class NonConfining(TrapForgeError):
    pass


class IonLost(TrapForgeError):
    exit_code = 4

    def __init__(self, message, t=None, voltages=None):
        super().__init__(message)
        self.t = t
        self.voltages = voltages


class StepFailure(TrapForgeError):
    pass


class WindowTooShort(TrapForgeError):
    pass


class NoCrossing(TrapForgeError):
    pass
