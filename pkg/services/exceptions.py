"""
Exception hierarchy shared by the parser, engine and experiment services
"""

from typing import Iterable, Optional


class MemsimError(Exception):
    """Base class for every simulator error"""


class DeviceError(MemsimError):
    pass


class DeviceParameterError(DeviceError):
    pass


class StateDomainError(DeviceError):
    pass


class StateStepConvergenceError(DeviceError):
    """Scalar implicit state update did not converge; the caller should cut dt"""


class NetlistError(MemsimError):
    """Error tied to a location in netlist text"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(self._format())

    def _format(self) -> str:
        if self.line is None:
            return self.message
        if self.column is None:
            return f"line {self.line}: {self.message}"
        return f"line {self.line}, column {self.column}: {self.message}"


class NetlistParseError(NetlistError):
    pass


class ExpressionError(NetlistError):
    pass


class FlattenError(NetlistError):
    pass


class EvaluationError(MemsimError):
    pass


class SimulationError(MemsimError):
    pass


class AssemblyError(SimulationError):
    pass


class SingularMatrixError(SimulationError):
    pass


class NewtonConvergenceError(SimulationError):

    def __init__(self, message: str, iterations: int = 0, worst: Optional[str] = None):
        self.iterations = iterations
        self.worst = worst
        super().__init__(message)


class DcConvergenceError(SimulationError):
    pass


class TimestepTooSmallError(SimulationError):

    def __init__(self, message: str, time: float):
        self.time = time
        super().__init__(message)


class NonFiniteSolutionError(SimulationError):
    pass


class UnknownSignalError(SimulationError):

    def __init__(self, selector: str, available: Iterable[str]):
        self.selector = selector
        self.available = sorted(available)
        super().__init__(
            f"unknown signal '{selector}'; available: {', '.join(self.available)}"
        )


class ConfigurationError(MemsimError):
    pass


class ExperimentError(MemsimError):
    pass


class OutputExistsError(MemsimError):
    pass
