"""Exception hierarchy shared across the package."""


class SimulationError(Exception):
    """Base class for all drqsim errors."""


class LayoutError(SimulationError):
    """Invalid Hilbert-space layout (bad dims, duplicate ids, unknown ids)."""


class StateError(SimulationError):
    """Corrupt or incompatible state vector."""


class PulseError(SimulationError):
    """Invalid pulse construction or application."""


class RegisterError(SimulationError):
    """Invalid logical register or insufficient ancilla resources."""


class CompileError(SimulationError):
    """Gate lowering failed (bad operands, missing resources)."""


class HealthError(SimulationError):
    """Numeric health breach: norm drift, sentinel population, leakage."""


class DocumentError(SimulationError):
    """Circuit document diagnostic with a stable code and source line."""

    def __init__(self, code: str, line: int, message: str):
        super().__init__(f"{code} (line {line}): {message}")
        self.code = code
        self.line = line
        self.message = message
