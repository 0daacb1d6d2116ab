"""Exception hierarchy shared by the model, controllers and I/O layers."""


class PigventError(Exception):
    """Base class for all package errors."""


class PsychroDomainError(PigventError, ValueError):
    """A moist-air property was requested outside its valid domain."""


class InfeasibleVentilation(PigventError, ValueError):
    """No positive ventilation rate reaches the requested enthalpy."""


class SimulationError(PigventError, RuntimeError):
    """A plant step failed; ``step_index`` locates the failing timestep."""

    def __init__(self, message, step_index=None):
        if step_index is not None:
            message = f"step {step_index}: {message}"
        super().__init__(message)
        self.step_index = step_index


class ZeroObservedError(PigventError, ValueError):
    """MAPE is undefined because an observed value is zero."""

    def __init__(self, index):
        super().__init__(f"observed value at index {index} is zero; MAPE undefined")
        self.index = index


class ScenarioParseError(PigventError, ValueError):
    """The scenario file is not valid TOML."""

    def __init__(self, path, message, line=None, column=None):
        where = f"{path}"
        if line is not None:
            where += f":{line}"
            if column is not None:
                where += f":{column}"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line
        self.column = column


class ScenarioError(PigventError, ValueError):
    """One or more semantic problems in a scenario; ``issues`` lists them all."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))


class ResolutionError(ScenarioError):
    """A file referenced by the scenario does not exist."""

    def __init__(self, path, what="weather file"):
        self.path = path
        super().__init__([f"{what} not found: {path}"])


class TimeseriesError(PigventError, ValueError):
    """A time-series CSV is malformed; ``row`` is 1-based over data rows."""

    def __init__(self, message, row=None, column=None):
        parts = []
        if row is not None:
            parts.append(f"row {row}")
        if column is not None:
            parts.append(f"column {column!r}")
        prefix = ", ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.row = row
        self.column = column
