"""Exception hierarchy shared by the library and the CLI."""


class BcmsrError(Exception):
    """Base class for every error raised on purpose by bcmsr."""


class UnknownVariableError(BcmsrError, LookupError):
    """A variable name is not part of the pmf or inequality system."""

    def __init__(self, name: str, known=()):
        self.name = name
        known = ", ".join(known)
        super().__init__(f"unknown variable {name!r}" + (f" (known: {known})" if known else ""))

    def __str__(self) -> str:
        return self.args[0]


class InvalidArgumentError(BcmsrError, ValueError):
    """An argument is outside its documented domain."""


class ModelError(BcmsrError):
    """A distribution does not have the structure an evaluator requires."""


class UnboundedRegionError(BcmsrError):
    """A 2-D region has no finite vertex description."""


class SimulationModeError(BcmsrError):
    """The requested simulation mode cannot handle the configuration."""


class SystemParseError(BcmsrError):
    """An inequality file could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(prefix + message)


class ArtifactWriteError(BcmsrError):
    """An output artifact could not be written."""


class DegenerateColoringWarning(UserWarning):
    """More colors than feedback sequences were requested."""
