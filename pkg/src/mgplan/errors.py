"""Exception hierarchy shared across the package."""


class MgplanError(Exception):
    """Base class for all package errors."""


class ParseError(MgplanError):
    def __init__(self, message, row=None, source=None, section=None):
        self.row = row
        self.source = source
        self.section = section
        where = []
        if source is not None:
            where.append(str(source))
        if section is not None:
            where.append(f"section {section}")
        if row is not None:
            where.append(f"line {row}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class LengthError(MgplanError):
    pass


class SignError(MgplanError):
    pass


class ZeroPeakError(MgplanError):
    pass


class DomainError(MgplanError):
    pass


class ValidationError(MgplanError):
    def __init__(self, violations, source=None):
        self.violations = list(violations)
        head = f"{source}: " if source else ""
        super().__init__(head + "; ".join(self.violations))


class EmptyInputError(MgplanError):
    pass


class KTooLargeError(MgplanError):
    pass


class FormulationError(MgplanError):
    pass


class IterationLimit(MgplanError):
    pass


class InfeasibleIncumbent(MgplanError):
    pass


class StageError(MgplanError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
