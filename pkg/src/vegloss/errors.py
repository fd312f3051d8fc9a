"""Exception hierarchy.

Errors split into two families so the CLI can map them to exit codes:
``InputError`` (bad files, bad arguments; exit 2) and ``DomainError``
(well-formed input the model cannot handle; exit 3).
"""


class VegLossError(Exception):
    pass


class InputError(VegLossError, ValueError):
    pass


class DomainError(VegLossError, ValueError):
    pass


class ParseError(InputError):
    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = f"{source}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)


class InvalidInput(InputError):
    pass


class NotFound(InputError, LookupError):
    pass


class GridMismatch(InputError):
    pass


class InvalidGeometry(DomainError):
    pass


class OutOfBand(DomainError):
    pass


class DegenerateCalibration(DomainError):
    pass


class InvalidGate(DomainError):
    pass


class InsufficientData(DomainError):
    pass


class LosNotFound(DomainError):
    pass


class NoAlignment(DomainError):
    pass


class DegenerateFit(DomainError):
    pass


class BandCoverageError(DomainError):
    pass
