"""Exception hierarchy shared by all modules."""


class L2IError(Exception):
    """Base class. `exit_code` is what the CLI returns for it."""

    exit_code = 1


class ParameterRangeError(L2IError, ValueError):
    pass


class OffLaneError(L2IError):
    pass


class StationRangeError(L2IError):
    pass


class TopologyFileError(L2IError):
    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class UnsupportedPrimitiveError(TopologyFileError):
    pass


class FormatVersionError(L2IError):
    pass


class SchemaError(L2IError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class CompileError(L2IError):
    pass


class ImpossibleMotionError(CompileError):
    pass


class TopologyError(CompileError):
    pass


class CodeSyntaxError(L2IError):
    def __init__(self, message, line, column):
        self.line = line
        self.column = column
        super().__init__(f"{message} at line {line}, column {column}")


class CodeSemanticError(L2IError):
    def __init__(self, message, line=None, instruction=None):
        self.line = line
        self.instruction = instruction
        where = []
        if instruction is not None:
            where.append(f"instruction {instruction}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(message + (f" ({', '.join(where)})" if where else ""))


class SimulationError(L2IError):
    pass


class DescriptionError(L2IError):
    def __init__(self, message, sentence=None):
        self.sentence = sentence
        if sentence is not None:
            message = f"{message} (sentence {sentence})"
        super().__init__(message)


class InfeasibleSceneError(L2IError):
    def __init__(self, message, reasons=()):
        self.reasons = list(reasons)
        super().__init__(message)


class SplitShortfallError(L2IError):
    pass


class RangeError(SchemaError):
    pass
