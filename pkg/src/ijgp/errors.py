"""Exception hierarchy shared by all modules."""


class InferenceError(Exception):
    """Base class for every error raised by this package."""


class ModelError(InferenceError):
    pass


class CyclicDag(ModelError):
    pass


class UnnormalizedCpt(ModelError):
    def __init__(self, variable, parent_config, total):
        self.variable = variable
        self.parent_config = parent_config
        self.total = total
        super().__init__(
            f"CPT of variable {variable} sums to {total!r} "
            f"for parent configuration {parent_config}"
        )


class ScopeMismatch(ModelError):
    pass


class ValueOutOfRange(ModelError):
    pass


class CardinalityMismatch(InferenceError):
    pass


class ScopeTooLarge(InferenceError):
    def __init__(self, entries, cap):
        self.entries = entries
        self.cap = cap
        super().__init__(f"table with {entries} entries exceeds cap of {cap}")


class VarNotInScope(InferenceError):
    pass


class AllZero(InferenceError):
    pass


class IBoundTooSmall(InferenceError):
    pass


class FunctionTooLarge(IBoundTooSmall):
    pass


class NotConnected(InferenceError):
    pass


class DecompositionInvalid(InferenceError):
    def __init__(self, report):
        self.report = report
        super().__init__("invalid decomposition: " + "; ".join(str(v) for v in report.violations))


class UnderflowDetected(InferenceError):
    pass


class SoundnessViolation(InferenceError):
    def __init__(self, report):
        self.report = report
        super().__init__("zero-belief audit failed:\n" + report.to_text())


class ParamOutOfRange(InferenceError):
    pass


class ShapeMismatch(InferenceError):
    pass


class LengthMismatch(InferenceError):
    pass


class TooLarge(InferenceError):
    pass


class FormatError(InferenceError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class NetworkSyntaxError(FormatError):
    pass


class SemanticError(FormatError):
    pass
