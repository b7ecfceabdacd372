"""Exception hierarchy shared by all modules."""

from __future__ import annotations

from .syntax import SourceSpan


class NormaError(Exception):
    """Base class; ``span`` locates the offending source when known."""

    def __init__(self, message: str, span: SourceSpan | None = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is not None:
            return f"{self.span}: {self.message}"
        return self.message


class ParseError(NormaError):
    pass


class TypeCheckError(NormaError):
    """Static error; ``kind`` names the class of problem."""

    kind = "TypeError"

    def __init__(self, message: str, span: SourceSpan | None = None, rule: int | None = None):
        if rule is not None:
            message = f"rule {rule}: {message}"
        super().__init__(message, span)
        self.rule = rule


class UnknownType(TypeCheckError):
    kind = "UnknownType"


class ArityMismatch(TypeCheckError):
    kind = "ArityMismatch"


class TypeMismatch(TypeCheckError):
    kind = "TypeMismatch"


class SSAViolation(TypeCheckError):
    kind = "SSAViolation"


class DuplicateConstructor(TypeCheckError):
    kind = "DuplicateConstructor"


class DuplicateDefinition(TypeCheckError):
    kind = "DuplicateDefinition"


class UnboundVariable(TypeCheckError):
    kind = "UnboundVariable"


class IndirectRecursion(TypeCheckError):
    kind = "IndirectRecursion"


class UnknownProcedure(TypeCheckError):
    kind = "UnknownProcedure"


class EvaluationError(NormaError):
    pass


class Stuck(EvaluationError):
    pass


class StepLimit(EvaluationError):
    pass


class BudgetExceeded(EvaluationError):
    pass


class ExplosionGuard(EvaluationError):
    pass


class IntegerInTerm(NormaError):
    pass


class NegativeIntUnderSum(NormaError):
    pass


class RenameClash(NormaError):
    pass


class LengthMismatch(NormaError):
    pass


class UnlinearizedMax(NormaError):
    pass


class SoundnessViolation(NormaError):
    pass


class PolymorphicRecursion(NormaError):
    pass


class SumNormNegativeLiteral(NormaError):
    pass
