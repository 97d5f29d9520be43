"""Domain errors. Every error carries a stable machine-readable code."""


class ModularisError(Exception):
    code = "modularis-error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def to_dict(self) -> dict:
        return {"error": self.code, "message": self.message}


class MalformedInputError(ModularisError):
    code = "malformed-input"


class InvalidIndexError(MalformedInputError):
    code = "invalid-index"


class IncomparableDomainsError(ModularisError):
    code = "incomparable-domains"


class DomainMismatchError(ModularisError):
    code = "domain-mismatch"


class NoWitnessError(ModularisError):
    code = "no-witness"


class NotInSpaceError(ModularisError):
    code = "not-in-space"


class WrongConvexityClassError(ModularisError):
    code = "wrong-convexity-class"


class AxiomViolationError(ModularisError):
    code = "axiom-violation"


class BudgetExhaustedError(ModularisError):
    code = "budget-exhausted"


class InvalidChainError(ModularisError):
    code = "invalid-chain"


class NotOrderContinuousError(ModularisError):
    code = "not-order-continuous"


class SelfMapError(ModularisError):
    code = "self-map"


class ConvergenceError(ModularisError):
    code = "no-convergence"


class DimensionLimitError(ModularisError):
    code = "dimension-limit"


class IdempotenceError(ModularisError):
    code = "idempotence"


class ExternalOperatorError(ModularisError):
    code = "external-operator"
