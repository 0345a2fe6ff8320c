"""
Иерархия исключений.

InputError → код выхода 1, NumericalError → код выхода 2.
"""


class BellCertError(Exception):
    pass


class InputError(BellCertError):
    pass


class NumericalError(BellCertError):
    pass


# ─── numerics ─────────────────────────────────────────

class NonSquare(InputError):
    pass


class NonHermitian(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class Singular(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


# ─── bell_model ───────────────────────────────────────

class ShapeMismatch(InputError):
    pass


class NotAState(InputError):
    pass


class TooLargeToEnumerate(InputError):
    pass


class UnknownName(InputError):
    pass


class InvalidCorrelation(InputError):
    pass


# ─── tsirelson / nondegeneracy ────────────────────────

class BadRank(InputError):
    pass


class Eps1OutOfRange(InputError):
    pass


class NotFullSchmidtRank(InputError):
    pass


class ProportionalStates(InputError):
    pass


# ─── entanglement_bounds ──────────────────────────────

class GammaOutOfRange(InputError):
    pass


class InconsistentCertificate(InputError):
    """Нарушение превышает c_q больше, чем допускает шум выборки."""


# ─── experiments / io ─────────────────────────────────

class BadSpec(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class ValidationError(InputError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "validation failed")
