"""
bell_model.py

Сценарии Белла, выражения, корреляции, наборы измерений и оператор Белла.
"""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from core.errors import (
    DimensionMismatch,
    InvalidCorrelation,
    NotAState,
    ShapeMismatch,
    TooLargeToEnumerate,
    UnknownName,
)
from core.expressions import get_coefficients, get_expressions, get_scenario
from core.log import get_logger
from services import numerics

log = get_logger("BellModel")

NEGATIVE_DUST = 1e-12
NORMALIZATION_TOL = 1e-9
POVM_PSD_TOL = 1e-10
POVM_COMPLETENESS_TOL = 1e-9
ENUMERATION_LIMIT = 10**8


# ─── Типы ─────────────────────────────────────────────

@dataclass(frozen=True)
class BellScenario:
    nx: int
    ny: int
    na: int
    nb: int

    def __post_init__(self):
        if min(self.nx, self.ny, self.na, self.nb) < 1:
            raise ShapeMismatch(f"все размеры сценария должны быть ≥ 1: {self}")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.nx, self.ny, self.na, self.nb)


@dataclass(frozen=True)
class BellExpression:
    scenario: BellScenario
    coeffs: np.ndarray
    name: str | None = None

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != self.scenario.shape:
            raise ShapeMismatch(f"коэффициенты {coeffs.shape} ≠ сценарий {self.scenario.shape}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)


@dataclass(frozen=True)
class Correlation:
    """p[x][y][a][b] = p(ab|xy). Значения в [−1e−12, 0) обнуляются."""

    scenario: BellScenario
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.shape != self.scenario.shape:
            raise ShapeMismatch(f"тензор {p.shape} ≠ сценарий {self.scenario.shape}")
        p[(p < 0.0) & (p >= -NEGATIVE_DUST)] = 0.0
        p.setflags(write=False)
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class MeasurementAssemblage:
    """povms[x, a]: оператор исхода a при настройке x, размер dim×dim."""

    dim: int
    povms: np.ndarray

    def __post_init__(self):
        povms = np.array(self.povms, dtype=complex)
        if povms.ndim != 4 or povms.shape[2:] != (self.dim, self.dim):
            raise DimensionMismatch(f"ожидались операторы {self.dim}×{self.dim}, получено {povms.shape}")
        povms.setflags(write=False)
        object.__setattr__(self, "povms", povms)

    @property
    def n_settings(self) -> int:
        return self.povms.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.povms.shape[1]

    def violations(self) -> list[str]:
        problems = []
        identity = np.eye(self.dim)
        for x in range(self.n_settings):
            for a in range(self.n_outcomes):
                op = self.povms[x, a]
                if not numerics.is_hermitian(op):
                    problems.append(f"M[{x}][{a}] не эрмитов")
                    continue
                smallest = np.linalg.eigvalsh(numerics.hermitize(op))[0]
                if smallest < -POVM_PSD_TOL:
                    problems.append(f"M[{x}][{a}] не PSD (λ_min = {smallest:.3e})")
            defect = np.max(np.abs(self.povms[x].sum(axis=0) - identity))
            if defect > POVM_COMPLETENESS_TOL:
                problems.append(f"настройка {x}: ΣM − I = {defect:.3e}")
        return problems


@dataclass(frozen=True)
class BellOperator:
    matrix: np.ndarray
    expression: BellExpression
    alice: MeasurementAssemblage
    bob: MeasurementAssemblage


@dataclass
class ValidationReport:
    valid: bool
    errors: list[str] = field(default_factory=list)
    no_signaling_defect: float | None = None


@dataclass(frozen=True)
class ClassicalBound:
    value: float
    alice_strategy: tuple[int, ...]   # x → a
    bob_strategy: tuple[int, ...]     # y → b


# ─── Вспомогательные корреляции ───────────────────────

def uniform_correlation(scenario: BellScenario) -> Correlation:
    p = np.full(scenario.shape, 1.0 / (scenario.na * scenario.nb))
    return Correlation(scenario, p)


def deterministic_correlation(
    scenario: BellScenario,
    alice_strategy: tuple[int, ...],
    bob_strategy: tuple[int, ...],
) -> Correlation:
    p = np.zeros(scenario.shape)
    for x, y in product(range(scenario.nx), range(scenario.ny)):
        p[x, y, alice_strategy[x], bob_strategy[y]] = 1.0
    return Correlation(scenario, p)


def mix_correlations(c1: Correlation, c2: Correlation, weight: float) -> Correlation:
    """weight·c1 + (1 − weight)·c2"""
    if c1.scenario != c2.scenario:
        raise ShapeMismatch("смешиваемые корреляции из разных сценариев")
    return Correlation(c1.scenario, weight * c1.p + (1.0 - weight) * c2.p)


# ─── Операции ─────────────────────────────────────────

def no_signaling_defect(c: Correlation) -> float:
    alice_marginal = c.p.sum(axis=3)   # [x, y, a]
    bob_marginal = c.p.sum(axis=2)     # [x, y, b]
    alice_defect = np.max(np.ptp(alice_marginal, axis=1), initial=0.0)
    bob_defect = np.max(np.ptp(bob_marginal, axis=0), initial=0.0)
    return float(max(alice_defect, bob_defect))


def validate_correlation(c: Correlation, check_no_signaling: bool = True) -> ValidationReport:
    """Нормировка и знак: ошибки; no-signaling только сообщается."""
    if c.p.shape != c.scenario.shape:
        raise ShapeMismatch(f"тензор {c.p.shape} ≠ сценарий {c.scenario.shape}")

    errors = []
    negative = np.argwhere(c.p < -NEGATIVE_DUST)
    for x, y, a, b in negative:
        errors.append(f"p[{x}][{y}][{a}][{b}] = {c.p[x, y, a, b]:.6g} < 0")

    sums = c.p.sum(axis=(2, 3))
    for x, y in np.argwhere(np.abs(sums - 1.0) > NORMALIZATION_TOL):
        errors.append(f"срез (x={x}, y={y}) в сумме {sums[x, y]:.12g} ≠ 1")

    defect = None
    if check_no_signaling:
        defect = no_signaling_defect(c)
        if defect > NORMALIZATION_TOL:
            log.warning(f"no-signaling дефект {defect:.3e} (данные не отклоняются)")

    return ValidationReport(valid=not errors, errors=errors, no_signaling_defect=defect)


def require_valid(c: Correlation) -> Correlation:
    report = validate_correlation(c, check_no_signaling=False)
    if not report.valid:
        raise InvalidCorrelation("; ".join(report.errors))
    return c


def evaluate_bell(expr: BellExpression, c: Correlation) -> float:
    """I = Σ s_abxy p(ab|xy)"""
    if expr.scenario != c.scenario:
        raise ShapeMismatch(f"сценарий выражения {expr.scenario} ≠ сценарий корреляции {c.scenario}")
    return float(np.dot(expr.coeffs.ravel(), c.p.ravel()))


def check_state(rho: np.ndarray, dim: int) -> np.ndarray:
    rho = numerics.as_matrix(rho)
    if rho.shape != (dim, dim):
        raise DimensionMismatch(f"состояние {rho.shape}, ожидалось {dim}×{dim}")
    if not numerics.is_hermitian(rho, tol=1e-9):
        raise NotAState("матрица плотности не эрмитова")
    rho = numerics.hermitize(rho)
    if abs(np.trace(rho).real - 1.0) > 1e-9:
        raise NotAState(f"след {np.trace(rho).real:.12g} ≠ 1")
    if np.linalg.eigvalsh(rho)[0] < -1e-9:
        raise NotAState("матрица плотности не PSD")
    return rho


def born_correlation(
    rho,
    alice: MeasurementAssemblage,
    bob: MeasurementAssemblage,
) -> Correlation:
    """p(ab|xy) = Tr(ρ (M_x^a ⊗ M_y^b))"""
    da, db = alice.dim, bob.dim
    rho = check_state(rho, da * db)
    rho4 = rho.reshape(da, db, da, db)
    # Tr(ρ(A⊗B)) = Σ ρ[ik, jl] A[j, i] B[l, k]
    p = np.einsum("ikjl,xaji,yblk->xyab", rho4, alice.povms, bob.povms, optimize=True).real
    scenario = BellScenario(alice.n_settings, bob.n_settings, alice.n_outcomes, bob.n_outcomes)
    p[(p < 0.0) & (p >= -1e-10)] = 0.0
    return Correlation(scenario, p)


def _check_assemblages(expr: BellExpression, alice: MeasurementAssemblage, bob: MeasurementAssemblage):
    expected = expr.scenario.shape
    got = (alice.n_settings, bob.n_settings, alice.n_outcomes, bob.n_outcomes)
    if got != expected:
        raise DimensionMismatch(f"измерения задают сценарий {got}, выражение — {expected}")


def bell_operator(
    expr: BellExpression,
    alice: MeasurementAssemblage,
    bob: MeasurementAssemblage,
) -> BellOperator:
    """H = Σ s_abxy M_x^a ⊗ M_y^b"""
    _check_assemblages(expr, alice, bob)
    da, db = alice.dim, bob.dim
    h4 = np.einsum("xyab,xaij,ybkl->ikjl", expr.coeffs, alice.povms, bob.povms, optimize=True)
    matrix = numerics.hermitize(h4.reshape(da * db, da * db))
    return BellOperator(matrix=matrix, expression=expr, alice=alice, bob=bob)


def _best_response_value(coeffs: np.ndarray, strategy: tuple[int, ...]) -> tuple[float, tuple[int, ...]]:
    """Лучший ответ второй стороны на детерминированную стратегию первой."""
    nx = coeffs.shape[0]
    # table[y, b] = Σ_x s[x, y, strategy[x], b]
    table = coeffs[np.arange(nx), :, list(strategy), :].sum(axis=0)
    response = tuple(int(b) for b in np.argmax(table, axis=1))
    return float(np.sum(np.max(table, axis=1))), response


def classical_bound(expr: BellExpression) -> ClassicalBound:
    """Точный максимум по детерминированным стратегиям (смеси не больше по линейности)."""
    sc = expr.scenario
    if sc.na ** sc.nx * sc.nb ** sc.ny > ENUMERATION_LIMIT:
        raise TooLargeToEnumerate(f"{sc.na}^{sc.nx}·{sc.nb}^{sc.ny} стратегий > {ENUMERATION_LIMIT}")

    # перебираем сторону с меньшим числом стратегий, вторая отвечает оптимально
    swap = sc.nb ** sc.ny < sc.na ** sc.nx
    coeffs = expr.coeffs.transpose(1, 0, 3, 2) if swap else expr.coeffs
    n_settings, n_outcomes = coeffs.shape[0], coeffs.shape[2]

    best_value, best_pair = -np.inf, None
    for strategy in product(range(n_outcomes), repeat=n_settings):
        value, response = _best_response_value(coeffs, strategy)
        if value > best_value:
            best_value, best_pair = value, (strategy, response)

    first, second = best_pair
    alice, bob = (second, first) if swap else (first, second)
    return ClassicalBound(value=best_value, alice_strategy=tuple(alice), bob_strategy=tuple(bob))


def builtin_expression(name: str) -> BellExpression:
    scenario = get_scenario(name)
    if scenario is None:
        raise UnknownName(f"выражение '{name}' не найдено. Доступные: {get_expressions()}")
    return BellExpression(BellScenario(*scenario), get_coefficients(name), name=name)
