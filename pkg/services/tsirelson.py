"""
tsirelson.py

Оценка C(I,d,t): максимума по локальным POVM суммы t наибольших собственных
значений оператора Белла: методом seesaw со случайными рестартами.
t=1 даёт границу Цирельсона C_q в размерности d.

Результат: эвристическая оценка снизу (с точностью до допуска решателя).
"""

import concurrent.futures
from dataclasses import dataclass, field

import numpy as np

from core.errors import BadRank, BadSpec
from core.log import get_logger
from core.settings import get_default_seesaw_kwargs
from services import numerics
from services.bell_model import (
    BellExpression,
    BellOperator,
    MeasurementAssemblage,
    bell_operator,
)

log = get_logger("Seesaw")

HEURISTIC_LABEL = "heuristic lower estimate"
SHIFT_MARGIN = 1e-6
ACCEPT_TOL = 1e-12


# ─── Конфиг и результат ───────────────────────────────

@dataclass(frozen=True)
class SeesawConfig:
    restarts: int = 50
    max_iters: int = 500
    tol: float = 1e-9
    inner_iters: int = 200
    seed: int = 0
    workers: int = 1
    eigensolver: str = "lapack"

    def __post_init__(self):
        if self.restarts < 1:
            raise BadSpec("restarts должен быть ≥ 1")
        if not self.tol > 0:
            raise BadSpec("tol должен быть > 0")
        if self.max_iters < 1 or self.inner_iters < 1:
            raise BadSpec("max_iters и inner_iters должны быть ≥ 1")

    @classmethod
    def from_settings(cls, **overrides) -> "SeesawConfig":
        """Значения из settings, перекрытые явно переданными (None пропускается)."""
        kwargs = get_default_seesaw_kwargs()
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kwargs)

    def fingerprint(self) -> dict[str, float]:
        """Параметры, от которых зависят значения; workers и eigensolver не влияют."""
        return {
            "restarts": self.restarts,
            "max_iters": self.max_iters,
            "tol": self.tol,
            "inner_iters": self.inner_iters,
            "seed": self.seed,
        }


@dataclass
class PovmUpdate:
    povm: np.ndarray
    objective: float
    converged: bool
    iterations: int


@dataclass
class RestartResult:
    index: int
    value: float
    alice: MeasurementAssemblage
    bob: MeasurementAssemblage
    converged: bool
    history: list[float] = field(default_factory=list)


@dataclass
class TsirelsonEstimate:
    value: float
    t: int
    dim: int
    best_alice: MeasurementAssemblage
    best_bob: MeasurementAssemblage
    top_eigenvalues: list[float]
    per_restart_values: list[float]
    converged: bool
    objective_trace: list[float] = field(default_factory=list)
    label: str = HEURISTIC_LABEL


# ─── Ky Fan ───────────────────────────────────────────

def ky_fan_value(h, t: int, method: str = "lapack") -> tuple[float, np.ndarray]:
    """
    Сумма t наибольших собственных значений и проектор ранга t на их подпространство.
    При вырождении на t-й позиции берутся векторы в порядке решателя.
    """
    matrix = h.matrix if isinstance(h, BellOperator) else numerics.as_matrix(h)
    n = matrix.shape[0]
    if not 1 <= t <= n:
        raise BadRank(f"t = {t} вне диапазона 1..{n}")
    spectrum = numerics.eigen_hermitian(matrix, method=method)
    top = spectrum.eigenvectors[:, :t]
    return float(np.sum(spectrum.eigenvalues[:t])), top @ top.conj().T


# ─── POVM подзадача ───────────────────────────────────

def povm_objective(povm: np.ndarray, k: np.ndarray) -> float:
    """Σ_a tr(M_a K_a)"""
    return float(np.einsum("aij,aji->", povm, k).real)


def optimal_povm_update(
    k: np.ndarray,
    dim: int,
    inner_iters: int = 200,
    tol: float = 1e-9,
    start: np.ndarray | None = None,
) -> PovmUpdate:
    """
    Максимизация Σ_a tr(M_a K_a) по POVM итерацией неподвижной точки
        M_a ← λ^{-1/2} G_a M_a G_a λ^{-1/2},  λ = Σ_a G_a M_a G_a,
    где G_a = K_a + cI положительно определены. Сдвиг меняет цель на константу c·dim.
    Шаг, уменьшающий цель, отклоняется.
    """
    k = np.array([numerics.hermitize(ka) for ka in k])
    n_out = k.shape[0]
    if k.shape[1:] != (dim, dim):
        raise BadSpec(f"операторы K {k.shape[1:]} ≠ {dim}×{dim}")

    povm = np.array(start, dtype=complex) if start is not None else np.array(
        [np.eye(dim, dtype=complex) / n_out] * n_out
    )
    shift = -min(np.linalg.eigvalsh(ka)[0] for ka in k) + SHIFT_MARGIN
    g = k + shift * np.eye(dim)

    objective = povm_objective(povm, k)
    scale = max(1.0, float(np.max(np.abs(k))))
    converged = False
    iterations = 0

    for iterations in range(1, inner_iters + 1):
        weighted = np.einsum("aij,ajk,akl->ail", g, povm, g)
        lam = numerics.hermitize(weighted.sum(axis=0))
        floor = 1e-14 * max(float(np.max(np.abs(lam))), 1e-300)
        root = numerics.matrix_inv_sqrt(lam, floor=floor)
        candidate = np.array([numerics.hermitize(root @ w @ root) for w in weighted])

        new_objective = povm_objective(candidate, k)
        if new_objective < objective - ACCEPT_TOL * scale:
            # шаг отклонён: дальше итерация не улучшит
            converged = True
            break
        gain = new_objective - objective
        povm, objective = candidate, new_objective
        if gain < tol:
            converged = True
            break

    if not converged:
        log.debug(f"POVM update: {inner_iters} итераций без сходимости, цель {objective:.12f}")
    return PovmUpdate(povm=povm, objective=objective, converged=converged, iterations=iterations)


# ─── Инициализация ────────────────────────────────────

def random_projective_assemblage(n_settings: int, n_outcomes: int, dim: int, rng) -> MeasurementAssemblage:
    """
    Случайные проективные измерения (Хаар). Проекторы раскладываются по исходам
    случайно: при n_outcomes ≥ dim часть исходов получает нулевой оператор,
    при n_outcomes < dim проекторы группируются.
    """
    povms = np.zeros((n_settings, n_outcomes, dim, dim), dtype=complex)
    for x in range(n_settings):
        projectors = numerics.random_projective_povm(dim, rng)
        order = rng.permutation(n_outcomes)
        for j, proj in enumerate(projectors):
            outcome = order[j] if j < n_outcomes else order[rng.integers(n_outcomes)]
            povms[x, outcome] += proj
    return MeasurementAssemblage(dim=dim, povms=povms)


# ─── Частные следы от проектора ───────────────────────

def alice_operators(expr: BellExpression, bob: MeasurementAssemblage, projector: np.ndarray, dim_a: int) -> np.ndarray:
    """K[x, a] = Σ_{y,b} s_abxy Tr_B[(I ⊗ M_y^b) P]"""
    p4 = projector.reshape(dim_a, bob.dim, dim_a, bob.dim)
    reduced = np.einsum("ybkl,iljk->ybij", bob.povms, p4, optimize=True)
    k = np.einsum("xyab,ybij->xaij", expr.coeffs, reduced, optimize=True)
    return 0.5 * (k + np.conj(np.swapaxes(k, -1, -2)))


def bob_operators(expr: BellExpression, alice: MeasurementAssemblage, projector: np.ndarray, dim_b: int) -> np.ndarray:
    """K[y, b] = Σ_{x,a} s_abxy Tr_A[(M_x^a ⊗ I) P]"""
    p4 = projector.reshape(alice.dim, dim_b, alice.dim, dim_b)
    reduced = np.einsum("xaij,jkil->xakl", alice.povms, p4, optimize=True)
    k = np.einsum("xyab,xakl->ybkl", expr.coeffs, reduced, optimize=True)
    return 0.5 * (k + np.conj(np.swapaxes(k, -1, -2)))


def _update_party(k: np.ndarray, current: MeasurementAssemblage, cfg: SeesawConfig) -> MeasurementAssemblage:
    povms = np.array(current.povms)
    for x in range(current.n_settings):
        update = optimal_povm_update(k[x], current.dim, cfg.inner_iters, cfg.tol, start=current.povms[x])
        povms[x] = update.povm
    return MeasurementAssemblage(dim=current.dim, povms=povms)


# ─── Seesaw ───────────────────────────────────────────

def _run_restart(expr: BellExpression, d: int, t: int, cfg: SeesawConfig, index: int) -> RestartResult:
    rng = np.random.default_rng(cfg.seed + index)
    sc = expr.scenario
    alice = random_projective_assemblage(sc.nx, sc.na, d, rng)
    bob = random_projective_assemblage(sc.ny, sc.nb, d, rng)

    value, projector = ky_fan_value(bell_operator(expr, alice, bob), t, cfg.eigensolver)
    history = [value]
    converged = False

    for _ in range(cfg.max_iters):
        start_value = value

        candidate = _update_party(alice_operators(expr, bob, projector, d), alice, cfg)
        new_value, new_projector = ky_fan_value(bell_operator(expr, candidate, bob), t, cfg.eigensolver)
        if new_value >= value - ACCEPT_TOL:
            alice, value, projector = candidate, max(new_value, value), new_projector

        candidate = _update_party(bob_operators(expr, alice, projector, d), bob, cfg)
        new_value, new_projector = ky_fan_value(bell_operator(expr, alice, candidate), t, cfg.eigensolver)
        if new_value >= value - ACCEPT_TOL:
            bob, value, projector = candidate, max(new_value, value), new_projector

        history.append(value)
        if value - start_value < cfg.tol:
            converged = True
            break

    # значение пересчитываем по итоговым измерениям, без накопленного max
    final_value, _ = ky_fan_value(bell_operator(expr, alice, bob), t, cfg.eigensolver)
    return RestartResult(index, final_value, alice, bob, converged, history)


def seesaw(expr: BellExpression, d: int, t: int = 1, cfg: SeesawConfig | None = None) -> TsirelsonEstimate:
    cfg = cfg or SeesawConfig.from_settings()
    if not 1 <= t <= d * d:
        raise BadRank(f"t = {t} вне диапазона 1..{d * d}")

    name = expr.name or "expr"
    log.info(f"{name}, d={d}, t={t}: {cfg.restarts} рестартов, seed={cfg.seed}")

    indices = range(cfg.restarts)
    if cfg.workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.workers) as executor:
            results = list(executor.map(lambda i: _run_restart(expr, d, t, cfg, i), indices))
    else:
        results = [_run_restart(expr, d, t, cfg, i) for i in indices]

    for r in results:
        log.debug(f"restart {r.index + 1}/{cfg.restarts} → {r.value:.8f} ({len(r.history) - 1} итераций)")

    # при равенстве побеждает меньший индекс: порядок исполнения не важен
    best = max(results, key=lambda r: (r.value, -r.index))
    spectrum = numerics.eigen_hermitian(bell_operator(expr, best.alice, best.bob).matrix, method=cfg.eigensolver)

    log.info(f"{name}, d={d}, t={t} → {best.value:.6f} ({HEURISTIC_LABEL})")
    return TsirelsonEstimate(
        value=best.value,
        t=t,
        dim=d,
        best_alice=best.alice,
        best_bob=best.bob,
        top_eigenvalues=[float(v) for v in spectrum.eigenvalues],
        per_restart_values=[r.value for r in results],
        converged=best.converged,
        objective_trace=best.history,
    )
