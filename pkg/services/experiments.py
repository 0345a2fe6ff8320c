"""
experiments.py

Симуляция корреляций по правилу Борна (с конечной выборкой), точная когерентная
информация известного состояния и sweep по шуму для воспроизведения графика.
"""

import concurrent.futures
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from app.schemas import SimulationSpecModel, SweepMetaModel
from core.errors import BadSpec
from core.log import get_logger
from services import numerics
from services.bell_model import (
    BellExpression,
    BellScenario,
    Correlation,
    MeasurementAssemblage,
    bell_operator,
    born_correlation,
    check_state,
)
from services.entanglement_bounds import certify_entanglement
from services.io_service import load_measurements, load_state
from services.nondegeneracy import NondegeneracyCertificate
from services.tsirelson import SeesawConfig, random_projective_assemblage, seesaw

log = get_logger("Experiments")

CGLMP_GAMMA = (math.sqrt(11.0) - math.sqrt(3.0)) / 2.0   # ≈ 0.7923


# ─── Типы ─────────────────────────────────────────────

@dataclass
class SimulationResult:
    correlation: Correlation
    rho: np.ndarray
    alice: MeasurementAssemblage
    bob: MeasurementAssemblage


@dataclass
class SweepRow:
    w: float
    violation: float
    gap: float
    eps1: float
    eps2: float | None
    purity_lower: float | None
    s_upper: float | None
    gamma_a: float
    s_lower: float
    ic_lower: float | None
    ic_true: float


# ─── Состояния ────────────────────────────────────────

def optimal_cglmp_state() -> np.ndarray:
    """(|00⟩ + γ|11⟩ + |22⟩)/√(2 + γ²), γ = (√11 − √3)/2."""
    psi = np.zeros(9, dtype=complex)
    psi[0], psi[4], psi[8] = 1.0, CGLMP_GAMMA, 1.0
    return psi / np.linalg.norm(psi)


def maximally_entangled_state(d: int) -> np.ndarray:
    psi = np.zeros(d * d, dtype=complex)
    psi[:: d + 1] = 1.0
    return psi / math.sqrt(d)


def projector(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


# ─── Оптимальные измерения ────────────────────────────

@lru_cache(maxsize=16)
def _cached_seesaw(name: str, coeffs_key: bytes, shape: tuple, d: int, cfg: SeesawConfig):
    expr = BellExpression(BellScenario(*shape), np.frombuffer(coeffs_key).reshape(shape), name=name)
    return seesaw(expr, d, 1, cfg)


def optimal_assemblages(expr: BellExpression, d: int, cfg: SeesawConfig):
    """Измерения лучшего рестарта seesaw при t=1 и верхний собственный вектор H."""
    estimate = _cached_seesaw(expr.name or "expr", expr.coeffs.tobytes(), expr.scenario.shape, d, cfg)
    h = bell_operator(expr, estimate.best_alice, estimate.best_bob).matrix
    top = numerics.eigen_hermitian(h, method="lapack").eigenvectors[:, 0]
    return estimate.best_alice, estimate.best_bob, top


def _rotate(assemblage: MeasurementAssemblage, w: np.ndarray) -> MeasurementAssemblage:
    povms = np.einsum("ij,xajk,lk->xail", w, assemblage.povms, w.conj())
    return MeasurementAssemblage(dim=assemblage.dim, povms=povms)


def align_to_schmidt_basis(
    alice: MeasurementAssemblage,
    bob: MeasurementAssemblage,
    psi: np.ndarray,
    order: list[int],
) -> tuple[MeasurementAssemblage, MeasurementAssemblage]:
    """
    Локальные унитарные W_A, W_B переводят ψ = Σ s_k u_k ⊗ w_k в Σ s_k |π(k)π(k)⟩,
    где π(k) = order[k]; измерения поворачиваются так же, значение Белла не меняется.
    """
    d = alice.dim
    u, _, vh = np.linalg.svd(psi.reshape(d, d))
    perm = np.zeros((d, d))
    perm[order, np.arange(d)] = 1.0
    w_a = perm @ u.conj().T
    w_b = perm @ vh.conj()
    return _rotate(alice, w_a), _rotate(bob, w_b)


def optimal_cglmp_assemblages(expr: BellExpression, cfg: SeesawConfig):
    """Измерения seesaw, повёрнутые в базис Шмидта известного оптимального состояния."""
    alice, bob, top = optimal_assemblages(expr, 3, cfg)
    # наименьший коэффициент Шмидта (γ) уходит на |11⟩
    return align_to_schmidt_basis(alice, bob, top, order=[0, 2, 1])


# ─── Симуляция ────────────────────────────────────────

def _base_state(spec: SimulationSpecModel, d: int, rng) -> np.ndarray:
    if spec.state == "optimal_cglmp":
        if d != 3:
            raise BadSpec("optimal_cglmp определено только при d = 3")
        return projector(optimal_cglmp_state())
    if spec.state == "maximally_entangled":
        return projector(maximally_entangled_state(d))
    if spec.state == "random_pure":
        return projector(numerics.random_pure_state(d * d, rng))
    if spec.state == "random_mixed":
        return numerics.random_density_matrix(d * d, rng)
    if spec.state == "file":
        if not spec.state_file:
            raise BadSpec("state=file требует state_file")
        return load_state(spec.state_file)
    raise BadSpec(f"неизвестное состояние: {spec.state}")


def _measurements(spec: SimulationSpecModel, expr: BellExpression, d: int, rng, cfg: SeesawConfig):
    sc = expr.scenario
    if spec.measurement_source == "random":
        return random_projective_assemblage(sc.nx, sc.na, d, rng), random_projective_assemblage(sc.ny, sc.nb, d, rng)
    if spec.measurement_source == "file":
        if not spec.measurement_file:
            raise BadSpec("measurement_source=file требует measurement_file")
        return load_measurements(spec.measurement_file)
    if spec.state == "optimal_cglmp":
        return optimal_cglmp_assemblages(expr, cfg)
    alice, bob, _ = optimal_assemblages(expr, d, cfg)
    return alice, bob


def sample_frequencies(c: Correlation, shots: int, rng) -> Correlation:
    """Каждый срез (x, y) заменяется мультиномиальными частотами."""
    p = np.array(c.p)
    sc = c.scenario
    for x in range(sc.nx):
        for y in range(sc.ny):
            probs = np.clip(p[x, y].ravel(), 0.0, None)
            counts = rng.multinomial(shots, probs / probs.sum())
            p[x, y] = (counts / shots).reshape(sc.na, sc.nb)
    return Correlation(sc, p)


def simulate_correlation(
    spec: SimulationSpecModel,
    expr: BellExpression,
    d: int,
    cfg: SeesawConfig | None = None,
    assemblages: tuple[MeasurementAssemblage, MeasurementAssemblage] | None = None,
) -> SimulationResult:
    cfg = cfg or SeesawConfig.from_settings()
    rng = np.random.default_rng(spec.seed)

    base = _base_state(spec, d, rng)
    if base.shape != (d * d, d * d):
        raise BadSpec(f"состояние {base.shape} не подходит для d = {d}")
    alice, bob = assemblages or _measurements(spec, expr, d, rng, cfg)
    if alice.dim != d or bob.dim != d:
        raise BadSpec(f"размерность измерений {alice.dim}/{bob.dim} ≠ d = {d}")

    if spec.noise_family == "white":
        noise = np.eye(d * d, dtype=complex) / (d * d)
    else:
        noise = numerics.random_density_matrix(d * d, rng)
    rho = (1.0 - spec.noise_w) * base + spec.noise_w * noise
    rho = check_state(rho, d * d)

    correlation = born_correlation(rho, alice, bob)
    if spec.shots != "exact":
        correlation = sample_frequencies(correlation, int(spec.shots), rng)
    return SimulationResult(correlation=correlation, rho=rho, alice=alice, bob=bob)


# ─── Эталон ───────────────────────────────────────────

def reference_coherent_info(rho, d: int) -> float:
    """I_C = S(ρ_A) − S(ρ) в битах."""
    rho = check_state(rho, d * d)
    rho_a = numerics.partial_trace(rho, d, d, keep="A")
    return numerics.von_neumann_entropy(rho_a) - numerics.von_neumann_entropy(rho)


# ─── Sweep ────────────────────────────────────────────

def _sweep_row(
    expr: BellExpression,
    d: int,
    cert: NondegeneracyCertificate,
    template: SimulationSpecModel,
    w: float,
    seed: int,
    assemblages,
    cfg: SeesawConfig,
) -> SweepRow:
    spec = template.model_copy(update={"noise_w": w, "seed": seed})
    sim = simulate_correlation(spec, expr, d, cfg, assemblages)
    result = certify_entanglement(sim.correlation, expr, cert, d)
    a = result.analysis
    return SweepRow(
        w=w,
        violation=a.violation,
        gap=cert.c_q - a.violation,
        eps1=a.eps1,
        eps2=a.eps2,
        purity_lower=a.purity_lower,
        s_upper=result.s_upper,
        gamma_a=result.gamma_a,
        s_lower=result.s_lower,
        ic_lower=result.ic_lower,
        ic_true=reference_coherent_info(sim.rho, d),
    )


def perturbation_sweep(
    expr: BellExpression,
    d: int,
    cert: NondegeneracyCertificate,
    w_grid: list[float],
    template: SimulationSpecModel,
    cfg: SeesawConfig | None = None,
) -> list[SweepRow]:
    """Строки сортируются по зазору (затем по w) независимо от порядка исполнения."""
    cfg = cfg or SeesawConfig.from_settings()
    rng = np.random.default_rng(template.seed)
    # одни и те же измерения во всех строках: нарушение аффинно по w
    assemblages = None
    if template.measurement_source != "file" or template.measurement_file:
        assemblages = _measurements(template, expr, d, rng, cfg)

    jobs = [(w, template.seed + i) for i, w in enumerate(w_grid)]
    run = lambda job: _sweep_row(expr, d, cert, template, job[0], job[1], assemblages, cfg)
    if cfg.workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.workers) as executor:
            rows = list(executor.map(run, jobs))
    else:
        rows = [run(job) for job in jobs]

    rows.sort(key=lambda r: (r.gap, r.w))
    positive = sum(1 for r in rows if r.ic_lower is not None and r.ic_lower > 0)
    log.info(f"sweep {expr.name}: {len(rows)} строк, ic_lower > 0 в {positive}")
    return rows


def positivity_threshold(rows: list[SweepRow]) -> float | None:
    """Наибольший зазор, до которого (включительно) все строки дают ic_lower > 0."""
    threshold = None
    for row in sorted(rows, key=lambda r: r.gap):
        if row.ic_lower is None or row.ic_lower <= 0:
            break
        threshold = row.gap
    return threshold


def sweep_metadata(
    expr: BellExpression,
    d: int,
    cert: NondegeneracyCertificate,
    w_grid: list[float],
    template: SimulationSpecModel,
    rows: list[SweepRow],
) -> SweepMetaModel:
    return SweepMetaModel(
        expression=expr.name or "expr",
        d=d,
        noise_family=template.noise_family,
        measurement_source=template.measurement_source,
        shots=template.shots,
        seed=template.seed,
        w_grid=list(w_grid),
        eps1_max=cert.eps1_max,
        positivity_threshold_gap=positivity_threshold(rows),
        note=(
            "семейство шума задано здесь и не претендует на совпадение с исходным ансамблем; "
            "порог сравнивается с заявленным 0.07 без требования равенства"
        ),
    )


def default_w_grid(points: int = 21, w_max: float = 0.3) -> list[float]:
    return [float(w) for w in np.linspace(0.0, w_max, points)]


def violation_linearity_residual(rows: list[SweepRow]) -> float:
    """Максимальное отклонение нарушения от прямой по w (точный режим, белый шум)."""
    if len(rows) < 3:
        return 0.0
    w = np.array([r.w for r in rows])
    v = np.array([r.violation for r in rows])
    coeffs = np.polyfit(w, v, 1)
    return float(np.max(np.abs(np.polyval(coeffs, w) - v)))
