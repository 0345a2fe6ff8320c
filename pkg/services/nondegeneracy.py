"""
nondegeneracy.py

Невырожденность неравенства Белла в размерности d:
  C(I,d,2) < 2·C(I,d,1)           : критерий по двум собственным значениям,
  C(I,d,1) > C(I,d−1,1)           : достаточное условие по монотонности в d,
и построение состояния с рангом Шмидта ≤ d−1 из двух состояний полного ранга.
"""

import concurrent.futures
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from core.errors import Eps1OutOfRange, NotFullSchmidtRank, ProportionalStates
from core.log import get_logger
from core.settings import settings
from services import numerics
from services.bell_model import BellExpression, bell_operator, classical_bound
from services.tsirelson import SeesawConfig, TsirelsonEstimate, seesaw

log = get_logger("Nondegeneracy")

HEURISTIC_CAVEAT = (
    "c_q и c2 — оценки seesaw снизу; заниженное c2 делает сертификат оптимистичным"
)


@dataclass
class NondegeneracyCertificate:
    name: str
    d: int
    c_q: float
    c2: float
    c_prev: float | None
    nondegenerate: bool
    eps1_max: float
    method: Literal["lemma1", "theorem1"] = "lemma1"
    heuristic_caveat: bool = True
    caveats: list[str] = field(default_factory=list)
    seesaw: dict[str, float] | None = None   # параметры прогона, None для готовых значений


@dataclass
class MonotonicityReport:
    name: str
    d: int
    c_d: float
    c_prev: float
    nondegenerate: bool     # вывод по монотонности; False означает «нет вывода»
    c2_upper: float         # C(I,d,2) ≤ C(I,d,1) + C(I,d−1,1)
    prev_method: str        # "seesaw" или "classical" при d−1 = 1


@dataclass
class SchmidtReduction:
    alpha: complex
    beta: complex
    combined: np.ndarray
    achieved_schmidt_number: int
    eigenvalue: complex


@dataclass
class ForwardCheck:
    values: tuple[float, float]     # I(ψ₁), I(ψ₂)
    total: float
    c2: float                       # значение найденного оптимума t=2
    eps1: float                     # c_q − max(I(ψ₁), I(ψ₂))
    eps2: float                     # min(2c_q − c2_cert − ε₁, c_q)
    min_value_bound: float          # c_q − ε₂
    holds: bool


# ─── Оценки C(I,d,t) ──────────────────────────────────

def quantum_value(expr: BellExpression, d: int, t: int, cfg: SeesawConfig) -> TsirelsonEstimate | float:
    """При d = 1 система классическая: точный перебор детерминированных стратегий."""
    if d == 1:
        return classical_bound(expr).value
    return seesaw(expr, d, t, cfg)


def _value(result: TsirelsonEstimate | float) -> float:
    return result if isinstance(result, float) else result.value


def _run_pair(expr: BellExpression, jobs: list[tuple[int, int]], cfg: SeesawConfig) -> list:
    if cfg.workers > 1 and len(jobs) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=len(jobs)) as executor:
            return list(executor.map(lambda job: quantum_value(expr, job[0], job[1], cfg), jobs))
    return [quantum_value(expr, d, t, cfg) for d, t in jobs]


# ─── Сертификат ───────────────────────────────────────

def certificate_from_values(
    name: str,
    d: int,
    c_q: float,
    c2: float,
    c_prev: float | None = None,
    method: Literal["lemma1", "theorem1"] = "lemma1",
    margin: float | None = None,
) -> NondegeneracyCertificate:
    margin = settings.nondegeneracy_margin if margin is None else margin
    if method == "theorem1" and c_prev is not None:
        nondegenerate = c_q > c_prev + margin
    else:
        nondegenerate = c2 < 2.0 * c_q - margin

    caveats = [HEURISTIC_CAVEAT]
    if c2 < c_q - 1e-9:
        caveats.append(f"c2 = {c2:.9f} < c_q = {c_q:.9f}: оценки несогласованы")
    return NondegeneracyCertificate(
        name=name,
        d=d,
        c_q=c_q,
        c2=c2,
        c_prev=c_prev,
        nondegenerate=nondegenerate,
        eps1_max=c_q - c2 / 2.0,
        method=method,
        heuristic_caveat=True,
        caveats=caveats,
    )


def certify_nondegeneracy(
    expr: BellExpression,
    d: int,
    cfg: SeesawConfig | None = None,
    method: Literal["lemma1", "theorem1"] = "lemma1",
    margin: float | None = None,
) -> NondegeneracyCertificate:
    if d < 2:
        raise ValueError("сертификат невырожденности требует d ≥ 2")
    cfg = cfg or SeesawConfig.from_settings()

    jobs = [(d, 1), (d, 2)]
    if method == "theorem1":
        jobs.append((d - 1, 1))
    results = _run_pair(expr, jobs, cfg)

    c_q, c2 = _value(results[0]), _value(results[1])
    c_prev = _value(results[2]) if method == "theorem1" else None

    cert = certificate_from_values(expr.name or "expr", d, c_q, c2, c_prev, method, margin)
    cert.seesaw = cfg.fingerprint()
    log.info(
        f"{cert.name}, d={d}: c_q={c_q:.6f}, c2={c2:.6f} → "
        f"{'невырождено' if cert.nondegenerate else 'не доказано'}, eps1_max={cert.eps1_max:.6f}"
    )
    return cert


def epsilon2_for(cert: NondegeneracyCertificate, eps1: float) -> float:
    """ε₂ = 2c_q − c2 − ε₁, не больше c_q; гарантирует ε₁ < ε₂."""
    if eps1 < 0 or eps1 >= cert.eps1_max:
        raise Eps1OutOfRange(f"eps1 = {eps1} вне [0, {cert.eps1_max})")
    return min(2.0 * cert.c_q - cert.c2 - eps1, cert.c_q)


def dimension_monotonicity_check(
    expr: BellExpression,
    d: int,
    cfg: SeesawConfig | None = None,
    margin: float | None = None,
) -> MonotonicityReport:
    """Если C(I,d,1) > C(I,d−1,1), то I невырождено; заодно C(I,d,2) ≤ C(I,d,1) + C(I,d−1,1)."""
    if d < 2:
        raise ValueError("проверка монотонности требует d ≥ 2")
    cfg = cfg or SeesawConfig.from_settings()
    margin = settings.nondegeneracy_margin if margin is None else margin

    c_d, c_prev = (_value(r) for r in _run_pair(expr, [(d, 1), (d - 1, 1)], cfg))
    report = MonotonicityReport(
        name=expr.name or "expr",
        d=d,
        c_d=c_d,
        c_prev=c_prev,
        nondegenerate=c_d > c_prev + margin,
        c2_upper=c_d + c_prev,
        prev_method="classical" if d - 1 == 1 else "seesaw",
    )
    log.info(f"{report.name}: C(I,{d},1)={c_d:.6f}, C(I,{d - 1},1)={c_prev:.6f} → {report.nondegenerate}")
    return report


# ─── Прямая проверка на оптимуме t=2 ──────────────────

def top_pair_forward_check(
    expr: BellExpression,
    estimate: TsirelsonEstimate,
    cert: NondegeneracyCertificate,
    tol: float = 1e-6,
) -> ForwardCheck:
    """Два верхних собственных состояния H на найденном оптимуме t=2."""
    h = bell_operator(expr, estimate.best_alice, estimate.best_bob).matrix
    spectrum = numerics.eigen_hermitian(h, method="lapack")
    psi1, psi2 = spectrum.eigenvectors[:, 0], spectrum.eigenvectors[:, 1]
    v1 = float(np.real(psi1.conj() @ h @ psi1))
    v2 = float(np.real(psi2.conj() @ h @ psi2))
    eps1 = cert.c_q - max(v1, v2)
    # c2 берётся из сертификата: оптимум выше cert.c2 нарушает оценку
    eps2 = min(2.0 * cert.c_q - cert.c2 - eps1, cert.c_q)
    bound = cert.c_q - eps2
    holds = min(v1, v2) <= bound + tol
    if not holds:
        log.warning(f"{expr.name}: I(ψ₂) = {min(v1, v2):.6f} > c_q − ε₂ = {bound:.6f}")
    return ForwardCheck(
        values=(v1, v2),
        total=v1 + v2,
        c2=estimate.value,
        eps1=eps1,
        eps2=eps2,
        min_value_bound=bound,
        holds=holds,
    )


# ─── Ранг Шмидта ──────────────────────────────────────

def schmidt_number(state, dims: tuple[int, int], tol: float | None = None) -> int:
    tol = settings.rank_tol if tol is None else tol
    matrix = np.asarray(state, dtype=complex).reshape(dims)
    return numerics.numerical_rank(matrix, tol)


def schmidt_reduce(psi, phi, d: int) -> SchmidtReduction:
    """
    A, B: матрицы коэффициентов ψ и φ; C = A⁻¹B; для собственного значения λ матрица
    B − λA = A(C − λI) вырождена, так что −λψ + φ имеет ранг Шмидта ≤ d−1.
    """
    psi = np.asarray(psi, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    for label, state in (("psi", psi), ("phi", phi)):
        if state.shape != (d * d,):
            raise NotFullSchmidtRank(f"{label}: ожидался вектор длины {d * d}")
        if schmidt_number(state, (d, d)) < d:
            raise NotFullSchmidtRank(f"{label}: ранг Шмидта < {d}")

    a = psi.reshape(d, d)
    b = phi.reshape(d, d)
    eigenvalues = numerics.eig_general(numerics.inverse(a) @ b)
    # наибольший |λ|: устойчивее сокращение
    lam = eigenvalues[np.argmax(np.abs(eigenvalues))]

    alpha, beta = -lam, 1.0 + 0.0j
    combined = alpha * psi + beta * phi
    norm = np.linalg.norm(combined)
    if norm <= 1e-9 * max(abs(lam) * np.linalg.norm(psi), np.linalg.norm(phi)):
        raise ProportionalStates("состояния пропорциональны: комбинация обнуляется")
    combined = combined / norm

    return SchmidtReduction(
        alpha=complex(alpha),
        beta=complex(beta),
        combined=combined,
        achieved_schmidt_number=schmidt_number(combined, (d, d)),
        eigenvalue=complex(lam),
    )
