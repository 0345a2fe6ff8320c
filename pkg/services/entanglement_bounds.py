"""
entanglement_bounds.py

Цепочка оценок: нарушение → вес главной компоненты → чистота ρ → S(ρ) сверху;
корреляция → чистота ρ_A сверху → S(ρ_A) снизу; I_C ≥ S(ρ_A) − S(ρ),
а E_f ≥ E_D ≥ I_C. Все энтропии в битах.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from core.errors import GammaOutOfRange, InconsistentCertificate, ShapeMismatch
from core.log import get_logger
from core.settings import settings
from services import numerics
from services.bell_model import BellExpression, Correlation, evaluate_bell
from services.nondegeneracy import NondegeneracyCertificate, epsilon2_for

log = get_logger("Bounds")

GAMMA_TOL = 1e-12
APPLIES_TO = "ic_lower ≤ I_C(ρ) ≤ E_D(ρ) ≤ E_f(ρ)"


@dataclass
class ViolationAnalysis:
    violation: float
    eps1: float
    eps2: float | None = None
    a1_lower: float | None = None
    purity_lower: float | None = None
    certified: bool = True


@dataclass
class MarginalPurityBound:
    f1: float
    f2: float
    gamma_a: float


@dataclass
class EntanglementCertificate:
    analysis: ViolationAnalysis
    f1: float
    f2: float
    gamma_a: float
    s_lower: float
    s_upper: float | None = None
    ic_lower: float | None = None
    s_upper_closed_form: float | None = None
    applies_to: str = APPLIES_TO
    caveats: list[str] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.ic_lower is not None and self.ic_lower > 0.0


# ─── Главная компонента и чистота ─────────────────────

def purity_from_weight(a1: float, d: int) -> float:
    """a₁² + (1 − a₁)²/(d² − 1): остаток веса поровну на остальные d² − 1 компонент."""
    n = d * d
    if n == 1:
        return 1.0
    return a1 * a1 + (1.0 - a1) ** 2 / (n - 1)


def violation_analysis(v: float, cert: NondegeneracyCertificate, d: int) -> ViolationAnalysis:
    excess = v - cert.c_q
    if excess > settings.violation_excess_tol:
        raise InconsistentCertificate(
            f"нарушение {v:.9f} превышает c_q = {cert.c_q:.9f} на {excess:.3e}"
        )
    eps1 = max(cert.c_q - v, 0.0)
    if eps1 >= cert.eps1_max:
        log.info(f"eps1 = {eps1:.6f} ≥ eps1_max = {cert.eps1_max:.6f} → оценки нет")
        return ViolationAnalysis(violation=v, eps1=eps1, certified=False)

    eps2 = epsilon2_for(cert, eps1)
    # a₁ есть наибольшее собственное значение, поэтому a₁ ≥ 1/d² при любом зазоре
    a1 = min(max(1.0 - eps1 / eps2, 1.0 / (d * d)), 1.0)
    return ViolationAnalysis(
        violation=v,
        eps1=eps1,
        eps2=eps2,
        a1_lower=a1,
        purity_lower=purity_from_weight(a1, d),
    )


def principal_component_weight(rho) -> float:
    """Точный a₁ известного состояния: для сравнения с a1_lower."""
    return float(numerics.eigen_hermitian(numerics.hermitize(rho), method="lapack").eigenvalues[0])


# ─── Экстремумы энтропии при фиксированной чистоте ────

def _check_gamma(gamma: float, n: int) -> float:
    if n < 1:
        raise GammaOutOfRange("n должно быть ≥ 1")
    if gamma < 1.0 / n - GAMMA_TOL or gamma > 1.0 + GAMMA_TOL:
        raise GammaOutOfRange(f"gamma = {gamma} вне [1/{n}, 1]")
    return min(max(gamma, 1.0 / n), 1.0)


def two_valued_candidates(gamma: float, n: int) -> list[np.ndarray]:
    """
    Все распределения вида (u × k, v × (m − k)) с Σp = 1 и Σp² = gamma, m ≤ n.
    Экстремумы энтропии при фиксированной Σp² имеют не более двух различных
    ненулевых значений, так что перебор точен.
    """
    gamma = _check_gamma(gamma, n)
    candidates = []
    if abs(gamma - 1.0) <= GAMMA_TOL:
        candidates.append(np.array([1.0]))

    for m in range(max(2, math.ceil(1.0 / gamma - 1e-9)), n + 1):
        slack = m * gamma - 1.0
        if slack < -1e-12:
            continue
        slack = max(slack, 0.0)
        for k in range(1, m):
            root = math.sqrt((m - k) * slack / k)
            for sign in (1.0, -1.0):
                u = (1.0 + sign * root) / m
                v = (1.0 - k * u) / (m - k)
                if u < -1e-15 or v < -1e-15:
                    continue
                p = np.concatenate([np.full(k, max(u, 0.0)), np.full(m - k, max(v, 0.0))])
                candidates.append(p)
    return candidates


def max_entropy_for_purity(gamma: float, n: int) -> float:
    """Точный максимум энтропии Шеннона (бит) по распределениям длины n с Σp² = gamma."""
    return max(numerics.entropy_of_distribution(p) for p in two_valued_candidates(gamma, n))


def min_entropy_for_purity(gamma: float, n: int) -> float:
    """Точный минимум энтропии Шеннона (бит) по распределениям длины n с Σp² = gamma."""
    return min(numerics.entropy_of_distribution(p) for p in two_valued_candidates(gamma, n))


def closed_form_entropy_upper(gamma: float, n: int = 9) -> float | None:
    """
    Замкнутая форма c₁ = 1/n − ((n−1)/n)·√(n/(n−1)·(γ − 1/n)), остальные (1 − c₁)/(n − 1).
    При n = 9 это 1/9 − (2/3)√(2(γ − 1/9)). None, когда c₁ < 0.
    """
    gamma = _check_gamma(gamma, n)
    c1 = 1.0 / n - (n - 1) / n * math.sqrt(n / (n - 1) * (gamma - 1.0 / n))
    if c1 < 0.0:
        return None
    rest = (1.0 - c1) / (n - 1)
    return numerics.entropy_of_distribution(np.concatenate([[c1], np.full(n - 1, rest)]))


def closed_form_entropy_lower(gamma: float) -> float | None:
    """α = 1/3 − √((2/3)(γ − 1/3)), распределение (α, (1−α)/2, (1−α)/2); γ ∈ [1/3, 1/2)."""
    gamma = _check_gamma(gamma, 3)
    if gamma >= 0.5:
        return None
    alpha = 1.0 / 3.0 - math.sqrt(2.0 / 3.0 * (gamma - 1.0 / 3.0))
    return numerics.entropy_of_distribution([alpha, (1 - alpha) / 2, (1 - alpha) / 2])


# ─── Чистота маргинала сверху ─────────────────────────

def _purity_bound_one_side(p: np.ndarray) -> float:
    """
    min по парам (y₁ ≠ y₂) Σ_{b₁,b₂} min_x (Σ_a √(p(ab₁|xy₁)·p(ab₂|xy₂)))².
    p индексирован [x][y][a][b].
    """
    nx, ny, na, nb = p.shape
    if ny < 2:
        return 1.0
    root = np.sqrt(np.clip(p, 0.0, None))
    best = np.inf
    for y1 in range(ny):
        for y2 in range(ny):
            if y1 == y2:
                continue
            # overlap[x, b1, b2] = Σ_a √p(a b1|x y1) √p(a b2|x y2)
            overlap = np.einsum("xab,xac->xbc", root[:, y1], root[:, y2])
            best = min(best, float(np.sum(np.min(overlap**2, axis=0))))
    return best


def marginal_purity_upper_bound(c: Correlation, dim: int | None = None) -> MarginalPurityBound:
    """f₁: через настройки Боба, f₂ — через настройки Алисы; gamma_a = min(f₁, f₂)."""
    f1 = _purity_bound_one_side(c.p)
    f2 = _purity_bound_one_side(c.p.transpose(1, 0, 3, 2))
    gamma_a = min(f1, f2)
    if dim is not None:
        gamma_a = min(max(gamma_a, 1.0 / dim), 1.0)
    return MarginalPurityBound(f1=f1, f2=f2, gamma_a=gamma_a)


# ─── Полная цепочка ───────────────────────────────────

def certify_entanglement(
    c: Correlation,
    expr: BellExpression,
    cert: NondegeneracyCertificate,
    d: int,
) -> EntanglementCertificate:
    if expr.scenario != c.scenario:
        raise ShapeMismatch(f"сценарий выражения {expr.scenario} ≠ сценарий корреляции {c.scenario}")

    v = evaluate_bell(expr, c)
    analysis = violation_analysis(v, cert, d)
    marginal = marginal_purity_upper_bound(c, dim=d)
    s_lower = min_entropy_for_purity(marginal.gamma_a, d)

    caveats = list(cert.caveats)
    result = EntanglementCertificate(
        analysis=analysis,
        f1=marginal.f1,
        f2=marginal.f2,
        gamma_a=marginal.gamma_a,
        s_lower=s_lower,
        caveats=caveats,
    )
    if not analysis.certified:
        caveats.append(f"зазор {analysis.eps1:.6f} ≥ eps1_max {cert.eps1_max:.6f}: оценка не получена")
        return result

    result.s_upper = max_entropy_for_purity(analysis.purity_lower, d * d)
    result.s_upper_closed_form = closed_form_entropy_upper(analysis.purity_lower, d * d)
    result.ic_lower = s_lower - result.s_upper
    if result.ic_lower <= 0.0:
        caveats.append("ic_lower ≤ 0: запутанность не сертифицирована")

    log.info(
        f"v={v:.6f}, eps1={analysis.eps1:.6f}, γ_ρ≥{analysis.purity_lower:.6f}, "
        f"γ_A≤{marginal.gamma_a:.6f} → I_C ≥ {result.ic_lower:.6f}"
    )
    return result
