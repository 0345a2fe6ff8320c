"""
numerics.py

Плотная комплексная линейная алгебра для маленьких матриц (до ~36×36).
Все функции чистые; случайность только через явный seed.
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.linalg import hessenberg

from core.errors import (
    ConvergenceFailure,
    DimensionMismatch,
    NonHermitian,
    NonSquare,
    Singular,
)
from core.log import get_logger
from core.settings import settings

log = get_logger("Numerics")

HERMITIAN_TOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
QR_MAX_ITERS = 500
GENERAL_EIG_MAX_DIM = 12


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray   # по убыванию
    eigenvectors: np.ndarray  # столбцы, ортонормированные

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


# ─── Проверки ─────────────────────────────────────────

def as_matrix(m) -> np.ndarray:
    return np.asarray(m, dtype=complex)


def _require_square(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSquare(f"ожидалась квадратная матрица, получено {m.shape}")


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = as_matrix(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def hermitize(m: np.ndarray) -> np.ndarray:
    m = as_matrix(m)
    return 0.5 * (m + m.conj().T)


# ─── Эрмитова задача: циклический Якоби ───────────────

def _jacobi_rotation(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Обнуляет a[p, q] унитарным вращением в плоскости (p, q), in place."""
    apq = a[p, q]
    mod = abs(apq)
    phase = apq / mod
    theta = 0.5 * np.arctan2(2.0 * mod, (a[q, q] - a[p, p]).real)
    c, s = np.cos(theta), np.sin(theta)
    # W = diag(1, conj(phase)) делает блок вещественным, затем вещественное вращение
    u = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)
    idx = [p, q]
    a[:, idx] = a[:, idx] @ u
    a[idx, :] = u.conj().T @ a[idx, :]
    a[p, q] = a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    v[:, idx] = v[:, idx] @ u


def _off_norm(a: np.ndarray) -> float:
    return float(np.sum(np.abs(np.triu(a, 1))))


def _eigen_jacobi(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = h.shape[0]
    a = h.copy()
    v = np.eye(n, dtype=complex)
    # абсолютный порог 1e-12, но не ниже машинной точности для больших норм
    threshold = max(JACOBI_TOL, 10 * np.finfo(float).eps * np.linalg.norm(h))

    for sweep in range(JACOBI_MAX_SWEEPS):
        if _off_norm(a) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > 0.0:
                    _jacobi_rotation(a, v, p, q)
    else:
        log.warning(f"Якоби: достигнут лимит {JACOBI_MAX_SWEEPS} sweeps, off-norm {_off_norm(a):.3e}")

    return np.real(np.diag(a)).copy(), v


def eigen_hermitian(
    h,
    method: Literal["jacobi", "lapack"] = "jacobi",
) -> Spectrum:
    """
    Полное спектральное разложение эрмитовой матрицы, собственные значения по убыванию.

    method="jacobi": циклические вращения Якоби (эталон),
    method="lapack": numpy.linalg.eigh (быстрый путь для seesaw).
    """
    h = as_matrix(h)
    _require_square(h)
    if not is_hermitian(h):
        raise NonHermitian("матрица не эрмитова в пределах 1e-10")
    h = hermitize(h)

    if method == "lapack":
        values, vectors = np.linalg.eigh(h)
    else:
        values, vectors = _eigen_jacobi(h)

    order = np.argsort(-values, kind="stable")
    return Spectrum(eigenvalues=values[order], eigenvectors=vectors[:, order])


# ─── Тензорное произведение и частичный след ──────────

def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(m, dim_a: int, dim_b: int, keep: Literal["A", "B"] = "A") -> np.ndarray:
    """Tr_B (keep="A") или Tr_A (keep="B") для матрицы на C^dimA ⊗ C^dimB."""
    m = as_matrix(m)
    if m.shape != (dim_a * dim_b, dim_a * dim_b):
        raise DimensionMismatch(f"матрица {m.shape} не совпадает с {dim_a}×{dim_b}")
    m4 = m.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep.upper() == "A":
        return np.trace(m4, axis1=1, axis2=3)
    if keep.upper() == "B":
        return np.trace(m4, axis1=0, axis2=2)
    raise ValueError("keep должен быть 'A' или 'B'")


# ─── Сингулярные числа, ранг, обратная ────────────────

def singular_values(m) -> np.ndarray:
    """
    Сингулярные числа по убыванию через спектр эрмитовой дилатации [[0, M], [M†, 0]]
    (собственные значения ±σ). Через M†M малые σ терялись бы на уровне √eps·σ_max.
    """
    m = as_matrix(m)
    rows, cols = m.shape
    k = min(rows, cols)
    if k == 0:
        return np.zeros(0)
    dilation = np.zeros((rows + cols, rows + cols), dtype=complex)
    dilation[:rows, rows:] = m
    dilation[rows:, :rows] = m.conj().T
    values = eigen_hermitian(dilation, method="lapack").eigenvalues[:k]
    return np.clip(values, 0.0, None)


def numerical_rank(m, tol: float | None = None) -> int:
    tol = settings.rank_tol if tol is None else tol
    sv = singular_values(m)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > tol * sv[0]))


def inverse(m) -> np.ndarray:
    m = as_matrix(m)
    _require_square(m)
    sv = singular_values(m)
    if sv.size == 0 or sv[-1] <= 1e-10 * sv[0]:
        raise Singular("матрица вырождена или плохо обусловлена")
    return np.linalg.solve(m, np.eye(m.shape[0], dtype=complex))


# ─── Общая задача: Хессенберг + QR со сдвигом ─────────

def _wilkinson_shift(block: np.ndarray) -> complex:
    a, b, c, d = block[0, 0], block[0, 1], block[1, 0], block[1, 1]
    half_tr = 0.5 * (a + d)
    disc = np.sqrt(half_tr * half_tr - (a * d - b * c))
    mu1, mu2 = half_tr + disc, half_tr - disc
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def eig_general(m) -> np.ndarray:
    """Все собственные значения (с кратностью) квадратной матрицы размера ≤ 12."""
    m = as_matrix(m)
    _require_square(m)
    n = m.shape[0]
    if n > GENERAL_EIG_MAX_DIM:
        raise DimensionMismatch(f"eig_general поддерживает размер ≤ {GENERAL_EIG_MAX_DIM}, получено {n}")
    if n == 0:
        return np.zeros(0, dtype=complex)

    h = hessenberg(m)
    scale = max(np.linalg.norm(m), np.finfo(float).tiny)
    eps = np.finfo(float).eps
    eigenvalues: list[complex] = []
    iterations = 0

    while n > 0:
        if n == 1:
            eigenvalues.append(complex(h[0, 0]))
            break
        sub = abs(h[n - 1, n - 2])
        if sub <= eps * (abs(h[n - 1, n - 1]) + abs(h[n - 2, n - 2])) or sub <= eps * scale:
            eigenvalues.append(complex(h[n - 1, n - 1]))
            n -= 1
            h = h[:n, :n]
            continue
        if iterations >= QR_MAX_ITERS:
            raise ConvergenceFailure(f"QR не сошёлся за {QR_MAX_ITERS} итераций")

        mu = _wilkinson_shift(h[n - 2:, n - 2:])
        # исключительный сдвиг против зацикливания
        if iterations and iterations % 11 == 0:
            mu += sub
        identity = np.eye(n, dtype=complex)
        q, r = np.linalg.qr(h - mu * identity)
        h = r @ q + mu * identity
        iterations += 1

    return np.array(eigenvalues[::-1], dtype=complex)


# ─── Функции от эрмитовых матриц ──────────────────────

def matrix_inv_sqrt(h, floor: float = 1e-300) -> np.ndarray:
    spectrum = eigen_hermitian(hermitize(h), method="lapack")
    values = np.clip(spectrum.eigenvalues, floor, None)
    v = spectrum.eigenvectors
    return (v / np.sqrt(values)) @ v.conj().T


def purity(rho) -> float:
    rho = as_matrix(rho)
    return float(np.real(np.trace(rho @ rho)))


def entropy_of_distribution(p, base: float = 2.0) -> float:
    """Шенноновская энтропия, 0·log0 := 0."""
    p = np.asarray(p, dtype=float)
    p = p[p > 0.0]
    return float(-np.sum(p * np.log(p)) / np.log(base))


def von_neumann_entropy(rho, base: float = 2.0) -> float:
    values = eigen_hermitian(hermitize(rho), method="lapack").eigenvalues
    return entropy_of_distribution(np.clip(values, 0.0, None), base)


# ─── Случайные объекты ────────────────────────────────

SampleKind = Literal["haar_unitary", "pure_state", "density_matrix", "povm_projective"]


def _rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def haar_unitary(dim: int, rng) -> np.ndarray:
    """Гинибр + QR с фиксацией фаз диагонали R."""
    rng = _rng(rng)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    phases = np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
    return q * phases


def random_pure_state(dim: int, rng) -> np.ndarray:
    rng = _rng(rng)
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def random_density_matrix(dim: int, rng) -> np.ndarray:
    """След по анциле той же размерности от случайного чистого состояния."""
    psi = random_pure_state(dim * dim, rng)
    rho = partial_trace(np.outer(psi, psi.conj()), dim, dim, keep="A")
    rho = hermitize(rho)
    return rho / np.real(np.trace(rho))


def random_projective_povm(dim: int, rng) -> list[np.ndarray]:
    u = haar_unitary(dim, rng)
    return [np.outer(u[:, k], u[:, k].conj()) for k in range(dim)]


def sample(kind: SampleKind, dim: int, rng_seed) -> object:
    if dim < 1:
        raise DimensionMismatch("dim должен быть ≥ 1")
    rng = _rng(rng_seed)
    if kind == "haar_unitary":
        return haar_unitary(dim, rng)
    if kind == "pure_state":
        return random_pure_state(dim, rng)
    if kind == "density_matrix":
        return random_density_matrix(dim, rng)
    if kind == "povm_projective":
        return random_projective_povm(dim, rng)
    raise ValueError(f"неизвестный вид выборки: {kind}")
