"""
Конфиг встроенных неравенств Белла.

Коэффициенты в вероятностной форме s[x][y][a][b], настройки и исходы с нуля.
В комментариях: нумерация с единицы (A₁, A₂, B₁, B₂).
"""

import re

import numpy as np

CGLMP_FAMILY = re.compile(r"cglmp(\d+)")


# ─── Построители коэффициентов ────────────────────────

def _cglmp_coeffs(d: int) -> np.ndarray:
    """P(A₂≥B₂) + P(B₂≥A₁) + P(A₁≥B₁) + P(B₁>A₂) ≤ 3 при любом числе исходов d"""
    a = np.arange(d)[:, None]
    b = np.arange(d)[None, :]
    s = np.zeros((2, 2, d, d))
    s[1, 1] = a >= b   # A₂ ≥ B₂
    s[0, 1] = b >= a   # B₂ ≥ A₁
    s[0, 0] = a >= b   # A₁ ≥ B₁
    s[1, 0] = b > a    # B₁ > A₂
    return s


def _cglmp3_coeffs() -> np.ndarray:
    return _cglmp_coeffs(3)


def _chsh_coeffs() -> np.ndarray:
    """Корреляторы E₁₁ + E₁₂ + E₂₁ − E₂₂ ≤ 2 в вероятностной форме."""
    a = np.arange(2)[:, None]
    b = np.arange(2)[None, :]
    parity = (-1.0) ** (a + b)
    s = np.empty((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            sign = -1.0 if (x == 1 and y == 1) else 1.0
            s[x, y] = sign * parity
    return s


def _i3322_coeffs() -> np.ndarray:
    """
    Форма Коллинза–Гизина, P(AₓB_y) = p(00|xy), P(Aₓ) = p_A(0|x):
    Σ J_xy P(AₓB_y) − P(A₁) − 2P(B₁) − P(B₂) ≤ 0.
    Маргиналы берутся через первую настройку партнёра.
    """
    joint = np.array([
        [1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0],
        [1.0, -1.0, 0.0],
    ])
    s = np.zeros((3, 3, 2, 2))
    s[:, :, 0, 0] = joint
    s[0, 0, 0, :] -= 1.0    # P(A₁)
    s[0, 0, :, 0] -= 2.0    # 2P(B₁)
    s[0, 1, :, 0] -= 1.0    # P(B₂)
    return s


# ─── Реестр (добавь свои тут) ─────────────────────────

EXPRESSIONS = {
    "cglmp3": {
        "scenario": (2, 2, 3, 3),
        "builder": _cglmp3_coeffs,
        "description": "CGLMP, две настройки, три исхода; классическая граница 3",
    },
    "chsh": {
        "scenario": (2, 2, 2, 2),
        "builder": _chsh_coeffs,
        "description": "CHSH в вероятностной форме; классическая граница 2",
    },
    "i3322": {
        "scenario": (3, 3, 2, 2),
        "builder": _i3322_coeffs,
        "description": "I3322, три настройки, два исхода; классическая граница 0",
    },
}


def _family_entry(name: str) -> dict | None:
    """cglmp<d>: то же неравенство с d исходами, d ≥ 2."""
    match = CGLMP_FAMILY.fullmatch(name)
    if not match or int(match.group(1)) < 2:
        return None
    d = int(match.group(1))
    return {
        "scenario": (2, 2, d, d),
        "builder": lambda: _cglmp_coeffs(d),
        "description": f"CGLMP, две настройки, {d} исходов; классическая граница 3",
    }


def _entry(name: str) -> dict | None:
    return EXPRESSIONS.get(name) or _family_entry(name)


# ─── API функции ──────────────────────────────────────

def get_expressions() -> list[str]:
    return list(EXPRESSIONS.keys()) + ["cglmp<d>"]


def get_scenario(name: str) -> tuple[int, int, int, int] | None:
    """(nx, ny, na, nb) или None для неизвестного имени."""
    entry = _entry(name)
    return entry["scenario"] if entry else None


def get_coefficients(name: str) -> np.ndarray | None:
    entry = _entry(name)
    return entry["builder"]() if entry else None


def get_description(name: str) -> str | None:
    entry = _entry(name)
    return entry["description"] if entry else None
