from pydantic_settings import BaseSettings
from typing import Literal, Optional

from core.expressions import get_scenario


class Settings(BaseSettings):
    seesaw_restarts: int = 50
    seesaw_max_iters: int = 500
    seesaw_tol: float = 1e-9
    seesaw_inner_iters: int = 200
    seed: int = 0
    workers: int = 1
    eigensolver: Literal["lapack", "jacobi"] = "lapack"   # решатель на горячем пути seesaw
    rank_tol: float = 1e-9
    nondegeneracy_margin: float = 1e-6
    violation_excess_tol: float = 1e-6
    float_digits: int = 17
    log_level: str = "INFO"
    default_expression: str = "cglmp3"
    default_dim: Optional[int] = None

    model_config = {"env_file": ".env", "env_prefix": "BELLCERT_", "extra": "ignore"}


settings = Settings()


def get_default_dim(expression: str) -> int:
    """Локальная размерность по умолчанию: число исходов Алисы у встроенного выражения."""
    if settings.default_dim:
        return settings.default_dim
    scenario = get_scenario(expression)
    return scenario[2] if scenario else 2


def get_default_seesaw_kwargs() -> dict:
    return {
        "restarts": settings.seesaw_restarts,
        "max_iters": settings.seesaw_max_iters,
        "tol": settings.seesaw_tol,
        "inner_iters": settings.seesaw_inner_iters,
        "seed": settings.seed,
        "workers": settings.workers,
        "eigensolver": settings.eigensolver,
    }
