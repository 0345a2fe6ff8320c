from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Literal, Optional, Union


# ─── Входные документы ───────────────────────────────

class ScenarioModel(BaseModel):
    nx: int = Field(ge=1)
    ny: int = Field(ge=1)
    na: int = Field(ge=1)
    nb: int = Field(ge=1)


class BellExpressionModel(BaseModel):
    name: Optional[str] = None
    scenario: ScenarioModel
    coeffs: list[list[list[list[float]]]]        # [x][y][a][b]


class CorrelationModel(BaseModel):
    scenario: ScenarioModel
    p: list[list[list[list[float]]]]             # [x][y][a][b]


class ComplexMatrixModel(BaseModel):
    real: list[list[float]]
    imag: Optional[list[list[float]]] = None     # None → вещественная матрица

    @model_validator(mode="after")
    def _same_shape(self):
        if self.imag is not None and [len(r) for r in self.imag] != [len(r) for r in self.real]:
            raise ValueError("real и imag разной формы")
        return self


class DensityMatrixModel(BaseModel):
    dim_a: int = Field(ge=1)
    dim_b: int = Field(ge=1)
    rho: ComplexMatrixModel


class AssemblageModel(BaseModel):
    dim: int = Field(ge=1)
    povms: list[list[ComplexMatrixModel]]        # [x][a]


class MeasurementsModel(BaseModel):
    alice: AssemblageModel
    bob: AssemblageModel


class SimulationSpecModel(BaseModel):
    state: Literal["optimal_cglmp", "maximally_entangled", "random_pure", "random_mixed", "file"] = "optimal_cglmp"
    noise_w: float = 0.0
    noise_family: Literal["white", "random"] = "white"
    measurement_source: Literal["optimal", "random", "file"] = "optimal"
    shots: Union[int, Literal["exact"]] = "exact"
    seed: int = 0
    state_file: Optional[str] = None
    measurement_file: Optional[str] = None

    @field_validator("noise_w")
    @classmethod
    def _noise_in_range(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("noise_w должен быть в [0, 1]")
        return v

    @field_validator("shots")
    @classmethod
    def _positive_shots(cls, v):
        if v != "exact" and v < 1:
            raise ValueError("shots должен быть ≥ 1 или 'exact'")
        return v


# ─── Выходные документы ──────────────────────────────

class NondegeneracyCertificateModel(BaseModel):
    name: str
    d: int
    c_q: float
    c2: float
    c_prev: Optional[float] = None
    nondegenerate: bool
    eps1_max: float
    method: Literal["lemma1", "theorem1"] = "lemma1"
    heuristic_caveat: bool = True
    seesaw: Optional[dict[str, float]] = None


class EntanglementCertificateModel(BaseModel):
    violation: float
    eps1: float
    eps2: Optional[float] = None
    a1_lower: Optional[float] = None
    purity_lower: Optional[float] = None
    s_upper_bits: Optional[float] = None
    s_upper_closed_form_bits: Optional[float] = None
    f1: float
    f2: float
    gamma_a: float
    s_lower_bits: float
    ic_lower_ebits: Optional[float] = None
    certified: bool
    caveats: list[str] = []


class TsirelsonEstimateModel(BaseModel):
    name: str
    d: int
    t: int
    value: float
    top_eigenvalues: list[float]
    per_restart_values: list[float]
    converged: bool
    label: str


class MonotonicityReportModel(BaseModel):
    name: str
    d: int
    c_d: float
    c_prev: float
    nondegenerate: bool
    c2_upper: float
    prev_method: str


class SweepMetaModel(BaseModel):
    expression: str
    d: int
    noise_family: str
    measurement_source: str
    shots: Union[int, Literal["exact"]]
    seed: int
    w_grid: list[float]
    eps1_max: float
    positivity_threshold_gap: Optional[float] = None   # наибольший зазор с ic_lower > 0
    stated_threshold_gap: float = 0.07
    note: str = ""
