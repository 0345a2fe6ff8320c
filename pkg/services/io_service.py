"""
io_service.py

JSON ⇄ доменные объекты через pydantic-схемы, CSV для sweep.
Парсинг: синтаксис → ParseError (строка/поле), инварианты → ValidationError.
"""

import csv
import io
import json
import math
import re
from pathlib import Path
from typing import TextIO, TypeVar

import numpy as np
import pydantic

from app.schemas import (
    AssemblageModel,
    BellExpressionModel,
    ComplexMatrixModel,
    CorrelationModel,
    DensityMatrixModel,
    EntanglementCertificateModel,
    MeasurementsModel,
    NondegeneracyCertificateModel,
    ScenarioModel,
)
from core.errors import BellCertError, ParseError, ValidationError
from core.settings import settings
from services.bell_model import (
    BellExpression,
    BellScenario,
    Correlation,
    MeasurementAssemblage,
    builtin_expression,
    check_state,
    validate_correlation,
)
from services.entanglement_bounds import EntanglementCertificate
from services.nondegeneracy import NondegeneracyCertificate, certificate_from_values

SWEEP_HEADER = ["w", "violation", "gap", "eps1", "eps2", "purity_lower", "s_upper", "gamma_a", "s_lower", "ic_lower", "ic_true"]

Model = TypeVar("Model", bound=pydantic.BaseModel)


# ─── Низкий уровень ───────────────────────────────────

def _read_text(source: str | Path | TextIO) -> str:
    if hasattr(source, "read"):
        return source.read()
    return Path(source).read_text(encoding="utf-8")


def parse_model(source: str | Path | TextIO, model: type[Model]) -> Model:
    text = _read_text(source)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"некорректный JSON: {e.msg}", line=e.lineno) from e
    try:
        return model.model_validate(data)
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        raise ParseError(first["msg"], field=field) from e


_FLOAT_MARK = "@@float@@"
_FLOAT_TOKEN = re.compile(rf'"{_FLOAT_MARK}([^"]*)"')


def _mark_floats(data):
    """Конечные float → метки с float_digits значащими цифрами, dump_json снимает кавычки."""
    if isinstance(data, float) and math.isfinite(data):
        text = format(data, f".{settings.float_digits}g")
        if not any(ch in text for ch in ".e"):
            text += ".0"
        return _FLOAT_MARK + text
    if isinstance(data, dict):
        return {key: _mark_floats(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [_mark_floats(value) for value in data]
    return data


def dump_json(payload: pydantic.BaseModel | dict, target: str | Path | TextIO | None = None) -> str:
    data = payload.model_dump(mode="json") if isinstance(payload, pydantic.BaseModel) else payload
    text = json.dumps(_mark_floats(data), ensure_ascii=False, indent=2) + "\n"
    text = _FLOAT_TOKEN.sub(r"\1", text)
    if target is None:
        return text
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text, encoding="utf-8")
    return text


def format_float(value: float | None) -> str:
    if value is None:
        return ""
    return format(float(value), f".{settings.float_digits}g")


# ─── Матрицы ──────────────────────────────────────────

def matrix_from_model(m: ComplexMatrixModel) -> np.ndarray:
    real = np.array(m.real, dtype=float)
    imag = np.array(m.imag, dtype=float) if m.imag is not None else np.zeros_like(real)
    return real + 1j * imag


def matrix_to_model(m: np.ndarray) -> ComplexMatrixModel:
    m = np.asarray(m, dtype=complex)
    return ComplexMatrixModel(real=m.real.tolist(), imag=m.imag.tolist())


# ─── Выражение и корреляция ───────────────────────────

def _scenario(m: ScenarioModel) -> BellScenario:
    return BellScenario(m.nx, m.ny, m.na, m.nb)


def _nested_shape(values) -> tuple[int, ...]:
    try:
        return np.array(values, dtype=float).shape
    except ValueError as e:
        raise ValidationError([f"тензор не прямоугольный: {e}"]) from e


def expression_from_model(m: BellExpressionModel) -> BellExpression:
    scenario = _scenario(m.scenario)
    shape = _nested_shape(m.coeffs)
    if shape != scenario.shape:
        raise ValidationError([f"coeffs формы {shape} ≠ сценарий {scenario.shape}"])
    return BellExpression(scenario, np.array(m.coeffs, dtype=float), name=m.name)


def expression_to_model(expr: BellExpression) -> BellExpressionModel:
    sc = expr.scenario
    return BellExpressionModel(
        name=expr.name,
        scenario=ScenarioModel(nx=sc.nx, ny=sc.ny, na=sc.na, nb=sc.nb),
        coeffs=expr.coeffs.tolist(),
    )


def correlation_from_model(m: CorrelationModel) -> Correlation:
    scenario = _scenario(m.scenario)
    shape = _nested_shape(m.p)
    if shape != scenario.shape:
        raise ValidationError([f"p формы {shape} ≠ сценарий {scenario.shape}"])
    c = Correlation(scenario, np.array(m.p, dtype=float))
    report = validate_correlation(c, check_no_signaling=True)
    if not report.valid:
        raise ValidationError(report.errors)
    return c


def correlation_to_model(c: Correlation) -> CorrelationModel:
    sc = c.scenario
    return CorrelationModel(
        scenario=ScenarioModel(nx=sc.nx, ny=sc.ny, na=sc.na, nb=sc.nb),
        p=c.p.tolist(),
    )


def load_expression(ref: str) -> BellExpression:
    """Имя встроенного выражения или путь к JSON."""
    path = Path(ref)
    if path.suffix.lower() == ".json" or path.exists():
        return expression_from_model(parse_model(path, BellExpressionModel))
    return builtin_expression(ref)


def load_correlation(source: str | Path | TextIO) -> Correlation:
    return correlation_from_model(parse_model(source, CorrelationModel))


# ─── Состояния и измерения ────────────────────────────

def load_state(source: str | Path | TextIO) -> np.ndarray:
    m = parse_model(source, DensityMatrixModel)
    rho = matrix_from_model(m.rho)
    try:
        return check_state(rho, m.dim_a * m.dim_b)
    except BellCertError as e:
        raise ValidationError([str(e)]) from e


def assemblage_from_model(m: AssemblageModel) -> MeasurementAssemblage:
    povms = np.array([[matrix_from_model(op) for op in setting] for setting in m.povms])
    assemblage = MeasurementAssemblage(dim=m.dim, povms=povms)
    problems = assemblage.violations()
    if problems:
        raise ValidationError(problems)
    return assemblage


def assemblage_to_model(a: MeasurementAssemblage) -> AssemblageModel:
    return AssemblageModel(
        dim=a.dim,
        povms=[[matrix_to_model(op) for op in setting] for setting in a.povms],
    )


def load_measurements(source: str | Path | TextIO) -> tuple[MeasurementAssemblage, MeasurementAssemblage]:
    m = parse_model(source, MeasurementsModel)
    return assemblage_from_model(m.alice), assemblage_from_model(m.bob)


# ─── Сертификаты ──────────────────────────────────────

def certificate_to_model(cert: NondegeneracyCertificate) -> NondegeneracyCertificateModel:
    return NondegeneracyCertificateModel(
        name=cert.name,
        d=cert.d,
        c_q=cert.c_q,
        c2=cert.c2,
        c_prev=cert.c_prev,
        nondegenerate=cert.nondegenerate,
        eps1_max=cert.eps1_max,
        method=cert.method,
        heuristic_caveat=cert.heuristic_caveat,
        seesaw=cert.seesaw,
    )


def certificate_from_model(m: NondegeneracyCertificateModel) -> NondegeneracyCertificate:
    cert = certificate_from_values(m.name, m.d, m.c_q, m.c2, m.c_prev, m.method)
    cert.seesaw = m.seesaw
    problems = []
    if abs(cert.eps1_max - m.eps1_max) > 1e-12:
        problems.append(f"eps1_max = {m.eps1_max} ≠ c_q − c2/2 = {cert.eps1_max}")
    if cert.nondegenerate != m.nondegenerate:
        problems.append(f"флаг nondegenerate = {m.nondegenerate} не согласован с c_q, c2")
    if problems:
        raise ValidationError(problems)
    return cert


def load_certificate(source: str | Path | TextIO) -> NondegeneracyCertificate:
    return certificate_from_model(parse_model(source, NondegeneracyCertificateModel))


def entanglement_to_model(cert: EntanglementCertificate) -> EntanglementCertificateModel:
    a = cert.analysis
    return EntanglementCertificateModel(
        violation=a.violation,
        eps1=a.eps1,
        eps2=a.eps2,
        a1_lower=a.a1_lower,
        purity_lower=a.purity_lower,
        s_upper_bits=cert.s_upper,
        s_upper_closed_form_bits=cert.s_upper_closed_form,
        f1=cert.f1,
        f2=cert.f2,
        gamma_a=cert.gamma_a,
        s_lower_bits=cert.s_lower,
        ic_lower_ebits=cert.ic_lower,
        certified=cert.certified,
        caveats=cert.caveats,
    )


def validate_entanglement_model(m: EntanglementCertificateModel) -> list[str]:
    problems = []
    if m.ic_lower_ebits is not None:
        if m.s_upper_bits is None:
            problems.append("ic_lower без s_upper")
        elif m.ic_lower_ebits != m.s_lower_bits - m.s_upper_bits:
            problems.append("ic_lower ≠ s_lower − s_upper")
        if m.s_upper_bits is not None and m.s_upper_bits < 0:
            problems.append("s_upper < 0")
    if m.s_lower_bits < 0:
        problems.append("s_lower < 0")
    if m.certified != (m.ic_lower_ebits is not None and m.ic_lower_ebits > 0):
        problems.append("флаг certified не согласован с ic_lower")
    return problems


def load_entanglement_certificate(source: str | Path | TextIO) -> EntanglementCertificateModel:
    m = parse_model(source, EntanglementCertificateModel)
    problems = validate_entanglement_model(m)
    if problems:
        raise ValidationError(problems)
    return m


# ─── CSV ──────────────────────────────────────────────

def write_sweep_csv(rows: list, target: str | Path | TextIO | None = None) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for row in rows:
        writer.writerow([format_float(getattr(row, column)) for column in SWEEP_HEADER])
    text = buffer.getvalue()
    if target is not None:
        if hasattr(target, "write"):
            target.write(text)
        else:
            Path(target).write_text(text, encoding="utf-8")
    return text


def read_sweep_csv(source: str | Path | TextIO) -> list[dict[str, float | None]]:
    reader = csv.reader(io.StringIO(_read_text(source)))
    header = next(reader, None)
    if header != SWEEP_HEADER:
        raise ParseError(f"неожиданный заголовок CSV: {header}", line=1)
    rows = []
    for line_no, record in enumerate(reader, start=2):
        if len(record) != len(SWEEP_HEADER):
            raise ParseError(f"ожидалось {len(SWEEP_HEADER)} столбцов", line=line_no)
        try:
            rows.append({k: (float(v) if v != "" else None) for k, v in zip(SWEEP_HEADER, record)})
        except ValueError as e:
            raise ParseError(str(e), line=line_no) from e
    return rows


def roundtrip(source: str | Path | TextIO, kind: str):
    """Разбор → проверка → сериализация → разбор; возвращает объект второго разбора."""
    loaders = {
        "expression": (lambda s: expression_from_model(parse_model(s, BellExpressionModel)), expression_to_model),
        "correlation": (load_correlation, correlation_to_model),
        "certificate": (load_certificate, certificate_to_model),
        "entanglement": (load_entanglement_certificate, lambda m: m),
    }
    if kind not in loaders:
        raise ValueError(f"неизвестный вид документа: {kind}")
    load, to_model = loaders[kind]
    text = dump_json(to_model(load(source)))
    return load(io.StringIO(text))
