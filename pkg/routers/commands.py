"""
Обработчики подкоманд CLI. Каждый возвращает готовый к выводу документ
(pydantic-модель или текст CSV); коды выхода назначает main.py.
"""

from argparse import Namespace
from pathlib import Path

from app.schemas import (
    MonotonicityReportModel,
    SimulationSpecModel,
    TsirelsonEstimateModel,
)
from core.errors import BadSpec
from core.log import get_logger
from core.settings import get_default_dim
from services.entanglement_bounds import certify_entanglement
from services.experiments import (
    default_w_grid,
    perturbation_sweep,
    simulate_correlation,
    sweep_metadata,
)
from services.io_service import (
    certificate_to_model,
    correlation_to_model,
    dump_json,
    entanglement_to_model,
    load_certificate,
    load_correlation,
    load_expression,
    write_sweep_csv,
)
from services.nondegeneracy import (
    NondegeneracyCertificate,
    certify_nondegeneracy,
    dimension_monotonicity_check,
)
from services.tsirelson import SeesawConfig, seesaw

log = get_logger("CLI")


# ─── Helper ───────────────────────────────────────────

def _config(args: Namespace) -> SeesawConfig:
    return SeesawConfig.from_settings(
        restarts=args.restarts,
        max_iters=args.max_iters,
        tol=args.tol,
        seed=args.seed,
        workers=getattr(args, "workers", None),
    )


def _dim(args: Namespace) -> int:
    return args.dim or get_default_dim(args.expr)


def _simulation_spec(args: Namespace) -> SimulationSpecModel:
    shots = args.shots if args.shots in (None, "exact") else int(args.shots)
    try:
        return SimulationSpecModel(
            state=args.state,
            noise_w=args.noise,
            noise_family=args.noise_family,
            measurement_source=args.measurements,
            shots=shots or "exact",
            seed=args.seed if args.seed is not None else 0,
            state_file=args.state_file,
            measurement_file=args.measurement_file,
        )
    except ValueError as e:
        raise BadSpec(str(e)) from e


def _certificate_cache_path(args: Namespace) -> Path:
    anchor = Path(args.out) if args.out else Path(args.correlation)
    return anchor.with_name(anchor.stem + ".cert.json")


def _obtain_certificate(args: Namespace, expr, d: int, cfg: SeesawConfig) -> NondegeneracyCertificate:
    """Готовый сертификат из --cert или пересчёт с кэшем рядом с выводом."""
    if args.cert:
        cert = load_certificate(args.cert)
        if cert.d != d:
            raise BadSpec(f"сертификат для d = {cert.d}, запрошено d = {d}")
        return cert
    cache = _certificate_cache_path(args)
    if cache.exists():
        cert = load_certificate(cache)
        if cert.d == d and cert.name == (expr.name or "expr") and cert.seesaw == cfg.fingerprint():
            log.info(f"сертификат из кэша {cache}")
            return cert
        log.info(f"кэш {cache} от другого прогона, пересчёт")
    cert = certify_nondegeneracy(expr, d, cfg)
    dump_json(certificate_to_model(cert), cache)
    log.info(f"сертификат сохранён в {cache}")
    return cert


# ─── Подкоманды ───────────────────────────────────────

def certify(args: Namespace):
    expr = load_expression(args.expr)
    cert = certify_nondegeneracy(expr, _dim(args), _config(args), method=args.method)
    return certificate_to_model(cert)


def tsirelson(args: Namespace):
    expr = load_expression(args.expr)
    d = _dim(args)
    estimate = seesaw(expr, d, args.top, _config(args))
    return TsirelsonEstimateModel(
        name=expr.name or "expr",
        d=d,
        t=estimate.t,
        value=estimate.value,
        top_eigenvalues=estimate.top_eigenvalues,
        per_restart_values=estimate.per_restart_values,
        converged=estimate.converged,
        label=estimate.label,
    )


def monotonicity(args: Namespace):
    expr = load_expression(args.expr)
    report = dimension_monotonicity_check(expr, _dim(args), _config(args))
    return MonotonicityReportModel(**vars(report))


def bound(args: Namespace):
    expr = load_expression(args.expr)
    d = _dim(args)
    correlation = load_correlation(args.correlation)
    cert = _obtain_certificate(args, expr, d, _config(args))
    return entanglement_to_model(certify_entanglement(correlation, expr, cert, d))


def simulate(args: Namespace):
    expr = load_expression(args.expr)
    result = simulate_correlation(_simulation_spec(args), expr, _dim(args), _config(args))
    return correlation_to_model(result.correlation)


def sweep(args: Namespace):
    expr = load_expression(args.expr)
    d = _dim(args)
    cfg = _config(args)
    template = _simulation_spec(args)
    cert = load_certificate(args.cert) if args.cert else certify_nondegeneracy(expr, d, cfg)
    w_grid = [float(w) for w in args.w_grid.split(",")] if args.w_grid else default_w_grid(args.points, args.w_max)

    rows = perturbation_sweep(expr, d, cert, w_grid, template, cfg)
    meta = sweep_metadata(expr, d, cert, w_grid, template, rows)
    if args.out:
        out = Path(args.out)
        dump_json(meta, out.with_name(out.stem + ".meta.json"))
    if meta.positivity_threshold_gap is not None:
        log.info(f"ic_lower > 0 до зазора {meta.positivity_threshold_gap:.4f} (заявлено 0.07)")
    if args.format == "json":
        return {"meta": meta.model_dump(mode="json"), "rows": [vars(r) for r in rows]}
    return write_sweep_csv(rows)


HANDLERS = {
    "certify": certify,
    "tsirelson": tsirelson,
    "monotonicity": monotonicity,
    "bound": bound,
    "simulate": simulate,
    "sweep": sweep,
}
