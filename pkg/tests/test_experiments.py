import math

import numpy as np
import pytest

from app.schemas import SimulationSpecModel
from core.errors import BadSpec
from services import numerics
from services.bell_model import evaluate_bell
from services.entanglement_bounds import certify_entanglement
from services.experiments import (
    CGLMP_GAMMA,
    default_w_grid,
    maximally_entangled_state,
    optimal_cglmp_assemblages,
    optimal_cglmp_state,
    perturbation_sweep,
    positivity_threshold,
    projector,
    reference_coherent_info,
    simulate_correlation,
    sweep_metadata,
    violation_linearity_residual,
)
from services.nondegeneracy import certify_nondegeneracy
from services.tsirelson import SeesawConfig


def _random_spec(**update):
    spec = SimulationSpecModel(state="maximally_entangled", measurement_source="random", seed=5)
    return spec.model_copy(update=update)


# ─── Эталонная когерентная информация ─────────────────

def test_reference_coherent_info_known_states():
    assert reference_coherent_info(projector(maximally_entangled_state(3)), 3) == pytest.approx(math.log2(3))
    assert reference_coherent_info(np.eye(9) / 9, 3) == pytest.approx(-math.log2(3))


def test_reference_coherent_info_optimal_state():
    weights = np.array([1.0, CGLMP_GAMMA**2, 1.0]) / (2 + CGLMP_GAMMA**2)
    expected = numerics.entropy_of_distribution(weights)
    assert reference_coherent_info(projector(optimal_cglmp_state()), 3) == pytest.approx(expected, abs=1e-10)
    assert expected == pytest.approx(1.554, abs=2e-3)


# ─── Симуляция ────────────────────────────────────────

def test_maximally_mixed_gives_uniform_value(cglmp3):
    result = simulate_correlation(_random_spec(noise_w=1.0), cglmp3, 3)
    assert evaluate_bell(cglmp3, result.correlation) == pytest.approx(7 / 3, abs=1e-9)


def test_finite_shots(cglmp3):
    exact = simulate_correlation(_random_spec(), cglmp3, 3)
    sampled = simulate_correlation(_random_spec(shots=1_000_000), cglmp3, 3)
    sums = sampled.correlation.p.sum(axis=(2, 3))
    assert np.allclose(sums, 1.0, atol=1e-12)
    assert np.max(np.abs(sampled.correlation.p - exact.correlation.p)) <= 5e-3


def test_random_noise_family(cglmp3):
    result = simulate_correlation(_random_spec(noise_w=0.5, noise_family="random"), cglmp3, 3)
    assert np.trace(result.rho).real == pytest.approx(1.0)


def test_optimal_state_requires_qutrits(chsh):
    with pytest.raises(BadSpec):
        simulate_correlation(SimulationSpecModel(state="optimal_cglmp"), chsh, 2)


def test_file_state_requires_path(cglmp3):
    with pytest.raises(BadSpec):
        simulate_correlation(_random_spec(state="file"), cglmp3, 3)


def test_spec_validation():
    with pytest.raises(ValueError):
        SimulationSpecModel(noise_w=1.5)
    with pytest.raises(ValueError):
        SimulationSpecModel(shots=0)


# ─── Sweep ────────────────────────────────────────────

def test_sweep_rows(cglmp3, cglmp_cert):
    grid = default_w_grid(points=11, w_max=1.0)
    rows = perturbation_sweep(cglmp3, 3, cglmp_cert, grid, _random_spec())

    gaps = [r.gap for r in rows]
    assert gaps == sorted(gaps)
    assert violation_linearity_residual(rows) <= 1e-9
    for row in rows:
        assert row.gap == pytest.approx(cglmp_cert.c_q - row.violation, abs=1e-12)
        if row.gap >= cglmp_cert.eps1_max:
            assert row.ic_lower is None


def test_sweep_parallel_matches_sequential(cglmp3, cglmp_cert):
    grid = [0.0, 0.25, 0.5, 0.75]
    sequential = perturbation_sweep(cglmp3, 3, cglmp_cert, grid, _random_spec(), SeesawConfig(workers=1))
    parallel = perturbation_sweep(cglmp3, 3, cglmp_cert, grid, _random_spec(), SeesawConfig(workers=4))
    assert [vars(r) for r in sequential] == [vars(r) for r in parallel]


def test_sweep_metadata(cglmp3, cglmp_cert):
    grid = [0.0, 1.0]
    rows = perturbation_sweep(cglmp3, 3, cglmp_cert, grid, _random_spec())
    meta = sweep_metadata(cglmp3, 3, cglmp_cert, grid, _random_spec(), rows)
    assert meta.noise_family == "white"
    assert meta.stated_threshold_gap == 0.07
    assert meta.w_grid == grid


def test_positivity_threshold_stops_at_first_failure():
    class Row:
        def __init__(self, gap, ic):
            self.gap, self.ic_lower = gap, ic

    rows = [Row(0.0, 1.0), Row(0.02, 0.5), Row(0.05, -0.1), Row(0.06, 0.2)]
    assert positivity_threshold(rows) == 0.02
    assert positivity_threshold([Row(0.0, None)]) is None


# ─── Оптимальная точка CGLMP ──────────────────────────

@pytest.mark.slow
def test_optimal_cglmp_pipeline(cglmp3, full_cfg):
    alice, bob = optimal_cglmp_assemblages(cglmp3, full_cfg)
    spec = SimulationSpecModel(state="optimal_cglmp")
    result = simulate_correlation(spec, cglmp3, 3, full_cfg, (alice, bob))
    value = evaluate_bell(cglmp3, result.correlation)
    assert value == pytest.approx(3.3050, abs=1e-3)

    cert = certify_nondegeneracy(cglmp3, 3, full_cfg)
    bound = certify_entanglement(result.correlation, cglmp3, cert, 3)
    rho_a = numerics.partial_trace(result.rho, 3, 3, keep="A")
    assert bound.gamma_a >= numerics.purity(rho_a) - 1e-9
    assert bound.ic_lower is not None
    assert bound.ic_lower <= reference_coherent_info(result.rho, 3) + 1e-9


@pytest.mark.slow
def test_white_noise_sweep_shape(cglmp3, full_cfg):
    cert = certify_nondegeneracy(cglmp3, 3, full_cfg)
    grid = default_w_grid(points=16, w_max=0.3)
    rows = perturbation_sweep(cglmp3, 3, cert, grid, SimulationSpecModel(state="optimal_cglmp"), full_cfg)

    certified = [r for r in rows if r.ic_lower is not None]
    for row in rows:
        if row.ic_lower is not None:
            assert row.ic_lower <= row.ic_true + 1e-9
        if row.gap >= cert.eps1_max:
            assert row.ic_lower is None
    assert all(a.ic_lower >= b.ic_lower - 1e-12 for a, b in zip(certified, certified[1:]))
    assert any(r.gap <= 0.02 and r.ic_lower > 0 for r in certified)
    assert positivity_threshold(rows) is not None


@pytest.mark.slow
def test_lower_bound_never_exceeds_coherent_info(cglmp3, full_cfg):
    cert = certify_nondegeneracy(cglmp3, 3, full_cfg)
    grid = list(np.linspace(0.0, 0.15, 70))
    certified = []
    for family in ("white", "random"):
        template = SimulationSpecModel(state="optimal_cglmp", noise_family=family, seed=11)
        rows = perturbation_sweep(cglmp3, 3, cert, grid, template, full_cfg)
        certified += [r for r in rows if r.ic_lower is not None]

    assert len(certified) >= 100
    for row in certified:
        assert row.ic_lower <= row.ic_true + 1e-9
