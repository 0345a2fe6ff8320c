import math
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.errors import BadRank, BadSpec
from services import numerics
from services.bell_model import bell_operator, classical_bound
from services.tsirelson import (
    SeesawConfig,
    ky_fan_value,
    optimal_povm_update,
    povm_objective,
    random_projective_assemblage,
    seesaw,
)


# ─── Ky Fan ───────────────────────────────────────────

def test_ky_fan_diagonal():
    value, projector = ky_fan_value(np.diag([5.0, 3.0, 1.0]), 2)
    assert value == pytest.approx(8.0)
    assert_allclose(projector, np.diag([1.0, 1.0, 0.0]), atol=1e-12)


def test_ky_fan_full_rank_is_trace(rng):
    h = numerics.random_density_matrix(4, rng) * 3 - np.eye(4)
    value, projector = ky_fan_value(h, 4)
    assert value == pytest.approx(np.trace(h).real)
    assert_allclose(projector, np.eye(4), atol=1e-10)


def test_ky_fan_bad_rank():
    with pytest.raises(BadRank):
        ky_fan_value(np.eye(3), 0)
    with pytest.raises(BadRank):
        ky_fan_value(np.eye(3), 4)


def test_ky_fan_is_variational(rng):
    z = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    h = (z + z.conj().T) / 2
    top, _ = ky_fan_value(h, 1)
    for _ in range(100):
        psi = numerics.random_pure_state(6, rng)
        assert top >= np.real(psi.conj() @ h @ psi) - 1e-12


# ─── POVM подзадача ───────────────────────────────────

def test_povm_update_two_outcome_helstrom():
    k = np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    update = optimal_povm_update(k, 2)
    assert update.objective == pytest.approx(2.0, abs=1e-8)
    assert_allclose(update.povm[0], np.diag([1.0, 0.0]), atol=1e-6)


def test_povm_update_equal_operators(rng):
    h = numerics.random_density_matrix(3, rng)
    k = np.array([h, h, h])
    update = optimal_povm_update(k, 3)
    assert update.objective == pytest.approx(np.trace(h).real, abs=1e-10)


def test_povm_update_beats_random_candidates(rng):
    k = []
    for _ in range(3):
        z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        k.append((z + z.conj().T) / 2)
    k = np.array(k)
    update = optimal_povm_update(k, 3, inner_iters=3000, tol=1e-14)

    assert_allclose(update.povm.sum(axis=0), np.eye(3), atol=1e-9)
    for op in update.povm:
        assert np.linalg.eigvalsh(op)[0] > -1e-10
    for _ in range(200):
        candidate = random_projective_assemblage(1, 3, 3, rng).povms[0]
        assert update.objective >= povm_objective(candidate, k) - 1e-6


def test_povm_update_never_decreases(rng):
    k = np.array([numerics.random_density_matrix(3, rng) - 0.2 * np.eye(3) for _ in range(3)])
    start = random_projective_assemblage(1, 3, 3, rng).povms[0]
    update = optimal_povm_update(k, 3, start=start)
    assert update.objective >= povm_objective(start, k) - 1e-12


@pytest.mark.parametrize("n_outcomes, dim", [(2, 3), (3, 2), (3, 3)])
def test_random_assemblage_is_projective(n_outcomes, dim, rng):
    assemblage = random_projective_assemblage(2, n_outcomes, dim, rng)
    assert assemblage.violations() == []
    for op in assemblage.povms.reshape(-1, dim, dim):
        assert_allclose(op @ op, op, atol=1e-10)


# ─── Seesaw ───────────────────────────────────────────

def test_config_validation():
    with pytest.raises(BadSpec):
        SeesawConfig(restarts=0)
    with pytest.raises(BadSpec):
        SeesawConfig(tol=0.0)


def test_config_overrides_skip_none():
    cfg = SeesawConfig.from_settings(restarts=4, seed=None)
    assert cfg.restarts == 4


def test_seesaw_invariants(chsh, quick_cfg):
    estimate = seesaw(chsh, 2, 1, quick_cfg)
    assert estimate.value == pytest.approx(sum(estimate.top_eigenvalues[:1]), abs=1e-9)
    assert estimate.value >= max(estimate.per_restart_values) - 1e-12
    assert len(estimate.per_restart_values) == quick_cfg.restarts
    assert np.all(np.diff(estimate.objective_trace) >= -1e-12)
    assert estimate.label == "heuristic lower estimate"

    rebuilt = bell_operator(chsh, estimate.best_alice, estimate.best_bob)
    value, _ = ky_fan_value(rebuilt, 1)
    assert value == pytest.approx(estimate.value, abs=1e-9)


def test_seesaw_is_deterministic(chsh, quick_cfg):
    first = seesaw(chsh, 2, 1, quick_cfg)
    second = seesaw(chsh, 2, 1, quick_cfg)
    assert first.value == second.value
    assert first.per_restart_values == second.per_restart_values


def test_seesaw_parallel_matches_sequential(chsh, quick_cfg):
    sequential = seesaw(chsh, 2, 1, quick_cfg)
    parallel = seesaw(chsh, 2, 1, replace(quick_cfg, workers=3))
    assert parallel.per_restart_values == sequential.per_restart_values
    assert parallel.value == sequential.value


def test_seesaw_bad_rank(chsh, quick_cfg):
    with pytest.raises(BadRank):
        seesaw(chsh, 2, 5, quick_cfg)


@pytest.mark.slow
def test_seesaw_chsh_reaches_tsirelson(chsh):
    cfg = SeesawConfig(restarts=10, seed=0)
    estimate = seesaw(chsh, 2, 1, cfg)
    assert estimate.value == pytest.approx(2 * math.sqrt(2), abs=1e-6)


@pytest.mark.slow
def test_seesaw_cglmp3_qutrits(cglmp3, full_cfg):
    c_q = seesaw(cglmp3, 3, 1, full_cfg)
    assert c_q.value == pytest.approx(3.3050, abs=1e-3)
    assert c_q.value >= classical_bound(cglmp3).value - 1e-9

    c2 = seesaw(cglmp3, 3, 2, full_cfg)
    assert c2.value == pytest.approx(6.2071, abs=5e-3)
    assert c2.value >= c_q.value


@pytest.mark.slow
def test_seesaw_cglmp3_qubits(cglmp3, full_cfg):
    value = seesaw(cglmp3, 2, 1, full_cfg).value
    assert 3.0 < value < 3.3050
