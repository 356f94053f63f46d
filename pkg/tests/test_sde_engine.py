import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from levysir.experiment_io import preset
from levysir.levy_model import deterministic_equilibria
from levysir.params import ModelParams, NoiseSpec, TemperedStableParams
from levysir.sde_engine import (SimConfig, SirState, StepDiverged, euler_step, integrate_path,
                                path_drivers, run_ensemble, simulate_path)

M = ModelParams(8.0, 5.3, 4.8, 0.5, 1.0)
TS = TemperedStableParams(0.7, 2.8, 1.2)
X0 = SirState(0.0, 1.6, 0.4, 0.04)


def short(name, t_end=2.0, **kw):
    cfg = preset(name).sim
    return cfg.with_(t_end=t_end, record_every=1, **kw)


# ---- single step --------------------------------------------------------------

def test_noise_free_step_is_ode_euler():
    dt = 1e-3
    new, hits = euler_step(X0, M, (0, 0, 0), (0, 0, 0), 0.0, dt)
    S, I, R = 1.6, 0.4, 0.04
    ref = (S + (8 - 5.3 * S - 4.8 * S * I) * dt,
           I + (4.8 * S * I - 6.8 * I) * dt,
           R + (1.0 * I - 5.3 * R) * dt)
    assert np.allclose(new.as_array(), ref, rtol=0, atol=1e-15)
    assert hits == 0 and new.t == dt


def test_pure_jump_step_is_multiplicative():
    still = ModelParams(0, 0, 0, 0, 0)
    for z in (0.01, 1.7, 40.0):
        new, _ = euler_step(X0, still, (0.2, 0.8, 0.5), (0, 0, 0), z, 1e-3)
        # exact up to the rounding of the final addition
        assert math.isclose(new.I, 0.4 * (1 + 0.8 * z), rel_tol=2e-16)
        assert math.isclose(new.S, 1.6 * (1 + 0.2 * z), rel_tol=2e-16)


def test_floor_projection_counts_components():
    new, hits = euler_step(X0, M, (0, 0, 0), (-5.0, 0.0, -5.0), 0.0, 1e-3, floor=1e-3)
    assert hits == 2
    assert new.S == pytest.approx(1.6e-3) and new.R == pytest.approx(4e-5)


def test_overflow_raises_step_diverged():
    with pytest.raises(StepDiverged) as info:
        euler_step(X0, M, (10.0, 10.0, 10.0), (0, 0, 0), 1e308, 1e-3)
    assert info.value.state == X0


@given(st.floats(1e-6, 10), st.floats(1e-6, 10), st.floats(1e-6, 10), st.floats(0, 50), st.floats(0, 2),
       st.floats(0, 2), st.floats(0, 2))
def test_positivity_without_gaussian_term(S, I, R, dy, s1, s2, s3):
    # dt below 1 / (mu + eps + eta + beta * max I) keeps every drift factor positive
    dt = 0.9 / (M.removal + M.mortality + M.transmission * max(I, S))
    new, hits = euler_step(SirState(0, S, I, R), M, (s1, s2, s3), (0, 0, 0), dy, dt, floor=0.0)
    assert hits == 0
    assert new.S > 0 and new.I > 0 and new.R > 0


# ---- configuration ------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(t_end=0.0), dict(dt=-1.0), dict(t_end=1.0, dt=0.3),
                                dict(initial=(1.0, 0.0, 1.0)), dict(floor=-1.0), dict(record_every=0)])
def test_sim_config_validation(kw):
    base = dict(model=M, noise=NoiseSpec.silent(), t_end=1.0, dt=1e-3)
    base.update(kw)
    with pytest.raises(ValueError):
        SimConfig(**base)


def test_record_indices_include_horizon():
    cfg = SimConfig(M, NoiseSpec.silent(), t_end=1.0, dt=0.1, record_every=3)
    assert cfg.record_indices().tolist() == [0, 3, 6, 9, 10]


def test_two_sided_rejected_unless_overridden():
    two = NoiseSpec(np.zeros((3, 3)), (0.1, 0.1, 0.1), TemperedStableParams(0.7, 1.0, 1.0, k_minus=1.0))
    cfg = SimConfig(M, two, t_end=0.1, dt=1e-3, trunc_eps=1e-2)
    with pytest.raises(ValueError):
        simulate_path(cfg)
    simulate_path(cfg.with_(allow_two_sided=True))


# ---- paths --------------------------------------------------------------------

def test_running_averages_follow_left_endpoint_rule():
    p = simulate_path(short("fig2_extinction"))
    f = p.states
    ref = np.vstack([f[:1], np.cumsum(f[:-1], axis=0) / np.arange(1, len(f))[:, None]])
    assert np.allclose(p.avg, ref, rtol=1e-12, atol=0)
    assert len(p.times) == len(p.states) == len(p.avg) == p.n_steps + 1


def test_driver_conservation():
    p = simulate_path(short("fig4_persistence", t_end=5.0))
    assert p.jump_count > 0
    assert abs(p.applied_driver - p.driver_total) <= 1e-12 * max(1.0, abs(p.driver_total))


@given(st.integers(0, 2 ** 64 - 1))
def test_bit_identical_reruns(seed):
    cfg = short("fig2_extinction", t_end=0.5, seed=seed)
    a, b = simulate_path(cfg, 3), simulate_path(cfg, 3)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.avg, b.avg)


def test_paths_use_distinct_streams():
    cfg = short("fig2_extinction", t_end=0.5)
    assert not np.array_equal(simulate_path(cfg, 0).states, simulate_path(cfg, 1).states)


def test_deterministic_preset_reaches_endemic_point():
    cfg = preset("deterministic_ode").sim.with_(t_end=200.0)
    p = simulate_path(cfg)
    estar = deterministic_equilibria(M).endemic
    assert np.all(np.abs(p.terminal - estar) < 1e-3)
    assert p.jump_count == 0


def test_total_population_decays_without_influx():
    cfg = SimConfig(ModelParams(0.0, 5.3, 4.8, 0.5, 1.0), NoiseSpec.silent(), t_end=2.0, dt=1e-3)
    u = simulate_path(cfg).states.sum(axis=1)
    assert np.all(np.diff(u) < 0)


def test_strong_convergence_trend():
    """Halving the step on a fixed driver path shrinks the terminal discrepancy."""
    base = short("fig2_extinction", t_end=1.0, dt=1.25e-3)
    gaps = np.zeros(2)
    for i in range(100):
        db, dy, _ = path_drivers(base, i)
        ends = []
        for level in range(3):
            k = 2 ** level
            cfg = base.with_(dt=base.dt * k)
            cdb = db.reshape(-1, k, 3).sum(axis=1)
            cdy = dy.reshape(-1, k).sum(axis=1)
            ends.append(integrate_path(cfg, cdb, cdy).terminal)
        fine, mid, coarse = ends
        gaps += [np.abs(coarse - mid).sum(), np.abs(mid - fine).sum()]
    assert gaps[1] < gaps[0]


# ---- ensembles ----------------------------------------------------------------

def test_single_path_ensemble_matches_simulate_path():
    cfg = short("fig2_extinction", t_end=1.0)
    ens = run_ensemble(cfg, 1)
    p = simulate_path(cfg, 0)
    assert np.array_equal(ens.states[0], p.states) and np.array_equal(ens.avg[0], p.avg)


def test_ensemble_is_deterministic_and_moments_consistent():
    cfg = short("fig4_persistence", t_end=1.0)
    a, b = run_ensemble(cfg, 4, (2.5, 2.0)), run_ensemble(cfg, 4, (2.5, 2.0))
    assert np.array_equal(a.states, b.states)
    u = a.states.sum(axis=2)
    assert np.allclose(a.moments[2.0], np.mean((1 + u) ** 2, axis=0))
    q = a.quantiles()
    assert q["terminal"].shape == (3, 3)
    assert np.all(q["average"][0] <= q["average"][2])


def test_ensemble_rejects_zero_paths():
    with pytest.raises(ValueError):
        run_ensemble(short("fig2_extinction", t_end=0.1), 0)
