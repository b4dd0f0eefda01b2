import math

import numpy as np
import pytest

from outimes import (
    OUParams,
    SamplePath,
    SimulationGrid,
    em_step,
    gaussian_increments,
    ou_moments,
    simulate_ou_path,
    simulate_ou_paths,
)
from outimes.sde import _increments_batch

# frozen from the closed forms: 0.9**10 and sigma^2 (1 - 1/e) / (2 lam)
EULER_DECAY_10 = 0.34867844010000004
COV_HALF_QUARTER_AT_1 = 0.039507534926784855


def test_params_reject_nonpositive():
    with pytest.raises(ValueError):
        OUParams(lam=0.0, sigma=1.0)
    with pytest.raises(ValueError):
        OUParams(lam=-0.5, sigma=1.0)
    with pytest.raises(ValueError):
        OUParams(lam=1.0, sigma=0.0)
    with pytest.raises(ValueError):
        OUParams(lam=1.0, sigma=-1.0)
    with pytest.raises(ValueError):
        OUParams(lam=math.nan, sigma=1.0)


def test_centered_flag():
    assert OUParams(lam=1.0, sigma=1.0).centered
    assert not OUParams(lam=1.0, sigma=1.0, mu=0.5).centered
    assert not OUParams(lam=1.0, sigma=1.0, u0=-1.0).centered


def test_grid_properties():
    grid = SimulationGrid(t_end=25.0, steps=2500)
    assert grid.dt == 0.01
    times = grid.times
    assert times[0] == 0.0
    assert times[-1] == 25.0
    assert len(times) == 2501
    with pytest.raises(ValueError):
        SimulationGrid(t_end=1.0, steps=0)
    with pytest.raises(ValueError):
        SimulationGrid(t_end=0.0, steps=10)


def test_grid_from_dt_alignment():
    grid = SimulationGrid.from_dt(16.0, 0.01)
    assert grid.steps == 1600
    with pytest.raises(ValueError):
        SimulationGrid.from_dt(1.0, 0.3)


def test_sample_path_length_checked():
    grid = SimulationGrid(t_end=1.0, steps=10)
    with pytest.raises(ValueError):
        SamplePath(grid=grid, values=np.zeros(10), seed=0)


def test_em_step_zero_coefficients_identity():
    zero = lambda t, x: 0.0
    assert em_step(1.0, 0.1, 0.1, 123.4, zero, zero) == 1.0


def test_em_step_drift_only():
    drift = lambda t, x: 0.5 * (0.0 - x)
    zero = lambda t, x: 0.0
    assert em_step(1.0, 0.1, 0.1, 0.0, drift, zero) == pytest.approx(0.95, rel=1e-15)


def test_em_step_diffusion_only():
    drift = lambda t, x: 1.0 * (0.0 - x)
    diff = lambda t, x: 0.25
    assert em_step(0.0, 0.01, 0.01, 0.2, drift, diff) == pytest.approx(0.05, rel=1e-15)


def test_deterministic_euler_recursion():
    # lam=1, mu=0, dt=0.1: each step multiplies by 0.9
    drift = lambda t, x: 1.0 * (0.0 - x)
    zero = lambda t, x: 0.0
    x = 1.0
    for j in range(10):
        x = em_step(x, 0.1 * (j + 1), 0.1, 0.0, drift, zero)
    assert x == pytest.approx(EULER_DECAY_10, rel=1e-12)


def test_zero_diffusion_keeps_equilibrium():
    drift = lambda t, x: 0.5 * (0.0 - x)
    zero = lambda t, x: 0.0
    x = 0.0
    for j in range(50):
        x = em_step(x, 0.01 * (j + 1), 0.01, 0.7, drift, zero)
        assert x == 0.0


def test_path_determinism_and_start():
    params = OUParams(lam=0.5, sigma=0.25, u0=1.5)
    grid = SimulationGrid(t_end=2.0, steps=200)
    first = simulate_ou_path(params, grid, seed=42)
    second = simulate_ou_path(params, grid, seed=42)
    assert first.values[0] == 1.5
    assert np.array_equal(first.values, second.values)
    other = simulate_ou_path(params, grid, seed=43)
    assert not np.array_equal(first.values, other.values)


def test_increment_streams_keyed_by_seed_and_path():
    a = gaussian_increments(7, 0, 32, 0.01)
    assert np.array_equal(a, gaussian_increments(7, 0, 32, 0.01))
    assert not np.array_equal(a, gaussian_increments(7, 1, 32, 0.01))
    assert not np.array_equal(a, gaussian_increments(8, 0, 32, 0.01))


def test_batch_increments_match_scalar():
    batch = _increments_batch(987654321, 3, 4, 25, 0.04)
    for i in range(4):
        assert np.array_equal(batch[i], gaussian_increments(987654321, 3 + i, 25, 0.04))


def test_batch_paths_match_scalar_paths():
    params = OUParams(lam=0.5, sigma=0.25, mu=0.3, u0=1.0)
    grid = SimulationGrid(t_end=1.0, steps=100)
    batch = simulate_ou_paths(params, grid, seed=11, first_index=0, n=6)
    for i in range(6):
        single = simulate_ou_path(params, grid, seed=11, path_index=i)
        assert np.array_equal(batch[i], single.values)


def test_seed_range_checked():
    with pytest.raises(ValueError):
        gaussian_increments(-1, 0, 10, 0.1)
    with pytest.raises(ValueError):
        gaussian_increments(2**64, 0, 10, 0.1)


def test_moments_initial_and_stationary():
    params = OUParams(lam=0.5, sigma=0.25, mu=0.2, u0=1.0)
    mean0, cov0 = ou_moments(params, 0.0, 3.0)
    assert mean0 == 1.0
    assert cov0 == 0.0
    _, cov_inf = ou_moments(params, 500.0, 500.0)
    assert cov_inf == pytest.approx(0.25**2 / (2 * 0.5), rel=1e-12)


def test_moments_frozen_covariance():
    params = OUParams(lam=0.5, sigma=0.25)
    _, cov = ou_moments(params, 1.0, 1.0)
    assert cov == pytest.approx(COV_HALF_QUARTER_AT_1, rel=1e-14)


def test_mean_decays_from_u0_toward_mu():
    params = OUParams(lam=0.5, sigma=1.0, mu=2.0, u0=-1.0)
    previous = -1.0
    for t in (0.5, 1.0, 2.0, 5.0, 20.0, 60.0):
        mean, _ = ou_moments(params, t, t)
        assert mean > previous
        previous = mean
    assert previous == pytest.approx(2.0, abs=1e-12)


def test_sample_mean_matches_exponential_decay():
    # mean of X_T at T=1 decays to u0 exp(-lam) = exp(-0.5)
    params = OUParams(lam=0.5, sigma=0.25, u0=1.0)
    grid = SimulationGrid(t_end=1.0, steps=100)
    n = 100_000
    finals = np.empty(n)
    for start in range(0, n, 10_000):
        finals[start : start + 10_000] = simulate_ou_paths(
            params, grid, seed=5, first_index=start, n=10_000
        )[:, -1]
    std_err = finals.std(ddof=1) / math.sqrt(n)
    assert abs(finals.mean() - math.exp(-0.5)) <= 3.0 * std_err


def test_grid_refinement_under_shared_increments():
    # halving dt with coarse increments built as sums of fine increments
    # moves the terminal value less and less
    params = OUParams(lam=1.0, sigma=0.5, u0=1.0)
    n_paths, t_end = 160, 1.0
    levels = (16, 32, 64, 128)
    finest = levels[-1]
    finals = {level: np.empty(n_paths) for level in levels}
    for path in range(n_paths):
        fine = gaussian_increments(99, path, finest, t_end / finest)
        for level in levels:
            dw = fine.reshape(level, finest // level).sum(axis=1)
            dt = t_end / level
            x = params.u0
            for j in range(level):
                x = em_step(x, dt * (j + 1), dt, dw[j], params.drift, params.diffusion)
            finals[level][path] = x
    rms = [
        float(np.sqrt(np.mean((finals[a] - finals[b]) ** 2)))
        for a, b in zip(levels[:-1], levels[1:])
    ]
    assert rms[0] > rms[1] > rms[2]
