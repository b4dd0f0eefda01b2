"""Occupation times of discrete sample paths and their Monte-Carlo estimation.

The occupation time of a path over [0, T] in a spatial window [a, b] is the
total time spent inside the window.  On a discrete path it is approximated
with the left-endpoint rule: the state at tau_j is held on [tau_j, tau_{j+1}),
so the result is dt times the number of grid states inside the window among
j = 0 .. L' - 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sde import OUParams, SamplePath, SimulationGrid, _increments_batch

__all__ = [
    "ObservationWindow",
    "MCEstimate",
    "sample_occupation_time",
    "mc_expected_occupation",
]

# window.t_end must sit on the path grid within this relative tolerance
GRID_ALIGNMENT_RTOL = 1e-9

_CHUNK_PATHS = 8192


@dataclass(frozen=True)
class ObservationWindow:
    """Time horizon t_end > 0 and spatial interval [a, b], a <= b.

    a = -inf and b = +inf are allowed and mean a one-sided or unbounded
    window.
    """

    t_end: float
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be a positive real, got {self.t_end}")
        if math.isnan(self.a) or math.isnan(self.b):
            raise ValueError("window endpoints must not be NaN")
        if not self.a <= self.b:
            raise ValueError(f"window endpoints must satisfy a <= b, got [{self.a}, {self.b}]")


@dataclass(frozen=True)
class MCEstimate:
    """Monte-Carlo mean with its standard error and provenance."""

    mean: float
    std_error: float
    n_samples: int
    seed: int

    def __post_init__(self):
        if self.mean < 0 or self.std_error < 0:
            raise ValueError("mean and std_error must be nonnegative")
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")


def _window_steps(window: ObservationWindow, grid: SimulationGrid) -> int:
    """Number of grid steps covering [0, window.t_end]; errors when the
    horizon does not land on a grid time."""
    if window.t_end > grid.t_end * (1.0 + GRID_ALIGNMENT_RTOL):
        raise ValueError(
            f"window longer than path: t_end={window.t_end} exceeds grid horizon {grid.t_end}"
        )
    dt = grid.dt
    j = round(window.t_end / dt)
    if j < 1 or abs(j * dt - window.t_end) > GRID_ALIGNMENT_RTOL * window.t_end:
        raise ValueError(
            f"window t_end={window.t_end} is not a grid time (dt={dt}); "
            "refusing to round silently"
        )
    return min(j, grid.steps)


def sample_occupation_time(path: SamplePath, window: ObservationWindow) -> float:
    """Discrete occupation time of one path, in [0, window.t_end].

    Uses the closed window a <= x <= b.  When every counted state is inside
    the window the full horizon t_end is returned exactly, avoiding the
    rounding of dt * L'.
    """
    lprime = _window_steps(window, path.grid)
    states = path.values[:lprime]
    count = int(np.count_nonzero((states >= window.a) & (states <= window.b)))
    if count == lprime:
        return window.t_end
    return path.grid.dt * count


def _half_open_count(path: SamplePath, window: ObservationWindow) -> int:
    """State count with the half-open convention a <= x < b.

    Exists so that occupation is exactly additive when a window is split at
    an interior point; the public operation uses the closed window.
    """
    lprime = _window_steps(window, path.grid)
    states = path.values[:lprime]
    return int(np.count_nonzero((states >= window.a) & (states < window.b)))


def _occupation_samples_multi(
    params: OUParams,
    grid: SimulationGrid,
    windows: list[ObservationWindow],
    seed: int,
    n_samples: int,
) -> np.ndarray:
    """Occupation times (one row per window) of paths 0 .. n_samples - 1 on
    a shared ensemble, computed chunk-wise without materialising full path
    matrices.  Each row matches the per-path route (simulate_ou_path +
    sample_occupation_time) bit for bit."""
    lam, mu, sigma, dt = params.lam, params.mu, params.sigma, grid.dt
    steps = grid.steps
    bounds = [(w.a, w.b) for w in windows]
    samples = np.empty((len(windows), n_samples))
    for start in range(0, n_samples, _CHUNK_PATHS):
        m = min(_CHUNK_PATHS, n_samples - start)
        dw = _increments_batch(seed, start, m, steps, dt)
        x = np.full(m, params.u0, dtype=float)
        inside = np.zeros((len(windows), m), dtype=np.int64)
        for j in range(steps):
            for row, (a, b) in enumerate(bounds):
                inside[row] += (x >= a) & (x <= b)
            x = x + lam * (mu - x) * dt + sigma * dw[:, j]
        for row, window in enumerate(windows):
            occ = dt * inside[row].astype(float)
            occ[inside[row] == steps] = window.t_end
            samples[row, start : start + m] = occ
    return samples


def _estimate_from_samples(samples: np.ndarray, n_samples: int, seed: int) -> MCEstimate:
    mean = float(np.mean(samples))
    std_error = float(np.std(samples, ddof=1) / math.sqrt(n_samples))
    return MCEstimate(mean=mean, std_error=std_error, n_samples=n_samples, seed=int(seed))


def mc_expected_occupation(
    params: OUParams,
    window: ObservationWindow,
    n_samples: int,
    dt: float,
    seed: int,
) -> MCEstimate:
    """Monte-Carlo estimate of the expected occupation time.

    Averages sample_occupation_time over n_samples paths whose Brownian
    streams are keyed (seed, path index), so the estimate is reproducible
    and independent of any internal chunking.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2 for a standard error")
    grid = SimulationGrid.from_dt(window.t_end, dt, rel_tol=GRID_ALIGNMENT_RTOL)
    samples = _occupation_samples_multi(params, grid, [window], seed, n_samples)[0]
    return _estimate_from_samples(samples, n_samples, seed)


def mc_expected_occupations(
    params: OUParams,
    windows,
    n_samples: int,
    dt: float,
    seed: int,
) -> list[MCEstimate]:
    """Monte-Carlo estimates for several windows on one shared ensemble.

    All windows of one horizon are read off the same simulation sweep, and
    all horizons draw the same per-path streams, so a path observed up to
    T1 < T2 is the prefix of the longer path: the whole set behaves like
    one measured ensemble.  Each estimate is bit-identical to
    mc_expected_occupation called with this seed.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2 for a standard error")
    windows = list(windows)
    estimates: dict[int, MCEstimate] = {}
    by_grid: dict[tuple[float, int], list[int]] = {}
    for index, window in enumerate(windows):
        grid = SimulationGrid.from_dt(window.t_end, dt, rel_tol=GRID_ALIGNMENT_RTOL)
        by_grid.setdefault((grid.t_end, grid.steps), []).append(index)
    for (t_end, steps), indices in by_grid.items():
        grid = SimulationGrid(t_end=t_end, steps=steps)
        group = [windows[i] for i in indices]
        samples = _occupation_samples_multi(params, grid, group, seed, n_samples)
        for row, index in enumerate(indices):
            estimates[index] = _estimate_from_samples(samples[row], n_samples, seed)
    return [estimates[i] for i in range(len(windows))]
