"""Euler-Maruyama simulation of Ornstein-Uhlenbeck sample paths.

The process is dU = lam * (mu - U) dt + sigma dW.  Randomness comes from a
counter-based Philox stream keyed by (seed, path_index), so any collection of
paths is reproducible regardless of the order or concurrency in which the
paths are generated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "OUParams",
    "SimulationGrid",
    "SamplePath",
    "em_step",
    "gaussian_increments",
    "simulate_ou_path",
    "simulate_ou_paths",
    "ou_moments",
]

MAX_SEED = 2**64


@dataclass(frozen=True)
class OUParams:
    """Parameters of dU = lam * (mu - U) dt + sigma dW.

    lam is the mean-reversion stiffness (1/time), sigma the diffusion
    amplitude (space/sqrt(time)), mu the equilibrium and u0 the initial
    value.  lam and sigma must be strictly positive; the analytic formulas
    divide by both.
    """

    lam: float
    sigma: float
    mu: float = 0.0
    u0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lam must be a positive real, got {self.lam}")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be a positive real, got {self.sigma}")
        if not (math.isfinite(self.mu) and math.isfinite(self.u0)):
            raise ValueError("mu and u0 must be finite")

    @property
    def centered(self) -> bool:
        return self.mu == 0.0 and self.u0 == 0.0

    def drift(self, t: float, x: float) -> float:
        return self.lam * (self.mu - x)

    def diffusion(self, t: float, x: float) -> float:
        return self.sigma


@dataclass(frozen=True)
class SimulationGrid:
    """Uniform time grid 0 = tau_0 < ... < tau_L = t_end with L = steps."""

    t_end: float
    steps: int

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be a positive real, got {self.t_end}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")

    @property
    def dt(self) -> float:
        return self.t_end / self.steps

    @property
    def times(self) -> np.ndarray:
        # linspace keeps times[-1] == t_end exactly instead of accumulating dt
        return np.linspace(0.0, self.t_end, self.steps + 1)

    @classmethod
    def from_dt(cls, t_end: float, dt: float, rel_tol: float = 1e-9) -> "SimulationGrid":
        """Grid with step dt; dt must divide t_end within rel_tol * t_end."""
        if not (math.isfinite(dt) and dt > 0):
            raise ValueError(f"dt must be a positive real, got {dt}")
        if not (math.isfinite(t_end) and t_end > 0):
            raise ValueError(f"t_end must be a positive real, got {t_end}")
        steps = round(t_end / dt)
        if steps < 1 or abs(steps * dt - t_end) > rel_tol * t_end:
            raise ValueError(f"dt={dt} does not divide t_end={t_end} evenly")
        return cls(t_end=t_end, steps=steps)


@dataclass(frozen=True)
class SamplePath:
    """Discrete trajectory on a uniform grid together with its seed."""

    grid: SimulationGrid
    values: np.ndarray
    seed: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.steps + 1,):
            raise ValueError(
                f"values must have length steps + 1 = {self.grid.steps + 1}, "
                f"got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)


def em_step(
    x_prev: float,
    t_next: float,
    dt: float,
    dw: float,
    drift: Callable[[float, float], float],
    diffusion: Callable[[float, float], float],
) -> float:
    """One explicit Euler-Maruyama update (dt > 0 assumed).

    Coefficients are evaluated at (t_next, x_prev).  For autonomous
    coefficients, as in the OU case, this coincides with the usual
    (t_prev, x_prev) convention.
    """
    return x_prev + drift(t_next, x_prev) * dt + diffusion(t_next, x_prev) * dw


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def _philox_key(seed: int, path_index: int) -> int:
    # seed occupies the high 64 bits, so distinct seeds never share a stream
    return (seed << 64) | int(path_index)


def gaussian_increments(seed: int, path_index: int, steps: int, dt: float) -> np.ndarray:
    """Brownian increments dW ~ N(0, dt) for one path.

    The stream is keyed by (seed, path_index); the position inside the
    stream plays the role of the step index.
    """
    seed = _check_seed(seed)
    rng = np.random.Generator(np.random.Philox(key=_philox_key(seed, path_index)))
    return rng.standard_normal(steps) * math.sqrt(dt)


def _increments_batch(seed: int, first_index: int, n: int, steps: int, dt: float) -> np.ndarray:
    """Rows i = increments of path first_index + i, bit-identical to
    gaussian_increments.  Reuses one Philox instance and rewrites its state
    per path, which is about twice as fast as fresh construction."""
    seed = _check_seed(seed)
    bitgen = np.random.Philox(key=0)
    gen = np.random.Generator(bitgen)
    state = bitgen.state
    inner = state["state"]
    inner["key"][1] = np.uint64(seed)
    out = np.empty((n, steps))
    for i in range(n):
        inner["counter"][:] = 0
        inner["key"][0] = np.uint64(first_index + i)
        state["buffer"][:] = 0
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        state["uinteger"] = 0
        bitgen.state = state
        out[i] = gen.standard_normal(steps)
    out *= math.sqrt(dt)
    return out


def simulate_ou_path(
    params: OUParams, grid: SimulationGrid, seed: int, path_index: int = 0
) -> SamplePath:
    """Simulate one OU path by Euler-Maruyama starting at params.u0."""
    dw = gaussian_increments(seed, path_index, grid.steps, grid.dt)
    times = grid.times
    dt = grid.dt
    values = np.empty(grid.steps + 1)
    values[0] = params.u0
    x = params.u0
    for j in range(1, grid.steps + 1):
        x = em_step(x, times[j], dt, dw[j - 1], params.drift, params.diffusion)
        values[j] = x
    return SamplePath(grid=grid, values=values, seed=seed)


def simulate_ou_paths(
    params: OUParams, grid: SimulationGrid, seed: int, first_index: int, n: int
) -> np.ndarray:
    """Simulate n paths with indices first_index .. first_index + n - 1.

    Returns an (n, steps + 1) array whose rows are bit-identical to the
    values of simulate_ou_path at the same path index.
    """
    dw = _increments_batch(seed, first_index, n, grid.steps, grid.dt)
    dt = grid.dt
    lam, mu, sigma = params.lam, params.mu, params.sigma
    out = np.empty((n, grid.steps + 1))
    out[:, 0] = params.u0
    x = np.full(n, params.u0, dtype=float)
    for j in range(1, grid.steps + 1):
        # same expression and evaluation order as em_step with the OU coefficients
        x = x + lam * (mu - x) * dt + sigma * dw[:, j - 1]
        out[:, j] = x
    return out


def ou_moments(params: OUParams, t: float, tau: float) -> tuple[float, float]:
    """Closed-form mean at t and covariance at (t, tau), both >= 0.

    mean(t) = u0 exp(-lam t) + mu (1 - exp(-lam t));
    cov(t, tau) = sigma^2 / (2 lam) * (exp(-lam |t - tau|) - exp(-lam (t + tau))),
    the covariance of the centered part (a deterministic shift does not
    change it).
    """
    decay = math.exp(-params.lam * t)
    mean_t = params.u0 * decay + params.mu * (1.0 - decay)
    stationary = params.sigma**2 / (2.0 * params.lam)
    cov = stationary * (
        math.exp(-params.lam * abs(t - tau)) - math.exp(-params.lam * (t + tau))
    )
    return mean_t, cov
