"""Interacting dislocation particles.

    dx_i/dt = c0 ( -L0 + (1/pi) sum_{j != i} 1/(x_i - x_j) )

With ``wrap = P`` the N particles are one period of a P-periodic array. The
interaction sum for particle i then runs over its neighbours i - k and i + k,
k = 1..images*N, in the extended array, taken in pairs so that an equispaced
lattice cancels exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import BlowUpError, CollisionError

COLLISION_THRESHOLD = 1e-6


@dataclass(frozen=True)
class ParticleState:
    positions: np.ndarray
    t: float
    c0: float
    L0: float
    wrap: float | None = None
    images: int = 64

    def __post_init__(self):
        x = np.array(self.positions, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise ValueError("positions must be a nonempty 1-d array")
        if not np.all(np.isfinite(x)):
            raise BlowUpError("non-finite particle positions")
        if np.any(np.diff(x) <= 0):
            raise ValueError("positions must be strictly increasing")
        if self.wrap is not None:
            if not self.wrap > 0:
                raise ValueError("wrap period must be positive")
            if x[-1] - x[0] >= self.wrap:
                raise ValueError("particles must fit inside one wrap period")
        if self.images < 1:
            raise ValueError("images must be >= 1")
        x.setflags(write=False)
        object.__setattr__(self, "positions", x)

    def moved(self, positions, t):
        return replace(self, positions=positions, t=t)


def min_gap(state: ParticleState):
    """Smallest gap and the pair (i, i+1) realising it; wrapped arrays include the seam."""
    x = state.positions
    gaps = np.diff(x)
    if state.wrap is not None:
        gaps = np.append(gaps, state.wrap - (x[-1] - x[0]))
    if gaps.size == 0:
        return math.inf, None
    k = int(np.argmin(gaps))
    return float(gaps[k]), (k, (k + 1) % x.size)


def _velocities(x, c0, L0, wrap, images):
    n = x.size
    if wrap is None:
        d = x[:, None] - x[None, :]
        np.fill_diagonal(d, np.inf)
        s = np.sum(1.0 / d, axis=1)
    else:
        # neighbours i +- k, k = 1..images*n, of the periodically extended array
        idx = np.arange(n)[:, None] + np.arange(1, images * n + 1)[None, :]
        right = x[idx % n] + (idx // n) * wrap - x[:, None]
        idx = np.arange(n)[:, None] - np.arange(1, images * n + 1)[None, :]
        left = x[:, None] - (x[idx % n] + (idx // n) * wrap)
        s = np.sum(1.0 / left - 1.0 / right, axis=1)
    return c0 * (-L0 + s / np.pi)


def particle_rhs(state: ParticleState, threshold: float = COLLISION_THRESHOLD) -> np.ndarray:
    gap, pair = min_gap(state)
    if gap < threshold:
        raise CollisionError(f"gap {gap:.3e} below threshold {threshold:g}", pair, state.t)
    return _velocities(state.positions, state.c0, state.L0, state.wrap, state.images)


@dataclass
class ParticleTrajectory:
    times: np.ndarray
    positions: np.ndarray
    final: ParticleState


def integrate(state: ParticleState, dt: float, T: float,
              threshold: float = COLLISION_THRESHOLD) -> ParticleTrajectory:
    """Classical RK4 with fixed step; the last step is shortened to land on T."""
    if not dt > 0 or not T > 0:
        raise ValueError("dt and T must be positive")
    steps = int(math.ceil(T / dt - 1e-12))
    x, t = state.positions.copy(), state.t
    times, rows = [t], [x.copy()]

    def f(y, tt):
        return particle_rhs(state.moved(y, tt), threshold)

    for s in range(steps):
        h = min(dt, state.t + T - t)
        k1 = f(x, t)
        k2 = f(x + 0.5 * h * k1, t + 0.5 * h)
        k3 = f(x + 0.5 * h * k2, t + 0.5 * h)
        k4 = f(x + h * k3, t + h)
        x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = state.t + T if s == steps - 1 else t + h
        if not np.all(np.isfinite(x)):
            raise BlowUpError(f"non-finite positions at t={t:.4g}")
        if np.any(np.diff(x) <= 0):
            raise CollisionError("particles crossed", None, t)
        gap, pair = min_gap(state.moved(x, t))
        if gap < threshold:
            raise CollisionError(f"gap {gap:.3e} below threshold {threshold:g}", pair, t)
        times.append(t)
        rows.append(x.copy())
    return ParticleTrajectory(np.array(times), np.array(rows), state.moved(x, t))


def lattice_mean_velocity(trajectory: ParticleTrajectory, particles=None) -> float:
    """Mean displacement over (a subset of) particles divided by elapsed time."""
    elapsed = trajectory.times[-1] - trajectory.times[0]
    if elapsed <= 0:
        raise ValueError("trajectory has zero elapsed time")
    sel = slice(None) if particles is None else particles
    disp = trajectory.positions[-1, sel] - trajectory.positions[0, sel]
    return float(np.mean(disp) / elapsed)


def lattice_state(count: int, spacing: float, c0: float, L0: float, wrap: bool = True,
                  images: int = 64) -> ParticleState:
    x = spacing * (np.arange(count) - (count - 1) / 2.0)
    return ParticleState(x, 0.0, c0, L0, count * spacing if wrap else None, images)
