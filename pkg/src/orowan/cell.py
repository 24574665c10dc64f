"""Cell problem for the effective Hamiltonian.

The evolution dv/dt = L + I1[v] - W'(v) with v(0, y) = p y is written for
w = v - p y, which is (1/|p|)-periodic and satisfies I1[v] = I1[w]. The
linear growth rate lambda of the spatial mean of w is H(p, L).
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BlowUpError, ConfigError
from .fractional import Grid1D
from .potential import PotentialSpec


@dataclass(frozen=True)
class CellProblemConfig:
    """Parameters of one cell-problem run.

    ``grid.period`` must equal 1/|p|. ``samples`` is the number of recorded
    (tau, mean w) pairs and ``snapshots`` the number of stored w profiles.
    """

    p: float
    L: float
    grid: Grid1D
    dt: float
    horizon: float
    burn_in: float = 0.2
    samples: int = 400
    snapshots: int = 8

    def __post_init__(self):
        if self.p == 0 or not math.isfinite(self.p):
            raise ConfigError("p must be finite and nonzero")
        if not math.isfinite(self.L):
            raise ConfigError("L must be finite")
        if not math.isclose(self.grid.period, 1.0 / abs(self.p), rel_tol=1e-12):
            raise ConfigError(f"grid period {self.grid.period} differs from 1/|p| = {1 / abs(self.p)}")
        if not self.dt > 0 or not self.horizon > 0:
            raise ConfigError("dt and horizon must be positive")
        if not 0.0 <= self.burn_in < 1.0:
            raise ConfigError("burn_in must lie in [0, 1)")
        if self.samples < 10:
            raise ConfigError("need at least 10 samples")

    @property
    def steps(self) -> int:
        return int(math.ceil(self.horizon / self.dt - 1e-9))

    @classmethod
    def for_density(cls, p: float, L: float, points_per_unit: float = 32.0, dt_factor: float = 0.1,
                    horizon: float = 100.0, burn_in: float = 0.2, min_count: int = 32, **kw):
        """Grid with at least ``points_per_unit`` points per unit of y (power-of-two count)."""
        period = 1.0 / abs(p)
        count = max(min_count, 1 << int(math.ceil(math.log2(points_per_unit * period))))
        grid = Grid1D(period, count)
        return cls(p, L, grid, dt_factor * grid.spacing, horizon, burn_in, **kw)


@dataclass
class CellTrajectory:
    """Recorded output of :func:`evolve_cell`."""

    config: CellProblemConfig
    times: np.ndarray
    means: np.ndarray
    sup_norms: np.ndarray
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    final: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class EffectiveHamiltonianEstimate:
    lam: float
    slope_fit_stderr: float
    times: np.ndarray
    means: np.ndarray
    converged: bool
    half_window_slope: float
    fit_residual: float
    drift: float

    @property
    def drift_samples(self) -> np.ndarray:
        return np.column_stack([self.times, self.means])


def evolve_cell(cfg: CellProblemConfig, potential: PotentialSpec | None, w0=None) -> CellTrajectory:
    """IMEX Euler: implicit in I1 (multiplier -|k|), explicit in W'.

    ``potential=None`` switches off the nonlinearity (W' = 0). ``w0`` is the
    initial periodic part, zero by default (v(0, y) = p y).
    """
    grid = cfg.grid
    n, dt = grid.count, cfg.dt
    y = grid.nodes()
    k = np.abs(2.0 * np.pi * np.fft.rfftfreq(n, d=grid.spacing))
    denom = 1.0 + dt * k
    w = np.zeros(n) if w0 is None else np.array(w0, dtype=float)
    if w.shape != (n,):
        raise ConfigError(f"initial data must have {n} values")
    if potential is not None:
        curv = float(np.max(np.abs(potential(np.linspace(0.0, 1.0, 257), 2))))
        if dt * curv > 1.0:
            warnings.warn(f"dt * sup|W''| = {dt * curv:.3g} exceeds 1; explicit step may be unstable",
                          RuntimeWarning, stacklevel=2)

    steps = cfg.steps
    every = max(1, steps // cfg.samples)
    snap_every = max(1, steps // max(cfg.snapshots, 1))
    times, means, sups, snap_t, snaps = [0.0], [w.mean()], [np.max(np.abs(w))], [0.0], [w.copy()]
    py = cfg.p * y
    for s in range(1, steps + 1):
        f = cfg.L - potential(py + w, 1) if potential is not None else np.full(n, cfg.L)
        w = np.fft.irfft((np.fft.rfft(w) + dt * np.fft.rfft(f)) / denom, n=n)
        if s % every == 0 or s == steps:
            if not np.all(np.isfinite(w)):
                raise BlowUpError(f"non-finite values at step {s} (tau={s * dt:.4g})")
            times.append(s * dt)
            means.append(w.mean())
            sups.append(np.max(np.abs(w)))
        if s % snap_every == 0 or s == steps:
            snap_t.append(s * dt)
            snaps.append(w.copy())
    return CellTrajectory(cfg, np.array(times), np.array(means), np.array(sups),
                          np.array(snap_t), np.array(snaps), w)


def _linear_fit(t, m):
    A = np.column_stack([t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, m, rcond=None)
    resid = m - A @ coef
    dof = max(t.size - 2, 1)
    sxx = np.sum((t - t.mean()) ** 2)
    stderr = math.sqrt(np.sum(resid**2) / dof / sxx)
    return float(coef[0]), stderr, resid


def estimate_lambda(trajectory: CellTrajectory, burn_in: float | None = None) -> EffectiveHamiltonianEstimate:
    """Least-squares slope of mean(w) against tau after burn-in."""
    burn = trajectory.config.burn_in if burn_in is None else burn_in
    if not 0.0 <= burn < 1.0:
        raise ValueError("burn_in must lie in [0, 1)")
    t, m = trajectory.times, trajectory.means
    keep = t >= burn * t[-1]
    t, m = t[keep], m[keep]
    if t.size < 10:
        raise ValueError(f"need >= 10 post-burn-in samples, have {t.size}")
    lam, se, resid = _linear_fit(t, m)
    half = t >= t[0] + 0.5 * (t[-1] - t[0])
    lam_h, se_h, _ = _linear_fit(t[half], m[half])
    drift = abs(m[-1] - m[0])
    fit_res = float(np.max(np.abs(resid)) / drift) if drift > 0 else float(np.max(np.abs(resid)))
    converged = abs(lam_h - lam) <= 2.0 * max(se, se_h, 1e-14 * max(abs(lam), 1.0))
    return EffectiveHamiltonianEstimate(lam, se, t, m, bool(converged), lam_h, fit_res, drift)


@dataclass(frozen=True)
class OrowanRow:
    delta: float
    p: float
    L: float
    lam: float
    lambda_over_delta2: float
    target: float
    rel_error: float
    converged: bool
    stderr: float = float("nan")
    error: str = ""

    def csv_fields(self):
        return [self.delta, self.p, self.L, self.lam, self.lambda_over_delta2, self.target,
                self.rel_error, self.converged]


OROWAN_HEADER = "delta,p,L,lambda,lambda_over_delta2,target_c0_p0_L0,rel_error,converged"


@dataclass(frozen=True)
class ScanSettings:
    """Resolution for each scan row; horizon is in units of 1/(delta^2 c0 |p0 L0|)."""

    points_per_unit: float = 32.0
    dt_factor: float = 0.1
    drift_periods: float = 3.0
    burn_in: float = 0.2
    samples: int = 400


def _scan_row(args):
    delta, p0, L0, c0, potential, settings = args
    p, L = delta * p0, delta * L0
    target = c0 * abs(p0) * L0
    try:
        rate = delta**2 * c0 * abs(p0) * abs(L0)
        horizon = settings.drift_periods / rate if rate > 0 else 100.0
        cfg = CellProblemConfig.for_density(p, L, settings.points_per_unit, settings.dt_factor,
                                            horizon, settings.burn_in, samples=settings.samples,
                                            snapshots=1)
        est = estimate_lambda(evolve_cell(cfg, potential))
    except Exception as exc:  # rows fail independently
        nan = float("nan")
        return OrowanRow(delta, p, L, nan, nan, target, nan, False, nan, f"{type(exc).__name__}: {exc}")
    ratio = est.lam / delta**2
    rel = (ratio - target) / target if target != 0 else float("nan")
    return OrowanRow(delta, p, L, est.lam, ratio, target, rel, est.converged, est.slope_fit_stderr)


def orowan_scan(p0: float, L0: float, deltas, potential: PotentialSpec, c0: float,
                settings: ScanSettings | None = None, workers: int = 1) -> list[OrowanRow]:
    """One cell-problem run per delta at (p, L) = (delta p0, delta L0).

    Rows are returned in the order of ``deltas`` regardless of ``workers``.
    """
    deltas = [float(d) for d in deltas]
    if not deltas or any(not d > 0 for d in deltas):
        raise ConfigError("deltas must be positive")
    if any(a <= b for a, b in zip(deltas, deltas[1:])):
        raise ConfigError("deltas must be sorted in strictly descending order")
    settings = settings or ScanSettings()
    jobs = [(d, p0, L0, c0, potential, settings) for d in deltas]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_scan_row, jobs))
    return [_scan_row(j) for j in jobs]
