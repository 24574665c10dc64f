"""First-order corrector psi of the layer under an applied stress L.

    I1[psi] = W''(phi) psi + (L/alpha) (W''(phi) - alpha) + c phi',
    psi(+-inf) = 0,   c = L c0.

The linearised operator I1 - W''(phi) has the translation mode phi' in its
kernel, so psi is only determined up to multiples of phi'. We select the
representative with <psi, phi'> = 0 by appending that constraint as an extra
least-squares row; every output carries ``gauge = "orthogonal_to_phi1"``.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import make_interp_spline

from ._numerics import TailSeries, fd_derivative
from .exceptions import ConvergenceError
from .fractional import LevyQuadratureConfig, half_laplacian_matrix, half_laplacian_quadrature
from .layer import LayerSolution
from .potential import PotentialSpec

GAUGE = "orthogonal_to_phi1"


@dataclass(frozen=True, eq=False)
class CorrectorSolution:
    xs: np.ndarray
    psi: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    c: float
    L: float
    K2: float
    K3: float
    residual: float
    condition: float
    tail: TailSeries
    tail_start: float
    gauge: str = GAUGE
    _spline: object = field(default=None, repr=False)

    def evaluate(self, z, order: int = 0) -> np.ndarray:
        """psi^(order)(z) on the whole line; K2/z + k/z^2 beyond ``tail_start``."""
        z = np.asarray(z, dtype=float)
        inside = np.abs(z) <= self.tail_start
        out = np.zeros(z.shape)
        if self.L == 0.0:
            return out
        if np.any(inside):
            out[inside] = self._spline(z[inside], order)
        outside = ~inside
        if np.any(outside):
            out[outside] = self.tail(z[outside], order)
        return out

    def tail_series(self) -> TailSeries:
        return self.tail


class CorrectorSystem:
    """QR factorisation of the gauge-augmented collocation system of one layer."""

    def __init__(self, layer: LayerSolution, potential: PotentialSpec):
        xs = layer.xs
        h = layer.spacing
        self.w2 = potential(layer.phi, 2)
        M = half_laplacian_matrix(xs.size, h, tail_power=2) - np.diag(self.w2)
        self.matrix = M
        gauge_row = layer.phi1 * h
        # weight the constraint like an average operator row
        self.gauge_scale = np.linalg.norm(M, ord=np.inf) / np.linalg.norm(gauge_row, ord=1)
        aug = np.vstack([M, self.gauge_scale * gauge_row[None, :]])
        self.q, self.r = sla.qr(aug, mode="economic", check_finite=False)
        diag = np.abs(np.diag(self.r))
        self.condition = float(diag.max() / diag.min())
        self.potential_name = potential.name

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        b = np.concatenate([rhs, [0.0]])
        return sla.solve_triangular(self.r, self.q.T @ b, check_finite=False)


_systems: "weakref.WeakKeyDictionary[LayerSolution, CorrectorSystem]" = weakref.WeakKeyDictionary()


def corrector_system(layer: LayerSolution, potential: PotentialSpec) -> CorrectorSystem:
    system = _systems.get(layer)
    if system is None or system.potential_name != potential.name:
        system = CorrectorSystem(layer, potential)
        _systems[layer] = system
    return system


def corrector_rhs(layer: LayerSolution, potential: PotentialSpec, L: float) -> np.ndarray:
    alpha = layer.alpha
    return (L / alpha) * (potential(layer.phi, 2) - alpha) + L * layer.c0 * layer.phi1


def fredholm_defect(layer: LayerSolution, potential: PotentialSpec, L: float):
    """Inner product of the right-hand side with phi' over the whole line.

    Returns ``(defect, scale)`` with ``scale = ||phi'|| (||a|| + ||b||)`` for
    the two parts a = (L/alpha)(W''(phi) - alpha) and b = c phi' of the
    right-hand side (L2 norms on the grid). The sum of the norms stays
    meaningful when a and b cancel pointwise, as for the standard potential. Beyond +-X the (W''(phi) - alpha) phi' part is integrated
    exactly through its antiderivative W'(phi) - alpha phi, and phi'^2 through
    the same x^-4 tail used for c0.
    """
    alpha = layer.alpha
    xs, phi, phi1 = layer.xs, layer.phi, layer.phi1
    X = layer.half_width

    def anti(v):
        return potential(v, 1) - alpha * v

    core = np.trapezoid((potential(phi, 2) - alpha) * phi1, xs)
    tails = (anti(1.0) - anti(phi[-1])) + (anti(phi[0]) - anti(0.0))
    sq = np.trapezoid(phi1**2, xs) + ((phi1[0] * X**2) ** 2 + (phi1[-1] * X**2) ** 2) / (3 * X**3)
    defect = (L / alpha) * (core + tails) + L * layer.c0 * sq
    a = (L / alpha) * (potential(phi, 2) - alpha)
    b = L * layer.c0 * phi1
    norm = lambda v: np.sqrt(np.trapezoid(v**2, xs))
    scale = norm(phi1) * (norm(a) + norm(b))
    return float(defect), float(scale)


def _fit_tail(xs, psi, lo, hi):
    """Least-squares K2/z + k-/z^2 (z<0), K2/z + k+/z^2 (z>0) on lo <= |z| <= hi."""
    band = (np.abs(xs) >= lo) & (np.abs(xs) <= hi)
    z = xs[band]
    cols = np.stack([1.0 / z, np.where(z < 0, 1.0, 0.0) / z**2, np.where(z > 0, 1.0, 0.0) / z**2], 1)
    coef, *_ = np.linalg.lstsq(cols, psi[band], rcond=None)
    return coef


def solve_corrector(layer: LayerSolution, potential: PotentialSpec, L: float,
                    tol: float = 1e-7) -> CorrectorSolution:
    """Collocation solve of the corrector problem on the layer grid."""
    if not tol > 0:
        raise ValueError("corrector tolerance must be positive")
    if potential.name != layer.potential_name:
        raise ValueError("layer was solved for a different potential")
    system = corrector_system(layer, potential)
    rhs = corrector_rhs(layer, potential, float(L))
    psi = system.solve(rhs)
    res = float(np.max(np.abs(system.matrix @ psi - rhs)))
    if not np.all(np.isfinite(psi)):
        raise ConvergenceError(f"corrector system is singular (condition ~ {system.condition:.2e})")
    if res > tol:
        raise ConvergenceError(
            f"corrector residual {res:.3e} above tol {tol:g} (condition ~ {system.condition:.2e})",
            [res],
        )

    return assemble_corrector(layer, L, psi, res, system.condition)


def assemble_corrector(layer: LayerSolution, L: float, psi: np.ndarray, residual: float = float("nan"),
                       condition: float = float("nan")) -> CorrectorSolution:
    """Build a CorrectorSolution (derivatives, tail model, K2, K3) from grid values psi."""
    xs, h, X = layer.xs, layer.spacing, layer.half_width
    psi = np.asarray(psi, dtype=float)
    psi1 = fd_derivative(psi, h, 1)
    psi2 = fd_derivative(psi, h, 2)

    tail_start = 0.5 * X
    if L == 0:
        K2, km, kp = 0.0, 0.0, 0.0
    else:
        K2, km, kp = _fit_tail(xs, psi, 0.25 * X, tail_start)
        # re-pin the 1/z^2 coefficients so the tail joins psi continuously
        k0 = np.interp([-tail_start, tail_start], xs, psi)
        km = (k0[0] + K2 / tail_start) * tail_start**2
        kp = (k0[1] - K2 / tail_start) * tail_start**2
    tail = TailSeries((float(K2), float(km)), (float(K2), float(kp)))
    sol = CorrectorSolution(
        xs=xs, psi=psi, psi1=psi1, psi2=psi2, c=float(L) * layer.c0, L=float(L),
        K2=float(K2), K3=0.0, residual=float(residual), condition=float(condition), tail=tail,
        tail_start=tail_start, _spline=make_interp_spline(xs, psi, k=5),
    )
    return replace(sol, K3=verify_corrector_decay(sol).K3)


@dataclass
class CorrectorDecayReport:
    K2: float
    K3: float
    ratios: dict
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_corrector_decay(sol: CorrectorSolution, K3: float | None = None) -> CorrectorDecayReport:
    """Smallest K3 with |psi - K2/x| <= K3/x^2 (|x|>=1) and |psi'|,|psi''| <= K3/(1+x^2)."""
    x = sol.xs
    w = 1.0 + x**2
    far = np.abs(x) >= 1.0
    ratios = {
        "psi": np.abs(sol.psi[far] - sol.K2 / x[far]) * x[far] ** 2,
        "psi1": np.abs(sol.psi1) * w,
        "psi2": np.abs(sol.psi2) * w,
    }
    fit = float(max(np.max(v) for v in ratios.values()))
    K3 = fit if K3 is None else K3
    violations = []
    for name, vals in ratios.items():
        xx = x[far] if name == "psi" else x
        violations += [(name, float(v)) for v in xx[vals > K3]]
    return CorrectorDecayReport(K2=sol.K2, K3=K3, ratios=ratios, violations=violations)


def corrector_residual_quadrature(sol: CorrectorSolution, layer: LayerSolution,
                                  potential: PotentialSpec, x,
                                  cfg: LevyQuadratureConfig | None = None) -> np.ndarray:
    """Residual of the corrector equation with I1 from pointwise quadrature."""
    cfg = cfg or LevyQuadratureConfig(r=0.1, max_panel=0.5)
    out = []
    for xi in np.atleast_1d(np.asarray(x, dtype=float)):
        i1 = half_laplacian_quadrature(sol.evaluate, float(sol.evaluate(xi, 1)), xi, cfg)
        phi = float(layer.evaluate(xi))
        w2 = float(potential(phi, 2))
        rhs = (w2 * float(sol.evaluate(xi)) + (sol.L / layer.alpha) * (w2 - layer.alpha)
               + sol.c * float(layer.evaluate(xi, 1)))
        out.append(i1 - rhs)
    return np.array(out)
