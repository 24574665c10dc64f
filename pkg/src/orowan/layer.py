"""The stationary layer: I1[phi] = W'(phi), phi' > 0, phi(-inf)=0, phi(+inf)=1, phi(0)=1/2.

The profile is written as phi = phi_ref + u with

    phi_ref(x) = 1/2 + arctan(alpha x) / pi,

which carries the exact far field H(x) - 1/(alpha pi x) and whose I1 is known
in closed form. The bounded correction u decays like x^-2 and is solved for
by damped Newton on a truncated interval [-X, X]; outside it u is continued
as u(+-X) (X/x)^2, both inside the operator and when the profile is evaluated.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline

from ._numerics import TailSeries, fd_derivative
from .exceptions import ConvergenceError, MonotonicityError
from .fractional import LevyQuadratureConfig, half_laplacian_matrix, half_laplacian_quadrature
from .potential import PotentialSpec

log = logging.getLogger(__name__)


def reference_profile(x, alpha: float, order: int = 0):
    """1/2 + arctan(alpha x)/pi and its first three derivatives."""
    x = np.asarray(x, dtype=float)
    a = alpha
    q = 1.0 + (a * x) ** 2
    if order == 0:
        return 0.5 + np.arctan(a * x) / np.pi
    if order == 1:
        return a / (np.pi * q)
    if order == 2:
        return -2.0 * a**3 * x / (np.pi * q**2)
    if order == 3:
        return a**3 * (6.0 * (a * x) ** 2 - 2.0) / (np.pi * q**3)
    raise ValueError("reference profile derivatives are available up to order 3")


def reference_half_laplacian(x, alpha: float):
    """I1 of the reference profile, -alpha^2 x / (pi (1 + alpha^2 x^2))."""
    x = np.asarray(x, dtype=float)
    return -(alpha**2) * x / (np.pi * (1.0 + (alpha * x) ** 2))


def _inverse_square(z, order):
    return [1.0, -2.0, 6.0, -24.0][order] * z ** (-2 - order)


@dataclass(frozen=True, eq=False)
class LayerSolution:
    xs: np.ndarray
    phi: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    phi3: np.ndarray
    alpha: float
    u: np.ndarray
    tail_minus: float
    tail_plus: float
    residual: float
    residual_history: tuple
    K0: float = float("nan")
    K1: float = float("nan")
    c0: float = float("nan")
    potential_name: str = ""
    _spline: object = field(default=None, repr=False)

    @property
    def half_width(self) -> float:
        return float(self.xs[-1])

    @property
    def spacing(self) -> float:
        return float(self.xs[1] - self.xs[0])

    def evaluate(self, z, order: int = 0) -> np.ndarray:
        """phi^(order)(z) on the whole line, using the tail model beyond +-X."""
        z = np.asarray(z, dtype=float)
        X = self.half_width
        out = np.array(reference_profile(z, self.alpha, order), dtype=float)
        inside = np.abs(z) <= X
        if np.any(inside):
            out[inside] += self._spline(z[inside], order)
        outside = ~inside
        if np.any(outside):
            zo = z[outside]
            b = np.where(zo < 0, self.tail_minus, self.tail_plus)
            out[outside] += b * _inverse_square(zo, order)
        return out

    def tilde(self, z, order: int = 0) -> np.ndarray:
        """phi - H (order 0) or the plain derivatives (order >= 1)."""
        z = np.asarray(z, dtype=float)
        v = self.evaluate(z, order)
        return v - (z >= 0) if order == 0 else v

    def tail_series(self) -> TailSeries:
        """Asymptotic series of phi - H used for lattice-sum acceleration."""
        a = self.alpha
        c1 = -1.0 / (a * np.pi)
        c3 = 1.0 / (3.0 * np.pi * a**3)
        return TailSeries((c1, self.tail_minus, c3), (c1, self.tail_plus, c3))


def _newton(A, ref, i_ref, u, potential, pin, tol, max_iter):
    history = []
    n = u.size
    mask = np.ones(n, dtype=bool)
    mask[pin] = False

    def residual(u):
        return i_ref + A @ u - potential(ref + u, 1)

    r = residual(u)
    for it in range(max_iter + 1):
        res = float(np.max(np.abs(r[mask])))
        history.append(res)
        log.debug("layer newton iter %d residual %.3e", it, res)
        if res <= tol:
            return u, r, history
        if it == max_iter:
            break
        J = A - np.diag(potential(ref + u, 2))
        rhs = -r.copy()
        J[pin, :] = 0.0
        J[pin, pin] = 1.0
        rhs[pin] = -u[pin]
        du = np.linalg.solve(J, rhs)
        step = 1.0
        while True:
            trial = u + step * du
            r_trial = residual(trial)
            if np.max(np.abs(r_trial[mask])) < res or step < 1e-4:
                break
            step *= 0.5
        u, r = trial, r_trial
        phi = ref + u
        bad = np.flatnonzero(np.diff(phi) <= 0.0)
        if bad.size:
            raise MonotonicityError(
                f"layer iterate lost monotonicity at node {bad[0]} after iteration {it + 1}",
                index=int(bad[0]),
            )
    raise ConvergenceError(
        f"layer Newton did not reach tol={tol:g} in {max_iter} iterations "
        f"(last residual {history[-1]:.3e})",
        history,
    )


def solve_layer(potential: PotentialSpec, half_width: float = 40.0, count: int = 4096,
                tol: float = 1e-10, max_iter: int = 50, u0=None) -> LayerSolution:
    """Solve for the layer profile on [-half_width, half_width] with ``count`` intervals.

    Newton starts from the arctan profile with slope alpha, plus ``u0`` when
    given (a callable of x or an array on the grid).
    """
    X = float(half_width)
    if X < 20:
        raise ValueError(f"layer half width must be >= 20, got {X}")
    if count < 512 or count % 2:
        raise ValueError(f"layer count must be an even integer >= 512, got {count}")
    if not tol > 0:
        raise ValueError("layer tolerance must be positive")

    alpha = float(potential.alpha)
    xs = np.linspace(-X, X, count + 1)
    h = xs[1] - xs[0]
    pin = count // 2
    A = half_laplacian_matrix(xs.size, h, tail_power=2)
    ref = reference_profile(xs, alpha)
    if u0 is None:
        start = np.zeros_like(xs)
    else:
        start = np.asarray(u0(xs) if callable(u0) else u0, dtype=float)
        if start.shape != xs.shape:
            raise ValueError(f"initial perturbation must have {xs.size} values")
        start = start - start[pin]
    u, r, history = _newton(
        A, ref, reference_half_laplacian(xs, alpha), start, potential, pin, tol, max_iter
    )
    return assemble_layer(potential, xs, u - u[pin], history)


def assemble_layer(potential: PotentialSpec, xs: np.ndarray, u: np.ndarray,
                   history=(float("nan"),)) -> LayerSolution:
    """Build a LayerSolution from the solved perturbation u on the grid xs."""
    xs = np.asarray(xs, dtype=float)
    u = np.asarray(u, dtype=float)
    alpha = float(potential.alpha)
    h = xs[1] - xs[0]
    X = xs[-1]
    phi = reference_profile(xs, alpha) + u
    derivs = [reference_profile(xs, alpha, k) + fd_derivative(u, h, k) for k in (1, 2, 3)]
    if np.any(derivs[0] <= 0):
        j = int(np.argmax(derivs[0] <= 0))
        raise MonotonicityError(f"phi' <= 0 at x={xs[j]:g}", index=j, x=float(xs[j]))

    layer = LayerSolution(
        xs=xs, phi=phi, phi1=derivs[0], phi2=derivs[1], phi3=derivs[2], alpha=alpha, u=u,
        tail_minus=float(u[0] * X**2), tail_plus=float(u[-1] * X**2),
        residual=float(history[-1]), residual_history=tuple(float(v) for v in history),
        potential_name=potential.name, _spline=make_interp_spline(xs, u, k=5),
    )
    report = verify_layer_decay(layer)
    return _replace(layer, K0=report.K0, K1=report.K1, c0=c0_constant(layer))


def _replace(layer, **changes):
    from dataclasses import replace

    return replace(layer, **changes)


def c0_constant(layer: LayerSolution) -> float:
    """Orowan constant 1 / int phi'^2 (trapezoid on the grid + x^-4 tails)."""
    X = layer.half_width
    core = np.trapezoid(layer.phi1**2, layer.xs)
    amp_minus = layer.phi1[0] * X**2
    amp_plus = layer.phi1[-1] * X**2
    total = core + (amp_minus**2 + amp_plus**2) / (3.0 * X**3)
    if not total > np.finfo(float).tiny:
        raise ValueError("int phi'^2 vanishes; layer derivative is degenerate")
    return 1.0 / total


@dataclass
class LayerDecayReport:
    K0: float
    K1: float
    ratios: dict
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations and self.K0 > 0


def verify_layer_decay(layer: LayerSolution, K0: float | None = None,
                       K1: float | None = None) -> LayerDecayReport:
    """Fit (or check) the constants of the two-sided x^-2 decay bounds on phi.

    Without explicit constants, K0 is the largest and K1 the smallest value for
    which every bound holds on the grid; the violation list is then empty
    unless phi' fails to stay positive.
    """
    x = layer.xs
    w = 1.0 + x**2
    far = np.abs(x) >= 1.0
    tail_dev = np.abs(layer.phi[far] - (x[far] >= 0) + 1.0 / (layer.alpha * np.pi * x[far]))
    ratios = {
        "phi1_lower": layer.phi1 * w,
        "phi1_upper": layer.phi1 * w,
        "phi2": np.abs(layer.phi2) * w,
        "phi3": np.abs(layer.phi3) * w,
        "tail": tail_dev * x[far] ** 2,
    }
    fit_K0 = float(np.min(ratios["phi1_lower"]))
    fit_K1 = float(max(np.max(v) for k, v in ratios.items() if k != "phi1_lower"))
    K0 = fit_K0 if K0 is None else K0
    K1 = fit_K1 if K1 is None else K1

    violations = []
    xf = x[far]
    for name, vals, xx in [
        ("phi1_lower", ratios["phi1_lower"], x),
        ("phi1_upper", ratios["phi1_upper"], x),
        ("phi2", ratios["phi2"], x),
        ("phi3", ratios["phi3"], x),
        ("tail", ratios["tail"], xf),
    ]:
        bad = vals < K0 if name == "phi1_lower" else vals > K1
        violations += [(name, float(v)) for v in xx[bad]]
    if not K0 > 0:
        violations.append(("K0_positive", float("nan")))
    return LayerDecayReport(K0=K0, K1=K1, ratios=ratios, violations=violations)


def layer_residual_quadrature(layer: LayerSolution, potential: PotentialSpec, x,
                              cfg: LevyQuadratureConfig | None = None) -> np.ndarray:
    """|I1[phi](x) - W'(phi(x))| with I1 from pointwise quadrature of the interpolant."""
    cfg = cfg or LevyQuadratureConfig(r=0.1, max_panel=0.5)
    out = []
    for xi in np.atleast_1d(np.asarray(x, dtype=float)):
        i1 = half_laplacian_quadrature(layer.evaluate, float(layer.evaluate(xi, 1)), xi, cfg)
        out.append(i1 - float(potential(layer.evaluate(xi), 1)))
    return np.array(out)
