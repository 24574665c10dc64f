"""Hull-function ansatz built from shifted layers and correctors.

For eps = delta |p0| and x_i = (x - i) / eps the partial sums are

    s_n(x) = delta L / alpha + sum_{i=-n..n} [phi(x_i) + delta psi(x_i)] - n,

and the hull function h is their limit as n -> inf. Because the far field of
phi and psi is an explicit series in 1/z, the part of the lattice sum beyond
|i| = n can be added in closed form (digamma / Hurwitz zeta), which is what
``hull_value`` does. The residual of the travelling-wave equation

    NL[h] = lambda_bar h' - delta L - eps I1[h] + W'(h),  lambda_bar = delta^2 c0 |p0| L

is evaluated with I1[h] from the linear-growth quadrature, exploiting that
h(x) - x is 1-periodic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import polygamma

from .corrector import CorrectorSolution
from .exceptions import ConvergenceError
from .fractional import LevyQuadratureConfig, half_laplacian_linear_growth, half_laplacian_quadrature
from .layer import LayerSolution
from .potential import PotentialSpec

_CHUNK = 1 << 21


@dataclass(frozen=True, eq=False)
class HullParams:
    delta: float
    p0: float
    L: float
    n: int
    layer: LayerSolution
    corrector: CorrectorSolution
    potential: PotentialSpec

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.p0 == 0:
            raise ValueError("p0 must be nonzero")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("truncation n must be an integer >= 1")
        if 1.0 / (self.delta * abs(self.p0)) < 2.0:
            raise ValueError(
                f"need 1/(delta |p0|) >= 2, got {1.0 / (self.delta * abs(self.p0)):.3g}"
            )
        if not math.isclose(self.corrector.L, self.L, rel_tol=1e-12, abs_tol=1e-14):
            raise ValueError(
                f"corrector was solved for L={self.corrector.L}, hull needs L={self.L}"
            )

    @property
    def eps(self) -> float:
        return self.delta * abs(self.p0)

    @property
    def lambda_bar(self) -> float:
        return self.delta**2 * self.layer.c0 * abs(self.p0) * self.L


@dataclass(frozen=True)
class HullEvaluation:
    x: float
    gamma: float
    i0: int
    h: float
    h1: float
    h2: float
    i1: float
    nl: float
    lambda_bar: float
    n: int
    increment: float

    @property
    def deviation(self) -> float:
        """h(x) - x, bounded uniformly in x."""
        return self.h - self.x


def split_lattice(x: float):
    """x = i0 + gamma with gamma in (-1/2, 1/2]."""
    i0 = math.ceil(x - 0.5)
    gamma = x - i0
    if gamma <= -0.5:  # round-off at the left end of the interval
        i0 -= 1
        gamma += 1.0
    return int(i0), float(gamma)


def _term_sum(params, x, n, order, tilde):
    """sum_{i=-n..n} of phi^(k)(x_i) + delta psi^(k)(x_i) (phi - H if ``tilde``)."""
    eps = params.eps
    i = np.arange(-n, n + 1, dtype=float)
    out = np.empty(x.size)
    rows = max(1, _CHUNK // i.size)
    for s in range(0, x.size, rows):
        z = (x[s: s + rows, None] - i[None, :]) / eps
        f = params.layer.tilde(z, order) if tilde else params.layer.evaluate(z, order)
        if params.L != 0.0:
            f = f + params.delta * params.corrector.evaluate(z, order)
        out[s: s + rows] = f.sum(axis=1)
    return out


def ansatz_partial_sum(params: HullParams, x, order: int = 0):
    """The truncated sum s_n (order 0) or its first/second derivative, n = params.n."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(xa)):
        raise ValueError("x must be finite")
    n = params.n
    total = _term_sum(params, xa, n, order, tilde=False) / params.eps**order
    if order == 0:
        total = total + params.delta * params.L / params.layer.alpha - n
    return total if np.ndim(x) else float(total[0])


def _tail_series(params, order):
    t = params.layer.tail_series()
    if params.L != 0.0:
        c = params.corrector.tail_series().scaled(params.delta)
        m = max(len(t.minus), len(c.minus))
        pad = lambda v: tuple(v) + (0.0,) * (m - len(v))
        t = type(t)(
            tuple(a + b for a, b in zip(pad(t.minus), pad(c.minus))),
            tuple(a + b for a, b in zip(pad(t.plus), pad(c.plus))),
        )
    for _ in range(order):
        t = t.derivative()
    return t


def accelerated_sum(params: HullParams, x, n: int, order: int = 0) -> np.ndarray:
    """h^(order) from 2n+1 explicit terms plus the closed-form far-field tail."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    n = max(int(n), int(np.ceil(np.max(np.abs(xa)))) + 1)
    total = _term_sum(params, xa, n, order, tilde=True)
    total = total + _tail_series(params, order).lattice_tail(xa, n, params.eps)
    total = total / params.eps**order
    if order == 0:
        total = total + params.delta * params.L / params.layer.alpha + np.floor(xa) + 1.0
    return total


def hull_config(params: HullParams) -> LevyQuadratureConfig:
    """Quadrature layout resolving layers of width eps."""
    return LevyQuadratureConfig(r=0.5, R=1.0e4, nodes_per_decade=16, max_panel=params.eps / 4.0)


def hull_value(params: HullParams, x: float, tol: float = 1e-10, n_max: int = 1 << 16,
               cfg: LevyQuadratureConfig | None = None) -> HullEvaluation:
    """Converged hull value, derivatives, I1[h] and the NL residual at ``x``."""
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    n = max(params.n, int(math.ceil(abs(x))) + 2)
    prev = np.array([accelerated_sum(params, x, n, k)[0] for k in range(3)])
    inc = float("inf")
    while True:
        n2 = 2 * n
        cur = np.array([accelerated_sum(params, x, n2, k)[0] for k in range(3)])
        inc = float(np.max(np.abs(cur - prev) / np.array([1.0, 1.0, 1.0 / params.eps])))
        n, prev = n2, cur
        if inc < tol:
            break
        if n >= n_max:
            raise ConvergenceError(
                f"hull sums not converged at n={n} (last increment {inc:.3e})", [inc]
            )
    h, h1, h2 = (float(v) for v in prev)

    cfg = cfg or hull_config(params)
    nq = n + 2

    def hull(z):
        return accelerated_sum(params, z, nq, 0)

    i1 = half_laplacian_linear_growth(hull, 1.0, x, cfg, period=1.0)
    lam = params.lambda_bar
    nl = lam * h1 - params.delta * params.L - params.eps * i1 + float(params.potential(h, 1))
    i0, gamma = split_lattice(x)
    return HullEvaluation(x=x, gamma=gamma, i0=i0, h=h, h1=h1, h2=h2, i1=i1, nl=nl,
                          lambda_bar=lam, n=n, increment=inc)


def nl_residual(params: HullParams, x: float, tol: float = 1e-10) -> float:
    return hull_value(params, x, tol).nl


def sample_points(eps: float, count: int = 33) -> np.ndarray:
    """Points in (-1/2, 1/2] clustered at the layer core (width ~ eps)."""
    uniform = np.linspace(-0.5, 0.5, count)[1:]
    core = eps * np.tan(np.linspace(-1.4, 1.4, count))
    pts = np.concatenate([uniform, core[np.abs(core) <= 0.5]])
    return np.unique(np.round(pts, 14))


@dataclass
class ResidualScan:
    deltas: np.ndarray
    sup_residual: np.ndarray
    C: float
    slope: float
    points: int


def residual_scan(make_params, deltas, points: int = 33, tol: float = 1e-10) -> ResidualScan:
    """sup_x |NL| per delta, the smallest C with sup <= C delta^2, and the log-log slope."""
    deltas = np.asarray(sorted(deltas, reverse=True), dtype=float)
    sups = []
    for d in deltas:
        params = make_params(d)
        xs = sample_points(params.eps, points)
        sups.append(max(abs(nl_residual(params, x, tol)) for x in xs))
    sups = np.array(sups)
    slope = float(np.polyfit(np.log(deltas), np.log(sups), 1)[0]) if deltas.size > 1 else float("nan")
    return ResidualScan(deltas, sups, float(np.max(sups / deltas**2)), slope, points)


# ---------------------------------------------------------------------------
# lattice sums of 1/(x - i) and 1/(x - i)^2


@dataclass(frozen=True)
class Claim1Sums:
    gamma: float
    n: int
    S1: float
    S2: float
    S3: float
    S1_limit: float
    S2_limit: float
    S3_limit: float
    tail_bound: float


def _validate_gamma(gamma):
    if not (-0.5 < gamma <= 0.5):
        raise ValueError("gamma must lie in (-1/2, 1/2]")


def claim1_reference_sums(gamma: float, n: int, n_brute: int = 10**6) -> Claim1Sums:
    """Partial sums at x = gamma (i0 = 0) and their limits by brute force plus tail.

    S1 = sum_{0<|i|<=n} 1/(gamma - i), S2 = sum_{i=-n..-1} 1/(gamma - i)^2,
    S3 = sum_{i=1..n} 1/(gamma - i)^2. The limits sum N = max(n, n_brute)
    terms and add the midpoint-rule integral of the remainder; ``tail_bound``
    is the size of that correction.
    """
    _validate_gamma(gamma)
    if n < 1:
        raise ValueError("n must be >= 1")
    g = float(gamma)

    def partial(m):
        i = np.arange(1, m + 1, dtype=float)
        s1 = -2.0 * g * np.sum(1.0 / ((i - g) * (i + g)))
        return s1, np.sum(1.0 / (i + g) ** 2), np.sum(1.0 / (i - g) ** 2)

    S1, S2, S3 = partial(n)
    N = max(n, n_brute)
    B1, B2, B3 = partial(N)
    a = N + 0.5
    # int_a^inf dt / (t^2 - g^2) = atanh(g/a)/g, written to stay finite at g = 0
    t1 = np.arctanh(g / a) / g if g != 0 else 1.0 / a
    t2, t3 = 1.0 / (a + g), 1.0 / (a - g)
    return Claim1Sums(
        gamma=g, n=int(n), S1=float(S1), S2=float(S2), S3=float(S3),
        S1_limit=float(B1 - 2.0 * g * t1), S2_limit=float(B2 + t2), S3_limit=float(B3 + t3),
        tail_bound=float(max(abs(2.0 * g * t1), t2, t3)),
    )


# ---------------------------------------------------------------------------
# termwise I1 sums and the far-field integral


def termwise_half_laplacian(params: HullParams, x: float, n: int,
                            cfg: LevyQuadratureConfig | None = None):
    """Partial sums sum_{|i|<=n} I1[phi](x_i) and sum_{|i|<=n} I1[psi](x_i) by quadrature."""
    cfg = cfg or LevyQuadratureConfig(r=0.1, R=1.0e4, nodes_per_decade=16, max_panel=2.0)
    eps = params.eps
    z = (x - np.arange(-n, n + 1)) / eps
    lay, cor = params.layer, params.corrector
    phi_terms = np.array([
        half_laplacian_quadrature(lay.evaluate, float(lay.evaluate(zi, 1)), zi, cfg) for zi in z
    ])
    if params.L == 0.0:
        psi_terms = np.zeros_like(phi_terms)
    else:
        psi_terms = np.array([
            half_laplacian_quadrature(cor.evaluate, float(cor.evaluate(zi, 1)), zi, cfg)
            for zi in z
        ])
    return phi_terms, psi_terms


def _symmetric_partial_sums(terms):
    """Partial sums over |i| <= m for m = 0..n of a centred term array."""
    n = terms.size // 2
    centre = terms[n]
    pairs = terms[n + 1:] + terms[n - 1::-1]
    return centre + np.concatenate([[0.0], np.cumsum(pairs)])


def termwise_sums(params: HullParams, x: float, n: int, cfg=None):
    """Running sums (m = 0..n) of the termwise I1 contributions of phi and psi."""
    phi_terms, psi_terms = termwise_half_laplacian(params, x, n, cfg)
    return _symmetric_partial_sums(phi_terms), _symmetric_partial_sums(psi_terms)


def _panels(a, b, width, npts=16):
    m = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, m + 1)
    t, w = np.polynomial.legendre.leggauss(npts)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    lo, hi = edges[:-1, None], edges[1:, None]
    return (lo + (hi - lo) * t).ravel(), ((hi - lo) * w).ravel()


def far_field_contribution(params: HullParams, x: float, a: float, n: int, nodes: int = 8) -> float:
    """int_{|y|>=a} [s_n(x+y) - s_n(x)] dy / (pi y^2) for the truncated sum s_n.

    The y-range is split at n - 1 - |i0| and n + 1 + |i0|; beyond 2(n + 1 + |i0|)
    the integral is mapped to t = 1/y, where the integrand is smooth.
    """
    if a < 1:
        raise ValueError("far-field radius a must be >= 1")
    i0, _ = split_lattice(x)
    if not n > abs(i0) + 1 + a:
        raise ValueError(f"need n > |i0| + 1 + a = {abs(i0) + 1 + a:g}, got n={n}")
    p = HullParams(params.delta, params.p0, params.L, int(n), params.layer, params.corrector,
                   params.potential)
    width = p.eps / 2.0

    def s(y):
        return ansatz_partial_sum(p, y)

    sx = float(s(x))
    y1, y2 = n - 1 - abs(i0), n + 1 + abs(i0)
    total = 0.0
    for lo, hi in ((a, y1), (y1, y2), (y2, 2.0 * y2)):
        y, w = _panels(lo, hi, width, nodes)
        g = s(x + y) + s(x - y) - 2.0 * sx
        total += np.sum(w * g / y**2)
    t, w = _panels(0.0, 0.5 / y2, 0.125 / y2, npts=24)
    g = s(x + 1.0 / t) + s(x - 1.0 / t) - 2.0 * sx
    total += np.sum(w * g)
    return float(total / np.pi)


def far_field_limit(params: HullParams, x: float, a: float, n: int | None = None) -> float:
    """The n -> inf limit of :func:`far_field_contribution`.

    Uses the converged hull: y -> h(x+y) + h(x-y) - 2h(x) is 1-periodic, so
    the integral over y >= a folds onto [a, a+1] with weight trigamma(y).
    """
    if a < 1:
        raise ValueError("far-field radius a must be >= 1")
    nq = n or max(params.n, 256) + int(math.ceil(abs(x) + a)) + 2
    y, w = _panels(a, a + 1.0, params.eps / 4.0)
    hx = float(accelerated_sum(params, x, nq)[0])
    g = accelerated_sum(params, x + y, nq) + accelerated_sum(params, x - y, nq) - 2.0 * hx
    return float(np.sum(w * g * polygamma(1, y)) / np.pi)
