"""The order-1 Levy operator I1 = -(-Laplacian)^(1/2) with measure dz/(pi z^2).

Two independent realizations are provided:

* a Fourier multiplier (symbol -|k|) on periodic grids, plus the dense
  Toeplitz collocation matrix it induces on a zero-extended interval;
* pointwise singular-integral quadrature of the Levy-Khintchine form, split
  at an inner radius r into a compensated and an uncompensated part, on
  graded Gauss-Legendre panels.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import polygamma


@dataclass(frozen=True)
class Grid1D:
    period: float
    count: int

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError(f"grid period must be positive, got {self.period}")
        if int(self.count) != self.count or self.count < 4:
            raise ValueError(f"grid count must be an integer >= 4, got {self.count}")

    @property
    def spacing(self) -> float:
        return self.period / self.count

    def nodes(self) -> np.ndarray:
        return np.arange(self.count) * self.spacing

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers 2 pi m / period in rfft layout."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.count, d=self.spacing)


@dataclass(frozen=True)
class GridField:
    """slope * x + (periodic interpolant of ``values``) on ``grid``."""

    grid: Grid1D
    values: np.ndarray
    slope: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.count,):
            raise ValueError(
                f"field has {values.shape} values, grid expects ({self.grid.count},)"
            )
        if not np.all(np.isfinite(values)) or not np.isfinite(self.slope):
            raise ValueError("field contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class LevyQuadratureConfig:
    """Node layout for the pointwise quadrature.

    ``max_panel`` caps the panel length everywhere; set it to a fraction of
    the smallest feature width of the integrand (e.g. a quarter period).
    """

    r: float = 0.1
    R: float = 1.0e4
    nodes_per_decade: int = 32
    inner_decades: int = 1
    max_panel: float | None = None

    def __post_init__(self):
        if not (0.0 < self.r < 1.0 <= self.R):
            raise ValueError(
                f"levy quadrature needs 0 < inner_radius r < 1 <= R, got r={self.r}, R={self.R}"
            )
        if self.nodes_per_decade < 8:
            raise ValueError("nodes_per_decade must be >= 8")
        if self.inner_decades < 1:
            raise ValueError("inner_decades must be >= 1")
        if self.max_panel is not None and not self.max_panel > 0:
            raise ValueError("max_panel must be positive")


def half_laplacian_spectral(field: GridField) -> GridField:
    """Apply I1 on a periodic grid by the multiplier -|k|.

    The linear part ``slope * x`` contributes nothing (odd integrand against
    an even measure), so only the periodic values are transformed.
    """
    grid = field.grid
    if grid.count < 4:
        raise ValueError("spectral operator needs at least 4 grid points")
    out = np.fft.irfft(-grid.wavenumbers() * np.fft.rfft(field.values), n=grid.count)
    return GridField(grid, out, 0.0)


def line_kernel(m, spacing: float) -> np.ndarray:
    """Entries K_m of I1 for band-limited (sinc) interpolation on a grid of the real line.

    K_0 = -pi / (2h), K_m = 2 / (pi m^2 h) for odd m and 0 for even m != 0.
    """
    m = np.abs(np.asarray(m))
    out = np.where(m % 2 == 1, 2.0 / (np.pi * np.maximum(m, 1) ** 2 * spacing), 0.0)
    return np.where(m == 0, -np.pi / (2.0 * spacing), out)


@lru_cache(maxsize=8)
def _kernel_column(n: int, spacing: float) -> np.ndarray:
    col = line_kernel(np.arange(n), spacing)
    col.setflags(write=False)
    return col


@lru_cache(maxsize=8)
def _tail_column(n: int, spacing: float, power: float, extent: int) -> np.ndarray:
    """sum_{k>=1} K_{d+k} (X / (X + k h))^power for d = 0..n-1, truncated at k = extent."""
    X = 0.5 * (n - 1) * spacing
    k = np.arange(1, extent + 1)
    t = (X / (X + k * spacing)) ** power
    kern = line_kernel(np.arange(n + extent + 1), spacing)
    size = 1 << int(np.ceil(np.log2(n + 2 * extent + 2)))
    # correlation S(d) = sum_k kern[d + k] t[k-1]
    corr = np.fft.irfft(np.fft.rfft(kern, size) * np.conj(np.fft.rfft(t, size)), size)
    out = corr[1: n + 1]
    out.setflags(write=False)
    return out


def half_laplacian_matrix(n: int, spacing: float, tail_power: float | None = None,
                          tail_extent: int = 32) -> np.ndarray:
    """Dense collocation matrix of I1 on ``n`` equispaced nodes of the real line.

    Outside the nodes the function is extended by zero, or, with
    ``tail_power`` set, by  u_end * (X / |y|)^tail_power  (X the distance of
    the end node from the centre) out to ``tail_extent * n`` further nodes on
    each side. The tail makes the matrix a rank-2 update of a symmetric
    Toeplitz matrix.
    """
    spacing = float(spacing)
    A = toeplitz(_kernel_column(n, spacing))
    if tail_power is not None:
        col = _tail_column(n, spacing, float(tail_power), tail_extent * n)
        # node j sees the right tail at distance d = n - 1 - j
        A[:, -1] += col[::-1]
        # the left tail is the mirror image of the right one
        A[:, 0] += col
    return A


def half_laplacian_zero_extended(values: np.ndarray, spacing: float) -> np.ndarray:
    """Matrix-free version of :func:`half_laplacian_matrix` applied to ``values``."""
    values = np.asarray(values, dtype=float)
    n = values.size
    kern = line_kernel(np.arange(-(n - 1), n), float(spacing))
    size = 1 << int(np.ceil(np.log2(3 * n)))
    full = np.fft.irfft(np.fft.rfft(values, size) * np.fft.rfft(kern, size), size)
    return full[n - 1: 2 * n - 1]


# ---------------------------------------------------------------------------
# quadrature


@lru_cache(maxsize=16)
def _gauss_legendre(n: int):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def _split(edges: np.ndarray, max_panel: float | None) -> np.ndarray:
    if max_panel is None:
        return edges
    out = [edges[:1]]
    for a, b in zip(edges[:-1], edges[1:]):
        m = max(1, int(np.ceil((b - a) / max_panel)))
        out.append(np.linspace(a, b, m + 1)[1:])
    return np.concatenate(out)


def _panel_nodes(edges: np.ndarray, npts: int):
    t, w = _gauss_legendre(npts)
    a, b = edges[:-1, None], edges[1:, None]
    return (a + (b - a) * t).ravel(), ((b - a) * w).ravel()


def inner_nodes(cfg: LevyQuadratureConfig):
    """Nodes/weights on (0, r], geometrically graded toward 0."""
    edges = cfg.r * 10.0 ** -np.arange(cfg.inner_decades, -1, -1, dtype=float)
    edges = np.concatenate([[0.0], edges])
    return _panel_nodes(_split(edges, cfg.max_panel), cfg.nodes_per_decade)


def outer_nodes(cfg: LevyQuadratureConfig, upper: float):
    """Nodes/weights on [r, upper], one panel per decade (capped by max_panel)."""
    ndec = max(1, int(np.ceil(np.log10(upper / cfg.r))))
    edges = np.minimum(cfg.r * 10.0 ** np.arange(ndec + 1, dtype=float), upper)
    edges = np.unique(edges)
    return _panel_nodes(_split(edges, cfg.max_panel), cfg.nodes_per_decade)


def _checked(f, z):
    v = np.asarray(f(z), dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("evaluator returned non-finite values")
    return v


def _symmetric_integral(f, x, fprime_at_x, cfg, period):
    """(1/pi) * int_0^inf [f(x+z) + f(x-z) - 2 f(x)] / z^2 dz, compensated on (0, r]."""
    fx = float(_checked(f, np.array([x]))[0])

    z, w = inner_nodes(cfg)
    plus = _checked(f, x + z) - fx - fprime_at_x * z
    minus = _checked(f, x - z) - fx + fprime_at_x * z
    total = np.sum(w * (plus + minus) / z**2)

    if period is None:
        z, w = outer_nodes(cfg, cfg.R)
        pair = _checked(f, x + z) + _checked(f, x - z)
        total += np.sum(w * (pair - 2.0 * fx) / z**2)
        # closure beyond R: f(x+z) + f(x-z) replaced by its mean over the last decade
        last = z >= 0.1 * cfg.R
        far = np.sum(w[last] * pair[last]) / np.sum(w[last]) if last.any() else pair[-1]
        total += (far - 2.0 * fx) / cfg.R
    else:
        # z -> g(z) is periodic, so the sum over translates folds the whole
        # outer range into one period with weight trigamma(z / P) / P^2
        cfg_p = cfg if cfg.max_panel is not None else _with_max_panel(cfg, period / 8.0)
        edges = _split(np.array([cfg.r, cfg.r + period]), cfg_p.max_panel)
        z, w = _panel_nodes(edges, cfg.nodes_per_decade)
        g = _checked(f, x + z) + _checked(f, x - z) - 2.0 * fx
        total += np.sum(w * g * polygamma(1, z / period)) / period**2
    return total / np.pi


def _with_max_panel(cfg, max_panel):
    return LevyQuadratureConfig(cfg.r, cfg.R, cfg.nodes_per_decade, cfg.inner_decades, max_panel)


def half_laplacian_quadrature(f, fprime_at_x: float, x: float,
                              cfg: LevyQuadratureConfig | None = None,
                              period: float | None = None) -> float:
    """Pointwise I1[f](x) for a bounded, twice differentiable ``f``.

    ``f`` must accept numpy arrays. The inner integral over |z| <= r is
    compensated with ``fprime_at_x``; the outer one runs to ``cfg.R`` and is
    closed by replacing f(x+z) + f(x-z) beyond R with its mean over the last
    decade before R. For ``period``-periodic ``f`` the outer integral is
    instead folded onto one period exactly.
    """
    cfg = cfg or LevyQuadratureConfig()
    if not np.isfinite(x) or not np.isfinite(fprime_at_x):
        raise ValueError("quadrature point and derivative must be finite")
    return float(_symmetric_integral(f, float(x), float(fprime_at_x), cfg, period))


def half_laplacian_linear_growth(f, slope: float, x: float,
                                 cfg: LevyQuadratureConfig | None = None,
                                 period: float | None = None) -> float:
    """I1[f](x) for ``f`` with ``f - slope * x`` bounded.

    Each node z is paired with -z, so the linear part cancels exactly inside
    f(x+z) + f(x-z) - 2 f(x) and no derivative is needed. ``period`` refers
    to ``f - slope * x``.
    """
    cfg = cfg or LevyQuadratureConfig()
    x = float(x)
    if not np.isfinite(x) or not np.isfinite(slope):
        raise ValueError("quadrature point and slope must be finite")

    if period is None:
        # subtract the linear part so the constant far-field closure applies
        def g(z):
            return np.asarray(f(z), dtype=float) - slope * (np.asarray(z) - x)
    else:
        g = f
    return float(_symmetric_integral(g, x, 0.0, cfg, period))
