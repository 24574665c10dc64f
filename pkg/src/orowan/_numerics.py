"""Small numerical helpers shared by the layer, corrector and hull modules."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import digamma, zeta


@lru_cache(maxsize=64)
def fd_weights(offsets: tuple, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative on integer ``offsets``."""
    s = np.asarray(offsets, dtype=float)
    n = s.size
    vander = np.vander(s, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(vander, rhs)


def fd_derivative(values: np.ndarray, spacing: float, order: int, width: int = 9) -> np.ndarray:
    """``order``-th derivative of equispaced samples with a ``width``-point stencil.

    Central stencils in the interior, shifted one-sided stencils of the same
    width near the ends.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < width:
        raise ValueError(f"need at least {width} samples, got {n}")
    half = width // 2
    out = np.empty(n)
    w = fd_weights(tuple(range(-half, half + 1)), order)
    acc = np.zeros(n - 2 * half)
    for j, wj in enumerate(w):
        acc += wj * values[j: n - 2 * half + j]
    out[half: n - half] = acc
    for i in list(range(half)) + list(range(n - half, n)):
        start = min(max(i - half, 0), n - width)
        offs = tuple(range(start - i, start - i + width))
        out[i] = fd_weights(offs, order) @ values[start: start + width]
    return out / spacing**order


@dataclass(frozen=True)
class TailSeries:
    """Far-field expansion  f(z) ~ sum_m c_m^{+-} z^(-m)  as z -> +-inf.

    ``minus[m-1]`` and ``plus[m-1]`` hold the coefficients of z^(-m) on the
    two sides. The z^(-1) coefficient must agree on both sides for lattice
    sums of the series to converge.
    """

    minus: tuple
    plus: tuple

    def __call__(self, z, order: int = 0):
        z = np.asarray(z, dtype=float)
        series = self
        for _ in range(order):
            series = series.derivative()
        out = np.zeros_like(z)
        for m, (cm, cp) in enumerate(zip(series.minus, series.plus), start=1):
            out = out + np.where(z < 0, cm, cp) * z ** (-m)
        return out

    def derivative(self) -> "TailSeries":
        minus = [0.0] + [-m * c for m, c in enumerate(self.minus, start=1)]
        plus = [0.0] + [-m * c for m, c in enumerate(self.plus, start=1)]
        return TailSeries(tuple(minus), tuple(plus))

    def scaled(self, factor: float) -> "TailSeries":
        return TailSeries(tuple(factor * c for c in self.minus), tuple(factor * c for c in self.plus))

    def lattice_tail(self, x, n: int, eps: float) -> np.ndarray:
        """sum over |i| > n of f((x - i) / eps), with f replaced by the series.

        Terms with i > n sit on the z -> -inf side, i < -n on the z -> +inf
        side. Uses digamma for the paired z^-1 terms and Hurwitz zeta for the
        rest; requires n >= |x|.
        """
        x = np.asarray(x, dtype=float)
        if np.any(n + 1 - np.abs(x) <= 0):
            raise ValueError("lattice tail needs n >= |x|")
        out = np.zeros_like(x)
        for m, (cm, cp) in enumerate(zip(self.minus, self.plus), start=1):
            if cm == 0.0 and cp == 0.0:
                continue
            scale = eps**m
            if m == 1:
                if not np.isclose(cm, cp, rtol=1e-12, atol=0.0):
                    raise ValueError("z^-1 tail coefficients differ; lattice sum diverges")
                out = out + scale * cm * (digamma(n + 1 - x) - digamma(n + 1 + x))
            else:
                right = (-1.0) ** m * zeta(m, n + 1 - x)  # i > n, x - i < 0
                left = zeta(m, n + 1 + x)  # i < -n, x - i > 0
                out = out + scale * (cm * right + cp * left)
        return out
