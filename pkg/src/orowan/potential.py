"""Periodic misfit potentials and their analytic derivatives."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PotentialSpec:
    """A 1-periodic misfit potential W with derivatives up to order 4.

    ``eval(v, k)`` returns the k-th derivative of W at ``v`` (numpy
    broadcasting is supported). ``alpha`` is the stiffness W''(0).
    """

    eval: Callable[[np.ndarray, int], np.ndarray]
    alpha: float
    name: str

    def __call__(self, v, order=0):
        if order not in (0, 1, 2, 3, 4):
            raise ValueError(f"derivative order must be in 0..4, got {order}")
        return self.eval(v, order)


def _harmonic_series(amplitudes):
    """W(v) = sum_j a_j (1 - cos(2 pi j v)) / (2 pi j)^2 with derivatives."""
    amps = [(j + 1, a) for j, a in enumerate(amplitudes) if a != 0.0]

    def evaluate(v, order=0):
        v = np.asarray(v, dtype=float)
        out = np.zeros_like(v)
        for j, a in amps:
            w = TWO_PI * j
            arg = w * v
            if order == 0:
                out = out + a * (1.0 - np.cos(arg)) / w**2
            elif order == 1:
                out = out + a * np.sin(arg) / w
            elif order == 2:
                out = out + a * np.cos(arg)
            elif order == 3:
                out = out - a * w * np.sin(arg)
            else:
                out = out - a * w**2 * np.cos(arg)
        return out

    return evaluate


def make_standard_potential() -> PotentialSpec:
    """W(v) = (1 - cos 2 pi v) / (4 pi^2), the sinusoidal Peierls potential.

    Its layer solution is 1/2 + arctan(x)/pi and alpha = 1.
    """
    return PotentialSpec(eval=_harmonic_series([1.0]), alpha=1.0, name="standard")


def make_two_harmonic_potential(b: float = 0.5) -> PotentialSpec:
    """Standard potential plus ``b (1 - cos 4 pi v) / (16 pi^2)``.

    Admissible for ``b >= 0``; alpha = 1 + b. Has no closed-form layer, which
    makes it the non-trivial test case for the solvers.
    """
    if b < 0:
        raise ValueError("two-harmonic potential needs b >= 0 to stay positive off the integers")
    return PotentialSpec(
        eval=_harmonic_series([1.0, b]), alpha=1.0 + b, name=f"two_harmonic(b={b:g})"
    )


POTENTIALS: dict[str, Callable[[], PotentialSpec]] = {
    "standard": make_standard_potential,
    "two_harmonic": make_two_harmonic_potential,
}


def get_potential(label: str) -> PotentialSpec:
    try:
        return POTENTIALS[label]()
    except KeyError:
        raise ValueError(
            f"unknown potential {label!r}; choose one of {sorted(POTENTIALS)}"
        ) from None


@dataclass
class ValidationReport:
    periodicity_defect: float
    integer_violations: list = field(default_factory=list)
    positivity_violations: list = field(default_factory=list)
    alpha_value: float = float("nan")
    alpha_mismatch: bool = False

    @property
    def ok(self) -> bool:
        return not (
            self.integer_violations
            or self.positivity_violations
            or self.alpha_mismatch
            or self.periodicity_defect > 1e-12
        )


def validate_potential(spec: PotentialSpec, grid, atol: float = 1e-12) -> ValidationReport:
    """Check periodicity, zeros on the integers, positivity and alpha on ``grid``."""
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError("validation grid is empty")
    if not np.all(np.isfinite(grid)):
        raise ValueError("validation grid contains non-finite values")

    defect = 0.0
    for k in range(5):
        d = np.abs(spec(grid + 1.0, k) - spec(grid, k))
        # round-off in v + 1 is amplified by the derivative of order k + 1
        scale = 1.0 + np.abs(spec(grid, min(k + 1, 4)))
        defect = max(defect, float(np.max(d / scale)))

    ints = np.arange(np.floor(grid.min()), np.ceil(grid.max()) + 1.0)
    w_int = spec(ints, 0)
    integer_violations = [(float(m), float(w)) for m, w in zip(ints, w_int) if abs(w) > atol]

    off = grid[np.abs(grid - np.round(grid)) > 1e-9]
    w_off = spec(off, 0)
    positivity_violations = [(float(v), float(w)) for v, w in zip(off, w_off) if not w > 0.0]

    a = float(spec(0.0, 2))
    return ValidationReport(
        periodicity_defect=defect,
        integer_violations=integer_violations,
        positivity_violations=positivity_violations,
        alpha_value=a,
        alpha_mismatch=not (a > 0 and abs(a - spec.alpha) <= 1e-10 * max(1.0, abs(a))),
    )
