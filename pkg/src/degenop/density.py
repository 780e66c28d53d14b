"""Piecewise-cubic cutoffs xi_n and the truncations v_n = xi_n v.

For a boundary degeneracy point the cutoff vanishes on [0, 1/n] and
[1 - 1/n, 1], equals 1 on [2/n, 1 - 2/n], and uses the rising cubic

    R(s) = -2 s^3 + 9 s^2 - 12 s + 5,   s = n x,

on (1/n, 2/n).  R(1) = 0, R(2) = 1 and R'(1) = R'(2) = 0, so the pieces glue C^1.
On (1 - 2/n, 1 - 1/n) the falling cubic a_n x^3 + b_n x^2 + c_n x + d_n is
used; its coefficients are exact rationals in n, and in floating point it is
evaluated through the equal mirrored form R(n (1 - x)).

For an interior x0 the cutoff is the product of the boundary cutoff with
R(n |x - x0|) clamped to [0, 1], which excludes the window (x0 - 2/n, x0 + 2/n).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .quadrature import QuadratureScheme, build_graded_mesh, integrate, integrate_weighted
from .spaces import FunctionSample


def _rise(s: np.ndarray, k: int) -> np.ndarray:
    """k-th derivative (in s) of the C^1 ramp: 0 for s <= 1, R(s) on (1, 2), 1 for s >= 2."""
    s = np.asarray(s, dtype=float)
    mid = (s > 1.0) & (s < 2.0)
    out = np.zeros_like(s)
    if k == 0:
        out[s >= 2.0] = 1.0
        # R - 1 = -(s - 2)^2 (2s - 1), accurate near the plateau
        sm = s[mid]
        out[mid] = 1.0 - (sm - 2.0) ** 2 * (2.0 * sm - 1.0)
    elif k == 1:
        sm = s[mid]
        out[mid] = -6.0 * (sm - 1.0) * (sm - 2.0)
    elif k == 2:
        out[mid] = -12.0 * s[mid] + 18.0
    else:
        raise ValueError("only derivatives 0..2 are available")
    return out


def right_cubic_coefficients(n: int) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """(a_n, b_n, c_n, d_n) of the falling cubic on (1 - 2/n, 1 - 1/n), as exact rationals."""
    p = 1 - Fraction(2, n)
    q = 1 - Fraction(1, n)
    den = -p**3 + 3 * q * p**2 - 3 * q**2 * p + q**3
    a = 2 / den
    b = (-3 * p - 3 * q) / den
    c = 6 * q * p / den
    d = (q**3 - 3 * q**2 * p) / den
    return a, b, c, d


def right_cubic(n: int, x: Fraction | float):
    a, b, c, d = right_cubic_coefficients(n)
    return ((a * x + b) * x + c) * x + d


def _check_n(n: int) -> None:
    if int(n) != n or n < 4:
        raise ValueError(f"cutoff index n must be an integer >= 4, got {n}")


def _boundary_cutoff(n: int, x: np.ndarray, k: int) -> np.ndarray:
    """xi_n for a boundary degeneracy point: the left ramp times the right ramp."""
    left = [_rise(n * x, j) * n**j for j in range(k + 1)]
    right = [_rise(n * (1.0 - x), j) * (-n) ** j for j in range(k + 1)]
    return _product(left, right, k)


def _product(f: list, g: list, k: int) -> np.ndarray:
    if k == 0:
        return f[0] * g[0]
    if k == 1:
        return f[1] * g[0] + f[0] * g[1]
    return f[2] * g[0] + 2.0 * f[1] * g[1] + f[0] * g[2]


def xi(n: int, x, x0: float = 0.0, k: int = 0) -> np.ndarray:
    """k-th derivative (k <= 2) of the cutoff xi_n at x."""
    _check_n(n)
    x = np.asarray(x, dtype=float)
    if not 0.0 < x0 < 1.0:
        return _boundary_cutoff(n, x, k)
    d = x - x0
    sgn = np.sign(d)
    window = [_rise(n * np.abs(d), j) * (n * sgn) ** j for j in range(k + 1)]
    outer = [_boundary_cutoff(n, x, j) for j in range(k + 1)]
    return _product(outer, window, k)


def junctions(n: int, x0: float = 0.0) -> list[float]:
    """Points where xi_n changes piece; xi_n'' jumps there."""
    pts = {1.0 / n, 2.0 / n, 1.0 - 2.0 / n, 1.0 - 1.0 / n}
    if 0.0 < x0 < 1.0:
        pts |= {x0 - 2.0 / n, x0 - 1.0 / n, x0 + 1.0 / n, x0 + 2.0 / n}
    return sorted(p for p in pts if 0.0 < p < 1.0)


@dataclass(frozen=True)
class CutoffFunction:
    n_index: int
    x0: float = 0.0

    def __post_init__(self):
        _check_n(self.n_index)

    def __call__(self, x, k: int = 0) -> np.ndarray:
        return xi(self.n_index, x, self.x0, k)

    @property
    def junctions(self) -> list[float]:
        return junctions(self.n_index, self.x0)

    def truncate(self, v: FunctionSample) -> FunctionSample:
        """v_n = xi_n v with derivatives from the product rule."""
        if v.order < 2:
            raise ValueError("truncation needs v, v' and v''")

        def d0(x):
            return self(x) * v(x)

        def d1(x):
            return self(x, 1) * v(x) + self(x) * v(x, 1)

        def d2(x):
            return self(x, 2) * v(x) + 2.0 * self(x, 1) * v(x, 1) + self(x) * v(x, 2)

        return FunctionSample((d0, d1, d2), v.provenance)


def truncation_scheme(n: int, profile, n_cells: int = 32, nodes_per_cell: int = 12) -> QuadratureScheme:
    """Graded scheme with the cutoff junctions added as cell endpoints."""
    x0 = profile.x0
    hint = profile.alpha if profile.alpha is not None else 1.0
    return build_graded_mesh(x0, hint, n_cells, nodes_per_cell, junctions(n, x0 or 0.0))


def truncation_error(v: FunctionSample, n: int, profile,
                     scheme: QuadratureScheme | None = None) -> tuple[float, float]:
    """(|v_n - v|^2 in L^2_{1/a}, int ((v_n - v)'')^2) for v_n = xi_n v."""
    x0 = profile.x0 if profile.x0 is not None else 0.0
    cut = CutoffFunction(n, x0)
    if scheme is None:
        scheme = truncation_scheme(n, profile)

    def g(x, k=0):
        return cut.truncate(v)(x, k) - v(x, k)

    weighted = integrate_weighted(lambda x: g(x) ** 2, profile, scheme)
    second = integrate(lambda x: g(x, 2) ** 2, scheme)
    return float(weighted), float(second)
