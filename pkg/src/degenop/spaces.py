"""Weighted norms, Hardy-type ratios and trace diagnostics at the degeneracy point."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Legendre, Polynomial

from .quadrature import QuadratureScheme, integrate, integrate_weighted

TRACE_DELTAS = 2.0 ** -np.arange(4, 15)
TRACE_MIN_EXPONENT = 0.25
TRACE_MAX_RELATIVE = 1e-4


@dataclass(frozen=True, eq=False)
class FunctionSample:
    """A function on [0, 1] given through its derivatives ``u^(0), ..., u^(m)``."""

    derivatives: tuple[Callable[[np.ndarray], np.ndarray], ...]
    provenance: str = "analytic"

    @property
    def order(self) -> int:
        return len(self.derivatives) - 1

    def __call__(self, x, k=0):
        if k > self.order:
            raise ValueError(f"derivative {k} not available (have up to {self.order})")
        return self.derivatives[k](np.asarray(x, dtype=float))

    def scaled(self, c: float) -> "FunctionSample":
        return FunctionSample(tuple((lambda x, f=f: c * f(x)) for f in self.derivatives), self.provenance)

    @classmethod
    def from_polynomial(cls, p, order: int, provenance="analytic") -> "FunctionSample":
        """Wrap a numpy polynomial series (any basis); derivatives are exact."""
        derivs = [p]
        for _ in range(order):
            derivs.append(derivs[-1].deriv())
        return cls(tuple(derivs), provenance)

    @classmethod
    def from_expression(cls, expr, order: int) -> "FunctionSample":
        """From a sympy expression (or string) in ``x``."""
        import sympy as sp

        x = sp.Symbol("x")
        e = sp.sympify(expr, locals={"x": x})
        funcs = []
        for _ in range(order + 1):
            f = sp.lambdify(x, e, "numpy")
            funcs.append(lambda t, f=f: np.broadcast_to(np.asarray(f(t), dtype=float), np.shape(t)))
            e = sp.diff(e, x)
        return cls(tuple(funcs), "analytic")

    @classmethod
    def from_coefficients(cls, basis, coeffs, order: int | None = None) -> "FunctionSample":
        series = basis.combine(coeffs)
        return cls.from_polynomial(series, 2 * basis.order_n if order is None else order,
                                   provenance="galerkin")


def clamped_polynomial(q_coeffs: Sequence[float], n: int, x0: float | None = None,
                       vanish_order: int = 0) -> Polynomial:
    """x^n (1-x)^n q(x) (x - x0)^vanish_order with q given by monomial coefficients."""
    p = Polynomial([0, 1]) ** n * Polynomial([1, -1]) ** n * Polynomial(q_coeffs)
    if vanish_order and x0 is not None:
        p = p * Polynomial([-x0, 1]) ** vanish_order
    return p


def random_fixtures(rng: np.random.Generator, count: int, n: int, order: int,
                    x0: float | None = None, vanish_order: int = 0) -> list[FunctionSample]:
    """Clamped polynomial fixtures x^n(1-x)^n q(x), q of degree <= 6 with U[-1, 1] coefficients.

    ``vanish_order`` multiplies by (x - x0)^k so that the first k derivatives
    vanish at an interior x0.
    """
    out = []
    for _ in range(count):
        deg = int(rng.integers(0, 7))
        q = rng.uniform(-1.0, 1.0, deg + 1)
        p = clamped_polynomial(q, n, x0, vanish_order)
        out.append(FunctionSample.from_polynomial(p, order))
    return out


def weighted_l2_norm(u: FunctionSample, profile, scheme: QuadratureScheme) -> float:
    """sqrt of the integral of u^2/a; raises DivergenceError outside L^2_{1/a}."""
    return float(np.sqrt(integrate_weighted(lambda x: u(x) ** 2, profile, scheme)))


def sobolev_norm(u: FunctionSample, i: int, profile, scheme: QuadratureScheme) -> float:
    """||u||_i = sqrt(||u||^2_{L^2_{1/a}} + ||u^(i)||^2_{L^2})."""
    w2 = integrate_weighted(lambda x: u(x) ** 2, profile, scheme)
    d2 = integrate(lambda x: u(x, i) ** 2, scheme)
    return float(np.sqrt(w2 + d2))


def h0_norm(u: FunctionSample, i: int, scheme: QuadratureScheme) -> float:
    """The unweighted H^i norm, sqrt(sum_{k<=i} ||u^(k)||^2)."""
    return float(np.sqrt(sum(integrate(lambda x, k=k: u(x, k) ** 2, scheme) for k in range(i + 1))))


def _ratio(num: float, den: float) -> float:
    if den <= 0.0:
        raise ZeroDivisionError("ratio undefined: the derivative integral vanishes")
    return num / den


def hardy_ratio(w: FunctionSample, profile, scheme: QuadratureScheme) -> float:
    """(int w^2/a) / (int w'^2)."""
    den = integrate(lambda x: w(x, 1) ** 2, scheme)
    num = integrate_weighted(lambda x: w(x) ** 2, profile, scheme)
    return _ratio(num, den)


def higher_hardy_ratio(u: FunctionSample, i: int, profile, scheme: QuadratureScheme) -> float:
    """(int (u^(i))^2/a) / (int (u^(i+1))^2).

    A DivergenceError here is the numerical sign that u^(i)(x0) != 0.
    """
    den = integrate(lambda x: u(x, i + 1) ** 2, scheme)
    num = integrate_weighted(lambda x: u(x, i) ** 2, profile, scheme)
    return _ratio(num, den)


def jensen_chain(u: FunctionSample, n: int, scheme: QuadratureScheme) -> list[float]:
    """The integrals of (u^(i))^2 for i = 1..n; nondecreasing for clamped u."""
    return [integrate(lambda x, i=i: u(x, i) ** 2, scheme) for i in range(1, n + 1)]


@dataclass(frozen=True)
class TraceSequence:
    rows: tuple[tuple[float, float, float], ...]  # (delta, left, right); nan where one-sided
    decay_exponent: float
    terminal_relative: float
    scale: float

    @property
    def vanishing(self) -> bool:
        return self.decay_exponent > TRACE_MIN_EXPONENT and self.terminal_relative < TRACE_MAX_RELATIVE


def boundary_trace_sequence(u: FunctionSample, i: int, profile, deltas=TRACE_DELTAS) -> TraceSequence:
    """|a u^(i)| at x0 -/+ delta, with a fitted log-log decay exponent.

    The magnitudes are measured against the sup of |u^(i)| on a uniform
    midpoint grid, so "vanishing" means a power-law decay with exponent above
    0.25 that ends below 1e-4 of that scale.
    """
    x0 = profile.x0
    deltas = np.asarray(deltas, dtype=float)
    if np.any(np.diff(deltas) >= 0) or np.any(deltas <= 0):
        raise ValueError("deltas must be positive and decreasing")
    left_ok, right_ok = x0 > 0.0, x0 < 1.0
    reach = min(d for d, ok in ((x0, left_ok), (1.0 - x0, right_ok)) if ok)
    if deltas[0] >= reach:
        raise ValueError(f"deltas must stay below {reach}")

    def side(x):
        return np.abs(profile.eval_a(x) * u(x, i))

    left = side(x0 - deltas) if left_ok else np.full(len(deltas), np.nan)
    right = side(x0 + deltas) if right_ok else np.full(len(deltas), np.nan)
    mag = np.fmax(left, right)

    grid = (np.arange(1024) + 0.5) / 1024
    scale = float(np.max(np.abs(u(grid, i))))
    scale = scale if scale > 0 else 1.0
    tiny = 1e-300
    if np.all(mag <= tiny):
        exponent = float("inf")
    else:
        exponent = float(np.polyfit(np.log(deltas), np.log(np.maximum(mag, tiny)), 1)[0])
    rows = tuple((float(d), float(l), float(r)) for d, l, r in zip(deltas, left, right))
    return TraceSequence(rows, exponent, float(mag[-1] / scale), scale)
