"""Clamped polynomial bases, stiffness / weighted-mass assembly and Green's formula.

The basis functions are n-fold integrals of shifted Legendre polynomials,

    phi_k^(n)(x) = sqrt(2m + 1) P_m(2x - 1),   m = k + n,

integrated from 0.  Because P_m is orthogonal to every polynomial of degree
< n, all derivatives of order < n vanish at both endpoints, so phi_k equals
x^n (1-x)^n times a Gegenbauer polynomial of degree k.  The n-th derivatives are
orthonormal, hence the unpinned stiffness matrix is the identity.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Legendre
from numpy.polynomial import legendre as L

from .errors import DivergenceError
from .quadrature import (QuadratureScheme, build_graded_mesh, check_overflow, diverging,
                         inverse_weight, tail_ratio)

DOMAIN = [0.0, 1.0]


@dataclass(frozen=True, eq=False)
class BasisSet:
    """``coeffs[:, k]`` are the Legendre coefficients (in t = 2x - 1) of phi_k."""

    order_n: int
    coeffs: np.ndarray
    constraint_pinned_x0: bool
    x0: float | None
    _deriv_cache: dict = field(default_factory=dict, repr=False)

    @property
    def size_N(self) -> int:
        return self.coeffs.shape[1]

    @property
    def functions(self) -> list[Legendre]:
        return [Legendre(self.coeffs[:, k], domain=DOMAIN) for k in range(self.size_N)]

    def _deriv_coeffs(self, k: int) -> np.ndarray:
        if k not in self._deriv_cache:
            self._deriv_cache[k] = L.legder(self.coeffs, m=k, scl=2.0, axis=0) if k else self.coeffs
        return self._deriv_cache[k]

    def eval(self, x, k: int = 0) -> np.ndarray:
        """k-th derivatives of all basis functions at ``x``, shape (len(x), N)."""
        t = 2.0 * np.asarray(x, dtype=float) - 1.0
        return L.legval(t, self._deriv_coeffs(k)).T

    def combine(self, c) -> Legendre:
        """The expansion sum_k c_k phi_k as one Legendre series."""
        return Legendre(self.coeffs @ np.asarray(c, dtype=float), domain=DOMAIN)


def build_basis(n: int, N: int, pin_x0: bool = False, x0: float | None = None) -> BasisSet:
    """Clamped basis of H^n_0(0,1); with ``pin_x0`` every function vanishes at x0.

    Pinning eliminates the constraint phi(x0) = 0 by Gaussian elimination on
    the function with the largest |phi(x0)|, leaving N - 1 functions.
    """
    if n < 2:
        raise ValueError(f"half-order n must be >= 2, got {n}")
    if N < 4:
        raise ValueError(f"basis size N must be >= 4, got {N}")
    if pin_x0:
        if x0 is None:
            raise ValueError("pinning requires x0")
        if x0 <= 0.0 or x0 >= 1.0:
            raise ValueError("pinning at a boundary x0 is redundant: clamping already vanishes there")
    deg = n + N - 1
    coeffs = np.zeros((deg + n + 1, N))
    for k in range(N):
        m = k + n
        c = np.zeros(m + 1)
        c[m] = np.sqrt(2.0 * m + 1.0)
        ci = L.legint(c, m=n, lbnd=-1.0, scl=0.5)
        coeffs[: len(ci), k] = ci
    basis = BasisSet(n, coeffs, False, x0)
    if not pin_x0:
        return basis
    v = basis.eval([x0])[0]
    p = int(np.argmax(np.abs(v)))
    keep = [k for k in range(N) if k != p]
    pinned = coeffs[:, keep] - np.outer(coeffs[:, p], v[keep] / v[p])
    return BasisSet(n, pinned, True, x0)


@dataclass(frozen=True, eq=False)
class AssembledOperator:
    """S_jk = int phi_j^(n) phi_k^(n) and M_jk = int phi_j phi_k / a.

    S always holds the nonnegative form, i.e. the operator represented is
    (-1)^n a u^(2n); ``sign`` records that (-1)^n.
    """

    stiffness: np.ndarray
    weighted_mass: np.ndarray
    basis: BasisSet
    profile: object
    scheme: QuadratureScheme
    sign: int
    asymmetry: dict

    @property
    def N(self) -> int:
        return self.stiffness.shape[0]

    @property
    def n(self) -> int:
        return self.basis.order_n


def default_scheme(profile, basis: BasisSet, n_cells: int = 32, extra_nodes: int = 8,
                   breakpoints=()) -> QuadratureScheme:
    """Graded scheme with enough Gauss nodes per cell to integrate the polynomial
    part of every assembly integrand exactly."""
    degree = basis.coeffs.shape[0] - 1
    q = max(8, degree + 1 + extra_nodes)
    hint = profile.alpha if profile.alpha is not None else (0.0 if profile.x0 is None else 1.0)
    return build_graded_mesh(profile.x0, hint, n_cells, q, breakpoints)


def _relative_asymmetry(a: np.ndarray) -> float:
    scale = np.max(np.abs(a))
    return float(np.max(np.abs(a - a.T)) / scale) if scale > 0 else 0.0


def assemble(basis: BasisSet, profile, scheme: QuadratureScheme | None = None) -> AssembledOperator:
    """Fill S and M by quadrature and symmetrise them.

    Raises DivergenceError naming a diagonal pair (j, j) whose phi_j^2/a is not
    integrable; in the strongly degenerate interior case that means the basis
    must be pinned at x0.
    """
    if scheme is None:
        scheme = default_scheme(profile, basis)
    if profile.x0 is not None and scheme.x0 != profile.x0:
        raise ValueError("scheme is not graded toward the profile's degeneracy point")
    n = basis.order_n
    x, w = scheme.nodes, scheme.weights
    phi = basis.eval(x, 0)
    dn = basis.eval(x, n)

    inv_a = inverse_weight(profile, scheme)
    sq = (w * inv_a)[:, None] * phi**2
    check_overflow(sq, x)
    if profile.x0 is not None:
        ratio, share = tail_ratio(scheme, sq)
        bad = np.flatnonzero(diverging(ratio, share))
        if len(bad):
            j = int(bad[0])
            raise DivergenceError(
                f"basis function {j} is not in L^2_(1/a): phi_{j}^2/a does not decay toward "
                f"x0={profile.x0} (pin the basis at x0)",
                pair=(j, j), ratio=float(ratio[j]),
            )

    s = (dn * w[:, None]).T @ dn
    m = (phi * (w * inv_a)[:, None]).T @ phi
    asym = {"stiffness": _relative_asymmetry(s), "weighted_mass": _relative_asymmetry(m)}
    s = 0.5 * (s + s.T)
    m = 0.5 * (m + m.T)
    return AssembledOperator(s, m, basis, profile, scheme, (-1) ** n, asym)


def green_residual(u, v, n: int, scheme: QuadratureScheme) -> float:
    """|int u^(2n) v - (-1)^n int u^(n) v^(n)| by quadrature."""
    x, w = scheme.nodes, scheme.weights
    lhs = w @ (u(x, 2 * n) * v(x))
    rhs = (-1) ** n * (w @ (u(x, n) * v(x, n)))
    return float(abs(lhs - rhs))


def green_consistency(op: AssembledOperator) -> float:
    """max_jk |int phi_j^(2n) phi_k - (-1)^n S_jk|."""
    n = op.n
    x, w = op.scheme.nodes, op.scheme.weights
    g = (op.basis.eval(x, 2 * n) * w[:, None]).T @ op.basis.eval(x, 0)
    return float(np.max(np.abs(g - op.sign * op.stiffness)))


def operator_csv(op: AssembledOperator, which: str = "stiffness") -> str:
    """Dense row-major CSV of S or M with a header comment line."""
    a = op.stiffness if which == "stiffness" else op.weighted_mass
    buf = io.StringIO()
    buf.write(f"# matrix={which} N={op.N} n={op.n} profile={op.profile.fingerprint()}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"c{k}" for k in range(op.N)])
    for row in a:
        writer.writerow([f"{v:.17g}" for v in row])
    return buf.getvalue()
