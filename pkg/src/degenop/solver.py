"""The elliptic problem (I + A) u = f and the parabolic problem u_t + A u = f.

Loads enter only through b_j = int f phi_j / a, the right-hand side of the
discrete Lax-Milgram problem (M + S) c = b.  Evolution is carried out in the
modal coordinates of a SpectralDecomposition, where each mode obeys
y' = -lambda y + h(t) and is integrated exactly for forcing that is linear in t
on each step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy.integrate import trapezoid

from .errors import DivergenceError, NumericalError
from .galerkin import AssembledOperator, BasisSet
from .quadrature import (QuadratureScheme, check_overflow, diverging, inverse_weight,
                         tail_ratio)
from .spectral import SpectralDecomposition


def load_vector(g: Callable, basis: BasisSet, profile, scheme: QuadratureScheme) -> np.ndarray:
    """b_j = int g phi_j / a, guarded by a check that g lies in L^2_{1/a}."""
    x, w = scheme.nodes, scheme.weights
    vals = np.broadcast_to(np.asarray(g(x), dtype=float), x.shape)
    if not np.all(np.isfinite(vals)):
        raise NumericalError("load function is not finite at a quadrature node")
    wa = w * inverse_weight(profile, scheme)
    sq = wa * vals**2
    check_overflow(sq, x)
    if scheme.x0 is not None:
        ratio, share = tail_ratio(scheme, sq)
        if diverging(ratio, share):
            raise DivergenceError(
                f"load is not in L^2_(1/a): g^2/a does not decay toward x0={scheme.x0}",
                ratio=float(ratio),
            )
    return (wa * vals) @ basis.eval(x, 0)


def _as_load(op: AssembledOperator, f) -> np.ndarray:
    if callable(f):
        return load_vector(f, op.basis, op.profile, op.scheme)
    b = np.asarray(f, dtype=float)
    if b.shape != (op.N,):
        raise ValueError(f"load vector must have length {op.N}, got shape {b.shape}")
    return b


def _cho(a: np.ndarray, what: str):
    try:
        return sla.cho_factor(a, lower=True)
    except sla.LinAlgError as exc:
        lo = float(np.linalg.eigvalsh(a)[0])
        raise NumericalError(f"{what} is not positive definite (smallest eigenvalue {lo:.3e})",
                             min_eigenvalue=lo) from exc


def project_datum(g: Callable, op: AssembledOperator) -> np.ndarray:
    """Weighted L^2 projection of g onto the basis span: M c = b."""
    b = load_vector(g, op.basis, op.profile, op.scheme)
    return sla.cho_solve(_cho(op.weighted_mass, "weighted mass matrix"), b)


@dataclass(frozen=True, eq=False)
class EllipticSolution:
    coefficients: np.ndarray
    residual_weighted: float
    load_norm: float
    load: np.ndarray


def solve_elliptic(op: AssembledOperator, f) -> EllipticSolution:
    """Solve (M + S) c = b.

    ``f`` is either a callable (the load is assembled from it) or a ready load
    vector b.  Residual and load are measured in the discrete dual norm
    sqrt(r^T M^{-1} r), the weighted norm of the Riesz representative.
    """
    b = _as_load(op, f)
    c = sla.cho_solve(_cho(op.weighted_mass + op.stiffness, "M + S"), b)
    r = (op.weighted_mass + op.stiffness) @ c - b
    fm = _cho(op.weighted_mass, "weighted mass matrix")

    def dual(v):
        return float(np.sqrt(max(v @ sla.cho_solve(fm, v), 0.0)))

    return EllipticSolution(c, dual(r), dual(b), b)


def _phi1(z: np.ndarray) -> np.ndarray:
    """(1 - e^{-z}) / z."""
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = -np.expm1(-z[nz]) / z[nz]
    return out


def _psi(z: np.ndarray) -> np.ndarray:
    """(1 - e^{-z}(1 + z)) / z^2 = int_0^1 s e^{-zs} ds."""
    out = np.empty_like(z)
    small = z < 0.1
    zs = z[small]
    term = np.ones_like(zs)
    acc = term / 2.0
    for k in range(1, 18):
        term = term * (-zs) / k
        acc = acc + term / (k + 2)
    out[small] = acc
    zl = z[~small]
    out[~small] = (1.0 - np.exp(-zl) * (1.0 + zl)) / zl**2
    return out


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    times: np.ndarray
    states: np.ndarray  # (m + 1, N) coefficient vectors
    energies: np.ndarray  # c^T M c
    dissipation: np.ndarray  # c^T S c = int (u^(n))^2
    forcing: Callable | None

    @property
    def energy_nonincreasing(self) -> bool:
        return bool(np.all(np.diff(self.energies) <= 1e-12 * self.energies[0]))

    @property
    def dissipation_integral(self) -> float:
        """Trapezoidal int_0^T int (u^(n))^2 dt."""
        return float(trapezoid(self.dissipation, self.times))


def evolve(dec: SpectralDecomposition, u0, f: Callable | None = None, T: float = 1.0,
           m: int = 100) -> EvolutionTrace:
    """Coefficients of the solution of u_t + A u = f(t, .), u(0) = u0, on a uniform grid.

    The homogeneous part is exact; the forcing is projected at each time node
    and interpolated linearly in between, and that interpolant is integrated
    exactly (an exponential integrator with the trapezoidal forcing model).
    """
    if T <= 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    if m < 1:
        raise ValueError(f"step count must be >= 1, got {m}")
    op = dec.operator
    times = np.linspace(0.0, T, m + 1)
    lam = dec.eigenvalues
    y = np.empty((m + 1, dec.N))
    y[0] = dec.modal(u0)
    if f is None:
        decay = np.exp(-lam[None, :] * times[:, None])
        y = decay * y[0]
    else:
        dt = T / m
        z = lam * dt
        e, p1, ps = np.exp(-z), _phi1(z), _psi(z)
        V = dec.eigenvectors

        def h(t):
            return V.T @ load_vector(lambda x: f(t, x), op.basis, op.profile, op.scheme)

        h_prev = h(times[0])
        for k in range(m):
            h_next = h(times[k + 1])
            y[k + 1] = e * y[k] + dt * (ps * h_prev + (p1 - ps) * h_next)
            h_prev = h_next
    states = y @ dec.eigenvectors.T
    states[0] = np.asarray(u0, dtype=float)
    energies = np.sum(y**2, axis=1)
    dissipation = np.sum(np.clip(lam, 0.0, None) * y**2, axis=1)
    return EvolutionTrace(times, states, energies, dissipation, f)
