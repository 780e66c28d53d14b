"""Generalized eigendecomposition S v = lambda M v and the functional calculus built on it.

With M = L L^T the pencil reduces to the standard symmetric problem
L^{-1} S L^{-T} w = lambda w, and v = L^{-T} w.  The columns of V are then
M-orthonormal, so a coefficient vector c has modal coordinates V^T M c and
every function of A acts diagonally on them.

The reduced matrix has norm lambda_N, so its eigenvalues carry absolute
errors of order eps * lambda_N, which swamps the low end of the spectrum when
M is ill-conditioned.  Each eigenvalue is therefore replaced by the Rayleigh
quotient of its back-transformed eigenvector, which is accurate to the square
of the eigenvector error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError
from .galerkin import AssembledOperator

RESOLVENT_GAP = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns M-orthonormal
    operator: AssembledOperator
    cholesky: np.ndarray  # lower factor of M

    @property
    def N(self) -> int:
        return len(self.eigenvalues)

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    def modal(self, c) -> np.ndarray:
        """Modal coordinates V^T M c."""
        return self.eigenvectors.T @ (self.operator.weighted_mass @ np.asarray(c))

    def from_modal(self, y) -> np.ndarray:
        return self.eigenvectors @ y

    def orthonormality_defect(self) -> float:
        V, M = self.eigenvectors, self.operator.weighted_mass
        return float(np.max(np.abs(V.T @ M @ V - np.eye(self.N))))

    def residual(self) -> float:
        """max |S V - M V diag(lambda)|."""
        V = self.eigenvectors
        op = self.operator
        return float(np.max(np.abs(op.stiffness @ V - (op.weighted_mass @ V) * self.eigenvalues)))


def eigendecompose(op: AssembledOperator) -> SpectralDecomposition:
    """Solve S v = lambda M v by Cholesky reduction; eigenvalues ascending."""
    M = op.weighted_mass
    try:
        L = sla.cholesky(M, lower=True)
    except sla.LinAlgError as exc:
        lo = float(np.linalg.eigvalsh(M)[0])
        raise NumericalError(
            f"weighted mass matrix is not positive definite (smallest eigenvalue {lo:.3e}); "
            "check pinning and quadrature", min_eigenvalue=lo,
        ) from exc
    X = sla.solve_triangular(L, op.stiffness, lower=True)
    C = sla.solve_triangular(L, X.T, lower=True)
    C = 0.5 * (C + C.T)
    lam, W = np.linalg.eigh(C)
    V = sla.solve_triangular(L, W, lower=True, trans="T")
    rq = np.einsum("ij,ij->j", V, op.stiffness @ V) / np.einsum("ij,ij->j", V, M @ V)
    order = np.argsort(rq, kind="stable")
    return SpectralDecomposition(rq[order], V[:, order], op, L)


def m_norm(dec: SpectralDecomposition, c) -> float:
    """sqrt(c^H M c), the discrete L^2_{1/a} norm."""
    c = np.asarray(c)
    return float(np.sqrt(np.real(np.vdot(c, dec.operator.weighted_mass @ c))))


def operator_m_norm(dec: SpectralDecomposition, B) -> float:
    """Norm of the coefficient map B induced by the M inner product: |L^T B L^{-T}|_2."""
    L = dec.cholesky
    X = L.T @ np.asarray(B)
    Y = sla.solve_triangular(L, X.T, lower=True).T
    return float(np.linalg.norm(Y, 2))


def semigroup_apply(dec: SpectralDecomposition, t: float, u0_coeffs) -> np.ndarray:
    """Coefficients of e^{-tA} u0."""
    if t < 0:
        raise ValueError(f"semigroup time must be >= 0, got {t}")
    u0 = np.asarray(u0_coeffs, dtype=float)
    if t == 0:
        return u0.copy()
    return dec.from_modal(np.exp(-dec.eigenvalues * t) * dec.modal(u0))


def _check_gap(dec: SpectralDecomposition, lam: complex) -> None:
    gap = np.min(np.abs(lam + dec.eigenvalues))
    if gap < RESOLVENT_GAP * max(abs(dec.lambda_max), 1.0):
        raise ValueError(f"lam={lam} is within {gap:.3e} of the spectrum of -A")


def resolvent_apply(dec: SpectralDecomposition, lam: complex, f_coeffs) -> np.ndarray:
    """Coefficients of (lam I + A)^{-1} f, evaluated mode by mode."""
    _check_gap(dec, lam)
    y = dec.modal(np.asarray(f_coeffs)) / (lam + dec.eigenvalues)
    return dec.from_modal(y)


def resolvent_matrix(dec: SpectralDecomposition, lam: complex) -> np.ndarray:
    """The coefficient map of lam (lam I + A)^{-1}."""
    _check_gap(dec, lam)
    V = dec.eigenvectors
    return (V * (lam / (lam + dec.eigenvalues))) @ (V.T @ dec.operator.weighted_mass)


def resolvent_norm(dec: SpectralDecomposition, lam: complex) -> float:
    """|lam (lam + A)^{-1}| in the M-norm, measured on the assembled matrix."""
    return operator_m_norm(dec, resolvent_matrix(dec, lam))


def smoothing_norm(dec: SpectralDecomposition, t: float) -> float:
    """t |A e^{-tA}|_M = t max_k lambda_k e^{-lambda_k t}."""
    if t <= 0:
        raise ValueError(f"smoothing time must be > 0, got {t}")
    lam = np.clip(dec.eigenvalues, 0.0, None)
    return float(t * np.max(lam * np.exp(-lam * t)))
