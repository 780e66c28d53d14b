import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from degenop.errors import DivergenceError
from degenop.galerkin import (assemble, build_basis, default_scheme, green_consistency,
                              green_residual, operator_csv)
from degenop.profiles import make_constant_profile, make_power_profile
from degenop.quadrature import build_graded_mesh
from degenop.spaces import FunctionSample

X = Polynomial([0, 1])


@pytest.mark.parametrize("n", [2, 3])
def test_basis_is_clamped(n):
    basis = build_basis(n, 8)
    for k in range(n):
        assert np.max(np.abs(basis.eval([0.0, 1.0], k))) < 1e-12


@pytest.mark.parametrize("n", [2, 3])
def test_unpinned_stiffness_is_identity(n):
    basis = build_basis(n, 10)
    op = assemble(basis, make_constant_profile())
    assert np.max(np.abs(op.stiffness - np.eye(10))) < 1e-12


def test_pinned_basis_vanishes_at_x0():
    basis = build_basis(2, 8, pin_x0=True, x0=0.3)
    assert basis.size_N == 7
    assert np.max(np.abs(basis.eval([0.3]))) < 1e-14
    for k in range(2):
        assert np.max(np.abs(basis.eval([0.0, 1.0], k))) < 1e-12


def test_basis_argument_checks():
    with pytest.raises(ValueError):
        build_basis(1, 8)
    with pytest.raises(ValueError):
        build_basis(2, 3)
    with pytest.raises(ValueError):
        build_basis(2, 8, pin_x0=True, x0=0.0)
    with pytest.raises(ValueError):
        build_basis(2, 8, pin_x0=True)


def test_mass_matches_gram_matrix_for_unit_weight():
    basis = build_basis(2, 6)
    op = assemble(basis, make_constant_profile())
    fs = basis.functions
    for j in range(6):
        for k in range(6):
            exact = (fs[j] * fs[k]).integ(lbnd=0.0)(1.0)
            assert abs(op.weighted_mass[j, k] - exact) < 1e-13


def test_weak_interior_unpinned_is_finite():
    op = assemble(build_basis(2, 8), make_power_profile(0.5, 0.5))
    assert np.all(np.isfinite(op.weighted_mass))
    assert np.linalg.eigvalsh(op.weighted_mass)[0] > 0


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0])
def test_strong_interior_unpinned_diverges(alpha):
    with pytest.raises(DivergenceError) as info:
        assemble(build_basis(2, 8), make_power_profile(alpha, 0.5))
    assert info.value.pair is not None
    j, k = info.value.pair
    assert j == k


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0])
def test_strong_interior_pinned_assembles(alpha):
    op = assemble(build_basis(2, 12, pin_x0=True, x0=0.5), make_power_profile(alpha, 0.5))
    assert np.all(np.isfinite(op.weighted_mass))
    assert np.linalg.eigvalsh(op.weighted_mass)[0] > 0


def test_strong_boundary_needs_no_pinning():
    # clamping makes phi = O(x^2) at 0, so phi^2/x^2 is integrable
    op = assemble(build_basis(2, 8), make_power_profile(2.0, 0.0))
    assert np.all(np.isfinite(op.weighted_mass))


def test_scheme_must_match_profile():
    basis = build_basis(2, 6)
    with pytest.raises(ValueError):
        assemble(basis, make_power_profile(0.5, 0.5), build_graded_mesh(0.0, 0.5, 16, 16))


def test_green_residual_examples():
    s = build_graded_mesh(None, 0.0, 16, 16)
    u2 = FunctionSample.from_polynomial(X**2 * (1 - X) ** 2, 4)
    u3 = FunctionSample.from_polynomial(X**3 * (1 - X) ** 3, 6)
    x = s.nodes
    # int u'''' u = int (u'')^2 = 4/5
    assert abs(s.weights @ (u2(x, 4) * u2(x)) - 0.8) < 1e-13
    assert green_residual(u2, u2, 2, s) < 1e-13
    # int u2'''' u3 = int u2'' u3'' = 6/35
    assert abs(s.weights @ (u2(x, 4) * u3(x)) - 6 / 35) < 1e-13
    assert green_residual(u2, u3, 2, s) < 1e-13
    # int u3^(6) u3 = -int (u3''')^2 = -36/7
    assert abs(s.weights @ (u3(x, 6) * u3(x)) + 36 / 7) < 1e-12
    assert green_residual(u3, u3, 3, s) < 1e-12


def test_green_residual_detects_unclamped_function():
    s = build_graded_mesh(None, 0.0, 16, 16)
    u = FunctionSample.from_polynomial(X**2 * (1 - X) ** 2, 4)
    v = FunctionSample.from_polynomial(X * (1 - X), 4)
    assert green_residual(u, v, 2, s) > 1e-3


@settings(max_examples=25, deadline=None)
@given(alpha=st.sampled_from([0.0, 0.5, 1.0, 1.5, 2.0]), x0=st.sampled_from([0.0, 0.5, 1.0]),
       n=st.sampled_from([2, 3]), N=st.integers(4, 14))
def test_matrices_symmetric_and_definite(alpha, x0, n, N):
    prof = make_constant_profile() if alpha == 0.0 else make_power_profile(alpha, x0)
    pin = alpha >= 1.0 and 0.0 < x0 < 1.0
    op = assemble(build_basis(n, N, pin_x0=pin, x0=x0), prof)
    assert op.asymmetry["stiffness"] < 1e-12
    assert op.asymmetry["weighted_mass"] < 1e-10
    assert np.linalg.eigvalsh(op.stiffness)[0] > 0
    assert np.linalg.eigvalsh(op.weighted_mass)[0] > 0
    assert green_consistency(op) < 1e-10 * max(1.0, np.max(np.abs(op.stiffness)))


@pytest.mark.parametrize("alpha,x0,pin", [(0.5, 0.5, False), (1.5, 0.0, False), (2.0, 0.5, True)])
def test_mass_is_refinement_stable(alpha, x0, pin):
    prof = make_power_profile(alpha, x0)
    basis = build_basis(2, 10, pin_x0=pin, x0=x0)
    # doubling cells alone can hit the grading floor, so nodes per cell grow as well
    coarse = assemble(basis, prof, default_scheme(prof, basis, n_cells=32))
    fine = assemble(basis, prof, default_scheme(prof, basis, n_cells=64, extra_nodes=16))
    for which in ("stiffness", "weighted_mass"):
        a, b = getattr(coarse, which), getattr(fine, which)
        assert np.max(np.abs(a - b)) / np.max(np.abs(b)) < 1e-8


def test_operator_csv_layout():
    prof = make_power_profile(1.0, 0.0)
    op = assemble(build_basis(2, 5), prof)
    lines = operator_csv(op, "weighted_mass").splitlines()
    assert lines[0] == f"# matrix=weighted_mass N=5 n=2 profile={prof.fingerprint()}"
    assert lines[1] == "c0,c1,c2,c3,c4"
    assert len(lines) == 7
    row = np.array([float(v) for v in lines[2].split(",")])
    np.testing.assert_array_equal(row, op.weighted_mass[0])
