"""Acceptance criteria, each checked at its stated tolerance.

Every test prints one line ``criterion <k> <name>: PASS|FAIL <measured>`` and
then asserts.  Criterion 11 is expected to fail; see the decisions ledger.
"""

import time
from fractions import Fraction

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from degenop.density import right_cubic, truncation_error, xi
from degenop.errors import DivergenceError
from degenop.galerkin import assemble, build_basis, green_residual
from degenop.profiles import Degeneracy, classify, make_constant_profile, make_power_profile
from degenop.quadrature import build_graded_mesh
from degenop.solver import solve_elliptic
from degenop.spaces import (FunctionSample, boundary_trace_sequence, clamped_polynomial,
                            hardy_ratio, jensen_chain, random_fixtures)
from degenop.spectral import (eigendecompose, m_norm, resolvent_apply, resolvent_norm,
                              semigroup_apply, smoothing_norm)
from degenop.verify import (MATRIX, beam_load_oracle, beam_wavenumbers, energy_identity_defect,
                            log_time_grid, needs_pin, run_verification, trace_load)

N_MATRIX = 20
SEED = 20240611


def report(capsys, k, name, ok, measured):
    with capsys.disabled():
        print(f"\ncriterion {k} {name}: {'PASS' if ok else 'FAIL'} {measured}")
    assert ok, f"criterion {k} {name}: {measured}"


@pytest.fixture(scope="module")
def matrix():
    out = {}
    for alpha, x0, n in MATRIX:
        op = assemble(build_basis(n, N_MATRIX, needs_pin(alpha, x0), x0), make_power_profile(alpha, x0))
        out[(alpha, x0, n)] = (op, eigendecompose(op))
    return out


def test_criterion_01_beam(capsys):
    start = time.perf_counter()
    k1, k2 = beam_wavenumbers()
    dec = eigendecompose(assemble(build_basis(2, 32), make_constant_profile()))
    e1 = abs(dec.eigenvalues[0] / k1**4 - 1)
    e2 = abs(dec.eigenvalues[1] / k2**4 - 1)
    elapsed = time.perf_counter() - start
    ok = e1 <= 1e-3 and e2 <= 5e-3 and elapsed < 5.0
    report(capsys, 1, "nondegenerate-sanity", ok,
           f"lambda_1 rel err {e1:.2e}, lambda_2 rel err {e2:.2e}, {elapsed:.2f}s")


def test_criterion_02_symmetry_nonnegativity(capsys, matrix):
    worst_asym, worst_low = 0.0, np.inf
    for op, dec in matrix.values():
        S = op.stiffness
        worst_asym = max(worst_asym, op.asymmetry["stiffness"],
                         float(np.max(np.abs(S - S.T)) / np.max(np.abs(S))))
        worst_low = min(worst_low, float(dec.eigenvalues[0] / dec.lambda_max))
    ok = worst_asym <= 1e-12 and worst_low >= -1e-10
    report(capsys, 2, "self-adjoint-nonnegative", ok,
           f"max asymmetry {worst_asym:.2e}, min lambda/lambda_N {worst_low:.2e}")


def test_criterion_03_green(capsys):
    rng = np.random.default_rng(SEED)
    scheme = build_graded_mesh(None, 0.0, 16, 16)
    worst = 0.0
    for n in (2, 3):
        us = random_fixtures(rng, 50, n, 2 * n)
        vs = random_fixtures(rng, 50, n, n)
        worst = max(worst, max(green_residual(u, v, n, scheme) for u, v in zip(us, vs)))
    bump = FunctionSample.from_polynomial(clamped_polynomial([1.0], 2), 4)
    x, w = scheme.nodes, scheme.weights
    lhs, rhs = float(w @ (bump(x, 4) * bump(x))), float(w @ bump(x, 2) ** 2)
    ok = worst <= 1e-10 and abs(lhs - 0.8) <= 1e-12 and abs(rhs - 0.8) <= 1e-12
    report(capsys, 3, "green-formula", ok, f"max residual {worst:.2e}, bump {lhs!r} = {rhs!r}")


def test_criterion_04_contraction(capsys, matrix):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for op, dec in matrix.values():
        times = log_time_grid(float(dec.eigenvalues[0]))
        for _ in range(100):
            u0 = rng.standard_normal(dec.N)
            norms = [m_norm(dec, u0)] + [m_norm(dec, semigroup_apply(dec, t, u0)) for t in times]
            worst = max(worst, float(np.max(np.diff(norms)) / norms[0]))
    report(capsys, 4, "contraction", worst <= 1e-10, f"max relative increase {worst:.2e}")


def test_criterion_05_analytic_semigroup(capsys, matrix):
    smooth, resolvent = 0.0, 0.0
    for op, dec in matrix.values():
        times = np.concatenate([log_time_grid(float(dec.eigenvalues[0])), 1 / dec.eigenvalues[:5]])
        smooth = max(smooth, max(smoothing_norm(dec, t) for t in times))
        resolvent = max(resolvent, max(resolvent_norm(dec, 1j * r) for r in (0.1, 1.0, 10.0, 1000.0)))
    ok = smooth <= np.exp(-1) + 1e-12 and resolvent <= 1 + 1e-8
    report(capsys, 5, "analytic-semigroup", ok,
           f"max t|Ae^(-tA)| - 1/e = {smooth - np.exp(-1):.2e}, max |lam R(lam)| = {resolvent!r}")


def test_criterion_06_elliptic(capsys, matrix):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for op, dec in matrix.values():
        for _ in range(20):
            f = rng.standard_normal(op.N)
            c1 = solve_elliptic(op, op.weighted_mass @ f).coefficients
            c2 = resolvent_apply(dec, 1.0, f)
            worst = max(worst, m_norm(dec, c1 - c2) / m_norm(dec, c2))
    beam = assemble(build_basis(2, 32), make_constant_profile())
    sol = solve_elliptic(beam, lambda x: np.ones_like(x))
    x = np.linspace(0.0, 1.0, 401)
    oracle = float(np.max(np.abs(beam.basis.combine(sol.coefficients)(x) - beam_load_oracle(x))))
    ok = worst <= 1e-8 and oracle <= 1e-6
    report(capsys, 6, "elliptic-surjectivity", ok,
           f"solve vs resolvent {worst:.2e}, beam vs ODE oracle {oracle:.2e}")


def test_criterion_07_dichotomy(capsys):
    wrong = []
    for x0 in (0.0, 0.5, 1.0):
        for alpha in (0.25, 0.5, 0.75, 1.0, 1.5, 2.0):
            want = Degeneracy.WEAK if alpha < 1 else Degeneracy.STRONG
            if classify(make_power_profile(alpha, x0)).cls != want:
                wrong.append((alpha, x0))
    for alpha in (1.0, 1.5, 2.0):
        prof = make_power_profile(alpha, 0.5)
        try:
            assemble(build_basis(2, 12), prof)
            wrong.append((alpha, "unpinned assembled"))
        except DivergenceError:
            pass
        op = assemble(build_basis(2, 12, pin_x0=True, x0=0.5), prof)
        if not np.all(np.isfinite(op.weighted_mass)):
            wrong.append((alpha, "pinned not finite"))
    report(capsys, 7, "weak-strong-dichotomy", not wrong, f"misclassified {wrong}")


def test_criterion_08_hardy(capsys):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for x0 in (0.0, 0.5, 1.0):
        prof = make_power_profile(2.0, x0)
        scheme = build_graded_mesh(x0, 2.0, 32, 16)
        vanish = 1 if 0.0 < x0 < 1.0 else 0
        for w in random_fixtures(rng, 100, 1, 1, x0, vanish):
            worst = max(worst, hardy_ratio(w, prof, scheme))
    sym = hardy_ratio(FunctionSample.from_polynomial(Polynomial([0, 1, -1]), 1),
                      make_power_profile(2.0, 0.0), build_graded_mesh(0.0, 2.0, 32, 16))
    ok = worst <= 4 * 1.05 and abs(sym - 1) <= 1e-8
    report(capsys, 8, "hardy", ok, f"max ratio {worst:.4f}, symbolic ratio {sym!r}")


def test_criterion_09_jensen(capsys):
    rng = np.random.default_rng(SEED)
    scheme = build_graded_mesh(None, 0.0, 16, 16)
    bad = 0
    for n in (2, 3):
        for u in random_fixtures(rng, 100, n, n):
            chain = jensen_chain(u, n, scheme)
            bad += sum(a > b for a, b in zip(chain, chain[1:]))
    report(capsys, 9, "jensen-chain", bad == 0, f"{bad} violations in 200 fixtures")


def test_criterion_10_trace(capsys):
    worst_exp, worst_term = np.inf, 0.0
    for alpha in (1.0, 1.5, 2.0):
        for x0 in (0.0, 0.5, 1.0):
            prof = make_power_profile(alpha, x0)
            op = assemble(build_basis(2, N_MATRIX, needs_pin(alpha, x0), x0), prof)
            sol = solve_elliptic(op, trace_load(x0))
            u = FunctionSample.from_coefficients(op.basis, sol.coefficients)
            for i in (1, 2):
                seq = boundary_trace_sequence(u, i, prof)
                worst_exp = min(worst_exp, seq.decay_exponent)
                worst_term = max(worst_term, seq.terminal_relative)
    ok = worst_exp > 0.25 and worst_term < 1e-4
    report(capsys, 10, "trace-vanishing", ok,
           f"min exponent {worst_exp:.3f}, max terminal {worst_term:.2e}")


def test_criterion_11_density(capsys):
    exact = all(xi(n, 1 / n) == 0 and xi(n, 2 / n) == 1
                and right_cubic(n, 1 - Fraction(2, n)) == 1 and right_cubic(n, 1 - Fraction(1, n)) == 0
                for n in range(4, 129))
    rng = np.random.default_rng(SEED)
    fixtures = [FunctionSample.from_polynomial(clamped_polynomial([1.0], 2), 2)]
    fixtures += random_fixtures(rng, 9, 2, 2)
    monotone, final = True, np.zeros(2)
    for alpha in (0.25, 0.5, 0.75):
        prof = make_power_profile(alpha, 0.0)
        for v in fixtures:
            errs = np.array([truncation_error(v, n, prof) for n in (8, 16, 32, 64)])
            monotone &= bool(np.all(np.diff(errs, axis=0) < 0))
            final = np.maximum(final, errs[-1])
    ok = exact and monotone and np.all(final < 1e-3)
    report(capsys, 11, "cutoff-density", ok,
           f"junctions exact {exact}, monotone {monotone}, "
           f"final weighted {final[0]:.2e}, final second {final[1]:.2e}")


def test_criterion_12_energy_identity(capsys, matrix):
    rng = np.random.default_rng(SEED)
    worst = max(energy_identity_defect(dec, rng) for _, dec in matrix.values())
    report(capsys, 12, "energy-identity", worst <= 1e-3, f"max relative defect {worst:.2e}")


def test_verify_runtime(capsys):
    start = time.perf_counter()
    run_verification(seed=0)
    elapsed = time.perf_counter() - start
    report(capsys, "runtime", "verify-suite", elapsed < 300, f"{elapsed:.1f}s")
