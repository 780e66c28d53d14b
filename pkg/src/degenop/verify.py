"""The executable property suite behind ``degenop verify``.

Every check produces a CheckRecord; the report passes iff all records pass.
Per-profile checks run over the matrix alpha x x0 x n and are independent, so
they are evaluated in a thread pool; randomness is derived from (seed, index)
so the report does not depend on scheduling.
"""

from __future__ import annotations

import dataclasses
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy
from numpy.polynomial import Polynomial
from scipy.integrate import solve_bvp
from scipy.optimize import brentq

from .density import truncation_error
from .errors import DivergenceError
from .galerkin import assemble, build_basis, green_consistency, green_residual
from .profiles import (Degeneracy, check_growth_hypothesis, classify, make_constant_profile,
                       make_power_profile)
from .quadrature import build_graded_mesh
from .solver import evolve, solve_elliptic
from .spaces import (FunctionSample, boundary_trace_sequence, clamped_polynomial, h0_norm,
                     hardy_ratio, higher_hardy_ratio, jensen_chain, random_fixtures,
                     sobolev_norm, weighted_l2_norm)
from .spectral import (eigendecompose, m_norm, resolvent_apply, resolvent_norm,
                       semigroup_apply, smoothing_norm)

ALPHAS = (0.5, 1.0, 1.5, 2.0)
X0S = (0.0, 0.5)
ORDERS = (2, 3)
MATRIX = tuple((a, x0, n) for a in ALPHAS for x0 in X0S for n in ORDERS)
FAULTS = ("negate-stiffness-entry",)
MONOTONE_SLACK = 1e-8
DEFAULT_N = 20
SCOPES = ("all", "matrix", "global", "spaces")
SPACES_PREFIXES = ("hardy:", "jensen:", "spaces:")
DENSITY_NS = (8, 16, 32, 64, 128, 256)


@dataclass(frozen=True)
class CheckRecord:
    check_id: str
    tag: str
    fixtures: int
    measured: float | dict
    tolerance: float | str
    passed: bool

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[CheckRecord, ...]
    environment: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failing(self) -> list[str]:
        return [c.check_id for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {
            "overall": "pass" if self.passed else "fail",
            "failing": self.failing,
            "environment": self.environment,
            "checks": [c.to_json() for c in self.checks],
        }


def _record(cid, tag, fixtures, measured, tol, passed) -> CheckRecord:
    if isinstance(measured, (np.floating, np.integer)):
        measured = float(measured)
    return CheckRecord(cid, tag, int(fixtures), measured, tol, bool(passed))


def needs_pin(alpha: float, x0: float) -> bool:
    return alpha >= 1.0 and 0.0 < x0 < 1.0


def log_time_grid(lam1: float, count: int = 30) -> np.ndarray:
    """Times spanning fast and slow modes, scaled by the smallest eigenvalue."""
    return np.logspace(-6, 1, count) / lam1


def energy_identity_defect(dec, rng, modes: int = 4, steps: int = 200) -> float:
    """max over steps of |dE/dt (discrete) + 2 D(t_mid)| / (2 D(t_mid)).

    The initial datum is a random combination of the lowest modes and the step
    is 1% of the fastest included time scale, so the central difference is
    accurate to ~1e-5.
    """
    c = dec.eigenvectors[:, :modes] @ rng.standard_normal(modes)
    dt = 0.01 / dec.eigenvalues[modes - 1]
    tr = evolve(dec, c, None, T=steps * dt, m=steps)
    S = dec.operator.stiffness
    mids = 0.5 * (tr.times[1:] + tr.times[:-1])
    diss = np.array([(lambda u: u @ S @ u)(semigroup_apply(dec, t, c)) for t in mids])
    return float(np.max(np.abs(np.diff(tr.energies) / dt + 2.0 * diss) / (2.0 * diss)))


def trace_load(x0: float):
    return lambda x: (x - x0) ** 2


def profile_checks(alpha: float, x0: float, n: int, N: int, rng: np.random.Generator,
                   fault: str | None = None) -> list[CheckRecord]:
    pid = f"alpha={alpha:g},x0={x0:g},n={n}"
    out = []
    profile = make_power_profile(alpha, x0)
    pin = needs_pin(alpha, x0)

    cls = classify(profile)
    expected = Degeneracy.STRONG if alpha >= 1 else Degeneracy.WEAK
    out.append(_record(f"{pid}:classify", "weak-strong-dichotomy", 1, cls.cls.value,
                       expected.value, cls.cls == expected))

    if pin:
        try:
            assemble(build_basis(n, N, False, x0), profile)
            raised = False
        except DivergenceError:
            raised = True
        out.append(_record(f"{pid}:unpinned-diverges", "strong-membership", 1, raised,
                           "DivergenceError", raised))

    op = assemble(build_basis(n, N, pin, x0), profile)
    if fault == "negate-stiffness-entry":
        S = op.stiffness.copy()
        off = np.abs(S - np.diag(np.diag(S)))
        j, k = np.unravel_index(np.argmax(off), S.shape)
        S[j, k] = -S[j, k]
        op = dataclasses.replace(op, stiffness=S)

    def rel_asym(a):
        return float(np.max(np.abs(a - a.T)) / np.max(np.abs(a)))

    asym = max(op.asymmetry["stiffness"], op.asymmetry["weighted_mass"],
               rel_asym(op.stiffness), rel_asym(op.weighted_mass))
    out.append(_record(f"{pid}:symmetry", "self-adjoint", 1, asym, 1e-12, asym <= 1e-12))

    dec = eigendecompose(op)
    lam, lmax = dec.eigenvalues, dec.lambda_max
    out.append(_record(f"{pid}:nonnegative", "nonnegative", 1, float(lam[0] / lmax), -1e-10,
                       lam[0] >= -1e-10 * lmax))
    orth = dec.orthonormality_defect()
    out.append(_record(f"{pid}:m-orthonormal", "self-adjoint", 1, orth, 1e-8, orth <= 1e-8))
    res = dec.residual() / lmax
    out.append(_record(f"{pid}:eigen-residual", "self-adjoint", 1, res, 1e-8, res <= 1e-8))

    green = green_consistency(op) / max(1.0, float(np.max(np.abs(op.stiffness))))
    out.append(_record(f"{pid}:green-consistency", "green-formula", op.N * op.N, green, 1e-10,
                       green <= 1e-10))

    times = log_time_grid(float(lam[0]))
    worst = 0.0
    for _ in range(100):
        u0 = rng.standard_normal(op.N)
        norms = np.array([m_norm(dec, semigroup_apply(dec, t, u0)) for t in times])
        norms = np.concatenate([[m_norm(dec, u0)], norms])
        worst = max(worst, float(np.max(np.diff(norms) / norms[0])))
    out.append(_record(f"{pid}:contraction", "contraction", 100, worst, 1e-10, worst <= 1e-10))

    smooth = max(smoothing_norm(dec, t) for t in times)
    out.append(_record(f"{pid}:smoothing", "analytic-semigroup", len(times), smooth,
                       float(np.exp(-1) + 1e-12), smooth <= np.exp(-1) + 1e-12))

    rnorm = max(resolvent_norm(dec, 1j * r) for r in (0.1, 1.0, 10.0, 1000.0))
    out.append(_record(f"{pid}:imaginary-resolvent", "analytic-semigroup", 4, rnorm, 1 + 1e-8,
                       rnorm <= 1 + 1e-8))

    worst = 0.0
    for _ in range(20):
        f = rng.standard_normal(op.N)
        c1 = solve_elliptic(op, op.weighted_mass @ f).coefficients
        c2 = resolvent_apply(dec, 1.0, f)
        worst = max(worst, m_norm(dec, c1 - c2) / m_norm(dec, c2))
    out.append(_record(f"{pid}:elliptic-vs-resolvent", "surjectivity", 20, worst, 1e-8,
                       worst <= 1e-8))

    sol = solve_elliptic(op, trace_load(x0))
    rel = sol.residual_weighted / sol.load_norm
    out.append(_record(f"{pid}:elliptic-residual", "surjectivity", 1, rel, 1e-8, rel <= 1e-8))

    energy = energy_identity_defect(dec, rng)
    out.append(_record(f"{pid}:energy-identity", "energy-identity", 1, energy, 1e-3,
                       energy <= 1e-3))

    mono = True
    for _ in range(10):
        tr = evolve(dec, rng.standard_normal(op.N), None, T=10.0 / lam[0], m=50)
        mono &= tr.energy_nonincreasing
    out.append(_record(f"{pid}:energy-nonincreasing", "contraction", 10, mono, "true", mono))

    if alpha >= 1:
        u = FunctionSample.from_coefficients(op.basis, sol.coefficients)
        seqs = {i: boundary_trace_sequence(u, i, profile) for i in (1, 2)}
        meas = {f"i={i}": {"exponent": s.decay_exponent, "terminal": s.terminal_relative}
                for i, s in seqs.items()}
        out.append(_record(f"{pid}:trace-vanishing", "trace-at-x0", 2, meas,
                           "exponent>0.25,terminal<1e-4", all(s.vanishing for s in seqs.values())))

    lams = []
    for size in (16, 24, 32, 48, 64):
        big = assemble(build_basis(n, size, pin, x0), profile)
        lams.append(float(eigendecompose(big).eigenvalues[0]))
    drift = abs(lams[-1] - lams[-2]) / lams[-1]
    # eigenvalues of a pencil with cond(M) ~ 1e13 carry ~1e-9 relative roundoff
    monotone = all(b <= a * (1 + MONOTONE_SLACK) for a, b in zip(lams, lams[1:]))
    out.append(_record(f"{pid}:spectral-convergence", "galerkin-convergence", len(lams),
                       {"lambda_1": lams, "drift_48_64": drift}, 1e-4, monotone and drift <= 1e-4))
    return out


def beam_wavenumbers(count: int = 2) -> list[float]:
    """Roots of cos k cosh k = 1 (clamped-clamped beam), by bracketing."""
    def g(k):
        return np.cos(k) * np.cosh(k) - 1.0

    return [brentq(g, (j + 0.5) * np.pi - 0.5, (j + 0.5) * np.pi + 0.5, xtol=1e-15)
            for j in range(1, count + 1)]


def beam_load_oracle(x: np.ndarray) -> np.ndarray:
    """u'''' + u = 1 with clamped ends, by collocation."""
    mesh = np.linspace(0.0, 1.0, 201)
    sol = solve_bvp(lambda t, y: np.vstack([y[1], y[2], y[3], 1.0 - y[0]]),
                    lambda ya, yb: np.array([ya[0], ya[1], yb[0], yb[1]]),
                    mesh, np.zeros((4, mesh.size)), tol=1e-12, max_nodes=200000)
    if not sol.success:
        raise RuntimeError(f"collocation oracle failed: {sol.message}")
    return sol.sol(x)[0]


def global_checks(rng: np.random.Generator, N: int) -> list[CheckRecord]:
    out = []
    one = make_constant_profile()

    op = assemble(build_basis(2, 32), one)
    dec = eigendecompose(op)
    k1, k2 = beam_wavenumbers()
    e1 = abs(dec.eigenvalues[0] / k1**4 - 1)
    e2 = abs(dec.eigenvalues[1] / k2**4 - 1)
    out.append(_record("beam:lambda_1", "nondegenerate-sanity", 1, e1, 1e-3, e1 <= 1e-3))
    out.append(_record("beam:lambda_2", "nondegenerate-sanity", 1, e2, 5e-3, e2 <= 5e-3))

    sol = solve_elliptic(op, lambda x: np.ones_like(x))
    x = np.linspace(0.0, 1.0, 401)
    err = float(np.max(np.abs(op.basis.combine(sol.coefficients)(x) - beam_load_oracle(x))))
    out.append(_record("beam:elliptic-oracle", "surjectivity", 1, err, 1e-6, err <= 1e-6))

    uni = build_graded_mesh(None, 0.0, 16, 16)
    worst = 0.0
    for n in (2, 3):
        us = random_fixtures(rng, 50, n, 2 * n)
        vs = random_fixtures(rng, 50, n, n)
        for u, v in zip(us, vs):
            worst = max(worst, green_residual(u, v, n, uni))
    out.append(_record("green:random-pairs", "green-formula", 100, worst, 1e-10, worst <= 1e-10))
    b = FunctionSample.from_polynomial(clamped_polynomial([1.0], 2), 4)
    lhs = float(uni.weights @ (b(uni.nodes, 4) * b(uni.nodes)))
    rhs = float(uni.weights @ (b(uni.nodes, 2) ** 2))
    ok = abs(lhs - 0.8) <= 1e-12 and abs(rhs - 0.8) <= 1e-12
    out.append(_record("green:bump", "green-formula", 1, {"lhs": lhs, "rhs": rhs}, 1e-12, ok))

    worst, count = 0.0, 0
    for x0 in (0.0, 0.5, 1.0):
        prof = make_power_profile(2.0, x0)
        scheme = build_graded_mesh(x0, 2.0, 32, 16)
        vanish = 1 if 0.0 < x0 < 1.0 else 0
        for w in random_fixtures(rng, 100, 1, 1, x0, vanish):
            worst = max(worst, hardy_ratio(w, prof, scheme))
            count += 1
    out.append(_record("hardy:random", "hardy", count, worst, 4 * 1.05, worst <= 4 * 1.05))
    prof = make_power_profile(2.0, 0.0)
    scheme = build_graded_mesh(0.0, 2.0, 32, 16)
    w = FunctionSample.from_polynomial(Polynomial([0, 1, -1]), 1)
    r = hardy_ratio(w, prof, scheme)
    out.append(_record("hardy:symbolic", "hardy", 1, r, 1e-8, abs(r - 1) <= 1e-8))
    ratios = []
    for k in (1, 2, 3):
        u = FunctionSample.from_polynomial(Polynomial([0, 1]) ** (k + 1) * Polynomial([1, -1]) ** 2, 2)
        ratios.append(higher_hardy_ratio(u, 1, prof, scheme))
    exact = [2 / 3, 1 / 9, 1 / 24]
    err = max(abs(a - b) for a, b in zip(ratios, exact))
    out.append(_record("hardy:higher", "hardy", 3, {"ratios": ratios}, 1e-8,
                       err <= 1e-8 and max(ratios) <= 4))

    ok, count = True, 0
    for n in (2, 3):
        for u in random_fixtures(rng, 50, n, n):
            chain = jensen_chain(u, n, uni)
            ok &= all(a <= b * (1 + 1e-12) for a, b in zip(chain, chain[1:]))
            count += 1
    out.append(_record("jensen:chain", "jensen-chain", count, ok, "nondecreasing", ok))

    prof = make_power_profile(1.0, 0.0)
    try:
        weighted_l2_norm(FunctionSample((lambda x: np.ones_like(x),)), prof,
                         build_graded_mesh(0.0, 1.0, 32, 8))
        raised = False
    except DivergenceError:
        raised = True
    out.append(_record("spaces:strong-membership", "strong-membership", 1, raised,
                       "DivergenceError", raised))

    out.append(norm_equivalence_check(rng))
    out.append(trace_negative_control())

    hyp_ok = True
    meas = {}
    for alpha in (1.0, 1.5, 2.0):
        for x0 in X0S:
            rep = check_growth_hypothesis(make_power_profile(alpha, x0))
            meas[f"alpha={alpha:g},x0={x0:g}"] = rep.k_exponent
            hyp_ok &= rep.ok and abs(rep.k_exponent - alpha) <= 1e-6
    out.append(_record("profiles:hypothesis-K", "strong-hypotheses", len(meas), meas,
                       1e-6, hyp_ok))

    out.append(density_check(rng))
    return out


def norm_equivalence_check(rng: np.random.Generator) -> CheckRecord:
    """Measured constants c1, c2 with c1 |u|_{H^2_0} <= |u|_2 <= c2 |u|_{H^2_0}, weak case."""
    prof = make_power_profile(0.5, 0.5)
    fixtures = random_fixtures(rng, 20, 2, 2)
    spans = []
    for cells in (16, 32):
        scheme = build_graded_mesh(0.5, 0.5, cells, 16)
        r = [sobolev_norm(u, 2, prof, scheme) / h0_norm(u, 2, scheme) for u in fixtures]
        spans.append((min(r), max(r)))
    drift = max(abs(a - b) / b for a, b in zip(spans[0], spans[1]))
    return _record("spaces:norm-equivalence", "weak-norm-equivalence", len(fixtures),
                   {"c1": spans[1][0], "c2": spans[1][1], "refinement_drift": drift},
                   1e-6, np.all(np.isfinite(spans)) and drift <= 1e-6)


def trace_negative_control() -> CheckRecord:
    """u'' = 1/|x - 1/2| with a = |x - 1/2|: a u'' is 1 near x0, so the trace must not vanish."""
    def d0(x):
        d = np.abs(x - 0.5)
        return np.sign(x - 0.5) * (d * np.log(d) - d)

    def d1(x):
        return np.log(np.abs(x - 0.5))

    def d2(x):
        return 1.0 / np.abs(x - 0.5)

    u = FunctionSample((d0, d1, d2))
    seq = boundary_trace_sequence(u, 2, make_power_profile(1.0, 0.5))
    return _record("spaces:trace-negative-control", "trace-at-x0", 1,
                   {"exponent": seq.decay_exponent, "terminal": seq.terminal_relative},
                   "not vanishing", not seq.vanishing)


def density_check(rng: np.random.Generator) -> CheckRecord:
    """Both truncation errors tend to zero along n = 8, ..., 256 for clamped fixtures.

    The second-derivative error decays like 1/n only asymptotically, so the
    check asks for a strictly decreasing tail (last three n) and an overall
    decrease, and reports separately whether the sequence was monotone from n = 8.
    """
    ok, monotone_from_8 = True, True
    worst_final = [0.0, 0.0]
    fixtures = [FunctionSample.from_polynomial(clamped_polynomial([1.0], 2), 2)]
    fixtures += random_fixtures(rng, 9, 2, 2)
    for alpha in (0.25, 0.5, 0.75):
        prof = make_power_profile(alpha, 0.0)
        for v in fixtures:
            errs = np.array([truncation_error(v, n, prof) for n in DENSITY_NS])
            ok &= bool(np.all(np.diff(errs[-3:], axis=0) < 0) and np.all(errs[-1] < errs[0]))
            monotone_from_8 &= bool(np.all(np.diff(errs, axis=0) < 0))
            worst_final = [max(worst_final[0], float(errs[-1, 0])),
                           max(worst_final[1], float(errs[-1, 1]))]
    return _record("density:to-zero", "cutoff-density", 3 * len(fixtures),
                   {"final_weighted": worst_final[0], "final_second": worst_final[1],
                    "n_max": DENSITY_NS[-1], "monotone_from_8": monotone_from_8},
                   "decreasing tail", ok)


def run_verification(seed: int = 0, N: int = DEFAULT_N, fault: str | None = None,
                     workers: int | None = None, scope: str = "all") -> VerificationReport:
    """Run the suite; ``scope`` restricts it to the profile matrix, the global
    checks, or the weighted-space checks only."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; known: {FAULTS}")
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}; known: {SCOPES}")
    ss = np.random.SeedSequence(seed)
    streams = ss.spawn(len(MATRIX) + 1)

    def job(i):
        a, x0, n = MATRIX[i]
        return profile_checks(a, x0, n, N, np.random.default_rng(streams[i]), fault)

    checks = []
    if scope in ("all", "matrix"):
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_profile = list(pool.map(job, range(len(MATRIX))))
        checks = [c for block in per_profile for c in block]
    if scope in ("all", "global", "spaces"):
        more = global_checks(np.random.default_rng(streams[-1]), N)
        if scope == "spaces":
            more = [c for c in more if c.check_id.startswith(SPACES_PREFIXES)]
        checks += more
    env = {"seed": seed, "N": N, "scope": scope, "matrix": [list(m) for m in MATRIX],
           "fault": fault, "numpy": np.__version__, "scipy": scipy.__version__,
           "python": platform.python_version()}
    return VerificationReport(tuple(checks), env)
