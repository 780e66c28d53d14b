"""Command-line entry point: ``degenop <command> [options]``.

Exit codes (stable):

    0  success
    1  a verification check failed
    2  invalid configuration or arguments
    3  classification inconclusive
    4  divergence (a weighted integral does not converge)
    5  numerical failure (factorisation, non-finite integrand)
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import density, galerkin, profiles, quadrature, solver, spectral, verify
from .errors import DivergenceError, InconclusiveError, IntegrationError, NumericalError

EXIT_CODES = {
    "ok": 0,
    "check_failed": 1,
    "bad_config": 2,
    "inconclusive": 3,
    "divergence": 4,
    "numerical": 5,
}

DEFAULT_PROFILE = {"kind": "power", "alpha": 0.5, "x0": 0.5}


@dataclass
class RunConfig:
    profile: dict = field(default_factory=lambda: dict(DEFAULT_PROFILE))
    n: int = 2
    N: int = 32
    pin: bool | str = "auto"
    quadrature: dict = field(default_factory=dict)  # n_cells, extra_nodes
    T: float = 1e-3
    steps: int = 100
    f: str = "zero"
    u0: str | None = None
    v: str | None = None
    seed: int = 0
    grid: int = 11
    eigenfunctions: int = 0
    density_ns: list = field(default_factory=lambda: [8, 16, 32, 64])

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        if not isinstance(obj, dict):
            raise ValueError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**obj)
        cfg.validate()
        return cfg

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> None:
        if not isinstance(self.n, int) or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        if not isinstance(self.N, int) or self.N < 4:
            raise ValueError(f"N must be an integer >= 4, got {self.N!r}")
        if self.pin not in (True, False, "auto"):
            raise ValueError(f"pin must be true, false or \"auto\", got {self.pin!r}")
        if self.steps < 1 or self.T <= 0:
            raise ValueError("evolution needs T > 0 and steps >= 1")
        if self.grid < 2:
            raise ValueError("grid needs at least 2 points")
        profiles.profile_from_json(self.profile)


def load_config(args) -> RunConfig:
    obj = {}
    if args.config:
        with open(args.config) as fh:
            obj = json.load(fh)
    cfg = RunConfig.from_json(obj)
    if args.alpha is not None or args.x0 is not None:
        prof = dict(cfg.profile) if cfg.profile.get("kind") == "power" else dict(DEFAULT_PROFILE)
        if args.alpha is not None:
            prof["alpha"] = args.alpha
        if args.x0 is not None:
            prof["x0"] = args.x0
        cfg.profile = prof
    if args.n is not None:
        cfg.n = args.n
    if args.N is not None:
        cfg.N = args.N
    if args.seed is not None:
        cfg.seed = args.seed
    if args.pin is not None:
        cfg.pin = {"true": True, "false": False, "auto": "auto"}[args.pin]
    cfg.validate()
    return cfg


def resolve_pin(cfg: RunConfig, profile) -> bool:
    """"auto" pins exactly when a is strongly degenerate at an interior point."""
    if cfg.pin != "auto":
        return bool(cfg.pin)
    if profile.x0 is None or not profile.interior:
        return False
    return profiles.classify(profile).cls == profiles.Degeneracy.STRONG


def build_operator(cfg: RunConfig):
    profile = profiles.profile_from_json(cfg.profile)
    pin = resolve_pin(cfg, profile)
    basis = galerkin.build_basis(cfg.n, cfg.N, pin, profile.x0)
    scheme = galerkin.default_scheme(profile, basis, cfg.quadrature.get("n_cells", 32),
                                     cfg.quadrature.get("extra_nodes", 8))
    return galerkin.assemble(basis, profile, scheme)


def expression(spec: str, variables: tuple[str, ...]):
    """A numpy callable from a sympy expression string; "zero" gives None."""
    if spec is None or spec == "zero":
        return None
    import sympy as sp

    syms = sp.symbols(variables)
    try:
        expr = sp.sympify(spec, locals={v: s for v, s in zip(variables, syms)})
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise ValueError(f"cannot parse expression {spec!r}") from exc
    extra = expr.free_symbols - set(syms)
    if extra:
        raise ValueError(f"expression {spec!r} uses unknown symbols {sorted(map(str, extra))}")
    fn = sp.lambdify(syms, expr, "numpy")

    def call(*args):
        shape = np.shape(args[-1])
        return np.broadcast_to(np.asarray(fn(*args), dtype=float), shape)

    return call


def default_datum(n: int, x0: float | None, pinned: bool) -> str:
    base = f"(x*(1-x))**{n}"
    return f"{base}*(x-{x0!r})" if pinned else base


def fmt(v) -> str:
    return f"{float(v):.17g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([r if isinstance(r, str) else fmt(r) for r in row])


def grid_header(x: np.ndarray) -> list[str]:
    return [f"u[{v:.6g}]" for v in x]


def cmd_classify(cfg: RunConfig, out: Path) -> int:
    profile = profiles.profile_from_json(cfg.profile)
    cls = profiles.classify(profile)
    report = cls.to_json()
    if profile.x0 is not None:
        hyp = profiles.check_growth_hypothesis(profile)
        report["k_exponent"] = hyp.k_exponent
        report["hypothesis"] = hyp.to_json()
    report["profile"] = profile.to_json()
    print(json.dumps(report, indent=2))
    return 0


def cmd_spectrum(cfg: RunConfig, out: Path) -> int:
    op = build_operator(cfg)
    dec = spectral.eigendecompose(op)
    write_csv(out / "spectrum.csv", ["k", "lambda"],
              ([str(k + 1), lam] for k, lam in enumerate(dec.eigenvalues)))
    if cfg.eigenfunctions:
        K = min(cfg.eigenfunctions, dec.N)
        x = np.linspace(0.0, 1.0, cfg.grid)
        vals = op.basis.eval(x) @ dec.eigenvectors[:, :K]
        write_csv(out / "eigenfunctions.csv", ["x"] + [f"v{k + 1}" for k in range(K)],
                  (np.concatenate([[xi], row]) for xi, row in zip(x, vals)))
    print(f"lambda_1={fmt(dec.eigenvalues[0])} lambda_2={fmt(dec.eigenvalues[1])} "
          f"N={op.N} n={op.n} pinned={str(op.basis.constraint_pinned_x0).lower()}")
    return 0


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    op = build_operator(cfg)
    f = expression(cfg.f, ("x",))
    sol = solver.solve_elliptic(op, f if f is not None else np.zeros(op.N))
    x = np.linspace(0.0, 1.0, cfg.grid)
    u = op.basis.combine(sol.coefficients)(x)
    write_csv(out / "solution.csv", ["x", "u"], zip(x, u))
    c = sol.coefficients
    print(f"residual={fmt(sol.residual_weighted)} load_norm={fmt(sol.load_norm)} "
          f"energy={fmt(c @ op.weighted_mass @ c)} dissipation={fmt(c @ op.stiffness @ c)}")
    return 0


def cmd_evolve(cfg: RunConfig, out: Path) -> int:
    op = build_operator(cfg)
    dec = spectral.eigendecompose(op)
    u0_spec = cfg.u0 or default_datum(cfg.n, op.profile.x0, op.basis.constraint_pinned_x0)
    u0 = expression(u0_spec, ("x",))
    c0 = solver.project_datum(u0, op) if u0 is not None else np.zeros(op.N)
    f = expression(cfg.f, ("t", "x"))
    tr = solver.evolve(dec, c0, f, cfg.T, cfg.steps)
    x = np.linspace(0.0, 1.0, cfg.grid)
    phi = op.basis.eval(x)
    rows = (np.concatenate([[t], phi @ c, [e, d]])
            for t, c, e, d in zip(tr.times, tr.states, tr.energies, tr.dissipation))
    write_csv(out / "evolution.csv", ["t"] + grid_header(x) + ["energy", "dissipation"], rows)
    mono = str(tr.energy_nonincreasing).lower()
    print(f"final energy={fmt(tr.energies[-1])} dissipation integral={fmt(tr.dissipation_integral)} "
          f"energy nonincreasing: {mono}")
    return 0


def cmd_density(cfg: RunConfig, out: Path) -> int:
    profile = profiles.profile_from_json(cfg.profile)
    x0 = profile.x0 if profile.x0 is not None else 0.0
    spec = cfg.v
    if spec is None:
        spec = "x**2*(1-x)**2" + (f"*(x-{x0!r})**2" if 0.0 < x0 < 1.0 else "")
    from .spaces import FunctionSample

    v = FunctionSample.from_expression(spec, 2)
    rows = [(str(n), *density.truncation_error(v, n, profile)) for n in cfg.density_ns]
    write_csv(out / "density.csv", ["n", "weighted_error", "second_derivative_error"], rows)
    last = rows[-1]
    print(f"n={last[0]} weighted_error={fmt(last[1])} second_derivative_error={fmt(last[2])}")
    return 0


def cmd_quadrature(cfg: RunConfig, out: Path) -> int:
    """Integral of 1/a on successively refined graded meshes."""
    profile = profiles.profile_from_json(cfg.profile)
    hint = profile.alpha if profile.alpha is not None else 0.0
    rows = []
    for level in range(5):
        scheme = quadrature.build_graded_mesh(profile.x0, hint, 8 * 2**level, 8)
        rows.append((str(level), quadrature.integrate_weighted(lambda x: 1.0, profile, scheme)))
    write_csv(out / "quadrature.csv", ["level", "value"], rows)
    print(f"value={fmt(rows[-1][1])} levels={len(rows)}")
    return 0


def cmd_verify(cfg: RunConfig, out: Path, args) -> int:
    report = verify.run_verification(cfg.seed, args.verify_N, args.fault, scope=args.scope)
    text = json.dumps(report.to_json(), indent=2)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify.json").write_text(text + "\n")
    print(text)
    if not report.passed:
        print("failing checks: " + ", ".join(report.failing), file=sys.stderr)
        return EXIT_CODES["check_failed"]
    return 0


def cmd_operator(cfg: RunConfig, out: Path) -> int:
    op = build_operator(cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "stiffness.csv").write_text(galerkin.operator_csv(op, "stiffness"))
    (out / "mass.csv").write_text(galerkin.operator_csv(op, "weighted_mass"))
    print(f"N={op.N} n={op.n} asymmetry_S={fmt(op.asymmetry['stiffness'])} "
          f"asymmetry_M={fmt(op.asymmetry['weighted_mass'])}")
    return 0


COMMANDS = {
    "classify": cmd_classify,
    "spectrum": cmd_spectrum,
    "solve": cmd_solve,
    "evolve": cmd_evolve,
    "density-demo": cmd_density,
    "quadrature-selftest": cmd_quadrature,
    "operator": cmd_operator,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (default: $DEGENOP_OUT or .)")
    common.add_argument("--seed", type=int, help="fixture seed")
    common.add_argument("--n", type=int, help="half-order of the operator a u^(2n)")
    common.add_argument("--N", type=int, help="basis size")
    common.add_argument("--alpha", type=float, help="power-law exponent (implies a power profile)")
    common.add_argument("--x0", type=float, help="degeneracy point")
    common.add_argument("--pin", choices=["true", "false", "auto"], help="pin the basis at x0")

    parser = argparse.ArgumentParser(prog="degenop", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    v = sub.add_parser("verify", parents=[common])
    v.add_argument("scope", nargs="?", default="all", choices=verify.SCOPES)
    v.add_argument("--verify-N", dest="verify_N", type=int, default=verify.DEFAULT_N)
    v.add_argument("--fault", choices=verify.FAULTS, help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CODES["bad_config"] if exc.code else 0
    out = Path(args.out or os.environ.get("DEGENOP_OUT", "."))
    try:
        cfg = load_config(args)
        if args.command == "verify":
            return cmd_verify(cfg, out, args)
        return COMMANDS[args.command](cfg, out)
    except (json.JSONDecodeError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CODES["bad_config"]
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_CODES["inconclusive"]
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_CODES["divergence"]
    except (NumericalError, IntegrationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_CODES["numerical"]


if __name__ == "__main__":
    sys.exit(main())
