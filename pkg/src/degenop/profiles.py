"""Degenerate coefficients a(x) on [0, 1] and sample-based checks of their hypotheses."""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DivergenceError, InconclusiveError
from .quadrature import QuadratureScheme, build_graded_mesh, integrate, weighted_contributions

NONDEGENERATE_FLOOR = 1e-8
DIVERGENCE_TOTAL = 1e6
REFINEMENTS = 6


class Degeneracy(str, enum.Enum):
    WEAK = "weak"
    STRONG = "strong"
    NONDEGENERATE = "nondegenerate"


@dataclass(frozen=True, eq=False)
class DegeneracyProfile:
    """The coefficient a(x), its derivative away from x0, and where it vanishes.

    ``kind`` is ``"power"`` (a = |x - x0|**alpha), ``"custom"`` (tabulated) or
    ``"constant"`` (a nondegenerate constant, ``x0`` is None).
    """

    x0: float | None
    eval_a: Callable[[np.ndarray], np.ndarray]
    eval_a_prime: Callable[[np.ndarray], np.ndarray]
    kind: str
    alpha: float | None = None
    spec: dict = field(default_factory=dict)
    eval_a_offset: Callable[[np.ndarray], np.ndarray] | None = None  # a(x0 + d)

    @property
    def interior(self) -> bool:
        return self.x0 is not None and 0.0 < self.x0 < 1.0

    def to_json(self) -> dict:
        return dict(self.spec)

    def fingerprint(self) -> str:
        blob = json.dumps(self.spec, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def mirrored(self) -> "DegeneracyProfile":
        """The profile x -> a(1 - x), rebuilt so that a(1 - x0) is exactly 0."""
        if self.kind == "power":
            return make_power_profile(self.alpha, 1.0 - self.x0)
        if self.kind == "constant":
            return self
        if self.kind == "custom":
            t = np.asarray(self.spec["table"], dtype=float)[::-1]
            table = np.column_stack([1.0 - t[:, 0], t[:, 1], -t[:, 2]])
            return make_custom_profile(table.tolist(), 1.0 - self.x0)
        raise ValueError(f"cannot mirror a profile of kind {self.kind!r}")


def make_power_profile(alpha, x0) -> DegeneracyProfile:
    """a(x) = |x - x0|**alpha."""
    alpha = float(alpha)
    x0 = float(x0)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not 0.0 <= x0 <= 1.0:
        raise ValueError(f"x0 must lie in [0, 1], got {x0}")

    def a(x):
        return np.abs(np.asarray(x, dtype=float) - x0) ** alpha

    def a_prime(x):
        d = np.asarray(x, dtype=float) - x0
        with np.errstate(divide="ignore", invalid="ignore"):
            return alpha * np.sign(d) * np.abs(d) ** (alpha - 1.0)

    def a_offset(d):
        return np.abs(np.asarray(d, dtype=float)) ** alpha

    return DegeneracyProfile(x0, a, a_prime, "power", alpha,
                             {"kind": "power", "alpha": alpha, "x0": x0}, a_offset)


def make_constant_profile(value=1.0) -> DegeneracyProfile:
    value = float(value)
    if not value > 0:
        raise ValueError(f"constant coefficient must be positive, got {value}")

    def a(x):
        return np.full(np.shape(x), value)

    def a_prime(x):
        return np.zeros(np.shape(x))

    return DegeneracyProfile(None, a, a_prime, "constant", None,
                             {"kind": "constant", "value": value})


def make_custom_profile(table, x0=None) -> DegeneracyProfile:
    """Profile from rows ``(x, a, a')`` on an increasing grid covering [0, 1].

    Values between grid points come from piecewise cubic Hermite interpolation;
    ``a(x0)`` is pinned to 0.  ``x0`` defaults to the grid point where a == 0.
    """
    t = np.asarray(table, dtype=float)
    if t.ndim != 2 or t.shape[1] != 3 or len(t) < 2:
        raise ValueError("custom table must be a list of [x, a, a'] rows")
    xs, av, dv = t.T
    if np.any(np.diff(xs) <= 0):
        raise ValueError("custom table x grid must be strictly increasing")
    if xs[0] > 0 or xs[-1] < 1:
        raise ValueError("custom table must cover [0, 1]")
    if x0 is None:
        zeros = np.flatnonzero(av == 0.0)
        if len(zeros) != 1:
            raise ValueError("custom table must contain exactly one row with a = 0 (or give x0)")
        x0 = float(xs[zeros[0]])
    x0 = float(x0)
    if not np.any(xs == x0):
        raise ValueError("x0 must be one of the table grid points")
    # one spline per side in the distance |x - x0|, so values next to x0 are
    # computed without cancellation against a far-away knot
    left, right = xs <= x0, xs >= x0
    sides = []
    for mask, sgn in ((left, -1.0), (right, 1.0)):
        if mask.sum() < 2:
            sides.append(None)
            continue
        d = sgn * (xs[mask] - x0)
        order = np.argsort(d)
        sides.append(CubicHermiteSpline(d[order], av[mask][order], sgn * dv[mask][order]))

    def a_offset(d):
        d = np.asarray(d, dtype=float)
        out = np.zeros_like(d)
        for spline, sel, sgn in ((sides[0], d < 0, -1.0), (sides[1], d > 0, 1.0)):
            if spline is not None and sel.any():
                out[sel] = spline(sgn * d[sel])
        return out

    def a(x):
        return a_offset(np.asarray(x, dtype=float) - x0)

    def a_prime(x):
        d = np.asarray(x, dtype=float) - x0
        out = np.zeros_like(d)
        for spline, sel, sgn in ((sides[0], d < 0, -1.0), (sides[1], d > 0, 1.0)):
            if spline is not None and sel.any():
                out[sel] = sgn * spline.derivative()(sgn * d[sel])
        return out

    spec = {"kind": "custom", "table": t.tolist(), "x0": x0}
    return DegeneracyProfile(x0, a, a_prime, "custom", None, spec, a_offset)


def profile_from_json(obj) -> DegeneracyProfile:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError("profile spec must be an object with a 'kind' field")
    kind = obj["kind"]
    if kind == "power":
        return make_power_profile(obj["alpha"], obj["x0"])
    if kind == "custom":
        return make_custom_profile(obj["table"], obj.get("x0"))
    if kind == "constant":
        return make_constant_profile(obj.get("value", 1.0))
    raise ValueError(f"unknown profile kind {kind!r}")


def sample_points(profile: DegeneracyProfile, per_side=512):
    """Points on each side of x0: half log-spaced toward x0, half uniform.

    Returns ``(left, right)`` distances-sorted arrays of x values (x increasing).
    """
    x0 = profile.x0
    n_log = per_side // 2
    n_lin = per_side - n_log
    sides = []
    for length, sign in ((x0, -1.0), (1.0 - x0, 1.0)):
        if length <= 0:
            sides.append(np.empty(0))
            continue
        d = np.concatenate([
            length * np.logspace(-10, 0, n_log),
            np.linspace(length / n_lin, length, n_lin),
        ])
        d = np.unique(d)
        sides.append(np.sort(x0 + sign * d))
    return sides[0], sides[1]


def check_vanishing_hypothesis(profile: DegeneracyProfile, per_side=512) -> bool:
    """a(x0) = 0 and a > 0 at every sampled point away from x0."""
    if profile.x0 is None:
        return False
    left, right = sample_points(profile, per_side)
    x = np.concatenate([left, right])
    return bool(profile.eval_a(np.array([profile.x0]))[0] == 0.0 and np.all(profile.eval_a(x) > 0))


@dataclass(frozen=True)
class DegeneracyClass:
    cls: Degeneracy
    integral_estimate: float | None  # None when 1/a diverges
    diverges: bool
    partial_integrals: tuple[float, ...] = ()

    def to_json(self) -> dict:
        return {
            "class": self.cls.value,
            "integral_estimate": self.integral_estimate,
            "diverges": self.diverges,
            "partial_integrals": list(self.partial_integrals),
        }


def classify(profile: DegeneracyProfile, scheme: QuadratureScheme | None = None) -> DegeneracyClass:
    """Decide whether 1/a is integrable by watching partial integrals under refinement.

    The graded layers next to x0 are grouped into six blocks; adding them one
    at a time (outermost first) gives six successive refinements of the
    partial integral over {|x - x0| > eps}.  Increments that shrink
    geometrically mean 1/a is integrable and the geometric tail is added to the
    estimate; increments that do not shrink (ratio >= 0.9), or a total above
    1e6, mean it is not.
    """
    if profile.x0 is None:
        sc = scheme if scheme is not None else build_graded_mesh(None, 0.0, 16, 8)
        lo = float(np.min(profile.eval_a(sc.nodes)))
        if lo > NONDEGENERATE_FLOOR:
            return DegeneracyClass(Degeneracy.NONDEGENERATE, integrate(lambda x: 1.0 / profile.eval_a(x), sc), False)
        raise InconclusiveError("profile has no degeneracy point but a is not bounded away from 0")
    if scheme is None:
        scheme = build_graded_mesh(profile.x0, profile.alpha or 1.0, 32, 16)
    if scheme.x0 != profile.x0:
        raise ValueError("scheme is not graded toward the profile's degeneracy point")
    if not check_vanishing_hypothesis(profile):
        raise ValueError("profile violates a(x0) = 0 < a(x) elsewhere")
    m = scheme.n_layers
    block = (m - 1) // REFINEMENTS
    if block < 1:
        raise ValueError(f"scheme needs at least {REFINEMENTS + 1} graded layers, has {m}")

    try:
        c = weighted_contributions(lambda x: 1.0, profile, scheme)
    except DivergenceError:
        return DegeneracyClass(Degeneracy.STRONG, None, True)
    layers = scheme.layer_sums(c)
    ungraded = float(c[scheme.node_layer < 0].sum())
    blocks = [layers[1 + k * block : 1 + (k + 1) * block].sum() for k in range(REFINEMENTS)]
    base = layers[1 + REFINEMENTS * block :].sum() + ungraded
    increments = blocks[::-1]  # outermost block first
    partial = tuple(float(p) for p in base + np.cumsum(increments))
    ratios = [increments[k + 1] / increments[k] for k in range(REFINEMENTS - 1)]

    if partial[-1] > DIVERGENCE_TOTAL or all(r >= 0.9 for r in ratios[-3:]):
        return DegeneracyClass(Degeneracy.STRONG, None, True, partial)
    if all(r < 0.9 for r in ratios) and max(ratios) - min(ratios) < 0.5 * max(ratios) + 1e-12:
        q = ratios[-1]
        tail = increments[-1] * q / (1.0 - q)
        return DegeneracyClass(Degeneracy.WEAK, float(partial[-1] + tail), False, partial)
    raise InconclusiveError(
        f"partial integrals of 1/a neither stabilise nor diverge (increment ratios {ratios})"
    )


@dataclass(frozen=True)
class GrowthReport:
    k_exponent: float | None
    k_constant: float
    monotone_ok: bool
    samples_used: int
    bound_ok: bool

    @property
    def ok(self) -> bool:
        return self.bound_ok and self.monotone_ok

    def to_json(self) -> dict:
        return {
            "k_exponent": self.k_exponent,
            "k_constant": self.k_constant if np.isfinite(self.k_constant) else None,
            "monotone_ok": self.monotone_ok,
            "bound_ok": self.bound_ok,
            "samples_used": self.samples_used,
        }


def check_growth_hypothesis(profile: DegeneracyProfile, sample_count=512) -> GrowthReport:
    """Sample-based certificate for 1/a <= C/|x - x0|**K (K in [1, 2]) and monotonicity.

    K is the local exponent of 1/a at x0, read off a log-log fit over the
    samples closest to x0 and clipped up to 1.  The check is global on
    [0, 1] minus x0; a profile whose exponent exceeds 2 is reported as failing.
    """
    if profile.x0 is None:
        raise ValueError("nondegenerate profile has no degeneracy point")
    left, right = sample_points(profile, sample_count)
    x = np.concatenate([left, right])
    d = np.abs(x - profile.x0)
    inv_a = 1.0 / profile.eval_a(x)

    # local exponent from the innermost decades on each side
    slopes = []
    for side in (left, right):
        if len(side) < 8:
            continue
        ds = np.abs(side - profile.x0)
        near = np.argsort(ds)[: max(8, len(side) // 8)]
        slope = np.polyfit(np.log(ds[near]), np.log(1.0 / profile.eval_a(side[near])), 1)[0]
        slopes.append(-slope)
    k_fit = max(slopes)

    monotone = True
    tol = 1e-14 * float(np.max(profile.eval_a(x)))
    if len(left):
        monotone &= bool(np.all(np.diff(profile.eval_a(left)) <= tol))
    if len(right):
        monotone &= bool(np.all(np.diff(profile.eval_a(right)) >= -tol))

    if k_fit > 2.0 + 1e-6:
        return GrowthReport(None, float("inf"), monotone, len(x), False)
    k = float(min(max(1.0, k_fit), 2.0))
    c = float(np.max(d**k * inv_a)) * (1.0 + 1e-12)
    return GrowthReport(k, c, monotone, len(x), bool(np.all(inv_a <= c / d**k)))
