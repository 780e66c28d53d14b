"""Composite Gauss-Legendre quadrature on meshes graded toward the degeneracy point.

Cells cluster geometrically toward ``x0`` so that integrands carrying a factor
``1/a`` with ``a(x) ~ |x - x0|^alpha`` are resolved.  ``x0`` is always a cell
endpoint and never a node, so ``1/a`` is never evaluated at its pole.

Every graded cell carries a *layer* index: layer 0 is the cell touching
``x0``, layer ``j`` is the ``j``-th cell counted outward.  Per-layer sums give
a cheap certificate of whether a weighted integral converges: for an integrable
singularity the contribution of successive layers shrinks geometrically, for a
non-integrable one it does not.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DivergenceError, IntegrationError

OVERFLOW_GUARD = 1e12
TAIL_RATIO_THRESHOLD = 0.9
TAIL_SHARE_FLOOR = 1e-10
TAIL_BLOCK = 4


@lru_cache(maxsize=64)
def _gauss_legendre(q: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(q)
    t.flags.writeable = False
    w.flags.writeable = False
    return t, w


def grading_ratio(alpha_hint: float) -> float:
    """Geometric ratio between successive cell lengths toward x0."""
    return 0.5 ** (1.0 + alpha_hint / 2.0)


@dataclass(frozen=True, eq=False)
class QuadratureScheme:
    """Cells, their layer indices and the flattened Gauss node table.

    ``cell_offsets`` holds the cell endpoints measured from x0 (signed), which
    keeps node distances to x0 exact even where float spacing near x0 is
    coarser than the innermost cells.
    """

    cell_offsets: np.ndarray  # (n, 2), increasing, relative to x0 (or to 0 when x0 is None)
    cell_layer: np.ndarray  # (n,) layer index, -1 for ungraded cells
    nodes_per_cell: int
    grading_exponent: float
    x0: float | None
    alpha_hint: float
    nodes: np.ndarray = field(init=False)
    offsets: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)
    node_layer: np.ndarray = field(init=False)

    def __post_init__(self):
        t, w = _gauss_legendre(self.nodes_per_cell)
        lo = self.cell_offsets[:, 0:1]
        hi = self.cell_offsets[:, 1:2]
        half = 0.5 * (hi - lo)
        offsets = (0.5 * (lo + hi) + half * t).ravel()
        weights = (half * w).ravel()
        nodes = offsets + (self.x0 or 0.0)
        layer = np.repeat(self.cell_layer, self.nodes_per_cell)
        for name, arr in (("nodes", nodes), ("offsets", offsets), ("weights", weights),
                          ("node_layer", layer)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def cells(self) -> np.ndarray:
        c = self.cell_offsets + (self.x0 or 0.0)
        c[0, 0], c[-1, 1] = 0.0, 1.0
        return c

    @property
    def n_cells(self) -> int:
        return len(self.cell_offsets)

    @property
    def n_layers(self) -> int:
        return int(self.cell_layer.max()) + 1 if self.x0 is not None else 0

    @property
    def node_table(self) -> np.ndarray:
        return np.column_stack([self.nodes, self.weights])

    @property
    def endpoints(self) -> np.ndarray:
        c = self.cells
        return np.append(c[:, 0], c[-1, 1])

    def _replace(self, **kw) -> "QuadratureScheme":
        args = dict(cell_offsets=self.cell_offsets, cell_layer=self.cell_layer,
                    nodes_per_cell=self.nodes_per_cell, grading_exponent=self.grading_exponent,
                    x0=self.x0, alpha_hint=self.alpha_hint)
        args.update(kw)
        return QuadratureScheme(**args)

    def with_breakpoints(self, points) -> "QuadratureScheme":
        """Split cells so that every point in ``points`` is a cell endpoint."""
        base = self.x0 or 0.0
        cells = [tuple(c) for c in self.cell_offsets]
        layers = list(self.cell_layer)
        for p in sorted(set(float(p) - base for p in points)):
            for i, (lo, hi) in enumerate(cells):
                if lo < p < hi and min(p - lo, hi - p) > 1e-12 * (hi - lo):
                    cells[i : i + 1] = [(lo, p), (p, hi)]
                    layers[i : i + 1] = [layers[i], layers[i]]
                    break
        return self._replace(cell_offsets=np.array(cells), cell_layer=np.array(layers, dtype=int))

    def with_nodes(self, nodes_per_cell: int) -> "QuadratureScheme":
        return self._replace(nodes_per_cell=int(nodes_per_cell))

    def mirrored(self) -> "QuadratureScheme":
        """The scheme under x -> 1 - x."""
        if self.x0 is None:
            offsets = 1.0 - self.cell_offsets[::-1, ::-1]
            return self._replace(cell_offsets=offsets, cell_layer=self.cell_layer[::-1].copy())
        return self._replace(cell_offsets=-self.cell_offsets[::-1, ::-1],
                             cell_layer=self.cell_layer[::-1].copy(), x0=1.0 - self.x0)

    def layer_sums(self, contributions: np.ndarray) -> np.ndarray:
        """Sum node contributions per layer (both sides of x0 together).

        ``contributions`` has shape (n_nodes,) or (n_nodes, k); the result has
        shape (n_layers,) or (n_layers, k).
        """
        contributions = np.asarray(contributions)
        graded = self.node_layer >= 0
        out = np.zeros((self.n_layers,) + contributions.shape[1:])
        np.add.at(out, self.node_layer[graded], contributions[graded])
        return out


def build_graded_mesh(x0, alpha_hint=1.0, n_cells=32, nodes_per_cell=8, breakpoints=()):
    """Composite Gauss-Legendre scheme graded geometrically toward ``x0``.

    ``n_cells`` counts graded cells on *each* side of ``x0`` that has positive
    length; the ratio between neighbouring cell lengths is
    ``0.5 ** (1 + alpha_hint / 2)``.  Grading stops early once the innermost
    Gauss node would sit within a few float spacings of ``x0``.  With
    ``x0=None`` the mesh is uniform with ``n_cells`` cells.
    """
    if n_cells < 4:
        raise ValueError(f"n_cells must be >= 4, got {n_cells}")
    if nodes_per_cell < 2:
        raise ValueError(f"nodes_per_cell must be >= 2, got {nodes_per_cell}")
    if alpha_hint < 0:
        raise ValueError(f"alpha_hint must be >= 0, got {alpha_hint}")
    exponent = 1.0 + alpha_hint / 2.0
    if x0 is None:
        edges = np.linspace(0.0, 1.0, n_cells + 1)
        offsets = np.column_stack([edges[:-1], edges[1:]])
        layers = -np.ones(n_cells, dtype=int)
    else:
        x0 = float(x0)
        if not 0.0 <= x0 <= 1.0:
            raise ValueError(f"x0 must lie in [0, 1], got {x0}")
        r = grading_ratio(alpha_hint)
        t, _ = _gauss_legendre(int(nodes_per_cell))
        min_width = 32.0 * np.spacing(x0) / (1.0 - t[-1])
        pieces, layer_pieces = [], []
        for length, sign in ((x0, -1.0), (1.0 - x0, 1.0)):
            if length <= 0.0:
                continue
            m = n_cells
            while m > 4 and length * r ** (m - 1) < min_width:
                m -= 1
            dist = np.concatenate([[0.0], length * r ** np.arange(m - 1, -1, -1)])
            dist[-1] = length
            cells = np.column_stack([dist[:-1], dist[1:]])
            layer = np.arange(m)
            if sign < 0:
                cells = -cells[::-1, ::-1]
                layer = layer[::-1]
            pieces.append(cells)
            layer_pieces.append(layer)
        offsets = np.vstack(pieces)
        layers = np.concatenate(layer_pieces)
    scheme = QuadratureScheme(offsets, layers, int(nodes_per_cell), exponent, x0, float(alpha_hint))
    if len(breakpoints):
        scheme = scheme.with_breakpoints(breakpoints)
    return scheme


def inverse_weight(profile, scheme: QuadratureScheme) -> np.ndarray:
    """1/a at the scheme nodes, evaluated from exact offsets to x0 when possible."""
    with np.errstate(divide="ignore", over="ignore"):
        if scheme.x0 is not None and getattr(profile, "eval_a_offset", None) is not None:
            return 1.0 / profile.eval_a_offset(scheme.offsets)
        return 1.0 / profile.eval_a(scheme.nodes)


def _evaluate(f, x):
    vals = np.asarray(f(x), dtype=float)
    if vals.shape != x.shape:
        vals = np.broadcast_to(vals, x.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise IntegrationError(f"integrand is not finite at node x={x[i]!r}", node=float(x[i]))
    return vals


def integrate(f, scheme: QuadratureScheme) -> float:
    """Sum of w_i f(x_i); ``f`` must accept a numpy array."""
    return float(scheme.weights @ _evaluate(f, scheme.nodes))


def tail_ratio(scheme: QuadratureScheme, abs_contributions: np.ndarray):
    """Ratio of the innermost block of layers to the next block out.

    Layer 0 (the cell touching x0) is skipped: Gauss rules return a finite
    number there even for non-integrable integrands.  Returns ``(ratio,
    share)`` where ``share`` is the inner block's fraction of the total.
    A ratio >= 0.9 with a non-negligible share means the contributions are not
    decaying toward x0, i.e. the integral diverges.
    """
    sums = scheme.layer_sums(abs_contributions)
    m = sums.shape[0]
    block = min(TAIL_BLOCK, (m - 1) // 2)
    if block < 1:
        zero = np.zeros(sums.shape[1:])
        return zero, zero
    inner = sums[1 : 1 + block].sum(axis=0)
    outer = sums[1 + block : 1 + 2 * block].sum(axis=0)
    total = np.abs(abs_contributions).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(outer > 0, inner / outer, np.where(inner > 0, np.inf, 0.0))
        share = np.where(total > 0, inner / total, 0.0)
    return ratio, share


def diverging(ratio, share):
    return (np.asarray(ratio) >= TAIL_RATIO_THRESHOLD) & (np.asarray(share) > TAIL_SHARE_FLOOR)


def weighted_contributions(f, profile, scheme: QuadratureScheme) -> np.ndarray:
    x = scheme.nodes
    vals = _evaluate(f, x)
    with np.errstate(over="ignore", invalid="ignore"):
        c = scheme.weights * vals * inverse_weight(profile, scheme)
    check_overflow(c, x)
    return c


def check_overflow(c: np.ndarray, x: np.ndarray) -> None:
    bad = ~np.isfinite(c) | (np.abs(c) > OVERFLOW_GUARD)
    if bad.any():
        rows = bad.reshape(len(x), -1)
        i = int(np.argmax(rows.any(axis=1)))
        j = int(np.argmax(rows[i]))
        pair = (j, j) if c.ndim == 2 else None
        where = f" in column {j}" if pair else ""
        raise DivergenceError(f"weighted contribution overflow at node x={x[i]!r}{where}", pair=pair)


def integrate_weighted(f, profile, scheme: QuadratureScheme) -> float:
    """Quadrature of f(x)/a(x), raising DivergenceError when it does not converge."""
    c = weighted_contributions(f, profile, scheme)
    if scheme.x0 is not None:
        ratio, share = tail_ratio(scheme, np.abs(c))
        if diverging(ratio, share):
            raise DivergenceError(
                f"f/a is not integrable near x0={scheme.x0}: layer contributions "
                f"do not decay (ratio {float(ratio):.3g})",
                ratio=float(ratio),
            )
    return float(c.sum())
