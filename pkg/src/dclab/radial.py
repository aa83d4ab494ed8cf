"""Half-line discretisation of two-component radial functions.

Composite Gauss-Legendre panels on a geometric subdivision of
[r_min, r_max] provide quadrature, per-panel spectral differentiation and
cumulative integration. The formal operator

    S~ = [[1 + nu/r, -d/dr + kappa/r], [d/dr + kappa/r, -1 + nu/r]]

is applied to sampled spinors, and S~u = E u is integrated as an initial
value problem in the variable t = log r.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.integrate import solve_ivp

__all__ = [
    "RadialGrid",
    "SpinorFunction",
    "GridResolutionWarning",
    "make_grid",
    "inner_product",
    "norm",
    "derivative",
    "cumulative_integral",
    "apply_dirac",
    "integrate_ivp",
    "integrate_to",
    "origin_tail_integral",
    "log_radius_matrix",
    "default_grid",
]

DEFAULT_GRID = dict(r_min=1e-8, r_max=40.0, panels=400, order=8)


class GridResolutionWarning(RuntimeWarning):
    """The grid does not resolve the sampled function to the requested tolerance."""


@lru_cache(maxsize=None)
def _reference_panel(order: int):
    """Gauss nodes/weights on [-1, 1] with differentiation and
    cumulative-integration matrices acting on nodal values."""
    x, w = npleg.leggauss(order)
    V = npleg.legvander(x, order - 1)
    Vinv = np.linalg.inv(V)
    # derivative of the interpolant, evaluated at the nodes
    Dcoef = np.zeros((order, order))
    Icoef = np.zeros((order, order))
    for j in range(order):
        e = np.zeros(order)
        e[j] = 1.0
        Dcoef[:, j] = npleg.legval(x, npleg.legder(e))
        Icoef[:, j] = npleg.legval(x, npleg.legint(e, lbnd=-1.0))
    D = Dcoef @ Vinv
    # rows of an exact differentiation matrix sum to zero; enforcing it
    # removes the O(eps n^2 / h) error on locally constant data
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    Q = Icoef @ Vinv
    for a in (x, w, D, Q, Vinv):
        a.setflags(write=False)
    return x, w, D, Q, Vinv


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Composite Gauss-Legendre grid on a geometric panel subdivision.

    Attributes
    ----------
    nodes, weights : ndarray
        Quadrature nodes (strictly increasing) and positive weights.
    r_min, r_max : float
        Outer ends of the grid.
    panels, order : int
        Number of panels and Gauss points per panel.
    """

    r_min: float
    r_max: float
    panels: int
    order: int
    edges: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def half_widths(self) -> np.ndarray:
        return 0.5 * np.diff(self.edges)

    def params(self) -> dict:
        return dict(r_min=self.r_min, r_max=self.r_max, panels=self.panels, order=self.order)

    def same_as(self, other: "RadialGrid") -> bool:
        return self is other or self.params() == other.params()

    def integrate(self, values) -> complex | float:
        return np.dot(self.weights, values)

    def __len__(self):
        return self.size


def make_grid(r_min: float = 1e-8, r_max: float = 40.0, panels: int = 400,
              order: int = 8) -> RadialGrid:
    """Geometric panels with `order` Gauss-Legendre nodes each.

    Consecutive panel endpoints have the constant ratio
    (r_max / r_min)^(1/panels).
    """
    r_min, r_max = float(r_min), float(r_max)
    if not (0 < r_min < r_max) or not np.isfinite(r_max):
        raise ValueError(f"invalid radial range ({r_min}, {r_max})")
    if r_min < 1e-10:
        raise ValueError("r_min below 1e-10 is not supported")
    if int(panels) < 1 or not 2 <= int(order) <= 20:
        raise ValueError("need panels >= 1 and 2 <= order <= 20")
    panels, order = int(panels), int(order)
    edges = np.geomspace(r_min, r_max, panels + 1)
    edges[0], edges[-1] = r_min, r_max
    x, w, *_ = _reference_panel(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    for a in (edges, nodes, weights):
        a.setflags(write=False)
    return RadialGrid(r_min, r_max, panels, order, edges, nodes, weights)


def default_grid() -> RadialGrid:
    return make_grid(**DEFAULT_GRID)


@dataclass(frozen=True, eq=False)
class SpinorFunction:
    """Two-component complex function sampled on a RadialGrid."""

    grid: RadialGrid
    upper: np.ndarray
    lower: np.ndarray

    def __post_init__(self):
        up = np.array(self.upper, dtype=complex)
        lo = np.array(self.lower, dtype=complex)
        n = self.grid.size
        if up.shape != (n,) or lo.shape != (n,):
            raise ValueError(f"component arrays must have shape ({n},)")
        if not (np.all(np.isfinite(up)) and np.all(np.isfinite(lo))):
            raise ValueError("spinor values must be finite")
        up.setflags(write=False)
        lo.setflags(write=False)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "lower", lo)

    # construction ---------------------------------------------------
    @classmethod
    def from_callable(cls, grid: RadialGrid, func) -> "SpinorFunction":
        """Sample `func(r) -> (2, n)` array on the grid."""
        vals = np.asarray(func(grid.nodes))
        return cls(grid, vals[0], vals[1])

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "SpinorFunction":
        z = np.zeros(grid.size)
        return cls(grid, z, z)

    # arithmetic -----------------------------------------------------
    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def values(self) -> np.ndarray:
        return np.vstack([self.upper, self.lower])

    def _check(self, other):
        if not self.grid.same_as(other.grid):
            raise ValueError("spinor functions live on different grids")

    def __add__(self, other):
        self._check(other)
        return SpinorFunction(self.grid, self.upper + other.upper, self.lower + other.lower)

    def __sub__(self, other):
        self._check(other)
        return SpinorFunction(self.grid, self.upper - other.upper, self.lower - other.lower)

    def __mul__(self, scalar):
        return SpinorFunction(self.grid, scalar * self.upper, scalar * self.lower)

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    def scale_by(self, profile) -> "SpinorFunction":
        """Pointwise multiplication by a scalar profile on the nodes."""
        return SpinorFunction(self.grid, profile * self.upper, profile * self.lower)

    def restrict(self, r_lo: float = 0.0, r_hi: float = np.inf) -> "SpinorFunction":
        """Zero the function outside [r_lo, r_hi]."""
        mask = (self.r >= r_lo) & (self.r <= r_hi)
        return self.scale_by(mask.astype(float))

    def pointwise_norm(self) -> np.ndarray:
        return np.sqrt(np.abs(self.upper) ** 2 + np.abs(self.lower) ** 2)

    # serialisation --------------------------------------------------
    def to_records(self) -> list[dict]:
        return [
            {"r": float(r), "re_up": float(u.real), "im_up": float(u.imag),
             "re_lo": float(v.real), "im_lo": float(v.imag)}
            for r, u, v in zip(self.r, self.upper, self.lower)
        ]

    def to_json(self) -> str:
        doc = {"grid": self.grid.params(), "records": self.to_records()}
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str, grid: RadialGrid | None = None) -> "SpinorFunction":
        doc = json.loads(text)
        if isinstance(doc, list):
            records, params = doc, None
        else:
            records, params = doc["records"], doc.get("grid")
        return cls._from_records(records, params, grid)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        p = self.grid.params()
        buf.write("# grid " + " ".join(f"{k}={p[k]!r}" for k in p) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "re_up", "im_up", "re_lo", "im_lo"])
        for rec in self.to_records():
            writer.writerow([repr(rec[k]) for k in ("r", "re_up", "im_up", "re_lo", "im_lo")])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source, grid: RadialGrid | None = None) -> "SpinorFunction":
        """Read CSV text or a file path written by `to_csv`."""
        if "\n" not in str(source):
            with open(source) as fh:
                source = fh.read()
        params = None
        lines = []
        for line in str(source).splitlines():
            if line.startswith("#"):
                if line.startswith("# grid"):
                    params = {}
                    for tok in line[len("# grid"):].split():
                        k, v = tok.split("=")
                        params[k] = float(v) if k.startswith("r_") else int(v)
                continue
            if line.strip():
                lines.append(line)
        records = [{k: float(v) for k, v in row.items()} for row in csv.DictReader(lines)]
        return cls._from_records(records, params, grid)

    @classmethod
    def _from_records(cls, records, params, grid):
        r = np.array([rec["r"] for rec in records])
        if grid is None:
            grid = make_grid(**params) if params else _infer_grid(r)
        if grid.size != r.size or not np.allclose(grid.nodes, r, rtol=1e-14, atol=0):
            raise ValueError("records do not match the grid nodes")
        up = np.array([rec["re_up"] + 1j * rec["im_up"] for rec in records])
        lo = np.array([rec["re_lo"] + 1j * rec["im_lo"] for rec in records])
        return cls(grid, up, lo)


def _infer_grid(r: np.ndarray) -> RadialGrid:
    """Recover make_grid parameters from bare node positions."""
    for order in range(2, 21):
        if r.size % order:
            continue
        x, *_ = _reference_panel(order)
        panels = r.size // order
        pts = r.reshape(panels, order)
        half = (pts[:, -1] - pts[:, 0]) / (x[-1] - x[0])
        lo = pts[:, 0] - half * (1 + x[0])
        hi = lo + 2 * half
        try:
            g = make_grid(lo[0], hi[-1], panels, order)
        except ValueError:
            continue
        if np.allclose(g.nodes, r, rtol=1e-12, atol=0):
            return g
    raise ValueError("cannot infer a composite Gauss grid from the node positions")


def inner_product(f: SpinorFunction, g: SpinorFunction) -> complex:
    """L^2 inner product, antilinear in the first argument."""
    if not f.grid.same_as(g.grid):
        raise ValueError("inner product of functions on different grids")
    w = f.grid.weights
    return complex(np.dot(w, np.conj(f.upper) * g.upper + np.conj(f.lower) * g.lower))


def norm(f: SpinorFunction) -> float:
    return float(np.sqrt(max(inner_product(f, f).real, 0.0)))


def _panel_view(grid: RadialGrid, values):
    return np.asarray(values).reshape(grid.panels, grid.order)


def derivative(grid: RadialGrid, values, *, tol: float | None = None) -> np.ndarray:
    """Derivative of sampled values by per-panel polynomial interpolation.

    With `tol` set, a GridResolutionWarning is issued when the highest
    Legendre coefficient on some panel exceeds `tol` relative to the
    largest value on that panel.
    """
    _, _, D, _, Vinv = _reference_panel(grid.order)
    v = _panel_view(grid, values)
    # extended precision keeps the matrix-vector roundoff below the
    # sampling error of the data
    Dl = D.astype(np.longdouble)
    out = ((v.astype(np.longdouble) @ Dl.T) / grid.half_widths[:, None]).astype(float)
    if tol is not None:
        tail = np.abs(v @ Vinv[-1])
        scale = np.abs(v).max(axis=1)
        bad = tail > tol * np.maximum(scale, np.finfo(float).tiny)
        if np.any(bad):
            warnings.warn(f"{bad.sum()} panels under-resolved at tolerance {tol:g}",
                          GridResolutionWarning, stacklevel=2)
    return out.ravel()


def cumulative_integral(grid: RadialGrid, values, *, from_right: bool = False) -> np.ndarray:
    """Integral of the sampled values from r_min up to each node, or from
    each node up to r_max when `from_right` is set."""
    _, w, _, Q, _ = _reference_panel(grid.order)
    v = _panel_view(grid, values)
    half = grid.half_widths[:, None]
    if not from_right:
        inside = (v @ Q.T) * half
        totals = (v @ w) * half[:, 0]
        before = np.concatenate([[0.0], np.cumsum(totals[:-1])])
        return (inside + before[:, None]).ravel()
    # integral from x_i to +1 within the panel is w-sum minus Q, evaluated
    # directly on the reversed reference panel to avoid subtraction
    inside = (v[:, ::-1] @ Q.T)[:, ::-1] * half
    totals = (v @ w) * half[:, 0]
    after = np.concatenate([np.cumsum(totals[::-1])[::-1][1:], [0.0]])
    return (inside + after[:, None]).ravel()


def apply_dirac(c, E: float, g: SpinorFunction, *, tol: float | None = None) -> SpinorFunction:
    """Sample (S~ - E) g on the nodes of g's grid.

    `c` supplies `nu` and `kappa`. Differentiation is per panel, so every
    node is an interior point of its interpolant and no edge nodes need
    special treatment.
    """
    r = g.r
    nu, kappa = c.nu, c.kappa
    du = derivative(g.grid, g.upper.real, tol=tol) + 1j * derivative(g.grid, g.upper.imag, tol=tol)
    dl = derivative(g.grid, g.lower.real, tol=tol) + 1j * derivative(g.grid, g.lower.imag, tol=tol)
    up = (1.0 + nu / r - E) * g.upper - dl + (kappa / r) * g.lower
    lo = du + (kappa / r) * g.upper + (-1.0 + nu / r - E) * g.lower
    return SpinorFunction(g.grid, up, lo)


def log_radius_matrix(c, E: float, r):
    """Coefficient matrix of du/dt for t = log r, u solving S~u = E u."""
    nu, kappa = c.nu, c.kappa
    r = np.asarray(r, dtype=float)
    return np.array([[-kappa * np.ones_like(r), (E + 1.0) * r - nu],
                     [(1.0 - E) * r + nu, kappa * np.ones_like(r)]])


def _ivp_solve(c, E, r_start, u_start, r_eval, rtol=1e-12):
    u0 = np.asarray(u_start, dtype=complex)
    scale = np.max(np.abs(u0))
    y0 = np.concatenate([u0.real, u0.imag]) / scale
    nu, kappa = c.nu, c.kappa

    def rhs(t, y):
        r = np.exp(t)
        a, b = (E + 1.0) * r - nu, (1.0 - E) * r + nu
        return np.array([-kappa * y[0] + a * y[1], b * y[0] + kappa * y[1],
                         -kappa * y[2] + a * y[3], b * y[2] + kappa * y[3]])

    t_eval = np.log(r_eval)
    sol = solve_ivp(rhs, (np.log(r_start), t_eval[-1]), y0, method="DOP853",
                    t_eval=t_eval, rtol=rtol, atol=1e-15)
    if not sol.success:
        raise RuntimeError(f"IVP integration failed: {sol.message}")
    y = sol.y * scale
    return y[0] + 1j * y[2], y[1] + 1j * y[3]


def integrate_ivp(c, E: float, r_start: float, u_start, direction: str, r_end: float,
                  grid: RadialGrid | None = None, rtol: float = 1e-12) -> SpinorFunction:
    """Solve S~u = E u from u(r_start) = u_start towards r_end.

    The system is integrated in t = log r, where its coefficients
    [[-kappa, (E+1) r - nu], [(1-E) r + nu, kappa]] are smooth down to
    r = 0. The result is sampled on `grid` (default: a 60-panel grid
    spanning the integration range); grid nodes outside the range must
    not occur.
    """
    if direction not in ("inward", "outward"):
        raise ValueError("direction must be 'inward' or 'outward'")
    if r_start <= 0 or r_end <= 0:
        raise ValueError("radii must be positive")
    if r_end < 1e-10:
        raise ValueError("integration below r = 1e-10 is not supported")
    if (direction == "inward") != (r_end < r_start):
        raise ValueError(f"r_end={r_end} is not {direction} of r_start={r_start}")
    if not np.any(np.asarray(u_start) != 0):
        raise ValueError("u_start must be non-zero")
    lo, hi = min(r_start, r_end), max(r_start, r_end)
    if grid is None:
        grid = make_grid(lo, hi, 60, 8)
    r = grid.nodes
    if r[0] < lo * (1 - 1e-14) or r[-1] > hi * (1 + 1e-14):
        raise ValueError("grid extends beyond the integration range")
    order = np.argsort(r)[::-1] if direction == "inward" else np.argsort(r)
    up, dn = _ivp_solve(c, E, r_start, u_start, r[order], rtol=rtol)
    U = np.empty(r.size, complex)
    L = np.empty(r.size, complex)
    U[order], L[order] = up, dn
    return SpinorFunction(grid, U, L)


def integrate_to(c, E: float, r_start: float, u_start, r_targets, rtol: float = 1e-12):
    """Values of the IVP solution at arbitrary radii, shape (2, n)."""
    r_targets = np.atleast_1d(np.asarray(r_targets, dtype=float))
    inward = r_targets < r_start
    out = np.empty((2, r_targets.size), complex)
    for mask, sgn in ((inward, -1), (~inward, 1)):
        if not np.any(mask):
            continue
        idx = np.flatnonzero(mask)
        idx = idx[np.argsort(sgn * r_targets[idx])]
        up, dn = _ivp_solve(c, E, r_start, u_start, r_targets[idx], rtol=rtol)
        out[0, idx], out[1, idx] = up, dn
    return out


def origin_tail_integral(grid: RadialGrid, values, exponents, panels: int = 1) -> complex:
    """int_0^r_min of a sampled function assumed to be a combination of
    r^e, e in `exponents` (all > -1), near the origin.

    The combination is least-squares fitted on the first `panels` panels
    and integrated analytically.
    """
    ex = np.asarray(exponents, dtype=float)
    if np.any(ex <= -1):
        raise ValueError("exponents must exceed -1 for an integrable tail")
    n = grid.order * min(panels, grid.panels)
    r = grid.nodes[:n]
    A = (r[:, None] / r[0]) ** ex[None, :]
    coef, *_ = np.linalg.lstsq(A, np.asarray(values)[:n], rcond=None)
    rm = grid.r_min
    return complex(np.sum(coef * r[0] ** (-ex) * rm ** (1 + ex) / (1 + ex)))
