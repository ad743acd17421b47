"""Integration kernels: adaptive Gauss-Kronrod in 1D and a cumulative
product-Gauss sweep over the characteristic triangle ``|v| <= u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss-7 weights laid out on the Kronrod abscissae (zero at Kronrod-only nodes).
GAUSS_ON_KRONROD = np.zeros(15)
GAUSS_ON_KRONROD[[1, 3, 5]] = _WG[:3]
GAUSS_ON_KRONROD[7] = _WG[3]
GAUSS_ON_KRONROD[[9, 11, 13]] = _WG[2::-1]

DEFAULT_BUDGET = 1_000_000
_EPS = np.finfo(float).eps


class QuadratureError(RuntimeError):
    """Tolerance not reached within the evaluation budget."""

    def __init__(self, message: str, best: "QuadResult"):
        super().__init__(f"{message} (best value {best.value!r}, error estimate {best.error_estimate:.3e})")
        self.best = best


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _call(f, x):
    return np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)


def _kronrod_panels(f, lo, hi):
    """Apply G7-K15 to every panel ``[lo[k], hi[k]]``; returns (values, errors)."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * KRONROD_NODES
    fx = _call(f, x.ravel()).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise FloatingPointError("integrand returned non-finite values")
    kron = fx @ KRONROD_WEIGHTS
    gauss = fx @ GAUSS_ON_KRONROD
    mean = 0.5 * kron
    resabs = np.abs(fx) @ KRONROD_WEIGHTS * np.abs(half)
    resasc = np.abs(fx - mean[:, None]) @ KRONROD_WEIGHTS * np.abs(half)
    err = np.abs((kron - gauss) * half)
    # QUADPACK error scaling and roundoff floor.
    scaled = np.where(resasc > 0, resasc * np.minimum(1.0, (200.0 * err / np.where(resasc > 0, resasc, 1.0)) ** 1.5), err)
    err = np.where((resasc > 0) & (err > 0), scaled, err)
    err = np.maximum(err, 50.0 * _EPS * resabs)
    return kron * half, err


def integrate_1d(f, a: float, b: float, tol: float = 1e-10, kinks=(), *,
                 rtol: float = 0.0, max_evals: int = DEFAULT_BUDGET) -> QuadResult:
    """Adaptive integral of a vectorized ``f`` over ``[a, b]``.

    The interval is split at every interior point of ``kinks`` before any
    refinement. ``b = inf`` is handled by the map ``x = a + s/(1-s)``.
    Converges when the summed error estimate is at most
    ``max(tol, rtol*|value|)``; otherwise raises :class:`QuadratureError`
    carrying the best estimate.
    """
    a = float(a)
    b = float(b)
    if math.isnan(a) or math.isnan(b) or a > b:
        raise ValueError(f"need a <= b, got [{a}, {b}]")
    if not math.isfinite(a):
        raise ValueError("lower limit must be finite")
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    if math.isinf(b):
        g = f

        def f(s):  # noqa: F811 - mapped integrand
            one_minus = 1.0 - s
            inside = one_minus > 0
            # s rounds to 1 only on panels of width ~eps; that point carries no weight.
            safe = np.where(inside, one_minus, 1.0)
            val = _call(g, a + s / safe) / (safe * safe)
            return np.where(inside, val, 0.0)

        breaks = [(k - a) / (1.0 + k - a) for k in kinks if a < k < math.inf]
        a, b = 0.0, 1.0
    else:
        breaks = [float(k) for k in kinks if a < k < b]

    edges = np.unique(np.concatenate([[a], np.asarray(breaks, dtype=float), [b]]))
    lo, hi = edges[:-1], edges[1:]
    values, errors = _kronrod_panels(f, lo, hi)
    evals = 15 * len(lo)
    while True:
        total = float(values.sum())
        err = float(errors.sum())
        target = max(tol, rtol * abs(total))
        if err <= target:
            return QuadResult(total, err, evals)
        # Split the worst panels: everything above the mean allowance, at least the maximum.
        split = errors > target / len(errors)
        split[np.argmax(errors)] = True
        n_new = 2 * int(split.sum())
        if evals + 15 * n_new > max_evals:
            raise QuadratureError(f"budget of {max_evals} evaluations exhausted on [{edges[0]}, {edges[-1]}]",
                                  QuadResult(total, err, evals))
        mid = 0.5 * (lo[split] + hi[split])
        if np.any((mid <= lo[split]) | (mid >= hi[split])):
            raise QuadratureError("panels cannot be subdivided further", QuadResult(total, err, evals))
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        nv, ne = _kronrod_panels(f, new_lo, new_hi)
        evals += 15 * len(new_lo)
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        values = np.concatenate([values[keep], nv])
        errors = np.concatenate([errors[keep], ne])


@dataclass(frozen=True)
class GridSpec:
    """Parameters of the default node layout: uniform below ``uniform_until``, geometric above."""

    u_max: float = 1000.0
    per_unit: int = 64
    uniform_until: float = 10.0
    ratio: float = 1.05

    def refined(self) -> "GridSpec":
        return GridSpec(self.u_max, 2 * self.per_unit, self.uniform_until, math.sqrt(self.ratio))

    def u_nodes(self) -> np.ndarray:
        if self.u_max <= 0 or self.per_unit < 1 or self.ratio <= 1 or self.uniform_until <= 0:
            raise GridError(f"invalid grid spec {self}")
        top = min(self.u_max, self.uniform_until)
        uniform = np.linspace(0.0, top, int(round(top * self.per_unit)) + 1)
        if self.u_max <= self.uniform_until:
            return uniform
        n_geo = int(math.floor(math.log(self.u_max / self.uniform_until) / math.log(self.ratio)))
        geo = self.uniform_until * self.ratio ** np.arange(1, n_geo + 1)
        # Drop a last node that would leave a sliver cell below u_max.
        geo = geo[geo < self.u_max / math.sqrt(self.ratio)]
        return np.concatenate([uniform, geo, [self.u_max]])


@dataclass(frozen=True, eq=False)
class CharGrid:
    """Characteristic mesh. ``v_nodes`` mirror ``u_nodes`` so that ``v = 0``
    and both ends ``-u, +u`` of every v-range are nodes."""

    u_nodes: np.ndarray
    v_nodes: np.ndarray = field(default=None)
    spec: GridSpec | None = None

    def __post_init__(self):
        u = np.array(self.u_nodes, dtype=float)
        if u.ndim != 1 or len(u) < 2:
            raise GridError("need at least two u-nodes")
        if u[0] != 0.0 or not np.all(np.isfinite(u)) or np.any(np.diff(u) <= 0):
            raise GridError("u-nodes must start at 0 and increase strictly")
        mirrored = np.concatenate([-u[::-1], u[1:]])
        if self.v_nodes is None:
            v = mirrored
        else:
            v = np.array(self.v_nodes, dtype=float)
            if v.shape != mirrored.shape or not np.array_equal(v, mirrored):
                raise GridError("v-nodes must be exactly {-u_k} U {+u_k}; "
                                "any other layout leaves nodes with |v| > u or unaligned range endpoints")
        u.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "u_nodes", u)
        object.__setattr__(self, "v_nodes", v)

    @classmethod
    def from_spec(cls, spec: GridSpec | None = None) -> "CharGrid":
        spec = spec or GridSpec()
        return cls(spec.u_nodes(), spec=spec)

    @classmethod
    def default(cls) -> "CharGrid":
        return cls.from_spec(GridSpec())

    @classmethod
    def uniform(cls, u_max: float, n_cells: int) -> "CharGrid":
        return cls(np.linspace(0.0, u_max, n_cells + 1))

    def refined(self) -> "CharGrid":
        """Halve the spacing everywhere."""
        if self.spec is not None:
            return CharGrid.from_spec(self.spec.refined())
        u = self.u_nodes
        return CharGrid(np.sort(np.concatenate([u, 0.5 * (u[1:] + u[:-1])])))

    @property
    def n_u(self) -> int:
        return len(self.u_nodes)

    @property
    def center(self) -> int:
        """Index of ``v = 0`` in ``v_nodes``."""
        return self.n_u - 1

    @property
    def u_max(self) -> float:
        return float(self.u_nodes[-1])

    def valid_mask(self) -> np.ndarray:
        return np.abs(self.v_nodes)[None, :] <= self.u_nodes[:, None]


def triangle_sweep(H, grid: CharGrid, n_gauss: int = 3):
    """Cumulative solution table and on-axis inner integrals.

    Returns ``(psi, k_axis)`` where ``psi[i, j] = 1/4 * int_{|v_j|}^{u_i}
    int_{-u'}^{v_j} H(u', v') dv' du'`` (NaN where ``|v_j| > u_i``) and
    ``k_axis[i] = int_{-u_i}^{u_i} H(u_i, v') dv'``.

    Every cell ``[u_i, u_{i+1}] x [v_k, v_{k+1}]`` gets an ``n_gauss``-point
    Gauss product rule; the cut strip ``[-u', -u_i]`` next to the lower
    boundary gets its own mapped Gauss rule, so the triangle is integrated
    without clipping error. Composite order is ``2*n_gauss`` for integrands
    smooth inside cells. The full table costs ``O(N_u * N_v * n_gauss**2)``
    evaluations of ``H``.
    """
    u = grid.u_nodes
    v = grid.v_nodes
    n = grid.n_u
    c = grid.center
    x, w = gauss_legendre(n_gauss)

    def h(uu, vv):
        uu, vv = np.broadcast_arrays(uu, vv)
        out = np.asarray(H(uu, vv), dtype=float)
        return np.broadcast_to(out, uu.shape)

    v_half = 0.5 * (v[1:] - v[:-1])
    v_gauss = 0.5 * (v[1:] + v[:-1])[:, None] + v_half[:, None] * x
    v_weights = v_half[:, None] * w

    psi = np.full((n, len(v)), np.nan)
    psi[0, c] = 0.0
    k_axis = np.zeros(n)
    for i in range(n - 1):
        lo, hi = c - i, c + i  # v-node indices of -u_i and +u_i
        u_half = 0.5 * (u[i + 1] - u[i])
        ug = u[i] + u_half * (x + 1.0)
        uw = u_half * w
        strip_half = 0.5 * (ug - u[i])
        strip_v = (-u[i] - strip_half)[:, None] + strip_half[:, None] * x
        strip = (h(ug[:, None], strip_v) * (strip_half[:, None] * w)).sum(axis=1)
        inner = np.empty((n_gauss, 2 * i + 1))
        inner[:, 0] = strip
        if i > 0:
            cells = (h(ug[:, None, None], v_gauss[None, lo:hi]) * v_weights[None, lo:hi]).sum(axis=-1)
            inner[:, 1:] = strip[:, None] + np.cumsum(cells, axis=1)
        psi[i + 1, lo:hi + 1] = psi[i, lo:hi + 1] + 0.25 * (uw @ inner)
        psi[i + 1, lo - 1] = 0.0
        psi[i + 1, hi + 1] = 0.0
        axis_cells = h(u[i + 1], v_gauss[lo - 1:hi + 1]) * v_weights[lo - 1:hi + 1]
        k_axis[i + 1] = axis_cells.sum()
    return psi, k_axis


def cumulative_triangle(H, grid: CharGrid, n_gauss: int = 3) -> np.ndarray:
    """``psi`` table of :func:`triangle_sweep`; shape ``(len(u_nodes), len(v_nodes))``."""
    if not isinstance(grid, CharGrid):
        raise GridError("cumulative_triangle needs a CharGrid")
    return triangle_sweep(H, grid, n_gauss)[0]
