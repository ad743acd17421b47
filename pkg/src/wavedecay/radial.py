"""Spherically symmetric solutions of ``box phi = G`` with null data.

With ``u = t + r``, ``v = t - r``, ``psi = r * phi`` and ``H = r * G`` the
equation becomes ``4 d_u d_v psi = H`` and the solution is the double
integral ``psi(u, v) = 1/4 int_{|v|}^u int_{-u'}^v H(u', v') dv' du'``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DecayProfile, DomainError, NullPoint, SpacetimePoint, bracket
from .quadrature import CharGrid, integrate_1d, triangle_sweep


@dataclass(frozen=True)
class RadialSource:
    """Source ``G(t, r)``; ``evaluator`` must accept broadcastable arrays."""

    evaluator: Callable
    descriptor: object = "custom"

    def __call__(self, t, r):
        return self.evaluator(t, r)

    def h(self, u, v):
        """``H(u, v) = r * G(t, r)``, vectorized."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        r = 0.5 * (u - v)
        return r * np.asarray(self.evaluator(0.5 * (u + v), r), dtype=float)


def source_lemma1(profile: DecayProfile) -> RadialSource:
    A, p, q = profile.amplitude_A, profile.p, profile.q

    def G(t, r):
        return A / (bracket(t + r) ** p * bracket(t - r) ** q)

    return RadialSource(G, DecayProfile(A, p, q, 0.0))


def source_lemma2(profile: DecayProfile) -> RadialSource:
    if profile.lam <= 0:
        raise DomainError("the <x>-weighted source needs lambda > 0")
    return RadialSource(profile, profile)


def constant_source(A: float = 1.0) -> RadialSource:
    return RadialSource(lambda t, r: np.full(np.broadcast(t, r).shape, float(A)), f"constant {A}")


def _null(point) -> NullPoint:
    if isinstance(point, NullPoint):
        return point
    if isinstance(point, SpacetimePoint):
        return NullPoint(point.t + point.r, point.t - point.r)
    return NullPoint(*point)


def h_of_uv(src: RadialSource, point) -> float:
    pt = _null(point)
    return float(src.h(pt.u, pt.v))


def inner_integral(src: RadialSource, u: float, v: float, tol: float = 1e-10) -> float:
    """``int_{-u}^{v} H(u, v') dv'``, split at the kink ``v' = 0``."""
    if v <= -u:
        return 0.0
    return integrate_1d(lambda s: src.h(u, s), -u, v, tol, kinks=(0.0,)).value


def du_psi(src: RadialSource, point, tol: float = 1e-10) -> float:
    """``d_u psi = 1/4 int_{-u}^{v} H(u, v') dv'``; the boundary term at ``v = -u`` vanishes for null data."""
    pt = _null(point)
    return 0.25 * inner_integral(src, pt.u, pt.v, 4.0 * tol)


def dv_psi(src: RadialSource, point, tol: float = 1e-10) -> float:
    """``d_v psi``, including the contribution of the moving lower limit ``|v|``."""
    pt = _null(point)
    u, v = pt.u, pt.v
    along = integrate_1d(lambda s: src.h(s, v), abs(v), u, 4.0 * tol).value
    return 0.25 * along - 0.25 * math.copysign(1.0, v) * inner_integral(src, abs(v), v, 4.0 * tol)


def psi_point(src: RadialSource, point, tol: float = 1e-9) -> float:
    """``psi`` at one point by nested adaptive quadrature."""
    pt = _null(point)
    u, v = pt.u, pt.v
    lower = abs(v)
    if u == lower:
        return 0.0
    inner_tol = 1e-2 * tol / max(1.0, u - lower)

    def outer(us):
        return np.array([inner_integral(src, s, v, inner_tol) for s in np.ravel(us)]).reshape(np.shape(us))

    return 0.25 * integrate_1d(outer, lower, u, 4.0 * tol).value


def phi_point(src: RadialSource, t: float, r: float, tol: float = 1e-9) -> float:
    """``phi(t, r)``. On the axis uses ``phi(t, 0) = 2 d_u psi(t, t)``."""
    pt = SpacetimePoint(t, r)
    if pt.r <= 1e-9 * max(1.0, pt.t):
        return 0.5 * inner_integral(src, pt.t, pt.t, tol)
    return psi_point(src, pt, tol * pt.r) / pt.r


def _bilinear(xn, yn, table, x, y):
    i = np.clip(np.searchsorted(xn, x, side="right") - 1, 0, len(xn) - 2)
    j = np.clip(np.searchsorted(yn, y, side="right") - 1, 0, len(yn) - 2)
    tx = (x - xn[i]) / (xn[i + 1] - xn[i])
    ty = (y - yn[j]) / (yn[j + 1] - yn[j])
    return ((1 - tx) * ((1 - ty) * table[i, j] + ty * table[i, j + 1])
            + tx * ((1 - ty) * table[i + 1, j] + ty * table[i + 1, j + 1]))


@dataclass(frozen=True, eq=False)
class RadialField:
    """``psi`` and ``phi`` tables on a :class:`CharGrid`.

    Tables have shape ``(len(u_nodes), len(v_nodes))`` and hold NaN where
    ``|v| > u``. Arrays are read-only.
    """

    grid: CharGrid
    psi_values: np.ndarray
    phi_values: np.ndarray

    def __post_init__(self):
        for name in ("psi_values", "phi_values"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_phi_ext", None)

    @classmethod
    def from_phi(cls, grid: CharGrid, phi: np.ndarray) -> "RadialField":
        phi = np.where(grid.valid_mask(), phi, np.nan)
        r = 0.5 * (grid.u_nodes[:, None] - grid.v_nodes[None, :])
        return cls(grid, r * phi, phi)

    @classmethod
    def from_function(cls, grid: CharGrid, fn) -> "RadialField":
        """Tabulate ``phi = fn(t, r)`` at the nodes."""
        u = grid.u_nodes[:, None]
        v = grid.v_nodes[None, :]
        with np.errstate(invalid="ignore"):
            phi = fn(0.5 * (u + v), np.maximum(0.5 * (u - v), 0.0))
        return cls.from_phi(grid, np.broadcast_to(phi, (grid.n_u, len(grid.v_nodes))))

    def __sub__(self, other: "RadialField") -> "RadialField":
        if other.grid is not self.grid:
            raise ValueError("fields live on different grids")
        return RadialField(self.grid, self.psi_values - other.psi_values, self.phi_values - other.phi_values)

    def scaled(self, factor: float) -> "RadialField":
        return RadialField(self.grid, factor * self.psi_values, factor * self.phi_values)

    def nodes(self):
        """Valid nodes as flat arrays ``(u, v, t, r, psi, phi)``."""
        mask = self.grid.valid_mask()
        uu, vv = np.meshgrid(self.grid.u_nodes, self.grid.v_nodes, indexing="ij")
        u, v = uu[mask], vv[mask]
        return u, v, 0.5 * (u + v), 0.5 * (u - v), self.psi_values[mask], self.phi_values[mask]

    def axis(self):
        """``(t, phi(t, 0))`` along the axis nodes ``u = v``."""
        idx = np.arange(self.grid.n_u)
        return self.grid.u_nodes.copy(), self.phi_values[idx, self.grid.center + idx]

    def _extended_phi(self) -> np.ndarray:
        # phi is even in r: mirror across u = v. For t < 0 the solution is zero.
        ext = self._phi_ext
        if ext is None:
            grid = self.grid
            n, c = grid.n_u, grid.center
            ext = np.where(grid.valid_mask(), self.phi_values, 0.0)
            ii, jj = np.nonzero(grid.v_nodes[None, :] > grid.u_nodes[:, None])
            ext[ii, jj] = self.phi_values[jj - c, c + ii]
            assert ext.shape == (n, 2 * n - 1)
            ext.flags.writeable = False
            object.__setattr__(self, "_phi_ext", ext)
        return ext

    def interpolate(self, t, r):
        """Bilinear interpolation of ``phi`` in ``(u, v)``."""
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        u = t + r
        if np.any(t < 0) or np.any(r < 0) or np.any(u > self.grid.u_max * (1 + 1e-12)):
            raise DomainError("interpolation point outside the solved domain")
        return _bilinear(self.grid.u_nodes, self.grid.v_nodes, self._extended_phi(), u, t - r)

    def to_csv(self, path) -> None:
        u, v, t, r, psi, phi = self.nodes()
        with open(path, "w", newline="") as fh:
            write_field_rows(fh, u, v, t, r, psi, phi)


FIELD_HEADER = ("u", "v", "t", "r", "psi", "phi")


def write_field_rows(fh, *columns) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(FIELD_HEADER)
    writer.writerows(zip(*(map(repr, map(float, col)) for col in columns)))


def read_field_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != FIELD_HEADER:
            raise ValueError(f"unexpected header {header}")
        rows = np.array([[float(x) for x in row] for row in reader])
    return {name: rows[:, k] for k, name in enumerate(FIELD_HEADER)}


def solve(src: RadialSource, grid: CharGrid | None = None, n_gauss: int = 3) -> RadialField:
    """Solve ``box phi = src`` with null data on ``grid`` (default grid if omitted)."""
    grid = grid or CharGrid.default()
    psi, k_axis = triangle_sweep(src.h, grid, n_gauss)
    if not np.all(np.isfinite(psi[grid.valid_mask()])):
        raise FloatingPointError("non-finite values in the solved field")
    n, c = grid.n_u, grid.center
    r = 0.5 * (grid.u_nodes[:, None] - grid.v_nodes[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(r > 0, psi / np.where(r > 0, r, 1.0), np.nan)
    idx = np.arange(n)
    phi[idx, c + idx] = 0.5 * k_axis
    phi[~grid.valid_mask()] = np.nan
    return RadialField(grid, psi, phi)
