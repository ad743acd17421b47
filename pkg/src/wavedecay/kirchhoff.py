"""Retarded-potential evaluation of ``box^-1 F`` in three space dimensions.

Used as an independent check on the radial solver and to test pointwise
domination of a non-symmetric solution by the solution of a radial
majorant.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .bounds import DEFAULT_SEED
from .quadrature import gauss_legendre, integrate_1d
from .radial import RadialSource, phi_point


class MajorantError(ValueError):
    """Comparison requested against a majorant that was never verified."""


@dataclass(frozen=True)
class SphereRule:
    """Product rule on a shell ``|y - x| = rho``.

    The polar direction is parametrized by the distance ``s = |y|`` to the
    origin (``cos(theta)`` is quadratic in ``s``), with ``n_polar``
    Gauss-Legendre nodes on each side of a split point; ``n_azimuth``
    equispaced azimuths. Exact for spherical polynomials up to ``degree``.
    Working in ``s`` keeps the cone singularity of ``|y|`` at the origin
    on a panel edge.
    """

    n_polar: int = 16
    n_azimuth: int = 32

    @property
    def degree(self) -> int:
        return min(self.n_polar - 1, self.n_azimuth - 1)

    def polar_nodes(self, rho, xn: float, split_s):
        """Nodes in ``cos(theta)`` (axis along ``x``) and weights summing to 2.

        ``split_s`` is the distance from the origin at which to break the
        panel; values outside the shell's range fall back to its midpoint.
        """
        rho = np.asarray(rho, dtype=float)
        x, w = gauss_legendre(self.n_polar)
        xg = 0.5 * (x + 1.0)
        wg = 0.5 * w
        if xn == 0.0:
            # Every point of the shell is at distance rho: split cos(theta) at 0.
            c = np.concatenate([xg - 1.0, xg])
            return np.broadcast_to(c, rho.shape + c.shape), np.broadcast_to(np.concatenate([wg, wg]), rho.shape + c.shape)
        s_lo = np.abs(rho - xn)
        s_hi = rho + xn
        big = np.maximum(rho, xn)
        split = np.asarray(split_s, dtype=float)
        sigma_split = np.where((split > s_lo) & (split < s_hi), (split - s_lo) / (s_hi - s_lo), 0.5)
        sig = np.concatenate([sigma_split[:, None] * xg, sigma_split[:, None] + (1.0 - sigma_split)[:, None] * xg], axis=1)
        dsig = np.concatenate([sigma_split[:, None] * wg, (1.0 - sigma_split)[:, None] * wg], axis=1)
        s = s_lo[:, None] + sig * (s_hi - s_lo)[:, None]
        # c + 1 = (s - s_lo)(s + s_lo) / (2 rho |x|), written without cancellation.
        c = sig * (s + s_lo[:, None]) / big[:, None] - 1.0
        weights = 2.0 * s * dsig / big[:, None]
        return np.clip(c, -1.0, 1.0), weights


@dataclass
class VolumetricSource:
    """``F(t, y)`` with ``y`` of shape ``(..., 3)``, paired with a radial majorant.

    ``majorant_valid`` is set by :func:`verify_majorant`.
    """

    evaluator: Callable
    radial_majorant: RadialSource
    majorant_valid: bool = False
    label: str = "custom"

    def __call__(self, t, y):
        return self.evaluator(t, y)


def radial_volumetric(src: RadialSource, modulation: Callable | None = None, label: str = "") -> VolumetricSource:
    """``F(t, y) = G(t, |y|) * modulation(y)`` with ``G`` as majorant."""

    def F(t, y):
        g = src(t, np.linalg.norm(y, axis=-1))
        return g if modulation is None else g * modulation(y)

    return VolumetricSource(F, src, label=label or "radial")


def _frame(x: np.ndarray):
    norm = float(np.linalg.norm(x))
    axis = x / norm if norm > 0 else np.array([0.0, 0.0, 1.0])
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return norm, axis, e1, e2


def shell_means(F: VolumetricSource, t: float, x, rhos, rule: SphereRule = SphereRule()):
    """Mean of ``F(t - rho, x + rho*omega)`` over the unit sphere, for each ``rho``.

    The polar axis points along ``x``; the polar split sits where the shell
    meets the cone ``|y| = t - rho`` so a ``<t-|y|>`` kink never lies
    inside a Gauss panel.
    """
    x = np.asarray(x, dtype=float)
    rhos = np.atleast_1d(np.asarray(rhos, dtype=float))
    xn, axis, e1, e2 = _frame(x)
    c, wc = rule.polar_nodes(rhos, xn, t - rhos)
    s = np.sqrt(np.clip(1.0 - c * c, 0.0, None))
    phis = 2.0 * math.pi * (np.arange(rule.n_azimuth) + 0.5) / rule.n_azimuth
    cp, sp = np.cos(phis), np.sin(phis)
    direction = (c[..., None, None] * axis
                 + (s[..., None] * cp)[..., None] * e1
                 + (s[..., None] * sp)[..., None] * e2)
    y = x + rhos[:, None, None, None] * direction
    tau = np.broadcast_to((t - rhos)[:, None, None], y.shape[:-1])
    vals = np.asarray(F(tau, y), dtype=float)
    # (1/4pi) * sum over polar weights * (2pi/M) per azimuth
    return np.einsum("mk,mkj->m", wc, vals) / (2.0 * rule.n_azimuth)


def retarded_integral(F: VolumetricSource, t: float, x, tol: float = 1e-9,
                      rule: SphereRule = SphereRule()) -> float:
    """``phi(t, x) = int_0^t rho * mean_{|omega|=1} F(t - rho, x + rho*omega) drho``.

    Adaptive in ``rho`` with breakpoints where the shell starts or stops
    crossing the light cone of the origin and where it passes through the
    origin.
    """
    if not t >= 0:
        raise ValueError(f"need t >= 0, got {t}")
    x = np.asarray(x, dtype=float)
    if t == 0:
        return 0.0
    xn = float(np.linalg.norm(x))
    kinks = [k for k in (0.5 * (t - xn), xn, 0.5 * (t + xn)) if 0 < k < t]
    res = integrate_1d(lambda rho: rho * shell_means(F, t, x, rho, rule), 0.0, t, tol, kinks=kinks)
    return res.value


@dataclass(frozen=True)
class MajorantCheck:
    passed: bool
    samples: int
    witness: dict | None = None


def sample_spacetime(n: int, t_max: float, r_max: float, seed: int = DEFAULT_SEED):
    """Quasi-random ``(t, x)`` with ``t`` in ``[0, t_max]`` and ``|x|`` in ``[0, r_max]``."""
    pts = qmc.Halton(d=4, scramble=True, seed=seed).random(n)
    t = t_max * pts[:, 0]
    rad = r_max * pts[:, 1]
    cos_t = 2.0 * pts[:, 2] - 1.0
    sin_t = np.sqrt(1.0 - cos_t ** 2)
    az = 2.0 * math.pi * pts[:, 3]
    x = rad[:, None] * np.stack([sin_t * np.cos(az), sin_t * np.sin(az), cos_t], axis=1)
    return t, x


def verify_majorant(F: VolumetricSource, sample_count: int = 4096, t_max: float = 20.0,
                    r_max: float = 10.0, seed: int = DEFAULT_SEED) -> MajorantCheck:
    """Check ``|F(t, x)| <= G(t, |x|)`` on quasi-random samples and record the outcome on ``F``."""
    t, x = sample_spacetime(sample_count, t_max, r_max, seed)
    f = np.abs(np.asarray(F(t, x), dtype=float))
    g = np.asarray(F.radial_majorant(t, np.linalg.norm(x, axis=1)), dtype=float)
    bad = np.nonzero(~(f <= g))[0]
    F.majorant_valid = len(bad) == 0
    if F.majorant_valid:
        return MajorantCheck(True, sample_count)
    k = bad[np.argmax(f[bad] - g[bad])]
    witness = {"t": float(t[k]), "x": x[k].tolist(), "F": float(f[k]), "G": float(g[k])}
    return MajorantCheck(False, sample_count, witness)


@dataclass(frozen=True)
class ComparisonPoint:
    t: float
    x: tuple
    phi1: float
    phi2: float

    @property
    def margin(self) -> float:
        return self.phi2 - abs(self.phi1)

    def as_dict(self) -> dict:
        return {"t": self.t, "x": list(self.x), "phi1": self.phi1, "phi2": self.phi2, "margin": self.margin}


@dataclass(frozen=True)
class ComparisonReport:
    points: list
    tol: float

    @property
    def violations(self) -> list:
        return [p for p in self.points if abs(p.phi1) > p.phi2 + self.tol]

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        return {"points": [p.as_dict() for p in self.points],
                "violations": [p.as_dict() for p in self.violations],
                "tol": self.tol, "pass": self.passed}


def compare(F: VolumetricSource, points, tol: float = 1e-3, quad_tol: float = 1e-9,
            rule: SphereRule = SphereRule(), workers: int = 1) -> ComparisonReport:
    """Check ``|box^-1 F| <= box^-1 G`` at each ``(t, x)`` in ``points``."""
    if not F.majorant_valid:
        raise MajorantError("majorant not verified; run verify_majorant first")

    def one(pt):
        t, x = pt
        x = np.asarray(x, dtype=float)
        phi1 = retarded_integral(F, t, x, quad_tol, rule)
        phi2 = phi_point(F.radial_majorant, float(t), float(np.linalg.norm(x)), quad_tol)
        return ComparisonPoint(float(t), tuple(float(c) for c in x), phi1, phi2)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, points))
    else:
        results = [one(pt) for pt in points]
    return ComparisonReport(results, tol)
