"""Coordinates, bracket weights and the parameter types shared by every module."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """A point or parameter lies outside the admissible domain."""


def bracket(x):
    """Return ``1 + |x|``. Works elementwise on arrays."""
    if np.ndim(x) == 0:
        x = float(x)
        if not math.isfinite(x):
            raise DomainError(f"bracket of non-finite value {x!r}")
        return 1.0 + abs(x)
    return 1.0 + np.abs(np.asarray(x, dtype=float))


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class DecayProfile:
    """Source bound ``A / (<r>^lam <t+r>^p <t-r>^q)``; ``lam = 0`` is the pure null-weight form."""

    amplitude_A: float
    p: float
    q: float
    lam: float = 0.0

    def __post_init__(self):
        for name in ("amplitude_A", "p", "q", "lam"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        if self.amplitude_A <= 0:
            raise DomainError(f"amplitude_A must be > 0, got {self.amplitude_A}")
        if self.lam < 0:
            raise DomainError(f"lambda must be >= 0, got {self.lam}")

    def __call__(self, t, r):
        return self.amplitude_A / (bracket(r) ** self.lam * bracket(t + r) ** self.p * bracket(t - r) ** self.q)


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    r: float

    def __post_init__(self):
        t = _finite("t", self.t)
        r = _finite("r", self.r)
        if t < 0 or r < 0:
            raise DomainError(f"need t >= 0 and r >= 0, got t={t}, r={r}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "r", r)


@dataclass(frozen=True)
class NullPoint:
    u: float
    v: float

    def __post_init__(self):
        u = _finite("u", self.u)
        v = _finite("v", self.v)
        if u < 0 or abs(v) > u:
            raise DomainError(f"need u >= 0 and |v| <= u, got u={u}, v={v}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class WeightExponents:
    """Exponents ``(a, b)`` of the weight ``<t+r>^a <t-r>^b``."""

    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", _finite("a", self.a))
        object.__setattr__(self, "b", _finite("b", self.b))

    def weight(self, t, r):
        return bracket(t + r) ** self.a * bracket(t - r) ** self.b


def to_null(pt: SpacetimePoint) -> NullPoint:
    return NullPoint(pt.t + pt.r, pt.t - pt.r)


def from_null(np_: NullPoint) -> SpacetimePoint:
    return SpacetimePoint(0.5 * (np_.u + np_.v), 0.5 * (np_.u - np_.v))


def weighted_amplitude(value, pt, w: WeightExponents):
    """``|value| * <t+r>^a * <t-r>^b``.

    ``pt`` is a :class:`SpacetimePoint` or a ``(t, r)`` pair of arrays for
    vectorized use.
    """
    if isinstance(pt, SpacetimePoint):
        t, r = pt.t, pt.r
    else:
        t, r = pt
    return np.abs(value) * w.weight(t, r)
