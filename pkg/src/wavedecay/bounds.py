"""Explicit decay constants, checks of the intermediate inequalities behind
them, and empirical decay measurements on solved fields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .core import DecayProfile, SpacetimePoint, WeightExponents, bracket, weighted_amplitude
from .quadrature import integrate_1d
from .radial import RadialField, du_psi, source_lemma1

DEFAULT_SEED = 20240601
SUP_TOLERANCE = 1e-6


class HypothesisError(ValueError):
    """Exponents violate the hypotheses of the estimate being evaluated."""


@dataclass(frozen=True)
class BoundConstants:
    """Constants of one decay estimate, per unit source amplitude.

    ``C`` is the constant used for verification. ``C_printed`` is the value
    given by the printed closed form when the two differ.
    """

    B: float
    C: float
    mu: float | None
    nu: float
    lemma: int
    C_printed: float | None = None
    note: str = ""

    def as_dict(self) -> dict:
        return {"lemma": self.lemma, "B": self.B, "C": self.C, "mu": self.mu, "nu": self.nu,
                "C_printed": self.C_printed, "note": self.note}


def _require(ok: bool, message: str) -> None:
    if not ok:
        raise HypothesisError(message)


def lemma1_constants(p: float, q: float) -> BoundConstants:
    _require(math.isfinite(p) and math.isfinite(q), "exponents must be finite")
    _require(p > 2, f"requires p > 2 (got p={p})")
    _require(q > 1, f"requires q > 1 (got q={q})")
    B = (2.0 / (q - 1.0) + 1.0 / ((p - 1.0) * (p - 2.0))) / 8.0
    C = 2.0 * B * max(1.0, 1.0 / (p - 2.0))
    return BoundConstants(B=B, C=C, mu=None, nu=p - 2.0, lemma=1)


def lemma1_B_q_reading(p: float, q: float) -> float:
    """``B`` with the tail integral carrying the exponent of its integrand, ``1/((q-1)(q-2))``."""
    _require(q > 2, f"the tail integral int_0^inf v/(1+v)^q converges only for q > 2 (got q={q})")
    return (2.0 / (q - 1.0) + 1.0 / ((q - 1.0) * (q - 2.0))) / 8.0


def lemma2_constants(p: float, q: float, lam: float) -> BoundConstants:
    _require(all(map(math.isfinite, (p, q, lam))), "exponents must be finite")
    _require(p > 0, f"requires p > 0 (got p={p})")
    _require(q > 1, f"requires q > 1 (got q={q})")
    _require(lam > 2, f"requires λ > 2 (got lambda={lam})")
    mu = min(q, lam - 1.0)
    _require(mu > 1, f"requires mu = min(q, λ-1) > 1 (got {mu})")
    B = (1.0 + 1.0 / (q - 1.0) + 4.0 / (mu - 1.0)) / 8.0
    printed = 2.0 * B
    decay = p + mu - 1.0
    C = printed * max(1.0, 1.0 / decay)
    note = ""
    if C != printed:
        note = f"p+mu-1 = {decay:g} < 1: factor max(1, p+mu-1)/(p+mu-1) = {1.0 / decay:g} kept explicitly"
    return BoundConstants(B=B, C=C, mu=mu, nu=decay, lemma=2,
                          C_printed=printed if C != printed else None, note=note)


def lemma2_corrected_C(p: float, q: float, lam: float) -> float:
    """``2**lam`` times :func:`lemma2_constants` ``.C``.

    Along the integration line ``<r> = 1 + (u-v')/2``, and
    ``<r>^-lam <= 2^lam <u-v'>^-lam``; the closed-form ``B`` and ``C`` are
    derived with ``<u-v'>`` in place of ``<r>``, so only the scaled
    constant bounds the actual solution.
    """
    return 2.0 ** lam * lemma2_constants(p, q, lam).C


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    bound: float
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed


def _integral(f, a, b, tol, kinks=()):
    if b <= a:
        return 0.0
    return integrate_1d(f, a, b, tol, kinks=kinks).value


def _qtol(tol: float, bound: float) -> float:
    # Quadrature accuracy must resolve the bound itself, which can be tiny for large u.
    return min(tol, 1e-8 * bound)


def _check_domain(u, v):
    _require(u >= 0 and abs(v) <= u, f"need |v| <= u (got u={u}, v={v})")


def check_I1_lemma1(u: float, v: float, q: float, tol: float = 1e-10) -> CheckResult:
    """``int_{-u}^{v} dv'/<v'>^q <= 2/(q-1)``."""
    _require(q > 1, f"requires q > 1 (got q={q})")
    _check_domain(u, v)
    bound = 2.0 / (q - 1.0)
    tol = _qtol(tol, bound)
    value = _integral(lambda s: bracket(s) ** -q, -u, v, tol, kinks=(0.0,))
    return CheckResult("I1_lemma1", value <= bound + tol, value, bound, {"u": u, "v": v, "q": q})


def check_I2_lemma1(u: float, v: float, q: float, tol: float = 1e-10) -> CheckResult:
    """Tail piece ``int_{|v|}^{u} v'/<v'>^q dv' <= 1/((q-1)(q-2))``, plus the
    cancellation of the odd part over ``[-v, |v|]``.

    Both readings of the constant are recorded: the one carrying ``q`` is
    asserted, the printed ``p``-named form is only reported.
    """
    _require(q > 2, f"requires q > 2 for a finite tail constant (got q={q})")
    _check_domain(u, v)

    def g(s):
        return s * bracket(s) ** -q

    bound = 1.0 / ((q - 1.0) * (q - 2.0))
    tol = _qtol(tol, bound)
    tail = _integral(g, abs(v), u, tol)
    full = _integral(lambda s: -g(s), -u, v, tol, kinks=(0.0,))
    odd_part = _integral(g, -v, abs(v), tol, kinks=(0.0,))
    passed = tail <= bound + tol and abs(odd_part) <= 2 * tol and abs(full - tail) <= 4 * tol
    return CheckResult("I2_lemma1", passed, tail, bound,
                       {"u": u, "v": v, "q": q, "full_integral": full, "odd_part": odd_part,
                        "bound_reading": "1/((q-1)(q-2))",
                        "printed_reading": "1/((p-1)(p-2)) with p named for the integrand exponent"})


def check_elementary_inequality(nu: float, x: float) -> CheckResult:
    """``1 - x^nu <= max(1, nu) (1 - x)`` on ``0 <= x <= 1``."""
    _require(nu > 0, f"requires nu > 0 (got {nu})")
    _require(0.0 <= x <= 1.0, f"requires 0 <= x <= 1 (got {x})")
    lhs = 1.0 - x ** nu
    rhs = max(1.0, nu) * (1.0 - x)
    # Rounding slack: both sides are O(1) differences of O(1) numbers.
    return CheckResult("elementary_inequality", lhs <= rhs + 4 * np.finfo(float).eps * max(1.0, nu), lhs, rhs,
                       {"nu": nu, "x": x})


def check_min_identity(t: float, r: float) -> CheckResult:
    """``1 - <v>/<u> = 2 min(t, r)/<u>``, i.e. ``u - |v| = 2 min(t, r)``."""
    pt = SpacetimePoint(t, r)
    u, v = pt.t + pt.r, pt.t - pt.r
    lhs = 1.0 - bracket(v) / bracket(u)
    rhs = 2.0 * min(pt.t, pt.r) / bracket(u)
    ok = abs(lhs - rhs) <= 8 * np.finfo(float).eps * max(1.0, abs(rhs)) and \
        abs((u - abs(v)) - 2 * min(pt.t, pt.r)) <= 8 * np.finfo(float).eps * max(1.0, u)
    return CheckResult("min_identity", ok, lhs, rhs, {"t": t, "r": r})


def _lemma2_exponents(q, lam):
    _require(q > 1, f"requires q > 1 (got q={q})")
    _require(lam > 2, f"requires λ > 2 (got lambda={lam})")
    mu = min(q, lam - 1.0)
    _require(mu > 1, f"requires mu > 1 (got {mu})")
    return mu


def check_I1_lemma2(u: float, v: float, q: float, lam: float, tol: float = 1e-10) -> CheckResult:
    """``int_0^u dv'/(<u+v'>^(lam-1) <v'>^q) <= (1+u)^-(lam-1)/(q-1)``."""
    mu = _lemma2_exponents(q, lam)
    _check_domain(u, v)
    bound = (1.0 + u) ** (1.0 - lam) / (q - 1.0)
    tol = _qtol(tol, bound)
    value = _integral(lambda s: bracket(u + s) ** (1 - lam) * bracket(s) ** -q, 0.0, u, tol)
    return CheckResult("I1_lemma2", value <= bound + tol, value, bound, {"u": u, "v": v, "q": q, "lambda": lam, "mu": mu})


def check_I2_lemma2(u: float, v: float, q: float, lam: float, tol: float = 1e-10) -> CheckResult:
    """``int_0^{|v|} dv'/(<u-v'>^(lam-1) <v'>^q) <= (4/(mu-1) + 1)(1+u)^-mu``.

    The intermediate steps of the chain are evaluated as well: the product
    identity, the symmetric doubling over ``[0, u/2]`` and the bound
    ``v'(u-v') >= u v'/2``.
    """
    mu = _lemma2_exponents(q, lam)
    _check_domain(u, v)
    a = abs(v)
    bound = (4.0 / (mu - 1.0) + 1.0) / (1.0 + u) ** mu
    tol = _qtol(tol, bound)
    value = _integral(lambda s: bracket(u - s) ** (1 - lam) * bracket(s) ** -q, 0.0, a, tol)
    reduced = _integral(lambda s: (1.0 + u + s * (u - s)) ** -mu, 0.0, a, tol)
    scale = (1.0 + u) ** mu
    doubled = 2.0 * _integral(lambda s: (1.0 + s * (u - s) / (1.0 + u)) ** -mu, 0.0, 0.5 * u, 0.5 * tol * scale) / scale
    linear = 2.0 * _integral(lambda s: (1.0 + u * s / (2.0 * (1.0 + u))) ** -mu, 0.0, 0.5 * u, 0.5 * tol * scale) / scale
    slack = 4 * tol
    chain = [value, reduced, doubled, linear, bound]
    passed = all(x <= y + slack for x, y in zip(chain, chain[1:]))
    return CheckResult("I2_lemma2", passed, value, bound,
                       {"u": u, "v": v, "q": q, "lambda": lam, "mu": mu, "chain": chain})


def check_du_psi_lemma1(A: float, p: float, q: float, u: float, v: float, tol: float = 1e-10) -> CheckResult:
    """``d_u psi <= A B / <u>^(p-1)`` for the pure null-weight source, ``q > 2``.

    Asserted with ``B`` from :func:`lemma1_B_q_reading`; the printed ``B``
    is reported alongside.
    """
    _require(p > 2, f"requires p > 2 (got p={p})")
    B = lemma1_B_q_reading(p, q)
    _check_domain(u, v)
    src = source_lemma1(DecayProfile(A, p, q))
    bound = A * B / bracket(u) ** (p - 1.0)
    tol = _qtol(tol, bound)
    value = du_psi(src, (u, v), tol)
    printed = A * lemma1_constants(p, q).B / bracket(u) ** (p - 1.0)
    return CheckResult("du_psi_lemma1", value <= bound + tol, value, bound,
                       {"u": u, "v": v, "p": p, "q": q, "A": A, "printed_bound": printed,
                        "printed_bound_holds": bool(value <= printed + tol)})


def tail_constant_I1(q: float, tol: float = 1e-10) -> float:
    """``2 int_0^inf dv/(1+v)^q`` by quadrature on the compactified half-line."""
    return 2.0 * integrate_1d(lambda s: bracket(s) ** -q, 0.0, math.inf, tol).value


def tail_constant_I2(q: float, tol: float = 1e-10) -> float:
    """``int_0^inf v dv/(1+v)^q`` by quadrature on the compactified half-line."""
    return integrate_1d(lambda s: s * bracket(s) ** -q, 0.0, math.inf, tol).value


@dataclass(frozen=True)
class ClosureResult:
    accepted: bool
    value: float | None
    reason: str

    def __bool__(self) -> bool:
        return self.accepted


def closure_nonlinear(p: float) -> ClosureResult:
    """Optimal ``lambda = p - 2`` for ``|F(phi)| <= A |phi|^p``, accepted iff ``p > 1 + sqrt(2)``."""
    if not math.isfinite(p):
        return ClosureResult(False, None, "p must be finite")
    if not p > 1.0 + math.sqrt(2.0):
        return ClosureResult(False, None, f"requires p > 1+sqrt(2) ≈ {1 + math.sqrt(2):.6f} (got p={p})")
    lam = p - 2.0
    assert p > 2 and p * lam > 1
    return ClosureResult(True, lam, f"lambda = p-2 = {lam:g}; p*lambda = {p * lam:g} > 1")


def closure_potential(lam: float) -> ClosureResult:
    """Optimal ``q = lambda`` for ``|V| <= V0/<x>^lambda``, accepted iff ``lambda > 2``."""
    if not math.isfinite(lam):
        return ClosureResult(False, None, "lambda must be finite")
    if not lam > 2.0:
        return ClosureResult(False, None, f"requires λ > 2 (got lambda={lam})")
    q = lam
    assert q - 1 > 1
    return ClosureResult(True, q, f"q = lambda = {q:g}; q-1 = {q - 1:g} > 1")


def sample_domain(u_max: float, n: int, seed: int = DEFAULT_SEED):
    """Quasi-random ``(t, r)`` in ``u <= u_max``, log-uniform in ``1 + u``."""
    pts = qmc.Halton(d=2, scramble=True, seed=seed).random(n)
    u = np.expm1(pts[:, 0] * np.log1p(u_max))
    v = u * (2.0 * pts[:, 1] - 1.0)
    return 0.5 * (u + v), 0.5 * (u - v)


def field_sup(field: RadialField, w: WeightExponents, samples: int = 1000, seed: int = DEFAULT_SEED):
    """Max weighted amplitude over nodes and interpolated samples: ``(sup, t, r, count)``."""
    _, _, t, r, _, phi = field.nodes()
    if len(phi) == 0:
        raise ValueError("empty field")
    if samples:
        ts, rs = sample_domain(field.grid.u_max, samples, seed)
        t = np.concatenate([t, ts])
        r = np.concatenate([r, rs])
        phi = np.concatenate([phi, field.interpolate(ts, rs)])
    amp = weighted_amplitude(phi, (t, r), w)
    k = int(np.argmax(amp))
    return float(amp[k]), float(t[k]), float(r[k]), len(amp)


@dataclass(frozen=True)
class DecayReport:
    exponents_used: WeightExponents
    measured_sup: float
    analytic_C: float
    sample_count: int
    argmax_point: SpacetimePoint
    seed: int = DEFAULT_SEED

    @property
    def margin(self) -> float:
        return self.analytic_C - self.measured_sup

    @property
    def passed(self) -> bool:
        return self.measured_sup <= self.analytic_C * (1.0 + SUP_TOLERANCE)

    def to_json_dict(self) -> dict:
        return {
            "exponents": {"a": self.exponents_used.a, "b": self.exponents_used.b},
            "measured_sup": self.measured_sup,
            "analytic_C": self.analytic_C,
            "margin": self.margin,
            "argmax": {"t": self.argmax_point.t, "r": self.argmax_point.r},
            "samples": self.sample_count,
            "seed": self.seed,
            "pass": self.passed,
        }


def verify_decay(field: RadialField, w: WeightExponents, analytic_C: float,
                 samples: int = 1000, seed: int = DEFAULT_SEED) -> DecayReport:
    if not analytic_C > 0:
        raise ValueError("analytic_C must be positive")
    sup, t, r, count = field_sup(field, w, samples, seed)
    return DecayReport(w, sup, float(analytic_C), count, SpacetimePoint(t, r), seed)


def axis_decay_slope(field: RadialField, t_min: float = 10.0, t_max: float = 1000.0) -> float:
    """Least-squares slope of ``log|phi(t, 0)|`` against ``log t`` over axis nodes in ``[t_min, t_max]``."""
    t, phi = field.axis()
    mask = (t >= t_min) & (t <= t_max * (1 + 1e-12)) & (phi != 0)
    if mask.sum() < 2:
        raise ValueError("fewer than two axis nodes in the fitting window")
    return float(np.polyfit(np.log(t[mask]), np.log(np.abs(phi[mask])), 1)[0])


@dataclass
class SuiteReport:
    count: int
    seed: int
    runs: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, result: CheckResult) -> None:
        stats = self.runs.setdefault(result.name, {"run": 0, "violations": 0})
        stats["run"] += 1
        if not result.passed:
            stats["violations"] += 1
            self.failures.append({"check": result.name, "value": result.value, "bound": result.bound,
                                  "details": result.details})

    def to_json_dict(self) -> dict:
        return {"count": self.count, "seed": self.seed, "checks": self.runs,
                "violations": self.failures, "pass": self.passed}


def run_inequality_suite(count: int = 1000, seed: int = DEFAULT_SEED, tol: float = 1e-10,
                         u_max: float = 1e4) -> SuiteReport:
    """Every intermediate check on ``count`` random admissible tuples.

    Exponent ranges: ``q`` in (1, 6), ``p`` in (2, 7) for the null-weight
    source and (0, 5) for the ``<x>``-weighted one, ``lambda`` in (2, 7),
    ``nu`` in (0, 5); ``u`` log-uniform in ``[0, u_max]``. Checks gated on
    ``q > 2`` are skipped for tuples outside the gate.
    """
    rng = np.random.default_rng(seed)
    report = SuiteReport(count, seed)
    for _ in range(count):
        q = 1.0 + 5.0 * (1.0 - rng.random())
        p1 = 2.0 + 5.0 * (1.0 - rng.random())
        p2 = 5.0 * (1.0 - rng.random())
        lam = 2.0 + 5.0 * (1.0 - rng.random())
        nu = 5.0 * (1.0 - rng.random())
        x = rng.random()
        u = float(np.expm1(rng.random() * np.log1p(u_max)))
        v = u * (2.0 * rng.random() - 1.0)
        t, r = 0.5 * (u + v), max(0.5 * (u - v), 0.0)
        report.record(check_I1_lemma1(u, v, q, tol))
        report.record(check_I1_lemma2(u, v, q, lam, tol))
        report.record(check_I2_lemma2(u, v, q, lam, tol))
        report.record(check_elementary_inequality(nu, x))
        report.record(check_min_identity(t, r))
        if q > 2:
            report.record(check_I2_lemma1(u, v, q, tol))
            report.record(check_du_psi_lemma1(1.0, p1, q, u, v, tol))
        # lemma-2 constants are admissible for every sampled tuple
        consts = lemma2_constants(p2, q, lam)
        report.record(CheckResult("lemma2_exponents", consts.mu > 1 and consts.nu == p2 + min(q, lam - 1) - 1,
                                  consts.nu, p2 + consts.mu - 1, {"p": p2, "q": q, "lambda": lam}))
    return report
