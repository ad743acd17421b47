"""Picard iteration for ``box phi = F(phi)`` and ``box phi + V phi = 0`` on a
radial grid, tracking the weighted sup-norm constants of the iterates."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import (DEFAULT_SEED, HypothesisError, closure_nonlinear, closure_potential, field_sup,
                     lemma1_constants, lemma2_constants, lemma2_corrected_C)
from .core import WeightExponents, bracket
from .quadrature import CharGrid
from .radial import RadialField, RadialSource, solve

INDUCTION_SLACK = 1e-6


def weighted_norm(field: RadialField, w: WeightExponents, samples: int = 1000, seed: int = DEFAULT_SEED) -> float:
    """Grid sup of ``|phi| <t+r>^a <t-r>^b`` over nodes and interpolated samples."""
    return field_sup(field, w, samples, seed)[0]


@dataclass(frozen=True)
class IterationConfig:
    """``amplitude`` is ``A`` (semilinear) or ``V0`` (potential).

    Semilinear runs need ``p``; potential runs need ``lam`` and take
    ``q = lam`` unless given. ``constant`` selects the induction constant for
    the potential run: ``"printed"`` or ``"corrected"``
    (see :func:`~wavedecay.bounds.lemma2_corrected_C`).
    """

    kind: str
    amplitude: float
    p: float | None = None
    lam: float | None = None
    q: float | None = None
    epsilon: float = 0.1
    max_steps: int = 6
    grid: CharGrid | None = None
    allow_out_of_hypothesis: bool = False
    ceiling: float = 1e6
    samples: int = 1000
    seed: int = DEFAULT_SEED
    n_gauss: int = 3
    constant: str = "printed"

    def __post_init__(self):
        if self.kind not in ("semilinear", "potential"):
            raise ValueError(f"unknown iteration kind {self.kind!r}")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ValueError("amplitude must be finite and >= 0")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError("seed amplitude epsilon must be > 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.constant not in ("printed", "corrected"):
            raise ValueError(f"unknown constant choice {self.constant!r}")
        if self.kind == "semilinear":
            if self.p is None:
                raise ValueError("semilinear iteration needs p")
            closure = closure_nonlinear(self.p)
        else:
            if self.lam is None:
                raise ValueError("potential iteration needs lambda")
            closure = closure_potential(self.lam)
            if self.q is None:
                object.__setattr__(self, "q", self.lam)
        if not closure and not self.allow_out_of_hypothesis:
            raise HypothesisError(closure.reason)
        if self.grid is None:
            object.__setattr__(self, "grid", CharGrid.default())

    @property
    def weights(self) -> WeightExponents:
        if self.kind == "semilinear":
            return WeightExponents(1.0, self.p - 2.0)
        return WeightExponents(1.0, self.q - 1.0)

    def seed_profile(self, t, r):
        w = self.weights
        return self.epsilon / (bracket(t + r) ** w.a * bracket(t - r) ** w.b)


@dataclass(frozen=True)
class IterationStep:
    step: int
    C_n: float
    diff_norm: float
    ratio: float
    induction_bound: float
    induction_ok: bool


@dataclass
class IterationTrace:
    kind: str
    weights: WeightExponents
    C_0: float
    induction_constant: float
    steps: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    diverged: bool = False
    divergence_step: int | None = None
    notes: list = field(default_factory=list)

    @property
    def diff_norms(self) -> list:
        return [s.diff_norm for s in self.steps]

    @property
    def ratios(self) -> list:
        return [s.ratio for s in self.steps]

    @property
    def constants(self) -> list:
        return [self.C_0] + [s.C_n for s in self.steps]

    @property
    def induction_ok(self) -> bool:
        return all(s.induction_ok for s in self.steps)

    def to_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "C_n", "diff_norm", "ratio"])
        writer.writerow([0, repr(self.C_0), "", ""])
        for s in self.steps:
            ratio = "" if math.isnan(s.ratio) else repr(s.ratio)
            writer.writerow([s.step, repr(s.C_n), repr(s.diff_norm), ratio])

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "weights": {"a": self.weights.a, "b": self.weights.b},
            "induction_constant": self.induction_constant,
            "C_0": self.C_0,
            "steps": [{"step": s.step, "C_n": s.C_n, "diff_norm": s.diff_norm,
                       "ratio": None if math.isnan(s.ratio) else s.ratio,
                       "induction_bound": s.induction_bound, "induction_ok": s.induction_ok}
                      for s in self.steps],
            "diverged": self.diverged,
            "divergence_step": self.divergence_step,
            "notes": list(self.notes),
            "pass": self.induction_ok and not self.diverged,
        }


def _ratio(diff: float, prev: float | None) -> float:
    if prev is None:
        return math.nan
    if prev == 0.0:
        # Identical consecutive iterates: a fixed point was reached exactly.
        return 0.0 if diff == 0.0 else math.inf
    return diff / prev


def _run(cfg: IterationConfig, make_source, step_bound, C_lemma: float, keep_fields: bool) -> IterationTrace:
    w = cfg.weights
    phi = RadialField.from_function(cfg.grid, cfg.seed_profile)
    C_n = weighted_norm(phi, w, cfg.samples, cfg.seed)
    trace = IterationTrace(cfg.kind, w, C_n, C_lemma)
    if keep_fields:
        trace.fields.append(phi)
    prev = None
    for n in range(1, cfg.max_steps + 1):
        new = solve(make_source(phi), cfg.grid, cfg.n_gauss)
        C_new = weighted_norm(new, w, cfg.samples, cfg.seed)
        diff = weighted_norm(new - phi, w, cfg.samples, cfg.seed)
        bound = step_bound(C_n)
        trace.steps.append(IterationStep(n, C_new, diff, _ratio(diff, prev),
                                         bound, bool(C_new <= bound * (1.0 + INDUCTION_SLACK))))
        if keep_fields:
            trace.fields.append(new)
        if not math.isfinite(C_new) or C_new > cfg.ceiling:
            trace.diverged = True
            trace.divergence_step = n
            break
        phi, C_n, prev = new, C_new, diff
    return trace


def picard_semilinear(cfg: IterationConfig, keep_fields: bool = False) -> IterationTrace:
    """Iterate ``box phi_{n+1} = A |phi_n|^(p-1) phi_n`` from the seed ``eps/(<t+r><t-r>^(p-2))``."""
    if cfg.kind != "semilinear":
        raise ValueError("config is not semilinear")
    A, p = cfg.amplitude, cfg.p
    try:
        C_lemma = lemma1_constants(p, p * (p - 2.0)).C
    except HypothesisError:
        C_lemma = math.inf

    def make_source(phi: RadialField) -> RadialSource:
        def G(t, r):
            val = phi.interpolate(t, r)
            return A * np.abs(val) ** (p - 1.0) * val
        return RadialSource(G, "semilinear")

    trace = _run(cfg, make_source, lambda C: C_lemma * A * C ** p, C_lemma, keep_fields)
    closure = closure_nonlinear(p)
    trace.notes.append(closure.reason)
    return trace


def picard_potential(cfg: IterationConfig, keep_fields: bool = False) -> IterationTrace:
    """Iterate ``box phi_{n+1} = -V phi_n`` with ``V = V0/<r>^lam`` from the seed ``eps/(<t+r><t-r>^(q-1))``."""
    if cfg.kind != "potential":
        raise ValueError("config is not potential")
    V0, lam, q = cfg.amplitude, cfg.lam, cfg.q
    try:
        consts = lemma2_constants(1.0, q - 1.0, lam)
        C_lemma = consts.C if cfg.constant == "printed" else lemma2_corrected_C(1.0, q - 1.0, lam)
        closes = consts.nu >= q - 1.0
    except HypothesisError as exc:
        C_lemma, closes, consts = math.inf, False, exc

    def make_source(phi: RadialField) -> RadialSource:
        def G(t, r):
            return -V0 / bracket(r) ** lam * phi.interpolate(t, r)
        return RadialSource(G, "potential")

    trace = _run(cfg, make_source, lambda C: C_lemma * V0 * C, C_lemma, keep_fields)
    if isinstance(consts, HypothesisError):
        trace.notes.append(f"outside hypotheses: {consts}")
    else:
        trace.notes.append(f"nu = min(q-1, lambda-1) = {consts.nu:g}; closes: {closes}")
    trace.notes.append(f"induction constant ({cfg.constant}) = {C_lemma:g}")
    return trace


def run_iteration(cfg: IterationConfig, keep_fields: bool = False) -> IterationTrace:
    if cfg.kind == "semilinear":
        return picard_semilinear(cfg, keep_fields)
    return picard_potential(cfg, keep_fields)
