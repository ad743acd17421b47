"""Numerical verification of weighted decay estimates for the 3+1 wave equation."""

__version__ = "0.1.0"

from .core import (DecayProfile, DomainError, NullPoint, SpacetimePoint, WeightExponents, bracket,
                   from_null, to_null, weighted_amplitude)
from .quadrature import CharGrid, GridSpec, QuadratureError, QuadResult, integrate_1d, triangle_sweep
from .radial import RadialField, RadialSource, phi_point, solve, source_lemma1, source_lemma2
from .bounds import (DEFAULT_SEED, BoundConstants, HypothesisError, lemma1_constants, lemma2_constants,
                     verify_decay)
from .kirchhoff import MajorantError, SphereRule, VolumetricSource, compare, retarded_integral
from .iteration import IterationConfig, IterationTrace, run_iteration

__all__ = [name for name in dir() if not name.startswith("_")]
