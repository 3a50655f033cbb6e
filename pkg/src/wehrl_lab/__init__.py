"""Coherent states, Husimi functions and Wehrl-type entropy inequalities for
the symmetric representations of SU(N)."""

from ._accel import numba_enabled, use_numba
from .functionals import ConvexFunctional, parse_phi
from .symrep import (
    DensityOperator,
    SpaceSignature,
    StateVector,
    brute_force_symmetrize,
    coherent_coefficients,
    dim_symmetric,
    enumerate_basis,
    overlap_with_coherent,
    random_density,
)
from .wehrl import (
    HusimiEvaluator,
    deficit,
    entropy_lhs,
    stability_lower_bound,
    sup_husimi,
    trace_distance,
    verify_lemma23,
)

__version__ = "0.1.0"
