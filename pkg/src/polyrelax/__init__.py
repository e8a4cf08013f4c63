"""Polyconvex envelopes of isotropic energy densities via signed singular values."""

from .densities import DensityParams, REGISTRY, get_density
from .estimators import LinearProgramEnvelope, LowerConvexEnvelope, PolyconvexEnvelope
from .exceptions import DegenerateInput, EmptyGraphError, IterationLimit, LatticeTooLarge, PolyrelaxError
from .hull import EnvelopeValue, LowerEnvelope, build_lower_envelope, evaluate_envelope
from .lattice import LatticeSpec, SampledGraph, generate_lattice, sample_density
from .linalg import matrix_minors, minors_vector, signed_singular_values, symmetry_group
from .lp import LpSolution, pointwise_envelope_lp
from .pipeline import PipelineConfig, PipelineResult, convergence_study, polyconvexity_indicator, run

__version__ = "0.1.0"

__all__ = [
    "DensityParams", "REGISTRY", "get_density",
    "LinearProgramEnvelope", "LowerConvexEnvelope", "PolyconvexEnvelope",
    "DegenerateInput", "EmptyGraphError", "IterationLimit", "LatticeTooLarge", "PolyrelaxError",
    "EnvelopeValue", "LowerEnvelope", "build_lower_envelope", "evaluate_envelope",
    "LatticeSpec", "SampledGraph", "generate_lattice", "sample_density",
    "matrix_minors", "minors_vector", "signed_singular_values", "symmetry_group",
    "LpSolution", "pointwise_envelope_lp",
    "PipelineConfig", "PipelineResult", "convergence_study", "polyconvexity_indicator", "run",
]
