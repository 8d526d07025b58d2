"""Hitting times of measured discrete-time coined quantum walks on hypercubes."""

from .classical import (
    classical_hitting_closed,
    classical_hitting_graph,
    classical_hitting_recursion,
    classical_monte_carlo,
)
from .coins import UnitaryMatrix, dft_coin, grover_coin, hadamard_coin, make_coin
from .errors import (
    ConfigurationError,
    ConsistencyError,
    DomainError,
    NumericalError,
    PrecisionError,
    QWalkError,
    ReachabilityError,
    ResourceError,
    SizeError,
    UnsupportedDimensionError,
)
from .graph import LabeledGraph, distorted_hypercube, hamming_weight, hypercube, validate_labeling
from .reduced import reduced_hitting_time, reduced_walk
from .spectral import avoiding_projector, eigendecompose, infinite_hitting_probability
from .superop import (
    HittingResult,
    build_superoperators,
    closed_form_hitting_time,
    iterative_hitting_time,
)
from .walk import (
    MeasuredWalk,
    WalkState,
    concurrent_hitting_time,
    first_crossing_series,
    hitting_time_estimate,
    measured_walk,
    one_shot_hitting_time,
    symmetric_initial_state,
)

__version__ = "0.1.0"
