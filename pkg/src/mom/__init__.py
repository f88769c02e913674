"""Multilateration with unsynchronized transmitters at known positions.

Receivers are synchronized but their positions are unknown; every transmitter
has a known position and an unknown emission offset. Minimal configurations
are solved by eliminating receivers (and, for two-receiver setups, extra
offsets) and running total-degree homotopy continuation on the reduced system.
"""

from .errors import (
    DegenerateMeasurement,
    DegenerateTransmitters,
    InfeasibleDistance,
    MomError,
    NoRealSolution,
    ParameterError,
    ParseError,
    SolveFailed,
)
from .homotopy import PathStatus, SolutionSet, TrackerConfig, solve_system
from .network import (
    Determinacy,
    NetworkInstance,
    PseudorangeMatrix,
    SolvabilityClass,
    add_noise,
    classify,
    excess_constraint,
    random_instance,
    synthesize_pseudoranges,
)
from .polynomial import MultiPoly, PolySystem
from .reduction import MinimalConfig, build_reduced_system
from .solution import MomSolution
from .solvers import (
    LMOptions,
    PipelineOptions,
    SubminimalConfig,
    refine_lm,
    solve_minimal,
    solve_overdetermined,
    solve_subminimal,
    trilaterate_receiver,
)

__version__ = "0.1.0"
