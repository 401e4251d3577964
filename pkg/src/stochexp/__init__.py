"""stochexp: a Monte Carlo laboratory for stochastic exponentials.

Simulates possibly explosive scalar and vector SDEs, computes Doleans-Dade
exponentials with explicit stopping and zero conventions, applies Girsanov
drift shifts and density weights, classifies explosion boundaries by Feller's
test, and scripts the counterexample scenarios exposed through the CLI.
"""

from .engine import BatchSummary, simulate_scalar_batch
from .exponential import ExponentialPath, localized_exponential, stochastic_exponential
from .feller import (
    BoundaryLimit,
    Diffusion1D,
    FellerReport,
    classify_explosion,
    feller_v,
    scale_density,
)
from .girsanov import (
    McEstimate,
    TiltWeight,
    drift_shift_transform,
    exponential_tilt_weight,
    qn_weight,
    shifted_brownian,
    weighted_expectation,
)
from .paths import (
    BrownianPath,
    RngStream,
    TimeGrid,
    make_grid,
    refine_brownian,
    sample_brownian,
)
from .sde import (
    Functional,
    PathFunction,
    SdeSpec,
    SolutionPath,
    SolveConfig,
    StateFunction,
    budget_time,
    explosion_time_estimate,
    solve,
)

__version__ = "0.1.0"
