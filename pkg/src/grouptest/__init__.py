"""Generalized group testing with monotone stochastic test functions.

Non-adaptive Bernoulli pooling designs, the two per-item decoding rules,
all design-parameter formulas with their information-theoretic bounds, an
adaptive exact estimator of the defective count, and a reproducible Monte
Carlo experiment harness.
"""

from .codec import (
    DecodeResult,
    Outcomes,
    TestMatrix,
    decode,
    generate_matrix,
    simulate_outcomes,
)
from .design import (
    BoundsReport,
    ConcentrationResult,
    DesignPoint,
    SensitivityResult,
    bounds_report,
    concentration_h,
    design_point,
    lower_bound_tests,
    optimize_q,
    positivity_probabilities,
    sensitivity_H,
)
from .errors import (
    DefectiveCountMismatch,
    Degenerate,
    DegenerateSensitivity,
    GroupTestError,
    NonMonotone,
    ParameterOutOfRange,
    TesterFailure,
)
from .estimate import (
    EstimateResult,
    LomParams,
    PoolTester,
    SimulationPoolTester,
    estimate_d,
    lom_decide,
    lom_params,
)
from .experiments import (
    ExperimentConfig,
    TrialRecord,
    TSpec,
    heatmap,
    run_point,
    waterfall,
)
from .functions import (
    FamilyKind,
    NoiseClass,
    TestFunction,
    TestFunctionFamily,
    build,
    classical,
    classify,
    linear,
    linear_gap,
    noisy,
    parse_family_spec,
    partial_linear,
    sigmoid,
    table,
    threshold,
)

__version__ = "0.1.0"
