"""Simulation and inference for first-order double autoregressive models.

The package covers global least-absolute-deviation fitting, random-weighting
standard errors, top Lyapunov exponent estimation and one-sided strict
stationarity tests, plus a Monte Carlo harness.
"""

from darglade.errors import (
    DarError,
    DegenerateSeries,
    EmptySet,
    LengthMismatch,
    NoRoot,
    NonConvergence,
    SignedLogOverflow,
    SingularSigma,
    SingularTerm,
)
from darglade.numerics import (
    RngStream,
    SignedLog,
    derive_stream,
    integrate_log_kernel,
    sl_decode,
    sl_encode,
)
from darglade.model import (
    DarParams,
    InnovationSpec,
    SignedLogSeries,
    density_at,
    get_innovation,
    residuals,
    sample_innovation,
    simulate,
)
from darglade.estimation import (
    FitResult,
    OptimizerSettings,
    ThetaBox,
    aae,
    default_box,
    glade,
    objective,
    qmle,
    weighted_glade,
    weighted_objective,
)
from darglade.lyapunov import (
    GammaEstimate,
    TruncationWindow,
    boundary_alpha,
    gamma_natural,
    gamma_resampled,
    gamma_truncated,
    true_gamma,
)
from darglade.inference import (
    ResampleSummary,
    TestReport,
    asymptotic_se_explosive,
    asymptotic_se_stationary,
    rw_variance,
    t_statistic,
    test_stationarity,
)

__version__ = "0.1.0"
