"""Logistic rise/decay modeling of thematic publication flows.

A topic pushes publication output above its background level for a
finite lifetime, after which the flow relaxes back. This package holds
the closed-form curves, a fixed-step ODE oracle, least-squares fitting
with phase classification, a capacity-balance multi-topic simulator,
seeded synthetic-series generation, and a CLI over all of it.
"""

from .balance_sim import BalanceScenario, BalanceTrace, balance_integral, simulate
from .errors import (
    DegenerateSeries,
    NoInflection,
    NonMonotoneTime,
    NotConverged,
    OutOfWindow,
    ParseError,
    StepTooLarge,
    ThemeflowError,
    TooFewSamples,
)
from .fitting import (
    FitResult,
    ModelFit,
    PhaseLabel,
    PhaseSegment,
    TimeSeries,
    classify_phases,
    compare_models,
    fit,
)
from .model_core import (
    FlowCurve,
    LegacyParams,
    TopicParams,
    background_level,
    eval_flow,
    eval_u,
    eval_v,
    eval_v_saturated,
    exponential_regime_approx,
    flow_values,
    inflection_time,
    malthus,
    obsolescence_share,
    saturation_level,
)
from .ode_engine import (
    IntegratorConfig,
    Trajectory,
    integrate_decay,
    integrate_flow,
    integrate_rise,
)
from .timeseries_io import (
    GeneratorSpec,
    export_plot_data,
    generate,
    read_series,
    write_series,
)

__version__ = "0.1.0"
