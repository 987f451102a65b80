"""Predictive densities and probability-in-bounds forecasts."""

from .lls import lls_probability, lls_simulate
from .paths import (ForecastPaths, ProbabilityForecast, point_forecast,
                    probability_in_bounds, write_forecasts, write_paths)
from .sample_based import (default_grid, gj_density_h1, gj_joint_density,
                           gj_joint_logdensity, gj_probability, write_density)
from .sir import (InstrumentalModel, fit_instrumental, marx_sir_forecast,
                  sir_forecast, systematic_resample)

__all__ = [
    "lls_probability",
    "lls_simulate",
    "ForecastPaths",
    "ProbabilityForecast",
    "point_forecast",
    "probability_in_bounds",
    "write_forecasts",
    "write_paths",
    "default_grid",
    "gj_density_h1",
    "gj_joint_density",
    "gj_joint_logdensity",
    "gj_probability",
    "write_density",
    "InstrumentalModel",
    "fit_instrumental",
    "marx_sir_forecast",
    "sir_forecast",
    "systematic_resample",
]
