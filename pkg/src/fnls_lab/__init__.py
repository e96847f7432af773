"""Pseudo-spectral laboratory for the 1-D cubic fractional NLS on the torus."""

__version__ = "0.1.0"

from fnls_lab.spectral import (
    GridSpec,
    NormSpec,
    SpaceTimeField,
    SpectralField,
    critical_index,
    fractional_symbol,
    lwp_threshold,
    project,
    sobolev_norm,
    xsb_norm,
)
from fnls_lab.dynamics import (
    EquationSpec,
    InitialDataSpec,
    IntegrationError,
    IntegratorSpec,
    Trajectory,
    free_evolve,
    nonlinearity,
    run,
    step,
)
from fnls_lab.gauges import GaugeContext, gauge_G, gauge_J
from fnls_lab.imethod import (
    IOperatorSpec,
    MultiplierOrderD,
    apply_I,
    corrected_mass,
    elongate,
    i_multiplier,
    lambda_d,
    mass_derivative_rhs,
    modified_mass,
    sigma4,
)
from fnls_lab.reports import BoundReport, CheckResult, ScalingReport

__all__ = [
    "GridSpec",
    "NormSpec",
    "SpaceTimeField",
    "SpectralField",
    "critical_index",
    "fractional_symbol",
    "lwp_threshold",
    "project",
    "sobolev_norm",
    "xsb_norm",
    "EquationSpec",
    "InitialDataSpec",
    "IntegrationError",
    "IntegratorSpec",
    "Trajectory",
    "free_evolve",
    "nonlinearity",
    "run",
    "step",
    "GaugeContext",
    "gauge_G",
    "gauge_J",
    "IOperatorSpec",
    "MultiplierOrderD",
    "apply_I",
    "corrected_mass",
    "elongate",
    "i_multiplier",
    "lambda_d",
    "mass_derivative_rhs",
    "modified_mass",
    "sigma4",
    "BoundReport",
    "CheckResult",
    "ScalingReport",
]
