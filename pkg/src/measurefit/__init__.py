"""Estimate SDE parameters and drift functions from observed probability densities.

Model densities come from the closed-form stationary Fokker-Planck solution
or from a finite-volume solver for the time-dependent equation; estimates
minimize the Hellinger distance to the observations.
"""

from .density import (Grid1D, GridDensity, hellinger, normalize, resample,
                      squared_hellinger, trapezoid)
from .errors import (ExprError, FitError, InputError, MeasureFitError, ModelError,
                     NonIntegrableError, NumericalError, SolverError)
from .estimator import (FitResult, Observation, fit_stationary, fit_time, recover_drift,
                        stationary_objective, time_objective)
from .expr import Expr, evaluate, parse
from .fokker_planck import FpProblem, FpSettings, FpSolution, solve
from .sde import ScalarFunctionSpec, SdeFamily, SdeModel, instantiate
from .stationary import StationarySpec, potential, stationary_density

__version__ = "0.1.0"
