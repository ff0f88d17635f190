"""fracwave: spectral simulation and decay-rate verification for the damped
fractional beam/plate family u_tt + (-Lap)^d u_tt + (-Lap)^a u + (-Lap)^t u_t = |u_t|^p."""

__version__ = "0.1.0"

from .params import ModelParams
from .multipliers import (KernelSample, ModeCoefficients, eigenvalues, kernels,
                          kernel_arrays, mode_coefficients, phi1,
                          phi1_divided_difference, propagator_step_matrix,
                          etd2_correction_column)
from .rates import (AdmissibilityResult, BoundaryRateError, CaseLabel,
                    DecayPrediction, Kernel, LogFactor, NoCriticalExponent,
                    RegimeQuery, Verdict, admissibility, critical_exponent,
                    duhamel_bound_check, duhamel_ratio_curve, m_zero, predict)
from .profiles import AlgebraicTailProfile, GaussianProfile, HighPassProfile
from .radial import (DecayCurve, EnergyCurve, RadialQuadratureError, energy_curve,
                     fit_decay, fit_slope, l2_norm_radial, radial_integral)
from .torus import (BlowUpDetected, ExperimentRecord, NormMonitor, SpectralState,
                    TorusGrid, TorusStepper, apply_fractional_symbol,
                    data_from_profile, linear_lattice_norm, norms, run_experiment,
                    step)
from .testfn import TestFunctionPair, build_test_functions, testfn_functional
from .config import ConfigError, ExperimentConfig, parse_config_file, parse_config_text

__all__ = [name for name in dir() if not name.startswith("_")]
