"""Stochastic SIR epidemics driven by correlated Brownian noise and tempered-stable jumps."""

from .analytics import (EXTINCT, PERSISTENT, UNDECIDED, RegimeVerdict, Thresholds, detect_extinction,
                        running_time_average, verdict)
from .experiment_io import (ConfigError, ExperimentConfig, UnknownPreset, emit_config, emit_outputs,
                            parse_config, preset)
from .levy_model import (EXTINCTION, INDETERMINATE, PERSISTENCE, ThresholdReport,
                         basic_reproduction_number, beta_noise_intensity, check_hypotheses,
                         classify_regime, deterministic_equilibria, lambda_p,
                         modified_reproduction_number, variance_matched_sigma)
from .params import ModelParams, NoiseSpec, TemperedStableParams
from .quadrature import DivergentIntegrand, NonConvergence, QuadratureSettings, levy_integral
from .sde_engine import (EnsembleSummary, SimConfig, SirPath, SirState, StepDiverged, euler_step,
                         run_ensemble, simulate_path)
from .ts_sampler import JumpTrain, RngStream, cumulant, sample_jump_train

__version__ = "0.1.0"
