"""Energy-efficient precoding for multibeam satellite downlinks.

The alternating quadratic-transform optimiser lives in ``optimizer``; the
channel generator in ``linkbudget``; evaluation in ``metrics``.
"""
__version__ = "0.1.0"

from .baselines import zero_forcing_precoder
from .exceptions import (DegenerateInputError, EEBeamError, GainTableError,
                         InvalidScenarioError, ScenarioInfeasibleError, SolverError)
from .linkbudget import (BeamGainModel, ChannelMatrix, ScenarioConfig, ScenarioParams,
                         antenna_pattern_matrix, assemble_channel, dbw_to_watts,
                         default_scenario_dict, generate_channel, load_gain_table,
                         load_scenario, sample_phase_matrix, scenario_from_dict,
                         synthetic_gain_model)
from .metrics import (check_feasible, empirical_sinr, energy_efficiency, evaluate, rate, sinr,
                      total_power)
from .optimizer import AlgorithmConfig, SolveTrace, initialize_precoder, run, stop_check
from .qtransform import AuxiliaryState, optimal_mu, optimal_z, quadratic_sinr, surrogate_v

__all__ = [name for name in dir() if not name.startswith("_")]
