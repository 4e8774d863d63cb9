"""
tbs-noma - threshold-based selective cooperative NOMA

Closed-form average bit error probabilities, a seeded Monte Carlo link-level
simulator and the optimum relaying threshold for a two-user downlink where the
near user relays the far user's symbols only when its SINR clears a threshold.
"""

__version__ = "1.1.0"

from .analytic import NetworkConfig, ModeCoefficients, abep_e2e, table1_coeffs
from .config import Config, ExperimentSpec
from .errors import ConfigurationError, TbsNomaError
from .simulator import RelayPolicy, StopRule, run_campaign
from .threshold_opt import brute_force_threshold, optimum_threshold
from .cli import main

__all__ = [
    'NetworkConfig', 'ModeCoefficients', 'abep_e2e', 'table1_coeffs',
    'Config', 'ExperimentSpec', 'ConfigurationError', 'TbsNomaError',
    'RelayPolicy', 'StopRule', 'run_campaign',
    'brute_force_threshold', 'optimum_threshold', 'main',
]
