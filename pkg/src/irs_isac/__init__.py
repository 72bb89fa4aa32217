"""Joint transmit and IRS beamforming for radar-communication (ISAC) base stations."""
from .ao import (AoControls, BeamformingSolution, CcpControls, ConvergenceTrace, SinrTargets,
                 solve_joint)
from .channel import (ArrayGeometry, ChannelModel, ChannelSet, ScenarioGeometry, dbm_to_watts,
                      sample_channels)
from .config import ConfigError, ExperimentConfig, load_config
from .estimators import IsacBeamformer, RadarCovarianceDesigner, RobustIsacBeamformer
from .harness import RunSummary, emit, run, sweep
from .radar import AngularGrid, DesiredCovariance, design_desired_covariance
from .robust import solve_robust
from .sdr import solve_sdr

__version__ = "0.1.0"

__all__ = [
    "AngularGrid", "AoControls", "ArrayGeometry", "BeamformingSolution", "CcpControls",
    "ChannelModel", "ChannelSet", "ConfigError", "ConvergenceTrace", "DesiredCovariance",
    "ExperimentConfig", "IsacBeamformer", "RadarCovarianceDesigner", "RobustIsacBeamformer",
    "RunSummary", "ScenarioGeometry", "SinrTargets", "dbm_to_watts", "design_desired_covariance",
    "emit", "load_config", "run", "sample_channels", "solve_joint", "solve_robust", "solve_sdr",
    "sweep",
]
