"""Multi-hop path analysis and regularisation of modular recurrent networks."""

import json as _json

from ._pathweaver import (
    ConfigError,
    ContractViolation,
    ConvergenceError,
    FormatError,
    RegKind,
    RnnParams,
    TaskKind,
    TaskSpec,
    TrainConfig,
    TrainingDiverged,
    UndefinedCorrelation,
    UnsupportedTask,
    assemble,
    block_contrast,
    communicability_io,
    design_matrix,
    forward,
    generate,
    hop_io,
    hop_magnitude_profile,
    init_params,
    l1_whh,
    matpow,
    optimal_map,
    parse_config,
    pearson,
    resolvent_io,
    resolvent_penalty,
    spectral_radius,
    structure_matrices,
    train,
)
from . import _pathweaver


def _config_text(config):
    if config is None:
        return ""
    if isinstance(config, str):
        return config
    return _json.dumps(config)


def run_fig3(config=None, out=""):
    """Correlates learned R_io and W_hh with the optimal maps; returns the report dict."""
    return _pathweaver.run_fig3(_config_text(config), out)


def run_fig4(config=None, out=""):
    """Block contrast of k-hop maps on the on-off task; returns the report dict."""
    return _pathweaver.run_fig4(_config_text(config), out)


def run_fig5(config=None, out=""):
    """Resolvent versus L1 regularisation sweep; returns the report dict."""
    return _pathweaver.run_fig5(_config_text(config), out)


def run_single(config=None, out=""):
    """Trains one network and returns its analysis dict."""
    return _pathweaver.run_single(_config_text(config), out)


__all__ = [name for name in dir() if not name.startswith("_")]
