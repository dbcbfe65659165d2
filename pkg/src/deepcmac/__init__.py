"""CMAC and deep (stacked) CMAC adaptive filters for noise cancellation."""
from .cmac import (CmacGeometry, CmacLayerParams, activate, excite, init_layer, make_geometry,
                   update_single_layer)
from .dcmac import (DcmacModel, backward_stack, forward_stack, load_model, make_model,
                    save_model, train_step)
from .estimators import CMACRegressor, DCMACRegressor, LMSRegressor, VolterraRegressor
from .harness import (MethodConfig, TrainingTrace, convergence_report, grid_search_baseline,
                      run_anc, sweep)
from .signals import ChannelFunction, Family, generate_signals, get_channel, list_channels
from .stats import paired_t_test

__version__ = "0.1.0"

__all__ = [
    "CmacGeometry", "CmacLayerParams", "activate", "excite", "init_layer", "make_geometry",
    "update_single_layer", "DcmacModel", "backward_stack", "forward_stack", "load_model",
    "make_model", "save_model", "train_step", "CMACRegressor", "DCMACRegressor",
    "LMSRegressor", "VolterraRegressor", "MethodConfig", "TrainingTrace",
    "convergence_report", "grid_search_baseline", "run_anc", "sweep", "ChannelFunction",
    "Family", "generate_signals", "get_channel", "list_channels", "paired_t_test",
]
