"""MIMO-OFDM channel parameter estimation via multilinear SVD."""

from .api import ChannelParameterEstimator
from .channel import (
    ArrayConfig,
    BeamformingMatrices,
    PathParams,
    SceneGeometry,
    WaveformConfig,
    channel_matrix,
    check_frequency_nonselective,
    geometry_to_params,
    phase_vector,
    random_beamformers,
    signal_tensor,
    steering_rx,
    steering_tx,
    synthesize_measurement,
    training_matrix,
    unambiguous_range,
)
from .crb import CrbReport, crb_bounds, jacobian, signal_mean
from .estimation import (
    EstimatorConfig,
    PathEstimate,
    estimate_channel_parameters,
    reconstruct_channel,
)
from .harness import (
    Scenario,
    SweepResult,
    default_scenario,
    emit_results,
    load_scenario,
    run_scenario,
)
from .tensor_ops import (
    MsvdResult,
    TuckerForm,
    fold,
    frobenius_norm,
    mode_product,
    mode_singular_values,
    msvd,
    truncate,
    tucker_reconstruct,
    unfold,
)

__version__ = "0.1.0"
