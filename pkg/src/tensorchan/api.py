"""Estimator-style front end so the pipeline composes with sklearn tooling."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .estimation import EstimatorConfig, estimate_channel_parameters, reconstruct_channel


class ChannelParameterEstimator(BaseEstimator):
    """Fits per-path channel parameters to a measurement tensor.

    Parameters mirror the functional pipeline: waveform and array
    configuration, the beamforming matrices used during training, and the
    dictionary/refinement settings.

    After ``fit`` the recovered paths are available as ``paths_`` (sorted by
    interaction energy) and ``n_paths_``; ``predict(k)`` reconstructs the
    channel matrix at subcarrier index k.
    """

    def __init__(self, waveform=None, arrays=None, beamformers=None, config=None):
        self.waveform = waveform
        self.arrays = arrays
        self.beamformers = beamformers
        self.config = config

    def fit(self, X, y=None):
        if self.waveform is None or self.arrays is None or self.beamformers is None:
            raise ValueError("waveform, arrays and beamformers must be set")
        config = self.config if self.config is not None else EstimatorConfig()
        self.paths_ = estimate_channel_parameters(
            np.asarray(X), self.beamformers, self.waveform, self.arrays, config
        )
        self.n_paths_ = len(self.paths_)
        return self

    def predict(self, X):
        """Channel matrices for an iterable of subcarrier indices."""
        if not hasattr(self, "paths_"):
            raise NotFittedError("call fit before predict")
        ks = np.atleast_1d(np.asarray(X, int))
        return np.stack(
            [reconstruct_channel(self.paths_, int(k), self.waveform, self.arrays) for k in ks]
        )
