import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tensorchan import (
    ArrayConfig,
    ChannelParameterEstimator,
    EstimatorConfig,
    PathParams,
    WaveformConfig,
    channel_matrix,
    random_beamformers,
    signal_tensor,
)

WF = WaveformConfig(carrier_hz=60e9, n_subcarriers=30, bandwidth_hz=100e6, n_training=20)
ARR = ArrayConfig(n_rx=11, n_tx=21, l_rx=8, l_tx=8)
PATHS = [
    PathParams(theta_rx=0.35, theta_tx=-0.6, d=15.0, h=1.0),
    PathParams(theta_rx=-0.8, theta_tx=0.4, d=33.0, h=0.5),
]


def fitted_estimator():
    bf = random_beamformers(ARR, 0)
    est = ChannelParameterEstimator(waveform=WF, arrays=ARR, beamformers=bf)
    return est.fit(signal_tensor(PATHS, bf, WF, ARR))


def test_get_set_params_and_clone():
    est = ChannelParameterEstimator(waveform=WF, arrays=ARR)
    params = est.get_params()
    assert params["waveform"] is WF and params["arrays"] is ARR
    est.set_params(config=EstimatorConfig(refine_iters=2))
    assert est.config.refine_iters == 2
    cloned = clone(est)
    assert cloned.waveform == WF and cloned is not est


def test_fit_recovers_paths():
    est = fitted_estimator()
    assert est.n_paths_ == 2
    assert est.paths_[0].theta_rx == pytest.approx(0.35, abs=1e-5)
    assert est.paths_[1].d == pytest.approx(33.0, abs=1e-3)


def test_fit_requires_configuration():
    with pytest.raises(ValueError):
        ChannelParameterEstimator().fit(np.zeros((8, 20, 30), complex))


def test_predict_before_fit_raises():
    bf = random_beamformers(ARR, 0)
    est = ChannelParameterEstimator(waveform=WF, arrays=ARR, beamformers=bf)
    with pytest.raises(NotFittedError):
        est.predict([0])


def test_predict_reconstructs_channels():
    est = fitted_estimator()
    out = est.predict([0, 5])
    assert out.shape == (2, 11, 21)
    for i, k in enumerate([0, 5]):
        ref = channel_matrix(PATHS, k, WF, ARR)
        assert np.linalg.norm(out[i] - ref) / np.linalg.norm(ref) < 1e-4
