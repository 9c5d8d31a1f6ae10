import numpy as np
import pytest

from tensorchan.channel import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    PathParams,
    SceneGeometry,
    WaveformConfig,
    channel_matrix,
    check_frequency_nonselective,
    extended_tx_gains,
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

WF = WaveformConfig(carrier_hz=60e9, n_subcarriers=16, bandwidth_hz=100e6, n_training=12)
ARR = ArrayConfig(n_rx=5, n_tx=7, l_rx=3, l_tx=4)


def test_waveform_derived_quantities():
    assert WF.sample_time == pytest.approx(1e-8)
    assert WF.symbol_time == pytest.approx(16e-8)
    assert WF.subcarrier_spacing == pytest.approx(1 / 16e-8)
    assert WF.wavelength == pytest.approx(SPEED_OF_LIGHT / 60e9)


def test_array_config_validation():
    with pytest.raises(ValueError):
        ArrayConfig(n_rx=4, n_tx=7, l_rx=2, l_tx=2)
    with pytest.raises(ValueError):
        ArrayConfig(n_rx=5, n_tx=7, l_rx=6, l_tx=2)


def test_path_params_validation():
    with pytest.raises(ValueError):
        PathParams(theta_rx=0.0, theta_tx=0.0, d=-1.0)
    with pytest.raises(ValueError):
        PathParams(theta_rx=2.0, theta_tx=0.0, d=1.0)
    p = PathParams(theta_rx=0.1, theta_tx=-0.2, d=3.0)
    assert p.tau == pytest.approx(3.0 / SPEED_OF_LIGHT)


def test_steering_entries():
    # symmetric index m in {-(n-1)/2 .. (n-1)/2}, entry exp(j*pi*m*sin(theta))
    theta = 0.3
    a = steering_rx(theta, 5)
    for i, m in enumerate([-2, -1, 0, 1, 2]):
        assert a[i] == pytest.approx(np.exp(1j * np.pi * m * np.sin(theta)))
    assert np.allclose(steering_tx(theta, 5), a)
    with pytest.raises(ValueError):
        steering_rx(theta, 4)


def test_steering_center_element_is_one():
    assert steering_rx(0.77, 9)[4] == pytest.approx(1.0)


def test_phase_vector_entries_and_periodicity():
    d = 23.0
    phi = phase_vector(d, WF)
    for k in range(WF.n_subcarriers):
        assert phi[k] == pytest.approx(
            np.exp(-2j * np.pi * k * d / (SPEED_OF_LIGHT * WF.symbol_time))
        )
    period = unambiguous_range(WF)
    assert np.allclose(phase_vector(d + period, WF), phi, atol=1e-10)


def test_random_beamformers_alphabet_and_determinism():
    bf = random_beamformers(ARR, 5)
    assert bf.F.shape == (7, 4) and bf.W.shape == (5, 3)
    assert np.all(np.isin(bf.F, [1, -1, 1j, -1j]))
    assert np.all(np.isin(bf.W, [1, -1, 1j, -1j]))
    bf2 = random_beamformers(ARR, 5)
    assert np.array_equal(bf.F, bf2.F) and np.array_equal(bf.W, bf2.W)
    assert not np.array_equal(bf.F, random_beamformers(ARR, 6).F)


def test_training_matrix_cyclic_identity():
    x = training_matrix(3, 8)
    assert x.shape == (3, 8)
    for t in range(8):
        col = np.zeros(3)
        col[t % 3] = 1.0
        assert np.array_equal(x[:, t], col)
    with pytest.raises(ValueError):
        training_matrix(5, 3)


def test_extended_tx_gains_matches_training_matrix():
    bf = random_beamformers(ARR, 1)
    theta = -0.4
    row = steering_tx(theta, 7).conj() @ bf.F  # length l_tx
    via_x = row @ training_matrix(4, 12)
    assert np.allclose(extended_tx_gains(theta, bf, ARR, 12), via_x)


def test_channel_matrix_single_path_outer_product():
    p = PathParams(theta_rx=0.2, theta_tx=-0.3, d=10.0, h=0.7 + 0.1j)
    k = 3
    H = channel_matrix([p], k, WF, ARR)
    phase = np.exp(-2j * np.pi * k * p.d / (SPEED_OF_LIGHT * WF.symbol_time))
    ref = p.h * phase * np.outer(
        steering_rx(p.theta_rx, 5), steering_tx(p.theta_tx, 7).conj()
    )
    assert np.allclose(H, ref)
    with pytest.raises(ValueError):
        channel_matrix([p], 99, WF, ARR)


def test_signal_tensor_matches_receive_equation():
    # entry (l, t, k) must equal [W^H H[k] F X[:, t]]_l
    paths = [
        PathParams(theta_rx=0.2, theta_tx=-0.3, d=10.0, h=1.0),
        PathParams(theta_rx=-0.5, theta_tx=0.9, d=17.0, h=0.5 - 0.2j),
    ]
    bf = random_beamformers(ARR, 2)
    y = signal_tensor(paths, bf, WF, ARR)
    x = training_matrix(ARR.l_tx, WF.n_training)
    for k in range(WF.n_subcarriers):
        H = channel_matrix(paths, k, WF, ARR)
        ref = bf.W.conj().T @ H @ bf.F @ x
        assert np.allclose(y[:, :, k], ref)


def test_signal_tensor_multilinear_rank():
    paths = [
        PathParams(theta_rx=0.2, theta_tx=-0.3, d=10.0, h=1.0),
        PathParams(theta_rx=-0.5, theta_tx=0.9, d=17.0, h=0.5),
    ]
    bf = random_beamformers(ARR, 3)
    y = signal_tensor(paths, bf, WF, ARR)
    for mode in (1, 2, 3):
        m = np.reshape(np.moveaxis(y, mode - 1, 0), (y.shape[mode - 1], -1))
        assert np.linalg.matrix_rank(m, tol=1e-10) == 2


def test_synthesize_measurement_exact_snr():
    paths = [PathParams(theta_rx=0.1, theta_tx=0.2, d=12.0, h=1.0)]
    bf = random_beamformers(ARR, 4)
    clean = synthesize_measurement(paths, bf, WF, ARR)
    assert np.allclose(clean, signal_tensor(paths, bf, WF, ARR))
    rng = np.random.default_rng(0)
    noisy = synthesize_measurement(paths, bf, WF, ARR, snr_db=17.0, rng=rng)
    snr = np.linalg.norm(clean) ** 2 / np.linalg.norm(noisy - clean) ** 2
    assert 10 * np.log10(snr) == pytest.approx(17.0, abs=1e-9)


def test_geometry_los_path():
    scene = SceneGeometry(q=(0.0, 0.0), p=(20.0, 0.0), reflectors=(None,))
    (p,) = geometry_to_params(scene)
    assert p.d == pytest.approx(20.0)
    assert p.theta_tx == pytest.approx(0.0)
    assert p.theta_rx == pytest.approx(0.0)  # bearing pi folded to broadside 0


def test_geometry_reflected_path():
    scene = SceneGeometry(q=(0.0, 0.0), p=(20.0, 0.0), reflectors=((10.0, 7.0),))
    (p,) = geometry_to_params(scene)
    assert p.d == pytest.approx(2 * np.hypot(10.0, 7.0))
    # departure bearing atan2(7,10); arrival direction rx->reflector folded
    assert p.theta_tx == pytest.approx(np.arctan2(7.0, 10.0))
    assert p.theta_rx == pytest.approx(np.arcsin(np.sin(np.arctan2(7.0, -10.0))))


def test_geometry_orientation_shift():
    scene = SceneGeometry(
        q=(0.0, 0.0), p=(20.0, 0.0), phi_tx=0.1, reflectors=((10.0, 7.0),)
    )
    (p,) = geometry_to_params(scene)
    assert p.theta_tx == pytest.approx(np.arctan2(7.0, 10.0) - 0.1)


def test_geometry_degenerate_positions():
    with pytest.raises(ValueError):
        geometry_to_params(SceneGeometry(q=(1.0, 1.0), p=(1.0, 1.0), reflectors=(None,)))
    with pytest.raises(ValueError):
        geometry_to_params(
            SceneGeometry(q=(0.0, 0.0), p=(2.0, 0.0), reflectors=((0.0, 0.0),))
        )


def test_frequency_nonselective_check():
    ok, ratio = check_frequency_nonselective(WF, ARR)
    lhs = ARR.n_rx * WF.n_subcarriers / (2 * WF.symbol_time)
    assert ratio == pytest.approx(lhs / WF.carrier_hz)
    assert ok == (lhs < WF.carrier_hz)
    # pathological waveform violating the bound
    bad = WaveformConfig(carrier_hz=1e6, n_subcarriers=1000, bandwidth_hz=1e9, n_training=4)
    assert not check_frequency_nonselective(bad, ARR)[0]
