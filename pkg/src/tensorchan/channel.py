"""mmWave MIMO-OFDM channel synthesis with hybrid beamforming.

Builds ground-truth channels and noisy measurement tensors from waveform
configuration, array geometry, per-path parameters and random precoder /
combiner matrices.  The measurement tensor has shape
(L_rx, N_T, N_s) = (data streams, training symbols, subcarriers).
"""

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299792458.0

QPSK_ALPHABET = np.array([1, -1, 1j, -1j])

__all__ = [
    "SPEED_OF_LIGHT",
    "WaveformConfig",
    "ArrayConfig",
    "PathParams",
    "SceneGeometry",
    "BeamformingMatrices",
    "geometry_to_params",
    "steering_rx",
    "steering_tx",
    "phase_vector",
    "random_beamformers",
    "training_matrix",
    "extended_tx_gains",
    "channel_matrix",
    "synthesize_measurement",
    "check_frequency_nonselective",
    "unambiguous_range",
]


@dataclass(frozen=True)
class WaveformConfig:
    """OFDM waveform parameters.

    Derived quantities (sampling interval, symbol duration, subcarrier
    spacing) follow from carrier/bandwidth/subcarrier-count, so the internal
    identities T_s = 1/B, T_ofdm = N_s*T_s, delta_f = 1/T_ofdm hold by
    construction.
    """

    carrier_hz: float
    n_subcarriers: int
    bandwidth_hz: float
    n_training: int

    def __post_init__(self):
        if self.carrier_hz <= 0 or self.bandwidth_hz <= 0:
            raise ValueError("carrier and bandwidth must be positive")
        if self.n_subcarriers < 1 or self.n_training < 1:
            raise ValueError("subcarrier and training counts must be >= 1")

    @property
    def sample_time(self):
        return 1.0 / self.bandwidth_hz

    @property
    def symbol_time(self):
        return self.n_subcarriers * self.sample_time

    @property
    def subcarrier_spacing(self):
        return 1.0 / self.symbol_time

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.carrier_hz


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear arrays at both link ends, lambda/2 element spacing."""

    n_rx: int
    n_tx: int
    l_rx: int
    l_tx: int

    def __post_init__(self):
        if self.n_rx % 2 == 0 or self.n_tx % 2 == 0:
            raise ValueError("antenna counts must be odd")
        if not (1 <= self.l_rx <= self.n_rx):
            raise ValueError("l_rx must satisfy 1 <= l_rx <= n_rx")
        if not (1 <= self.l_tx <= self.n_tx):
            raise ValueError("l_tx must satisfy 1 <= l_tx <= n_tx")


@dataclass(frozen=True)
class PathParams:
    """One propagation path: AOA, AOD, travelled distance, complex gain."""

    theta_rx: float
    theta_tx: float
    d: float
    h: complex = None

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("path distance must be positive")
        half_pi = np.pi / 2
        for name, th in (("theta_rx", self.theta_rx), ("theta_tx", self.theta_tx)):
            if not -half_pi < th < half_pi:
                raise ValueError(f"{name}={th} outside the broadside sector (-pi/2, pi/2)")

    @property
    def tau(self):
        return self.d / SPEED_OF_LIGHT


@dataclass(frozen=True)
class SceneGeometry:
    """Transmitter/receiver positions, array orientations and reflectors.

    ``reflectors`` holds one entry per path: an (x, y) reflection point, or
    None for the line-of-sight path (equivalent to a reflector anywhere on
    the segment between the arrays).
    """

    q: tuple  # transmitter position (x, y) in meters
    p: tuple  # receiver position (x, y) in meters
    phi_tx: float = 0.0
    phi_rx: float = 0.0
    reflectors: tuple = field(default_factory=tuple)


def _broadside_angle(vec, phi):
    # Front/back is indistinguishable for a linear array; fold every bearing
    # into (-pi/2, pi/2) preserving sin(theta).
    bearing = np.arctan2(vec[1], vec[0]) - phi
    return float(np.arcsin(np.sin(bearing)))


def geometry_to_params(scene):
    """Convert scene geometry to per-path parameters (gains left unset)."""
    q = np.asarray(scene.q, float)
    p = np.asarray(scene.p, float)
    direct = p - q
    if np.linalg.norm(direct) == 0:
        raise ValueError("transmitter and receiver positions coincide")
    paths = []
    for r in scene.reflectors:
        if r is None:
            d = float(np.linalg.norm(direct))
            to_ref = direct
            from_ref = -direct
        else:
            r = np.asarray(r, float)
            leg1 = r - q
            leg2 = p - r
            if np.linalg.norm(leg1) == 0 or np.linalg.norm(leg2) == 0:
                raise ValueError("reflector coincides with an array position")
            d = float(np.linalg.norm(leg1) + np.linalg.norm(leg2))
            to_ref = leg1
            from_ref = r - p
        paths.append(
            PathParams(
                theta_rx=_broadside_angle(from_ref, scene.phi_rx),
                theta_tx=_broadside_angle(to_ref, scene.phi_tx),
                d=d,
            )
        )
    return paths


def _steering(theta, n):
    if n % 2 == 0:
        raise ValueError("antenna count must be odd")
    m = np.arange(n) - (n - 1) / 2
    return np.exp(1j * np.pi * m * np.sin(theta))


def steering_rx(theta, n):
    """Receive steering vector for a half-wavelength-spaced ULA."""
    return _steering(theta, n)


def steering_tx(theta, n):
    """Transmit steering vector; same form as :func:`steering_rx`."""
    return _steering(theta, n)


def phase_vector(d, waveform):
    """Per-subcarrier phase signature of path distance ``d``."""
    k = np.arange(waveform.n_subcarriers)
    return np.exp(-2j * np.pi * k * d / (SPEED_OF_LIGHT * waveform.symbol_time))


@dataclass(frozen=True)
class BeamformingMatrices:
    F: np.ndarray  # N_tx x L_tx precoder
    W: np.ndarray  # N_rx x L_rx combiner

    def __post_init__(self):
        if not (np.all(np.isfinite(self.F)) and np.all(np.isfinite(self.W))):
            raise ValueError("beamforming matrices contain non-finite entries")


def random_beamformers(arrays, seed):
    """Quaternary precoder/combiner with i.i.d. entries from {1,-1,i,-i}."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    F = QPSK_ALPHABET[rng.integers(4, size=(arrays.n_tx, arrays.l_tx))]
    W = QPSK_ALPHABET[rng.integers(4, size=(arrays.n_rx, arrays.l_rx))]
    return BeamformingMatrices(F=F, W=W)


def training_matrix(l_tx, n_training):
    """L_tx x N_T training data: identity tiled cyclically along time."""
    if n_training < l_tx:
        raise ValueError("training length must be at least the stream count")
    x = np.zeros((l_tx, n_training))
    x[np.arange(n_training) % l_tx, np.arange(n_training)] = 1.0
    return x


def extended_tx_gains(theta_tx, bf, arrays, n_training):
    """Row a_tx(theta)^H F pushed through the training matrix, length N_T."""
    f_a = steering_tx(theta_tx, arrays.n_tx).conj() @ bf.F
    return f_a[np.arange(n_training) % arrays.l_tx]


def channel_matrix(paths, k, waveform, arrays):
    """N_rx x N_tx channel at subcarrier k."""
    if not 0 <= k < waveform.n_subcarriers:
        raise ValueError(f"subcarrier index {k} out of range")
    H = np.zeros((arrays.n_rx, arrays.n_tx), complex)
    for path in paths:
        phase = np.exp(
            -2j * np.pi * k * path.d / (SPEED_OF_LIGHT * waveform.symbol_time)
        )
        H += path.h * phase * np.outer(
            steering_rx(path.theta_rx, arrays.n_rx),
            steering_tx(path.theta_tx, arrays.n_tx).conj(),
        )
    return H


def signal_tensor(paths, bf, waveform, arrays):
    """Noiseless measurement tensor, rank-N_p Tucker sum of path outer products."""
    if waveform.n_training < arrays.l_tx:
        raise ValueError("n_training must be at least l_tx")
    y = np.zeros((arrays.l_rx, waveform.n_training, waveform.n_subcarriers), complex)
    for path in paths:
        w_a = bf.W.conj().T @ steering_rx(path.theta_rx, arrays.n_rx)
        f_ext = extended_tx_gains(path.theta_tx, bf, arrays, waveform.n_training)
        phi = phase_vector(path.d, waveform)
        y += path.h * np.einsum("i,j,k->ijk", w_a, f_ext, phi)
    return y


def synthesize_measurement(paths, bf, waveform, arrays, snr_db=None, rng=None):
    """Signal tensor plus circular complex Gaussian noise at an exact SNR.

    ``snr_db=None`` returns the noiseless tensor.  The noise draw is rescaled
    so the realized norm ratio matches the request exactly.
    """
    y = signal_tensor(paths, bf, waveform, arrays)
    if snr_db is None:
        return y
    if rng is None:
        rng = np.random.default_rng()
    noise = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
    target = np.linalg.norm(y) / 10 ** (snr_db / 20)
    noise *= target / np.linalg.norm(noise)
    return y + noise


def check_frequency_nonselective(waveform, arrays):
    """Channel-dispersion validity check N_rx*N_s/(2*T_ofdm) < f_c.

    Returns (ok, ratio) where ratio is the left-hand side over the carrier.
    """
    lhs = arrays.n_rx * waveform.n_subcarriers / (2 * waveform.symbol_time)
    return lhs < waveform.carrier_hz, lhs / waveform.carrier_hz


def unambiguous_range(waveform):
    """Distance period of the subcarrier phase signature, c*T_ofdm."""
    return SPEED_OF_LIGHT * waveform.symbol_time
