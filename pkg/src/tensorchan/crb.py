"""Cramer-Rao lower bounds for the path parameters.

The vectorized noiseless measurement is linear-Gaussian in the path gains and
smooth in the angles/distances; the Fisher information follows from the
Jacobian of the mean.  Parameter ordering is
[theta_rx_1..N, theta_tx_1..N, d_1..N, h_1..N].  Gains are treated as real
scalars by default; set ``complex_gains=True`` to split them into real and
imaginary components (5*N_p parameters).
"""

from dataclasses import dataclass

import numpy as np

from .channel import (
    SPEED_OF_LIGHT,
    extended_tx_gains,
    phase_vector,
    steering_rx,
    steering_tx,
)

__all__ = [
    "CrbReport",
    "khatri_rao",
    "commutation_matrix",
    "steering_derivative",
    "phase_derivative",
    "signal_mean",
    "jacobian",
    "crb_bounds",
]


def khatri_rao(a, b):
    """Column-wise Kronecker product."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"column counts differ: {a.shape[1]} vs {b.shape[1]}"
        )
    return (a[:, None, :] * b[None, :, :]).reshape(
        a.shape[0] * b.shape[0], a.shape[1]
    )


def _commutation_perm(m, n):
    # perm[q] = source index, so that (K @ x) == x[perm]
    return np.arange(m * n).reshape((m, n), order="F").ravel(order="C")


def commutation_matrix(m, n):
    """Permutation K with K @ vec(S) = vec(S^T) for every m x n matrix S."""
    if m < 1 or n < 1:
        raise ValueError("dimensions must be >= 1")
    return np.eye(m * n)[_commutation_perm(m, n)]


def steering_derivative(theta, n):
    """d/dtheta of the ULA steering vector."""
    m = np.arange(n) - (n - 1) / 2
    return 1j * np.pi * m * np.cos(theta) * steering_rx(theta, n)


def phase_derivative(d, waveform):
    """d/dd of the subcarrier phase signature."""
    k = np.arange(waveform.n_subcarriers)
    scale = -2j * np.pi * k / (SPEED_OF_LIGHT * waveform.symbol_time)
    return scale * phase_vector(d, waveform)


def _factor_matrices(paths, bf, waveform, arrays):
    wa = np.column_stack(
        [bf.W.conj().T @ steering_rx(p.theta_rx, arrays.n_rx) for p in paths]
    )
    fa = np.column_stack(
        [extended_tx_gains(p.theta_tx, bf, arrays, waveform.n_training) for p in paths]
    )
    phi = np.column_stack([phase_vector(p.d, waveform) for p in paths])
    h = np.array([p.h for p in paths], complex)
    return wa, fa, phi, h


def signal_mean(paths, bf, waveform, arrays):
    """Noiseless vectorized measurement (Phi kr F_a kr W_a) h."""
    wa, fa, phi, h = _factor_matrices(paths, bf, waveform, arrays)
    return khatri_rao(phi, khatri_rao(fa, wa)) @ h


def jacobian(paths, bf, waveform, arrays, complex_gains=False):
    """Jacobian of the vectorized mean with respect to the parameter vector.

    Built block-wise from the Khatri-Rao/Kronecker rearrangements of the
    mean, with the commutation permutation matching the column-major tensor
    linearization.  Columns follow the parameter ordering; with
    ``complex_gains`` the gain block is split into Re and Im columns.
    """
    wa, fa, phi, h = _factor_matrices(paths, bf, waveform, arrays)
    n_p = len(paths)
    l_rx = arrays.l_rx
    n_t = waveform.n_training
    n_s = waveform.n_subcarriers
    phi_p = phi * h  # gains absorbed onto the subcarrier factor

    d_wa = np.column_stack(
        [bf.W.conj().T @ steering_derivative(p.theta_rx, arrays.n_rx) for p in paths]
    )
    d_fa = np.column_stack(
        [
            (steering_derivative(p.theta_tx, arrays.n_tx).conj() @ bf.F)[
                np.arange(n_t) % arrays.l_tx
            ]
            for p in paths
        ]
    )
    d_phi = np.column_stack([phase_derivative(p.d, waveform) for p in paths])

    def block_cols(width, cols):
        out = np.zeros((width * n_p, n_p), complex)
        for n, c in enumerate(cols.T):
            out[n * width : (n + 1) * width, n] = c
        return out

    # d vec(X) / d theta_rx: (Phi' kr Fa) x I acting on d vec(Wa)
    b1 = np.kron(khatri_rao(phi_p, fa), np.eye(l_rx))
    j_rx = b1 @ block_cols(l_rx, d_wa)

    # d vec(X) / d theta_tx: permuted (Wa kr Phi') x I acting on d vec(Fa)
    perm2 = _commutation_perm(n_t * n_s, l_rx)
    b2 = np.kron(khatri_rao(wa, phi_p), np.eye(n_t))
    j_tx = (b2 @ block_cols(n_t, d_fa))[perm2]

    # d vec(X) / d d and / d h: permuted (Fa kr Wa) x I acting on vec(Phi')
    perm3 = _commutation_perm(n_s, l_rx * n_t)
    b3 = np.kron(khatri_rao(fa, wa), np.eye(n_s))
    j_d = (b3 @ block_cols(n_s, d_phi * h))[perm3]
    j_h = (b3 @ khatri_rao(np.eye(n_p), phi))[perm3]

    if complex_gains:
        return np.column_stack([j_rx, j_tx, j_d, j_h, 1j * j_h])
    return np.column_stack([j_rx, j_tx, j_d, j_h])


@dataclass(frozen=True)
class CrbReport:
    fim: np.ndarray
    bounds: np.ndarray
    sigma2: float


def crb_bounds(paths, bf, waveform, arrays, sigma2, complex_gains=False):
    """Fisher information and per-parameter RMSE lower bounds.

    ``sigma2`` is the noise variance per complex measurement entry; for real
    parameters of a circular complex Gaussian model the information is
    (2/sigma2) Re{J^H J}.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    j = jacobian(paths, bf, waveform, arrays, complex_gains=complex_gains)
    fim = (2.0 / sigma2) * np.real(j.conj().T @ j)
    eigvals, eigvecs = np.linalg.eigh(fim)
    scale = float(np.abs(eigvals).max()) if fim.size else 0.0
    null = eigvals < 1e-12 * scale
    if np.any(null):
        directions = [np.argmax(np.abs(eigvecs[:, i])) for i in np.where(null)[0]]
        raise np.linalg.LinAlgError(
            "Fisher information is singular; near-null parameter directions "
            f"(dominant indices): {directions}"
        )
    cov = np.linalg.inv(fim)
    return CrbReport(fim=fim, bounds=np.sqrt(np.diag(cov)), sigma2=float(sigma2))
