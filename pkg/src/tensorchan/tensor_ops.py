"""Dense complex third-order tensor algebra.

Tensors are plain ``numpy.ndarray`` objects with ``ndim == 3``.  The frozen
linearization places element (i1, i2, i3) at flat offset
``i1 + I1*i2 + I1*I2*i3`` (column-major), so ``vec(t) == t.ravel(order="F")``.
Modes are numbered 1..3 throughout.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TuckerForm",
    "MsvdResult",
    "unfold",
    "fold",
    "mode_product",
    "tucker_reconstruct",
    "msvd",
    "mode_singular_values",
    "truncate",
    "frobenius_norm",
]

MODES = (1, 2, 3)


def _check_tensor(t):
    t = np.asarray(t)
    if t.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got ndim={t.ndim}")
    return t


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")


def unfold(t, mode):
    """Mode-n unfolding.

    Row index is i_mode; columns run over the remaining indices in increasing
    mode order with the earlier mode varying fastest.
    """
    t = _check_tensor(t)
    _check_mode(mode)
    return np.reshape(
        np.moveaxis(t, mode - 1, 0), (t.shape[mode - 1], -1), order="F"
    )


def fold(m, mode, dims):
    """Exact inverse of :func:`unfold`."""
    m = np.asarray(m)
    _check_mode(mode)
    dims = tuple(dims)
    if len(dims) != 3:
        raise ValueError("dims must have length 3")
    rest = [d for i, d in enumerate(dims) if i != mode - 1]
    if m.shape != (dims[mode - 1], int(np.prod(rest))):
        raise ValueError(
            f"matrix shape {m.shape} inconsistent with dims {dims} and mode {mode}"
        )
    stacked = m.reshape([dims[mode - 1]] + rest, order="F")
    return np.moveaxis(stacked, 0, mode - 1)


def mode_product(t, m, mode):
    """Multiply matrix ``m`` onto the tensor along ``mode``."""
    t = _check_tensor(t)
    m = np.asarray(m)
    _check_mode(mode)
    if m.ndim != 2 or m.shape[1] != t.shape[mode - 1]:
        raise ValueError(
            f"matrix shape {m.shape} does not match tensor dim "
            f"{t.shape[mode - 1]} along mode {mode}"
        )
    dims = list(t.shape)
    dims[mode - 1] = m.shape[0]
    return fold(m @ unfold(t, mode), mode, tuple(dims))


@dataclass(frozen=True)
class TuckerForm:
    """Core tensor plus one factor matrix per mode."""

    core: np.ndarray
    factors: tuple  # (V1, V2, V3), factor i is I_i x r_i

    def __post_init__(self):
        core = _check_tensor(self.core)
        if len(self.factors) != 3:
            raise ValueError("need exactly three factor matrices")
        for i, v in enumerate(self.factors):
            if v.ndim != 2 or v.shape[1] != core.shape[i]:
                raise ValueError(
                    f"factor {i + 1} shape {v.shape} does not match core dim "
                    f"{core.shape[i]}"
                )

    @property
    def dims(self):
        return tuple(v.shape[0] for v in self.factors)


@dataclass(frozen=True)
class MsvdResult:
    """Orthonormal Tucker form with per-mode singular values."""

    tucker: TuckerForm
    mode_singular_values: tuple  # three non-increasing real arrays


def tucker_reconstruct(f):
    """Evaluate core x1 V1 x2 V2 x3 V3."""
    t = f.core
    for mode, v in zip(MODES, f.factors):
        t = mode_product(t, v, mode)
    return t


def msvd(t):
    """Multilinear SVD via one matrix SVD per mode unfolding.

    Factors are economy-size left singular vector matrices; the core is the
    tensor multiplied by their conjugate transposes.  Reconstruction is exact
    up to rounding.
    """
    t = _check_tensor(t)
    if t.size == 0:
        raise ValueError("tensor is empty")
    factors = []
    svals = []
    for mode in MODES:
        try:
            u, s, _ = np.linalg.svd(unfold(t, mode), full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"SVD did not converge for mode {mode}"
            ) from exc
        factors.append(u)
        svals.append(s)
    core = t.astype(complex)
    for mode, u in zip(MODES, factors):
        core = mode_product(core, u.conj().T, mode)
    return MsvdResult(
        tucker=TuckerForm(core=core, factors=tuple(factors)),
        mode_singular_values=tuple(svals),
    )


def mode_singular_values(core, mode):
    """Frobenius norms of the core slabs along ``mode``."""
    core = _check_tensor(core)
    _check_mode(mode)
    return np.linalg.norm(unfold(core, mode), axis=1)


def truncate(r, ranks):
    """Keep the leading ranks[i] factor columns and the matching core corner."""
    ranks = tuple(int(x) for x in ranks)
    core = r.tucker.core
    for i, (rk, full) in enumerate(zip(ranks, core.shape)):
        if not 1 <= rk <= full:
            raise ValueError(
                f"rank {rk} out of range [1, {full}] along mode {i + 1}"
            )
    r1, r2, r3 = ranks
    return TuckerForm(
        core=core[:r1, :r2, :r3],
        factors=tuple(v[:, :rk] for v, rk in zip(r.tucker.factors, ranks)),
    )


def frobenius_norm(t):
    return float(np.linalg.norm(np.asarray(t)))
