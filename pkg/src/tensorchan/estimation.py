"""Channel parameter estimation from the measurement tensor.

Pipeline: multilinear SVD -> singular-value thresholding / rank estimation ->
per-subspace dictionary matching with greedy simultaneous sparse selection and
iterative grid refinement -> basis transformation of the core -> second MSVD
to link parameters to paths -> least-squares path gains.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import (
    extended_tx_gains,
    phase_vector,
    steering_rx,
    unambiguous_range,
)
from .tensor_ops import mode_product, msvd, truncate

__all__ = [
    "EstimatorConfig",
    "Dictionary",
    "SubspaceSolution",
    "PathEstimate",
    "estimate_ranks",
    "build_dictionary",
    "momp",
    "refine_dictionary",
    "transform_core",
    "link_paths",
    "estimate_gains",
    "estimate_channel_parameters",
    "reconstruct_channel",
]

# Numerical floor on the singular-value threshold: a rank-deficient unfolding
# has trailing values at rounding level whose median is itself tiny, so the
# pure median rule would count them.  1e-8 relative is far below any noise
# floor the estimator is expected to operate at.
RANK_FLOOR_REL = 1e-8


@dataclass(frozen=True)
class EstimatorConfig:
    threshold_multiplier: float = 2.858
    angle_grid_size: int = 128
    distance_grid_size: int = 64
    refine_iters: int = 5
    zoom: float = 0.125
    refine_points: int = 17
    distance_min: float = 0.0
    distance_span: float = None  # defaults to the unambiguous range c*T_ofdm

    def __post_init__(self):
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be >= 0")
        if not 0 < self.zoom < 1:
            raise ValueError("zoom must lie in (0, 1)")
        if self.refine_points < 2:
            raise ValueError("refine_points must be >= 2")

    def distance_bounds(self, waveform):
        span = self.distance_span
        d_ofdm = unambiguous_range(waveform)
        if span is None:
            span = d_ofdm
        if span > d_ofdm * (1 + 1e-9):
            raise ValueError(
                f"distance span {span} exceeds the unambiguous range {d_ofdm}"
            )
        return self.distance_min, self.distance_min + span


@dataclass(frozen=True)
class Dictionary:
    """Grid of candidate parameter values with their (normalized) atoms."""

    grid: np.ndarray  # real parameter values, length D
    atoms: np.ndarray  # matrix, column i is the atom for grid[i]

    def __post_init__(self):
        if self.grid.size == 0:
            raise ValueError("dictionary grid is empty")
        if self.atoms.shape[1] != self.grid.size:
            raise ValueError("atom count does not match grid size")


@dataclass(frozen=True)
class SubspaceSolution:
    selected_indices: list
    selected_values: np.ndarray
    reduced_atoms: np.ndarray
    transform: np.ndarray  # r x r matrix fitting U_s = reduced_atoms @ transform
    residual: float


@dataclass(frozen=True)
class PathEstimate:
    theta_rx: float
    theta_tx: float
    d: float
    h: complex
    core_energy: float


def estimate_ranks(result, multiplier):
    """Count singular values above multiplier * median per mode, clamped >= 1."""
    ranks = []
    for s in result.mode_singular_values:
        if s.size == 0:
            raise ValueError("empty singular-value sequence")
        thresh = max(multiplier * float(np.median(s)), RANK_FLOOR_REL * float(s.max()))
        ranks.append(max(1, int(np.sum(s > thresh))))
    return tuple(ranks)


def _raw_atom(kind, value, bf, waveform, arrays):
    if kind == "rx":
        return bf.W.conj().T @ steering_rx(value, arrays.n_rx)
    if kind == "tx":
        return extended_tx_gains(value, bf, arrays, waveform.n_training)
    if kind == "distance":
        return phase_vector(value, waveform)
    raise ValueError(f"unknown dictionary kind {kind!r}")


def build_dictionary(kind, grid, bf, waveform, arrays):
    """Candidate atoms for one subspace, each divided by its own v^H v."""
    grid = np.asarray(grid, float)
    if grid.size == 0:
        raise ValueError("dictionary grid is empty")
    atoms = np.column_stack(
        [_raw_atom(kind, v, bf, waveform, arrays) for v in grid]
    )
    atoms = atoms / np.sum(np.abs(atoms) ** 2, axis=0)
    return Dictionary(grid=grid, atoms=atoms)


def momp(targets, dictionary, sparsity):
    """Greedy simultaneous sparse selection of ``sparsity`` atoms.

    Each iteration correlates the residual matrix with every candidate atom,
    normalizing the atom's component orthogonal to the already-selected set so
    the statistic is scale-invariant and not biased toward directions the
    selected atoms already cover.  Coefficients are refit by least squares
    after every selection.
    """
    targets = np.atleast_2d(np.asarray(targets))
    atoms = dictionary.atoms
    n_atoms = atoms.shape[1]
    if not 1 <= sparsity <= n_atoms:
        raise ValueError(f"sparsity {sparsity} out of range [1, {n_atoms}]")
    if sparsity > targets.shape[0]:
        raise ValueError("sparsity exceeds the target row dimension")

    ref_norm = float(np.linalg.norm(atoms, axis=0).max())
    selected = []
    transform = None
    residual = targets.copy()
    for _ in range(sparsity):
        if selected:
            basis = atoms[:, selected]
            coeffs, _, rank, _ = np.linalg.lstsq(basis, atoms, rcond=None)
            ortho = atoms - basis @ coeffs
        else:
            ortho = atoms
        norms = np.linalg.norm(ortho, axis=0)
        usable = norms > 1e-12 * ref_norm
        if not np.any(usable):
            raise np.linalg.LinAlgError(
                "no atom has a usable component outside the selected span"
            )
        corr = np.full(n_atoms, -np.inf)
        corr[usable] = np.sum(
            np.abs((ortho[:, usable] / norms[usable]).conj().T @ residual) ** 2,
            axis=1,
        )
        corr[selected] = -np.inf
        selected.append(int(np.argmax(corr)))
        basis = atoms[:, selected]
        transform, _, rank, _ = np.linalg.lstsq(basis, targets, rcond=None)
        if rank < len(selected):
            raise np.linalg.LinAlgError(
                f"selected atom set {selected} is rank deficient"
            )
        residual = targets - basis @ transform
    return SubspaceSolution(
        selected_indices=selected,
        selected_values=dictionary.grid[selected],
        reduced_atoms=atoms[:, selected],
        transform=transform,
        residual=float(np.linalg.norm(residual)),
    )


def refine_dictionary(
    targets,
    dictionary,
    rebuild,
    sparsity,
    iters,
    zoom,
    points=17,
    bounds=None,
):
    """Iteratively zoom the dictionary grid around the selected atoms.

    ``rebuild(grid)`` constructs a new :class:`Dictionary` on an arbitrary
    grid.  After each of ``iters`` refinement rounds, the grid becomes the
    union of local sub-grids centered on each selected value with spacing
    shrunk by ``zoom``, plus the original coarse grid (so a selection that
    started a few coarse cells off can still jump back); a final selection
    runs on the last grid.
    """
    if iters < 0:
        raise ValueError("iters must be >= 0")
    coarse = dictionary.grid
    spacing = float(coarse[1] - coarse[0]) if coarse.size > 1 else 0.0
    solution = momp(targets, dictionary, sparsity)
    grid = coarse
    for _ in range(iters):
        if spacing == 0.0:
            break
        spacing *= zoom
        offsets = (np.arange(points) - (points - 1) // 2) * spacing
        grid = np.unique(
            np.concatenate([coarse] + [v + offsets for v in solution.selected_values])
        )
        if bounds is not None:
            lo, hi = bounds
            grid = grid[(grid >= lo) & (grid < hi)]
        dictionary = rebuild(grid)
        solution = momp(targets, dictionary, sparsity)
    return solution, grid


def transform_core(core_s, q1, q2, q3):
    """Apply the three basis-transformation matrices to the reduced core."""
    out = core_s
    for mode, q in zip((1, 2, 3), (q1, q2, q3)):
        out = mode_product(out, np.asarray(q), mode)
    return out


def link_paths(core_prime, n_paths, drop_multiplier=None):
    """Select the strongest interactions and link them to dictionary columns.

    Takes the MSVD of the transformed core, picks the ``n_paths`` largest
    core magnitudes, maps each to dictionary indices via the per-column
    argmax of the factor magnitudes, and collapses duplicates.  When
    ``drop_multiplier`` is given, entries weaker than
    drop_multiplier * median(|S|) are dropped (always keeping the strongest).

    Returns a list of (core_index_triple, dict_index_triple, energy).
    """
    result = msvd(core_prime)
    s = result.tucker.core
    factors = result.tucker.factors
    mags = np.abs(s)
    n_paths = min(int(n_paths), mags.size)
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    flat_order = np.argsort(mags.ravel(order="F"))[::-1][:n_paths]
    median_mag = float(np.median(mags))
    links = []
    seen = set()
    for rank_pos, flat in enumerate(flat_order):
        i1 = int(flat % s.shape[0])
        i2 = int((flat // s.shape[0]) % s.shape[1])
        i3 = int(flat // (s.shape[0] * s.shape[1]))
        energy = float(mags[i1, i2, i3])
        if (
            rank_pos > 0
            and drop_multiplier is not None
            and energy < drop_multiplier * median_mag
        ):
            continue
        dict_idx = tuple(
            int(np.argmax(np.abs(factors[m][:, i])))
            for m, i in enumerate((i1, i2, i3))
        )
        if dict_idx in seen:
            continue
        seen.add(dict_idx)
        links.append(((i1, i2, i3), dict_idx, energy))
    return links


def _measurement_columns(estimates, bf, waveform, arrays):
    cols = []
    for est in estimates:
        w = bf.W.conj().T @ steering_rx(est.theta_rx, arrays.n_rx)
        f = extended_tx_gains(est.theta_tx, bf, arrays, waveform.n_training)
        phi = phase_vector(est.d, waveform)
        cols.append(np.kron(phi, np.kron(f, w)))
    return np.column_stack(cols)


def estimate_gains(y, estimates, bf, waveform, arrays):
    """Least-squares path gains from the vectorized measurement."""
    if not estimates:
        raise ValueError("at least one path estimate is required")
    a = _measurement_columns(estimates, bf, waveform, arrays)
    gains, _, rank, _ = np.linalg.lstsq(a, np.asarray(y).ravel(order="F"), rcond=None)
    if rank < a.shape[1]:
        gram = np.abs(a.conj().T @ a)
        norms = np.sqrt(np.diag(gram))
        coh = gram / np.outer(norms, norms)
        np.fill_diagonal(coh, 0)
        i, j = np.unravel_index(np.argmax(coh), coh.shape)
        raise np.linalg.LinAlgError(
            f"gain system is rank deficient: estimates {i} and {j} are "
            f"nearly collinear (coherence {coh[i, j]:.6f})"
        )
    return gains


def estimate_channel_parameters(y, bf, waveform, arrays, config=None):
    """Full estimation pipeline; returns estimates sorted by core energy."""
    if config is None:
        config = EstimatorConfig()
    y = np.asarray(y)
    expected = (arrays.l_rx, waveform.n_training, waveform.n_subcarriers)
    if y.shape != expected:
        raise ValueError(f"measurement shape {y.shape} != expected {expected}")

    decomposition = msvd(y)
    ranks = estimate_ranks(decomposition, config.threshold_multiplier)
    reduced = truncate(decomposition, ranks)

    half_pi = np.pi / 2
    n_angle = config.angle_grid_size
    angle_grid = -half_pi + (np.arange(n_angle) + 0.5) * np.pi / n_angle
    d_lo, d_hi = config.distance_bounds(waveform)
    n_dist = config.distance_grid_size
    dist_grid = d_lo + np.arange(n_dist) * (d_hi - d_lo) / n_dist

    subspaces = []
    for mode, (kind, grid, bounds) in enumerate(
        [
            ("rx", angle_grid, (-half_pi, half_pi)),
            ("tx", angle_grid, (-half_pi, half_pi)),
            ("distance", dist_grid, (d_lo, d_hi)),
        ]
    ):
        rebuild = lambda g, kind=kind: build_dictionary(
            kind, g, bf, waveform, arrays
        )
        solution, _ = refine_dictionary(
            reduced.factors[mode],
            rebuild(grid),
            rebuild,
            sparsity=ranks[mode],
            iters=config.refine_iters,
            zoom=config.zoom,
            points=config.refine_points,
            bounds=bounds,
        )
        subspaces.append(solution)

    core_prime = transform_core(
        reduced.core, *(s.transform for s in subspaces)
    )
    links = link_paths(
        core_prime, max(ranks), drop_multiplier=config.threshold_multiplier
    )

    drafts = [
        PathEstimate(
            theta_rx=float(subspaces[0].selected_values[m1]),
            theta_tx=float(subspaces[1].selected_values[m2]),
            d=float(subspaces[2].selected_values[m3]),
            h=0j,
            core_energy=energy,
        )
        for _, (m1, m2, m3), energy in links
    ]
    gains = estimate_gains(y, drafts, bf, waveform, arrays)
    estimates = [
        PathEstimate(
            theta_rx=e.theta_rx,
            theta_tx=e.theta_tx,
            d=e.d,
            h=complex(g),
            core_energy=e.core_energy,
        )
        for e, g in zip(drafts, gains)
    ]
    estimates.sort(key=lambda e: e.core_energy, reverse=True)
    return estimates


def reconstruct_channel(estimates, k, waveform, arrays):
    """Channel matrix at subcarrier k rebuilt from the estimates."""
    from .channel import PathParams, channel_matrix

    paths = [
        PathParams(theta_rx=e.theta_rx, theta_tx=e.theta_tx, d=e.d, h=e.h)
        for e in estimates
    ]
    if not paths:
        return np.zeros((arrays.n_rx, arrays.n_tx), complex)
    return channel_matrix(paths, k, waveform, arrays)
