"""Monte-Carlo experiment runner.

Executes seeded sweeps over SNR, training length or subcarrier count,
accumulates per-parameter RMSE against the ground-truth paths, evaluates the
CRB at the identical noise level, and emits CSV results plus a run manifest.
"""

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import yaml
from scipy.optimize import linear_sum_assignment

from .channel import (
    ArrayConfig,
    PathParams,
    SceneGeometry,
    WaveformConfig,
    geometry_to_params,
    random_beamformers,
    signal_tensor,
    synthesize_measurement,
    check_frequency_nonselective,
    unambiguous_range,
)
from .crb import crb_bounds
from .estimation import EstimatorConfig, estimate_channel_parameters

__all__ = [
    "Scenario",
    "SweepResult",
    "load_scenario",
    "default_scenario",
    "run_scenario",
    "compute_rmse",
    "emit_results",
]

PARAM_NAMES = ("theta_rx", "theta_tx", "distance", "gain")

WORKER_ENV_VAR = "TENSORCHAN_WORKERS"


@dataclass(frozen=True)
class Scenario:
    carrier_hz: float
    bandwidth_hz: float
    arrays: ArrayConfig
    scene: SceneGeometry
    gains: tuple
    estimator: EstimatorConfig
    snr_db_list: tuple
    n_t_list: tuple
    n_s_list: tuple
    n_sim: int
    seed: int

    def __post_init__(self):
        axes = [self.snr_db_list, self.n_t_list, self.n_s_list]
        if sum(len(a) > 1 for a in axes) > 1:
            raise ValueError("at most one sweep axis may have length > 1")
        if any(len(a) == 0 for a in axes):
            raise ValueError("every sweep axis needs at least one value")
        if self.n_sim < 1:
            raise ValueError("n_sim must be >= 1")
        if len(self.gains) != len(self.scene.reflectors):
            raise ValueError("one gain per scene path is required")

    @property
    def sweep_axis(self):
        if len(self.snr_db_list) > 1:
            return "snr_db"
        if len(self.n_t_list) > 1:
            return "n_training"
        return "n_subcarriers"

    def sweep_points(self):
        """Yield (sweep_value, waveform, snr_db) per sweep point."""
        for snr in self.snr_db_list:
            for n_t in self.n_t_list:
                for n_s in self.n_s_list:
                    wf = WaveformConfig(
                        carrier_hz=self.carrier_hz,
                        n_subcarriers=int(n_s),
                        bandwidth_hz=self.bandwidth_hz,
                        n_training=int(n_t),
                    )
                    value = {
                        "snr_db": snr,
                        "n_training": n_t,
                        "n_subcarriers": n_s,
                    }[self.sweep_axis]
                    yield value, wf, snr

    def true_paths(self):
        paths = geometry_to_params(self.scene)
        return [replace(p, h=complex(g)) for p, g in zip(paths, self.gains)]

    def to_dict(self):
        return {
            "carrier_hz": self.carrier_hz,
            "bandwidth_hz": self.bandwidth_hz,
            "arrays": {
                "n_rx": self.arrays.n_rx,
                "n_tx": self.arrays.n_tx,
                "l_rx": self.arrays.l_rx,
                "l_tx": self.arrays.l_tx,
            },
            "scene": {
                "tx_position": list(self.scene.q),
                "rx_position": list(self.scene.p),
                "orientation_tx": self.scene.phi_tx,
                "orientation_rx": self.scene.phi_rx,
                "paths": [
                    {"los": True} if r is None else {"reflector": list(r)}
                    for r in self.scene.reflectors
                ],
            },
            "gains": [[float(np.real(g)), float(np.imag(g))] for g in self.gains],
            "estimator": {
                "threshold_multiplier": self.estimator.threshold_multiplier,
                "angle_grid_size": self.estimator.angle_grid_size,
                "distance_grid_size": self.estimator.distance_grid_size,
                "refine_iters": self.estimator.refine_iters,
                "zoom": self.estimator.zoom,
                "refine_points": self.estimator.refine_points,
                "distance_min": self.estimator.distance_min,
                "distance_span": self.estimator.distance_span,
            },
            "sweep": {
                "snr_db": list(self.snr_db_list),
                "n_training": [int(v) for v in self.n_t_list],
                "n_subcarriers": [int(v) for v in self.n_s_list],
            },
            "n_sim": self.n_sim,
            "seed": self.seed,
        }


def _as_gain(value):
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


def scenario_from_dict(data):
    arrays = ArrayConfig(**data["arrays"])
    scene_data = data["scene"]
    reflectors = tuple(
        None if p.get("los") else tuple(p["reflector"]) for p in scene_data["paths"]
    )
    scene = SceneGeometry(
        q=tuple(scene_data["tx_position"]),
        p=tuple(scene_data["rx_position"]),
        phi_tx=float(scene_data.get("orientation_tx", 0.0)),
        phi_rx=float(scene_data.get("orientation_rx", 0.0)),
        reflectors=reflectors,
    )
    est_data = data.get("estimator", {})
    estimator = EstimatorConfig(**est_data)
    sweep = data.get("sweep", {})
    return Scenario(
        carrier_hz=float(data["carrier_hz"]),
        bandwidth_hz=float(data["bandwidth_hz"]),
        arrays=arrays,
        scene=scene,
        gains=tuple(_as_gain(g) for g in data["gains"]),
        estimator=estimator,
        snr_db_list=tuple(sweep.get("snr_db", [30.0])),
        n_t_list=tuple(sweep.get("n_training", [50])),
        n_s_list=tuple(sweep.get("n_subcarriers", [50])),
        n_sim=int(data.get("n_sim", 1)),
        seed=int(data.get("seed", 0)),
    )


def load_scenario(path):
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return scenario_from_dict(data)


def default_scenario(**overrides):
    """Two-path reference scene: LOS at 20 m plus one reflector at (10, 7)."""
    data = {
        "carrier_hz": 60e9,
        "bandwidth_hz": 100e6,
        "arrays": {"n_rx": 11, "n_tx": 21, "l_rx": 8, "l_tx": 8},
        "scene": {
            "tx_position": [0.0, 0.0],
            "rx_position": [20.0, 0.0],
            "orientation_tx": 0.0,
            "orientation_rx": 0.0,
            "paths": [{"los": True}, {"reflector": [10.0, 7.0]}],
        },
        "gains": [1.0, 0.5],
        "sweep": {"snr_db": [50.0], "n_training": [50], "n_subcarriers": [50]},
        "n_sim": 1,
        "seed": 0,
    }
    data.update(overrides)
    return scenario_from_dict(data)


@dataclass
class SweepResult:
    sweep_axis: str
    sweep_values: list
    # keyed [point][param_name][path_index]
    rmse: list
    crb: list
    detection_rate: list
    n_sim: int
    scenario: Scenario


def compute_rmse(errors):
    """Root of the mean squared error over accumulated trials."""
    errors = np.asarray(errors, float)
    if errors.size == 0:
        raise ValueError("no accumulated errors")
    return float(np.sqrt(np.mean(errors**2)))


def _match_paths(estimates, truths, theta_span, dist_span):
    """Minimum-cost assignment of estimates to true paths.

    Each parameter distance is normalized by its dictionary span.  Returns a
    list with, per true path, the matched estimate (or None).
    """
    if not estimates:
        return [None] * len(truths)
    cost = np.zeros((len(truths), len(estimates)))
    for i, t in enumerate(truths):
        for j, e in enumerate(estimates):
            cost[i, j] = (
                ((t.theta_rx - e.theta_rx) / theta_span) ** 2
                + ((t.theta_tx - e.theta_tx) / theta_span) ** 2
                + ((t.d - e.d) / dist_span) ** 2
            )
    rows, cols = linear_sum_assignment(cost)
    matched = [None] * len(truths)
    for i, j in zip(rows, cols):
        matched[i] = estimates[j]
    return matched


def _run_trial(scenario, wf, snr_db, trial):
    rng = np.random.default_rng(scenario.seed ^ trial)
    bf = random_beamformers(scenario.arrays, rng)
    truths = scenario.true_paths()
    y = synthesize_measurement(truths, bf, wf, scenario.arrays, snr_db, rng)
    estimates = estimate_channel_parameters(
        y, bf, wf, scenario.arrays, scenario.estimator
    )

    signal_power = np.linalg.norm(signal_tensor(truths, bf, wf, scenario.arrays)) ** 2
    sigma2 = signal_power / (10 ** (snr_db / 10) * y.size)
    try:
        crb = crb_bounds(truths, bf, wf, scenario.arrays, sigma2).bounds
    except np.linalg.LinAlgError:
        crb = None

    d_lo, d_hi = scenario.estimator.distance_bounds(wf)
    matched = _match_paths(estimates, truths, np.pi, d_hi - d_lo)
    detected = len(estimates) >= len(truths) and all(m is not None for m in matched)
    errors = None
    if detected:
        errors = np.array(
            [
                [
                    m.theta_rx - t.theta_rx,
                    m.theta_tx - t.theta_tx,
                    m.d - t.d,
                    abs(m.h - t.h),
                ]
                for t, m in zip(truths, matched)
            ]
        )
    return detected, errors, crb


def _trial_star(args):
    return _run_trial(*args)


def run_scenario(scenario):
    """Run the full sweep; deterministic for a given scenario and seed."""
    workers = int(os.environ.get(WORKER_ENV_VAR, "1"))
    n_p = len(scenario.gains)
    sweep_values, rmse_rows, crb_rows, det_rows = [], [], [], []
    for value, wf, snr_db in scenario.sweep_points():
        jobs = [(scenario, wf, snr_db, t) for t in range(scenario.n_sim)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_trial_star, jobs))
        else:
            results = [_run_trial(*j) for j in jobs]

        det = [r[0] for r in results]
        err_stack = [r[1] for r in results if r[1] is not None]
        crb_stack = [r[2] for r in results if r[2] is not None]

        rmse = {name: [float("nan")] * n_p for name in PARAM_NAMES}
        if err_stack:
            stacked = np.stack(err_stack)  # (trials, paths, 4)
            for pi, name in enumerate(PARAM_NAMES):
                for path in range(n_p):
                    rmse[name][path] = compute_rmse(stacked[:, path, pi])
        crb = {name: [float("nan")] * n_p for name in PARAM_NAMES}
        if crb_stack:
            stacked = np.stack(crb_stack)  # (trials, 4*n_p)
            mean_sq = np.sqrt(np.mean(stacked**2, axis=0))
            for pi, name in enumerate(PARAM_NAMES):
                for path in range(n_p):
                    crb[name][path] = float(mean_sq[pi * n_p + path])

        sweep_values.append(value)
        rmse_rows.append(rmse)
        crb_rows.append(crb)
        det_rows.append(float(np.mean(det)))
    return SweepResult(
        sweep_axis=scenario.sweep_axis,
        sweep_values=sweep_values,
        rmse=rmse_rows,
        crb=crb_rows,
        detection_rate=det_rows,
        n_sim=scenario.n_sim,
        scenario=scenario,
    )


def emit_results(result, out_dir):
    """Write results.csv (7 fixed columns) and a reproducibility manifest."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "results.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "sweep_value",
                "parameter_name",
                "path_index",
                "rmse",
                "crb",
                "detection_rate",
                "n_sim",
            ]
        )
        for i, value in enumerate(result.sweep_values):
            for name in PARAM_NAMES:
                for path in range(len(result.scenario.gains)):
                    writer.writerow(
                        [
                            repr(float(value)),
                            name,
                            path,
                            repr(result.rmse[i][name][path]),
                            repr(result.crb[i][name][path]),
                            repr(result.detection_rate[i]),
                            result.n_sim,
                        ]
                    )
    manifest_path = os.path.join(out_dir, "manifest.yaml")
    with open(manifest_path, "w") as fh:
        yaml.safe_dump(result.scenario.to_dict(), fh, sort_keys=False)
    return csv_path, manifest_path


def describe_waveform(scenario):
    """Validity diagnostics for every sweep point (dispersion + range)."""
    rows = []
    for value, wf, _ in scenario.sweep_points():
        ok, ratio = check_frequency_nonselective(wf, scenario.arrays)
        rows.append(
            {
                "sweep_value": value,
                "nonselective_ok": ok,
                "dispersion_ratio": ratio,
                "unambiguous_range_m": unambiguous_range(wf),
            }
        )
    return rows
