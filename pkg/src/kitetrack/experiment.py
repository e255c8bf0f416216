"""Closed-loop flights, turbulence sweeps and noise studies.

Every run owns its random generators, which are derived from the
configured seed, so a ``(config, seed)`` pair always reproduces the same
series bit for bit. Outputs are one CSV row per control tick plus a JSON
manifest.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import RunConfig, make_controller
from .controller import lyapunov_monitors
from .dynamics import KiteState, constrained_acceleration, read_sensors, step, turbulence_step
from .errors import GeometryError
from .sphere import geodesic_distance, point_coords

#: Column order of ``series.csv``.
SERIES_COLUMNS = (
    "t", "r_x", "r_y", "r_z", "gamma_x", "gamma_y", "gamma_z", "gamma_t_x", "gamma_t_y", "gamma_t_z",
    "v", "w", "v_t", "w_t", "theta", "theta_t", "e", "e_m", "zeta", "u", "du", "du_applied", "B_hat",
    "s_c", "W", "J_running", "tether_len", "V_m",
)

SWEEP_SIGMAS = (0.0, 0.5, 1.0)
SWEEP_DELTAS = (0.1, 0.5, 1.0)


@dataclass
class RunMetrics:
    J: float
    J_defined: bool
    max_abs_e: float
    max_abs_e_second_half: float
    final_V_m: float
    weight_drift: list
    cycle_count: float
    duration_s: float
    ticks: int
    limited_ticks: int
    singular_ticks: int
    aborted: bool
    abort_reason: str = ""

    def as_dict(self) -> dict:
        return {k: _json_value(v) for k, v in self.__dict__.items()}


@dataclass
class RunResult:
    config: RunConfig
    metrics: RunMetrics
    series: dict
    weight_times: np.ndarray
    weights: np.ndarray  # (samples, 3, n_basis), logged once per second

    @property
    def aborted(self) -> bool:
        return self.metrics.aborted


def run_seeds(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent ``(turbulence, sensor noise)`` generators for one run."""
    turb, noise = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(turb), np.random.default_rng(noise)


def initial_state(config: RunConfig, reference) -> KiteState:
    """Kite on the reference start point, flying along the reference tangent."""
    gamma0, tangent0, _ = reference.lookup(0.0)
    r = config.tether_length_m * gamma0
    r_dot = config.initial_speed_m_s * tangent0 + config.tether_rate_m_s * gamma0
    return KiteState(r, r_dot, 0.0, config.tether_length_m, config.tether_rate_m_s)


def mean_tracking_error(distances) -> float:
    """Time average of ``|gamma - gamma_t|`` over equal ticks."""
    d = np.asarray(distances, dtype=float)
    return float(d.mean()) if d.size else math.nan


def combine_tracking_errors(parts: Sequence[tuple[float, float]]) -> float:
    """``J`` of concatenated runs from ``(J, duration)`` pairs."""
    total = sum(T for _, T in parts)
    return sum(J * T for J, T in parts) / total


def run_single(config: RunConfig) -> RunResult:
    """Fly one closed-loop simulation.

    Geometric degeneracies end the run early. The reason is recorded and the
    series up to that tick are kept.
    """
    params = config.kite_params()
    reference = config.reference()
    w_true = config.true_weights(params)
    gains = config.gains()
    ctrl = make_controller(config, params, reference)
    noise = config.noise_levels()
    turb_rng, noise_rng = run_seeds(config.seed)
    wind = np.array([config.wind_speed_m_s, 0.0, 0.0])
    dt = config.dt_s
    n_ticks = int(round(config.duration_s / dt))
    log_every = max(1, int(round(1.0 / dt)))
    stop_s = config.stop_after_cycles * reference.length

    state = initial_state(config, reference)
    rows = []
    w_times, w_log = [], []
    dist_sum = 0.0
    limited = singular = 0
    abort = ""
    w0 = ctrl.w_hat.copy()
    for k in range(n_ticks):
        t = k * dt
        if k % log_every == 0:
            w_times.append(t)
            w_log.append(ctrl.w_hat.copy())
        try:
            acc = constrained_acceleration(state, params, wind)
            reading = read_sensors(state, acc, params, wind, noise, noise_rng)
            command, diag = ctrl.compute(reading, dt)
            new = step(state, command, params, dt, wind)
        except GeometryError as exc:
            abort = f"t = {t:.2f} s: {type(exc).__name__}: {exc}"
            break
        du_applied = new.u_act - state.u_act
        gamma = state.r / np.linalg.norm(state.r)
        V_m = math.nan
        if w_true is not None:
            V_m = lyapunov_monitors(diag.e, diag.e_m, ctrl.w_hat, w_true, gains.Gamma)[1]
        ctrl.feedback(du_applied, dt)
        limited += abs(du_applied - diag.du) > 1e-12
        singular += diag.singular
        dist = float(np.linalg.norm(gamma - diag.gamma_t))
        dist_sum += dist
        v, w = point_coords(gamma)
        v_t, w_t = point_coords(diag.gamma_t)
        rows.append((t, *state.r, *gamma, *diag.gamma_t, v, w, v_t, w_t, diag.theta, diag.theta_t,
                     diag.e, diag.e_m, diag.zeta, state.u_act, diag.du, du_applied, diag.B_hat,
                     diag.s_c, geodesic_distance(gamma, diag.gamma_t), dist_sum / (k + 1),
                     state.tether_len, V_m))
        if config.turbulence_sigma_m_s > 0.0:
            new.turb = turbulence_step(state.turb, config.turbulence_sigma_m_s,
                                       config.turbulence_delta_per_s, dt, turb_rng)
        state = new
        if stop_s > 0.0 and diag.s_c >= stop_s:
            break
        if state.r[2] <= 0.0:
            abort = f"t = {t + dt:.2f} s: ground contact"
            break

    data = np.array(rows, dtype=float).reshape(-1, len(SERIES_COLUMNS))
    series = {name: data[:, i] for i, name in enumerate(SERIES_COLUMNS)}
    e = series["e"]
    half = e[len(e) // 2:]
    dists = np.linalg.norm(data[:, 4:7] - data[:, 7:10], axis=1)
    metrics = RunMetrics(
        J=mean_tracking_error(dists),
        J_defined=len(rows) > 0,
        max_abs_e=float(np.abs(e).max()) if e.size else math.nan,
        max_abs_e_second_half=float(np.abs(half).max()) if half.size else math.nan,
        final_V_m=float(series["V_m"][-1]) if e.size else math.nan,
        weight_drift=[float(x) for x in np.linalg.norm(ctrl.w_hat - w0, axis=1)],
        cycle_count=float(series["s_c"][-1] / reference.length) if e.size else 0.0,
        duration_s=len(rows) * dt,
        ticks=len(rows),
        limited_ticks=int(limited),
        singular_ticks=int(singular),
        aborted=bool(abort),
        abort_reason=abort,
    )
    return RunResult(config, metrics, series, np.array(w_times), np.array(w_log).reshape(-1, *w0.shape))


# outputs --------------------------------------------------------------------

def _json_value(x):
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_table(path, header: Sequence[str], rows) -> None:
    """CSV with a header row; floats in shortest round-trip form."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)
                              for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_table(path) -> dict:
    """Columns of a CSV written by :func:`write_table` as float arrays."""
    text = Path(path).read_text().splitlines()
    header = text[0].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in text[1:] if line],
                    dtype=float).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def write_manifest(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(_json_value_tree(payload), indent=2, sort_keys=True) + "\n")


def _json_value_tree(obj):
    if isinstance(obj, dict):
        return {k: _json_value_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_value_tree(v) for v in obj]
    return _json_value(obj)


def weight_columns(n_basis: int) -> list[str]:
    return ["t"] + [f"w_{axis}_{j}" for axis in "xyz" for j in range(n_basis)]


def write_run(result: RunResult, out_dir, plots: bool = True) -> Path:
    """Write ``series.csv``, ``weights.csv``, ``manifest.json`` and SVG plots."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    s = result.series
    write_table(out / "series.csv", SERIES_COLUMNS, zip(*(s[c] for c in SERIES_COLUMNS)))
    n_basis = result.weights.shape[-1] if result.weights.size else result.config.spline_basis_count
    w_rows = [(t, *w.ravel()) for t, w in zip(result.weight_times, result.weights)]
    write_table(out / "weights.csv", weight_columns(n_basis), w_rows)
    result.config.save(out / "config.txt")
    write_manifest(out / "manifest.json", {
        "kind": "run",
        "seed": result.config.seed,
        "config": result.config.as_dict(),
        "metrics": result.metrics.as_dict(),
        "series_columns": list(SERIES_COLUMNS),
    })
    if plots:
        from .plots import emit_plots
        emit_plots(out)
    return out


# turbulence sweep -----------------------------------------------------------

def cell_seed(base_seed: int, i: int, j: int, k: int) -> int:
    """Seed of run ``k`` in grid cell ``(i, j)``; independent of execution order."""
    return int(np.random.SeedSequence([base_seed, i, j, k]).generate_state(1, dtype=np.uint32)[0])


def _sweep_job(args) -> tuple:
    key, config = args
    result = run_single(config)
    return key, config.seed, result.metrics.J, result.metrics.aborted, result.metrics.abort_reason


@dataclass
class SweepResult:
    sigmas: tuple
    deltas: tuple
    n_seeds: int
    runs: list  # (i, j, k, seed, J, aborted, reason), sorted by (i, j, k)
    baseline_J: float
    base: RunConfig = field(repr=False, default=None)

    def cell(self, i: int, j: int) -> tuple[float, float, int, int]:
        """``(mean J, std J, completed, aborted)`` of one cell; aborted runs are excluded."""
        Js = [r[4] for r in self.runs if r[0] == i and r[1] == j and not r[5]]
        n_ab = sum(1 for r in self.runs if r[0] == i and r[1] == j and r[5])
        if not Js:
            return math.nan, math.nan, 0, n_ab
        return float(np.mean(Js)), float(np.std(Js)), len(Js), n_ab

    def table(self) -> list[tuple]:
        return [(s, d, *self.cell(i, j)) for i, s in enumerate(self.sigmas)
                for j, d in enumerate(self.deltas)]

    @property
    def aborted_runs(self) -> list:
        return [r for r in self.runs if r[5]]


def sweep_config(base: RunConfig) -> RunConfig:
    """One reference cycle per run, capped by the base duration."""
    return base.replace(stop_after_cycles=1.0)


def run_sweep(base: RunConfig, sigmas: Sequence[float] = SWEEP_SIGMAS,
              deltas: Sequence[float] = SWEEP_DELTAS, n_seeds: int = 10,
              workers: int = 1) -> SweepResult:
    """Mean ``J`` over seeded one-cycle flights for every ``(sigma, delta)`` cell."""
    if not sigmas or not deltas or n_seeds < 1:
        raise ValueError("sweep grids must be non-empty and n_seeds >= 1")
    cfg = sweep_config(base)
    jobs = []
    for i, s in enumerate(sigmas):
        for j, d in enumerate(deltas):
            for k in range(n_seeds):
                c = cfg.replace(turbulence_sigma_m_s=float(s), turbulence_delta_per_s=float(d),
                                seed=cell_seed(base.seed, i, j, k))
                jobs.append(((i, j, k), c))
    jobs.append(((-1, -1, 0), cfg.replace(turbulence_sigma_m_s=0.0)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, jobs, chunksize=1))
    else:
        results = [_sweep_job(job) for job in jobs]
    results.sort(key=lambda r: r[0])
    baseline = results.pop(0)
    runs = [(*key, seed, J, aborted, reason) for key, seed, J, aborted, reason in results]
    return SweepResult(tuple(sigmas), tuple(deltas), n_seeds, runs, baseline[2], base)


def write_sweep(result: SweepResult, out_dir, plots: bool = True) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_table(out / "sweep.csv", ("sigma_m_s", "delta_per_s", "mean_J", "std_J", "completed", "aborted"),
                result.table())
    write_table(out / "sweep_runs.csv", ("sigma_m_s", "delta_per_s", "seed_index", "seed", "J", "aborted"),
                [(result.sigmas[i], result.deltas[j], k, seed, J, int(ab))
                 for i, j, k, seed, J, ab, _ in result.runs])
    write_manifest(out / "manifest.json", {
        "kind": "sweep",
        "seed": result.base.seed if result.base else None,
        "config": result.base.as_dict() if result.base else None,
        "sigmas": list(result.sigmas),
        "deltas": list(result.deltas),
        "n_seeds": result.n_seeds,
        "baseline_J": result.baseline_J,
        "aborted": [{"sigma": result.sigmas[r[0]], "delta": result.deltas[r[1]], "seed": r[3],
                     "reason": r[6]} for r in result.aborted_runs],
    })
    if plots:
        from .plots import sweep_plot
        (out / "sweep.svg").write_text(sweep_plot(result.table()))
    return out


# noise study ----------------------------------------------------------------

@dataclass
class NoiseStudyResult:
    run: RunResult
    times: np.ndarray
    w_y: np.ndarray  # (samples, n_basis)
    slopes: np.ndarray  # per-weight linear-fit slope over the last half

    @property
    def max_abs_slope(self) -> float:
        return float(np.max(np.abs(self.slopes)))


def drift_slopes(times, weights) -> np.ndarray:
    """Least-squares slope of each weight column over the last half of the samples."""
    times = np.asarray(times, dtype=float)
    weights = np.asarray(weights, dtype=float)
    h = len(times) // 2
    if len(times) - h < 2:
        return np.full(weights.shape[1], math.nan)
    return np.polyfit(times[h:], weights[h:], 1)[0]


def run_noise_study(config: RunConfig, noise_scale: float = 1.0, duration_s: float = 120.0) -> NoiseStudyResult:
    """Fly with scaled sensor noise and measure drift of the lateral weights.

    ``noise_scale = 0`` disables the sensor noise altogether.
    """
    if noise_scale < 0.0:
        raise ValueError("noise_scale must be non-negative")
    c = config
    cfg = config.replace(
        duration_s=duration_s, noise_enabled=noise_scale > 0.0,
        noise_position_m=noise_scale * c.noise_position_m, noise_velocity_m_s=noise_scale * c.noise_velocity_m_s,
        noise_acceleration_m_s2=noise_scale * c.noise_acceleration_m_s2,
        noise_airspeed_m_s=noise_scale * c.noise_airspeed_m_s, noise_attitude_deg=noise_scale * c.noise_attitude_deg)
    run = run_single(cfg)
    w_y = run.weights[:, 1, :] if run.weights.size else np.zeros((0, cfg.spline_basis_count))
    return NoiseStudyResult(run, run.weight_times, w_y, drift_slopes(run.weight_times, w_y))


def write_noise_study(result: NoiseStudyResult, out_dir, plots: bool = True) -> Path:
    out = write_run(result.run, out_dir, plots=plots)
    write_table(out / "drift.csv", ("weight", "slope_per_s"), enumerate(result.slopes))
    manifest = json.loads((out / "manifest.json").read_text())
    manifest["kind"] = "noise"
    manifest["drift_slopes_per_s"] = [float(x) for x in result.slopes]
    write_manifest(out / "manifest.json", manifest)
    return out
