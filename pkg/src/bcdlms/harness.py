"""Monte-Carlo experiment engine.

Runs ensembles of independent trials for a list of algorithm
configurations over one shared network draw, computes empirical MSD/EMSE
learning curves with steady-state summaries, overlays the closed-form
predictions, and writes everything as CSV plus a text report.

Determinism contract: every quantity produced here is a pure function of
the experiment configuration.  Trials are generated from per-trial
counter-derived seeds and processed in fixed-size chunks; chunk partials
are reduced in chunk order, so reruns (and any ``threads`` setting) give
byte-identical output files.  All algorithms in one experiment consume the
identical data streams, which makes paired comparisons exact.
"""
from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import theory as theory_mod
from .algorithms import (AdaptiveVariances, AlgorithmConfig, KnownVariances,
                         NetworkState, centralized_step, diffusion_step)
from .datamodel import (DataStream, SystemProfile, complex_profile,
                        profile_from_dict, profile_to_dict, table1_profile)
from .network import (CombinationMatrix, Topology, identity_combination,
                      metropolis_weights, random_geometric_topology,
                      relative_variance_weights, topology_from_dict,
                      topology_to_dict)
from .theory import PerformancePrediction, to_db

CHUNK_TRIALS = 50
DIVERGENCE_NORM = 1e6
PRESET_DIR = Path(__file__).with_name("presets")

PROFILES = {"table1": table1_profile, "complex": complex_profile}
COMBINATION_RULES = ("metropolis", "relative-variance", "identity")


class DivergenceError(RuntimeError):
    """Raised by the CLI layer when an experiment reports diverged trials."""


@dataclass(frozen=True)
class AlgorithmSpec:
    """Manifest-level description of one algorithm to simulate."""

    name: str
    mode: str = "atc"                 # atc | cta | non-cooperative | standard | centralized
    step_size: float = 0.05
    combine: str = "relative-variance"  # rule for A (estimate combination)
    fuse: str = "metropolis"            # rule for C (gradient fusion)
    variances: str = "known"            # known | adaptive
    alpha: float = 0.99

    def __post_init__(self):
        if self.combine not in COMBINATION_RULES or self.fuse not in COMBINATION_RULES:
            raise ValueError(f"combination rules must be one of {COMBINATION_RULES}")
        if self.variances not in ("known", "adaptive"):
            raise ValueError("variances must be 'known' or 'adaptive'")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    profile: str | SystemProfile = "table1"
    num_nodes: int = 20
    comm_radius: float = 0.4
    topology_seed: int = 11033
    algorithms: tuple = ()
    num_trials: int = 500
    horizon: int = 1000
    steady_window: int = 200
    master_seed: int = 9001
    tracking: tuple | None = None       # (iteration, scale)
    theory: bool = True
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.num_trials < 1:
            raise ValueError("num_trials must be >= 1")
        if self.steady_window > self.horizon + 1:
            raise ValueError("steady_window cannot exceed the number of recorded iterations")
        if not self.algorithms:
            raise ValueError("need at least one algorithm")
        names = [a.name for a in self.algorithms]
        if len(set(names)) != len(names):
            raise ValueError("algorithm names must be unique")

    def resolve_profile(self) -> SystemProfile:
        if isinstance(self.profile, SystemProfile):
            return self.profile
        try:
            return PROFILES[self.profile]()
        except KeyError:
            raise ValueError(f"unknown profile {self.profile!r}") from None


@dataclass
class LearningCurves:
    """Ensemble-averaged trajectories and steady-state summaries (linear scale)."""

    name: str
    num_trials: int
    num_diverged: int
    msd: np.ndarray                  # (horizon+1, N)
    emse: np.ndarray
    network_msd: np.ndarray          # (horizon+1,)
    network_emse: np.ndarray
    steady_msd: np.ndarray           # (N,) window-averaged
    steady_emse: np.ndarray
    steady_msd_se: np.ndarray        # standard errors across trials
    steady_emse_se: np.ndarray
    network_steady_msd: float
    network_steady_emse: float
    network_steady_msd_se: float
    network_steady_emse_se: float
    mean_error: np.ndarray           # (N, M) ensemble-mean weight error, final iteration
    error_variance: np.ndarray       # (N, M) across-trial variance of that error
    window: tuple
    sigma2_trace: np.ndarray | None = None   # (horizon+1, N) adaptive mode only
    converged_at: int | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    profile: SystemProfile
    topology: Topology
    curves: dict
    predictions: dict               # name -> PerformancePrediction | None
    standard_bias: dict             # name -> limiting mean-error vector | None

    @property
    def total_diverged(self) -> int:
        return sum(c.num_diverged for c in self.curves.values())

    def write_outputs(self, out_dir) -> list:
        return write_outputs(self, out_dir)

    def summary(self) -> str:
        return summary_report(self)


def combination_rule(name: str, topology: Topology, profile: SystemProfile):
    if name == "metropolis":
        return metropolis_weights(topology)
    if name == "relative-variance":
        return relative_variance_weights(topology, profile.regression_noise_var)
    return identity_combination(topology.num_nodes)


def build_matrices(topology: Topology, profile: SystemProfile) -> dict:
    return {name: combination_rule(name, topology, profile)
            for name in COMBINATION_RULES}


def build_algorithm(spec: AlgorithmSpec, topology: Topology,
                    profile: SystemProfile) -> AlgorithmConfig:
    """Instantiate an AlgorithmSpec against a concrete network draw."""
    a = combination_rule(spec.combine, topology, profile)
    c = combination_rule(spec.fuse, topology, profile)
    if spec.variances == "adaptive":
        source = AdaptiveVariances(spec.alpha)
    else:
        source = KnownVariances(profile.regression_noise_var)
    mu = spec.step_size
    if spec.mode == "atc":
        return AlgorithmConfig.atc(a, c, mu, source, name=spec.name)
    if spec.mode == "cta":
        return AlgorithmConfig.cta(a, c, mu, source, name=spec.name)
    if spec.mode == "non-cooperative":
        return AlgorithmConfig.non_cooperative(topology.num_nodes, mu, source, name=spec.name)
    if spec.mode == "standard":
        return AlgorithmConfig.standard_diffusion(a, c, mu, name=spec.name)
    if spec.mode == "centralized":
        if spec.variances == "adaptive":
            raise ValueError("the centralized estimator runs with known variances only")
        return AlgorithmConfig("centralized", np.full(topology.num_nodes, mu),
                               np.eye(topology.num_nodes), np.eye(topology.num_nodes),
                               np.eye(topology.num_nodes), source, name=spec.name)
    raise ValueError(f"unknown mode {spec.mode!r}")


def _truth_schedule(profile: SystemProfile, horizon: int, tracking) -> np.ndarray:
    sched = np.repeat(profile.w_o[None, :], horizon, axis=0)
    if tracking is not None:
        start, scale = int(tracking[0]), float(tracking[1])
        sched[start:] = scale * profile.w_o
    return sched


def _row_truth(sched: np.ndarray) -> np.ndarray:
    """Truth against which curve row j is measured: row 0 is the initial
    parameter, row j >= 1 the one active while update j-1 was made."""
    return np.concatenate([sched[:1], sched], axis=0)


def _chunk_ranges(num_trials: int):
    return [(t0, min(t0 + CHUNK_TRIALS, num_trials))
            for t0 in range(0, num_trials, CHUNK_TRIALS)]


def _generate_chunk(profile, master_seed, trials, horizon, tracking):
    blocks = []
    for t in trials:
        stream = DataStream(profile, master_seed, trial_key=(t,))
        if tracking is not None:
            stream.change_parameters(float(tracking[1]) * profile.w_o, int(tracking[0]))
        blocks.append(stream.draw_block(horizon))
    z = np.stack([b.z for b in blocks])
    d = np.stack([b.d for b in blocks])
    return z, d


def _run_chunk_algorithm(alg: AlgorithmConfig, profile, z, d, row_truth, adaptive_trace):
    """Advance one chunk of trials through every iteration of one algorithm."""
    trials, horizon = z.shape[0], z.shape[1]
    n, m = profile.num_nodes, profile.dim
    centralized = alg.mode == "centralized"
    n_out = 1 if centralized else n
    msd = np.empty((trials, horizon + 1, n_out))
    emse = np.empty((trials, horizon + 1, n_out))
    sigma2 = np.empty((trials, horizon + 1, n)) if adaptive_trace else None
    diverged = np.zeros(trials, dtype=bool)
    first_div = np.full(trials, -1)

    cov = profile.regressor_cov
    cov_mean = cov.mean(axis=0)

    def record(row, w):
        err = row_truth[row][None, None, :] - (w[:, None, :] if centralized else w)
        msd[:, row] = np.einsum("tkm,tkm->tk", err.conj(), err).real
        weight = cov_mean[None] if centralized else cov
        emse[:, row] = np.einsum("kmn,tkm,tkn->tk", weight, err.conj(), err).real

    if centralized:
        w = np.zeros((trials, m), dtype=complex)
        record(0, w)
        mu = float(alg.step_sizes[0])
        s2 = alg.variance_source.values
        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(horizon):
                w = centralized_step(w, z[:, i], d[:, i], mu, s2)
                record(i + 1, w)
                norms = np.einsum("tm,tm->t", w.conj(), w).real
                newly = (~diverged) & (norms > DIVERGENCE_NORM ** 2)
                first_div[newly] = i
                diverged |= newly
        return msd, emse, sigma2, w[:, None, :], diverged, first_div

    state = NetworkState.zeros(n, m, batch=(trials,))
    record(0, state.w)
    if adaptive_trace:
        sigma2[:, 0] = state.sigma2_hat
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(horizon):
            state = diffusion_step(state, (z[:, i], d[:, i]), alg)
            record(i + 1, state.w)
            if adaptive_trace:
                sigma2[:, i + 1] = state.sigma2_hat
            norms = np.einsum("tkm,tkm->tk", state.w.conj(), state.w).real.max(axis=1)
            newly = (~diverged) & (norms > DIVERGENCE_NORM ** 2)
            first_div[newly] = i
            diverged |= newly
    final_err = row_truth[-1][None, None, :] - state.w
    return msd, emse, sigma2, final_err, diverged, first_div


def _detect_convergence(network_msd_db: np.ndarray, span: int = 50,
                        slope_db: float = -0.01) -> int | None:
    """First iteration where the trailing dB slope flattens above ``slope_db``."""
    t = np.arange(span, dtype=float)
    t -= t.mean()
    denom = (t * t).sum()
    for i in range(span, network_msd_db.size):
        window = network_msd_db[i - span:i]
        if not np.isfinite(window).all():
            continue
        slope = (t * (window - window.mean())).sum() / denom
        if slope > slope_db:
            return i
    return None


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute every algorithm of ``config`` over a shared trial ensemble."""
    profile = config.resolve_profile()
    topology = random_geometric_topology(config.num_nodes, config.comm_radius,
                                         config.topology_seed)
    algorithms = [build_algorithm(spec, topology, profile) for spec in config.algorithms]
    sched = _truth_schedule(profile, config.horizon, config.tracking)
    row_truth = _row_truth(sched)
    ranges = _chunk_ranges(config.num_trials)

    def work(chunk_range):
        t0, t1 = chunk_range
        z, d = _generate_chunk(profile, config.master_seed, range(t0, t1),
                               config.horizon, config.tracking)
        out = {}
        for alg in algorithms:
            out[alg.name] = _run_chunk_algorithm(
                alg, profile, z, d, row_truth, adaptive_trace=alg.adaptive)
        return out

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            partials = list(pool.map(work, ranges))
    else:
        partials = [work(r) for r in ranges]

    window = (config.horizon + 1 - config.steady_window, config.horizon + 1)
    curves = {}
    for alg in algorithms:
        parts = [p[alg.name] for p in partials]
        curves[alg.name] = _reduce_curves(alg, parts, window)

    predictions, standard_bias = {}, {}
    for spec, alg in zip(config.algorithms, algorithms):
        predictions[alg.name] = None
        standard_bias[alg.name] = None
        if not config.theory:
            continue
        if alg.mode == "standard":
            standard_bias[alg.name] = theory_mod.standard_diffusion_bias(
                profile, alg.a1, alg.a2, alg.c, alg.step_sizes)
        elif alg.mode != "centralized":
            ops = theory_mod.build_operators(profile, alg.a1, alg.a2, alg.c,
                                             alg.step_sizes, topology=topology)
            predictions[alg.name] = theory_mod.transient(ops, profile, config.horizon)
    return ExperimentResult(config=config, profile=profile, topology=topology,
                            curves=curves, predictions=predictions,
                            standard_bias=standard_bias)


def _reduce_curves(alg, parts, window) -> LearningCurves:
    msd = np.concatenate([p[0] for p in parts])
    emse = np.concatenate([p[1] for p in parts])
    sigma2 = np.concatenate([p[2] for p in parts]) if parts[0][2] is not None else None
    final_err = np.concatenate([p[3] for p in parts])
    diverged = np.concatenate([p[4] for p in parts])

    valid = ~diverged
    n_valid = int(valid.sum())
    if n_valid == 0:
        warnings.warn(f"{alg.name}: every trial diverged")
        shape = msd.shape[1:]
        nan_curve = np.full(shape, np.nan)
        nan_nodes = np.full(shape[1], np.nan)
        return LearningCurves(
            name=alg.name, num_trials=0, num_diverged=int(diverged.sum()),
            msd=nan_curve, emse=nan_curve.copy(),
            network_msd=np.full(shape[0], np.nan), network_emse=np.full(shape[0], np.nan),
            steady_msd=nan_nodes, steady_emse=nan_nodes.copy(),
            steady_msd_se=nan_nodes.copy(), steady_emse_se=nan_nodes.copy(),
            network_steady_msd=np.nan, network_steady_emse=np.nan,
            network_steady_msd_se=np.nan, network_steady_emse_se=np.nan,
            mean_error=np.full(final_err.shape[1:], np.nan),
            error_variance=np.full(final_err.shape[1:], np.nan),
            window=window, sigma2_trace=None, converged_at=None)

    msd_v, emse_v, err_v = msd[valid], emse[valid], final_err[valid]
    mean_msd = msd_v.mean(axis=0)
    mean_emse = emse_v.mean(axis=0)

    w0, w1 = window
    trial_win_msd = msd_v[:, w0:w1].mean(axis=1)   # (trials, N)
    trial_win_emse = emse_v[:, w0:w1].mean(axis=1)
    scale = np.sqrt(float(n_valid))

    def se(x):
        return x.std(axis=0, ddof=1) / scale if n_valid > 1 else np.zeros_like(x[0])

    net_msd_trials = trial_win_msd.mean(axis=1)
    net_emse_trials = trial_win_emse.mean(axis=1)
    mean_err = err_v.mean(axis=0)
    err_var = (np.abs(err_v - mean_err) ** 2).mean(axis=0)

    network_msd = mean_msd.mean(axis=1)
    return LearningCurves(
        name=alg.name, num_trials=n_valid, num_diverged=int(diverged.sum()),
        msd=mean_msd, emse=mean_emse,
        network_msd=network_msd, network_emse=mean_emse.mean(axis=1),
        steady_msd=trial_win_msd.mean(axis=0), steady_emse=trial_win_emse.mean(axis=0),
        steady_msd_se=se(trial_win_msd), steady_emse_se=se(trial_win_emse),
        network_steady_msd=float(net_msd_trials.mean()),
        network_steady_emse=float(net_emse_trials.mean()),
        network_steady_msd_se=float(se(net_msd_trials[:, None])[0]),
        network_steady_emse_se=float(se(net_emse_trials[:, None])[0]),
        mean_error=mean_err, error_variance=err_var,
        window=window,
        sigma2_trace=sigma2[valid].mean(axis=0) if sigma2 is not None else None,
        converged_at=_detect_convergence(to_db(network_msd)),
    )


def compare_known_vs_adaptive(config: ExperimentConfig) -> dict:
    """Run known- and adaptive-variance twins of each algorithm on shared seeds.

    Returns the full result plus per-node steady-state deltas (dB,
    adaptive minus known) keyed by the original algorithm name.  Warns
    when the profile's noise-dominance margin is below 10, since the
    online estimator's operating assumption is then violated.
    """
    profile = config.resolve_profile()
    margin = profile.assumption2_ratio().min()
    if margin < 10:
        warnings.warn(f"noise-dominance margin {margin:.2f} < 10: the adaptive "
                      "variance estimator is outside its stated operating regime")
    twins = []
    for spec in config.algorithms:
        twins.append(replace(spec, name=f"{spec.name}-known", variances="known"))
        twins.append(replace(spec, name=f"{spec.name}-adaptive", variances="adaptive"))
    result = run_experiment(replace(config, algorithms=tuple(twins)))
    deltas = {}
    for spec in config.algorithms:
        known = result.curves[f"{spec.name}-known"]
        adaptive = result.curves[f"{spec.name}-adaptive"]
        deltas[spec.name] = {
            "msd_db": to_db(adaptive.steady_msd) - to_db(known.steady_msd),
            "emse_db": to_db(adaptive.steady_emse) - to_db(known.steady_emse),
        }
    return {"result": result, "deltas": deltas}


def variance_trace(config: ExperimentConfig):
    """Ensemble-mean estimator trajectories plus the true variances."""
    if not any(s.variances == "adaptive" for s in config.algorithms):
        raise ValueError("variance_trace needs at least one adaptive algorithm")
    result = run_experiment(config)
    profile = result.profile
    traces = {name: c.sigma2_trace for name, c in result.curves.items()
              if c.sigma2_trace is not None}
    return {"result": result, "traces": traces,
            "true": profile.regression_noise_var.copy()}


# -- manifests ---------------------------------------------------------

def config_to_dict(config: ExperimentConfig) -> dict:
    profile = (config.profile if isinstance(config.profile, str)
               else profile_to_dict(config.profile))
    return {
        "name": config.name,
        "profile": profile,
        "topology": {"num_nodes": config.num_nodes,
                     "comm_radius": config.comm_radius,
                     "seed": config.topology_seed},
        "num_trials": config.num_trials,
        "horizon": config.horizon,
        "steady_window": config.steady_window,
        "master_seed": config.master_seed,
        "tracking": (None if config.tracking is None
                     else {"iteration": int(config.tracking[0]),
                           "scale": float(config.tracking[1])}),
        "theory": config.theory,
        "algorithms": [vars(a).copy() for a in config.algorithms],
    }


def config_from_dict(data: dict) -> ExperimentConfig:
    profile = data["profile"]
    if not isinstance(profile, str):
        profile = profile_from_dict(profile)
    topo = data["topology"]
    tracking = data.get("tracking")
    return ExperimentConfig(
        name=data["name"],
        profile=profile,
        num_nodes=int(topo["num_nodes"]),
        comm_radius=float(topo["comm_radius"]),
        topology_seed=int(topo["seed"]),
        algorithms=tuple(AlgorithmSpec(**a) for a in data["algorithms"]),
        num_trials=int(data["num_trials"]),
        horizon=int(data["horizon"]),
        steady_window=int(data["steady_window"]),
        master_seed=int(data["master_seed"]),
        tracking=(None if tracking is None
                  else (int(tracking["iteration"]), float(tracking["scale"]))),
        theory=bool(data.get("theory", True)),
    )


def load_manifest(path) -> ExperimentConfig:
    with open(path) as fh:
        data = json.load(fh)
    try:
        return config_from_dict(data)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"manifest {path} is malformed: {exc}") from exc


def save_manifest(config: ExperimentConfig, path):
    with open(path, "w") as fh:
        json.dump(config_to_dict(config), fh, indent=2)
        fh.write("\n")


def preset_names() -> list:
    return sorted(p.stem for p in PRESET_DIR.glob("*.json"))


def preset(name: str) -> ExperimentConfig:
    path = PRESET_DIR / f"{name}.json"
    if not path.exists():
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return load_manifest(path)


# -- output files ------------------------------------------------------

def _format(value) -> str:
    return repr(float(value))


def _write_curve_csv(path, node_curve, network_curve, theory_network=None):
    n = node_curve.shape[1]
    header = "iteration," + ",".join(f"node_{k + 1}" for k in range(n)) \
        + ",network,theory_network"
    lines = [header]
    node_db = to_db(node_curve)
    net_db = to_db(network_curve)
    th_db = None if theory_network is None else to_db(theory_network)
    for i in range(node_curve.shape[0]):
        cells = [str(i)] + [_format(v) for v in node_db[i]] + [_format(net_db[i])]
        cells.append("" if th_db is None else _format(th_db[i]))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_trace_csv(path, trace):
    n = trace.shape[1]
    header = "iteration," + ",".join(f"node_{k + 1}" for k in range(n)) \
        + ",network,theory_network"
    lines = [header]
    for i in range(trace.shape[0]):
        cells = [str(i)] + [_format(v) for v in trace[i]] + [_format(trace[i].mean()), ""]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_outputs(result: ExperimentResult, out_dir) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = result.config.name
    written = []
    for alg_name, curves in result.curves.items():
        pred = result.predictions.get(alg_name)
        th_msd = None if pred is None else pred.network_msd_curve
        th_emse = None if pred is None else pred.network_emse_curve
        for metric, node_curve, net_curve, overlay in (
                ("msd", curves.msd, curves.network_msd, th_msd),
                ("emse", curves.emse, curves.network_emse, th_emse)):
            path = out / f"{name}_{alg_name}_{metric}.csv"
            _write_curve_csv(path, node_curve, net_curve, overlay)
            written.append(path)
        if curves.sigma2_trace is not None:
            path = out / f"{name}_{alg_name}_sigma2.csv"
            _write_trace_csv(path, curves.sigma2_trace)
            written.append(path)
    report = out / f"{name}_summary.txt"
    report.write_text(summary_report(result))
    written.append(report)
    manifest = out / f"{name}_manifest.json"
    save_manifest(result.config, manifest)
    written.append(manifest)
    return written


def summary_report(result: ExperimentResult) -> str:
    cfg = result.config
    profile = result.profile
    lines = [
        f"experiment: {cfg.name}",
        f"profile: {cfg.profile if isinstance(cfg.profile, str) else 'custom'} "
        f"(field={profile.field}, N={profile.num_nodes}, M={profile.dim})",
        f"topology: seed={cfg.topology_seed}, radius={cfg.comm_radius}, "
        f"degrees min/max={int(result.topology.degrees.min())}/"
        f"{int(result.topology.degrees.max())}",
        f"trials={cfg.num_trials}, horizon={cfg.horizon}, "
        f"steady window=[{result.curves[list(result.curves)[0]].window[0]}, "
        f"{result.curves[list(result.curves)[0]].window[1]})",
        f"master seed={cfg.master_seed}",
        "",
        f"{'algorithm':<24}{'MSD dB':>10}{'EMSE dB':>10}{'MSD lin':>13}"
        f"{'theory MSD':>12}{'delta':>8}{'diverged':>10}",
    ]
    for alg_name, curves in result.curves.items():
        pred = result.predictions.get(alg_name)
        sim_db = to_db(curves.network_steady_msd)
        th = "" if pred is None else f"{to_db(pred.network_msd):.2f}"
        delta = "" if pred is None else f"{sim_db - to_db(pred.network_msd):+.2f}"
        lines.append(
            f"{alg_name:<24}{sim_db:>10.2f}{to_db(curves.network_steady_emse):>10.2f}"
            f"{curves.network_steady_msd:>13.4e}{th:>12}{delta:>8}"
            f"{curves.num_diverged:>10d}")
    for alg_name, curves in result.curves.items():
        pred = result.predictions.get(alg_name)
        lines += ["", f"per-node steady state: {alg_name} "
                      f"(converged_at={curves.converged_at})"]
        lines.append(f"{'node':>6}{'MSD dB':>10}{'th MSD':>10}{'EMSE dB':>10}{'th EMSE':>10}")
        for k in range(curves.steady_msd.size):
            th_m = "" if pred is None else f"{to_db(pred.msd[k]):.2f}"
            th_e = "" if pred is None else f"{to_db(pred.emse[k]):.2f}"
            lines.append(f"{k + 1:>6}{to_db(curves.steady_msd[k]):>10.2f}{th_m:>10}"
                         f"{to_db(curves.steady_emse[k]):>10.2f}{th_e:>10}")
        bias = result.standard_bias.get(alg_name)
        if bias is not None:
            lines.append(f"  predicted mean-error norm (uncompensated limit): "
                         f"{np.linalg.norm(bias):.6f}")
    lines.append("")
    return "\n".join(lines)
