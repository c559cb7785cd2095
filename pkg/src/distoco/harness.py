"""
Experiment orchestration: build the problem and graphs from a seed, run an
algorithm, score it at checkpoints and write CSV files.
"""

from __future__ import annotations

import configparser
import dataclasses
import functools
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .algorithms import (StepSchedule, agent_streams, bandit_round, full_info_round,
                         initial_states, sample_unit_sphere)
from .comparators import dynamic_comparator, static_comparator
from .metrics import (RunTrace, comparator_losses, disagreement, empirical_rate,
                      loss_table, mean_and_stderr, path_length, standard_violation,
                      violation_table)
from .network import GraphSequence, MixingMatrix, er_path_sequence
from .problem import generate_regression_stream, shrink_set

__all__ = [
    "ALGORITHMS",
    "METRIC_COLUMNS",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "load_config",
    "simulate",
    "checkpoints",
    "build_instance",
    "run_experiment",
    "sweep",
    "emit_csv",
    "emit_curves_csv",
    "emit_sweep_csv",
    "read_csv",
    "default_output_dir",
]

log = logging.getLogger(__name__)

ALGORITHMS = ("full-info", "bandit", "centralized-full-info", "centralized-bandit")
METRIC_COLUMNS = ("T", "regret_static", "regret_dynamic", "cum_violation", "std_violation",
                  "path_length", "disagreement_max")
CURVE_COLUMNS = ("T", "avg_loss", "avg_violation")
SWEEP_COLUMNS = ("kappa", "regret_slope", "violation_slope", "theory_regret", "theory_violation")
OUTPUT_DIR_ENV = "DISTOCO_OUTPUT_DIR"


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


#%% CONFIGURATION

@dataclass(frozen=True)
class ExperimentConfig:
    """
    One experiment. Defaults are the desk-scale benchmark: 10 agents,
    ``p = d = 4``, two constraints per agent, edge probability 0.3 and the
    box ``[-5, 5]^p``.

    ``schedule`` is ``"convex"`` or ``"strongly-convex"``; the bandit
    variant of the kind is chosen from ``algorithm``. ``repetitions``
    defaults to 10 for bandit algorithms and 1 otherwise. ``ridge > 0`` adds
    ``ridge/2 ||x||^2`` to every local loss.
    """

    algorithm: str = "full-info"
    n: int = 10
    p: int = 4
    d: int = 4
    m_i: int = 2
    rho: float = 0.3
    T: int = 16384
    bound: float = 5.0
    ridge: float = 0.0
    schedule: str = "convex"
    alpha0: float = 1.0
    kappa: float = 0.5
    c: Optional[float] = None
    seed: int = 0
    repetitions: Optional[int] = None
    dynamic: bool = True
    out: Optional[str] = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        for name in ("n", "p", "d", "m_i", "T"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError("rho must lie in [0, 1]")
        if self.schedule not in ("convex", "strongly-convex"):
            raise ConfigError("schedule must be 'convex' or 'strongly-convex'")
        if self.repetitions is not None and self.repetitions < 1:
            raise ConfigError("repetitions must be positive")
        if self.bound <= 0 or self.ridge < 0:
            raise ConfigError("bound must be positive and ridge nonnegative")
        try:
            self.step_schedule()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def bandit(self):
        return self.algorithm.endswith("bandit")

    @property
    def centralized(self):
        return self.algorithm.startswith("centralized")

    @property
    def reps(self):
        if self.repetitions is not None:
            return self.repetitions
        return 10 if self.bandit else 1

    def step_schedule(self) -> StepSchedule:
        kind = self.schedule + ("-bandit" if self.bandit else "-full")
        return StepSchedule(kind, kappa=self.kappa, alpha0=self.alpha0, c=self.c,
                            r=self.bound if self.bandit else None)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in dataclasses.fields(self)]


def _coerce(name, text):
    ftype = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}[name]
    text = text.strip()
    if text.lower() in ("", "none") and "Optional" in str(ftype):
        return None
    try:
        if "int" in str(ftype):
            return int(text)
        if "float" in str(ftype):
            return float(text)
        if "bool" in str(ftype):
            if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return text.lower() in ("true", "1", "yes")
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc
    return text


def load_config(path=None, **overrides) -> ExperimentConfig:
    """
    Read a flat ``key = value`` file (``#`` comments allowed) and apply
    keyword overrides (``None`` values are ignored).
    """
    values = {}
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            parser.read_string("[experiment]\n" + text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        # configparser lowercases keys; match field names case-insensitively
        known = {f.name.lower(): f.name for f in dataclasses.fields(ExperimentConfig)}
        for key, val in parser["experiment"].items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            values[known[key]] = _coerce(known[key], val)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


#%% SIMULATION

def simulate(instance, graphs, schedule: StepSchedule, seed=0, rep=0, x0=None) -> RunTrace:
    """
    Run one algorithm for ``instance.T`` rounds.

    The bandit algorithm is used when ``schedule`` is a bandit kind; its
    exploration directions come from per-agent streams keyed by
    ``(seed, rep)``. Per-round invariant diagnostics go into
    ``trace.checks``:

    ``q_min``           smallest dual entry
    ``dual_ratio``      max_i beta_t ||q_{i,t}|| divided by its bound
    ``x_outside``       agents outside the (shrunk) decision set
    ``sample_outside``  bandit query points outside the decision set
    ``beta_gamma``      beta_t * gamma_t
    ``grad_ratio``      largest estimator norm divided by p F2 (bandit)
    """
    T, n, p = instance.T, instance.n, instance.p
    dset = instance.decision_set
    K = instance.constants
    tol = 1e-12 * max(1.0, dset.outer_radius)
    bandit = schedule.bandit
    dual_bound = K.F1 + 2 * p * K.F2 * K.R if bandit else K.F1

    first = schedule.at(1)
    states = initial_states(n, instance.A.shape[2], dset, x0=x0, xi1=first.xi if bandit else None)
    rngs = agent_streams(seed, n, rep) if bandit else None

    xs = np.empty((T, n, p))
    checks = {k: np.zeros(T) for k in ("q_min", "dual_ratio", "x_outside", "beta_gamma")}
    if bandit:
        checks["sample_outside"] = np.zeros(T)
        checks["grad_ratio"] = np.zeros(T)

    cur = first
    for t in range(1, T + 1):
        xs[t - 1] = states.x
        member = shrink_set(dset, cur.xi) if bandit else dset
        checks["x_outside"][t - 1] = np.count_nonzero(~member.contains(states.x, tol))
        checks["q_min"][t - 1] = states.q.min(initial=0.0)
        checks["dual_ratio"][t - 1] = cur.beta * np.max(np.linalg.norm(states.q, axis=1)) / dual_bound
        checks["beta_gamma"][t - 1] = cur.beta * cur.gamma

        nxt = schedule.at(t + 1)
        W = graphs[t]
        oracles = instance.round(t)
        if bandit:
            U = np.stack([sample_unit_sphere(r, p) for r in rngs])
            states, diag = bandit_round(states, W, oracles, nxt, U, dset, cur)
            checks["sample_outside"][t - 1] = np.count_nonzero(~dset.contains(diag.sample_points, tol))
            gmax = max(np.max(np.linalg.norm(diag.loss_grad, axis=1)),
                       np.max(np.linalg.norm(diag.clipped_jac, axis=(1, 2))))
            checks["grad_ratio"][t - 1] = gmax / (p * K.F2)
        else:
            states, _ = full_info_round(states, W, oracles, nxt, dset)
        cur = nxt
    return RunTrace(xs, checks)


def checkpoints(T) -> List[int]:
    """Horizons ``64, 128, ...`` up to ``T``, plus ``T`` itself."""
    pts = [2 ** k for k in range(6, 64) if 2 ** k <= T]
    if not pts or pts[-1] != T:
        pts.append(T)
    return pts


@functools.lru_cache(maxsize=4)
def build_instance(n, p, d, m_i, T, seed, bound=5.0, ridge=0.0):
    return generate_regression_stream(n, p, d, m_i, T, seed, bound=bound, ridge=ridge)


@functools.lru_cache(maxsize=64)
def _static_objectives(key, horizons):
    inst = build_instance(*key)
    return tuple(static_comparator(inst, T).objective for T in horizons)


@functools.lru_cache(maxsize=4)
def _dynamic(key):
    return dynamic_comparator(build_instance(*key))


def _single_agent_graphs(T):
    one = MixingMatrix(np.ones((1, 1)), 1.0)
    return GraphSequence(B=1, w=1.0, length=T, factory=lambda t: one)


#%% EXPERIMENTS

@dataclass
class ExperimentResult:
    """
    Outcome of :func:`run_experiment`.

    ``rows`` holds one dict per checkpoint with the metric columns (means
    over repetitions); ``stderr`` the matching standard errors;
    ``curves`` the average loss and violation per round.
    """

    config: ExperimentConfig
    traces: List[RunTrace]
    rows: List[dict]
    stderr: List[dict]
    curves: List[dict]
    seconds_per_round: float = 0.0
    notes: List[str] = field(default_factory=list)

    @property
    def horizons(self):
        return [r["T"] for r in self.rows]

    def series(self, column):
        return np.array([r[column] for r in self.rows])


def run_experiment(cfg: ExperimentConfig, keep_traces=True) -> ExperimentResult:
    """
    Generate the problem and graphs from ``cfg.seed``, run ``cfg.reps``
    repetitions and score them at :func:`checkpoints`.

    Centralized algorithms run one agent holding the agent-averaged loss and
    all constraints; the metrics are the same global quantities, so they
    are directly comparable with the distributed runs.
    """
    key = (cfg.n, cfg.p, cfg.d, cfg.m_i, cfg.T, cfg.seed, cfg.bound, cfg.ridge)
    inst = build_instance(*key)
    run_inst = inst.centralized() if cfg.centralized else inst
    graphs = (_single_agent_graphs(cfg.T) if cfg.centralized or cfg.n == 1
              else er_path_sequence(cfg.n, cfg.rho, cfg.T, cfg.seed))
    schedule = cfg.step_schedule()
    horizons = checkpoints(cfg.T)
    static_obj = np.array(_static_objectives(key, tuple(horizons)))
    dyn = _dynamic(key) if cfg.dynamic else None
    dyn_cum = np.cumsum(comparator_losses(dyn, inst)) if dyn is not None else None

    traces, per_rep, curve_rep = [], [], []
    t0 = time.perf_counter()
    for rep in range(cfg.reps):
        tr = simulate(run_inst, graphs, schedule, seed=cfg.seed, rep=rep)
        tr.label = f"{cfg.algorithm} seed={cfg.seed} rep={rep}"
        # metrics always use the distributed instance's global loss/constraints
        losses = loss_table(tr, run_inst).mean(axis=1)
        viols = violation_table(tr, run_inst).mean(axis=1)
        cum_loss, cum_viol = np.cumsum(losses), np.cumsum(viols)
        rows, crow = [], []
        for k, T in enumerate(horizons):
            rows.append(dict(
                T=T,
                regret_static=cum_loss[T - 1] - static_obj[k],
                regret_dynamic=cum_loss[T - 1] - dyn_cum[T - 1] if dyn is not None else float("nan"),
                cum_violation=cum_viol[T - 1],
                std_violation=standard_violation(tr, run_inst, T),
                path_length=path_length(dyn, T) if dyn is not None else float("nan"),
                disagreement_max=disagreement(tr, T),
            ))
            crow.append(dict(T=T, avg_loss=cum_loss[T - 1] / T, avg_violation=cum_viol[T - 1] / T))
        per_rep.append(rows)
        curve_rep.append(crow)
        if keep_traces:
            traces.append(tr)
    elapsed = time.perf_counter() - t0

    rows, errs, curves = [], [], []
    for k, T in enumerate(horizons):
        row, err = {"T": T}, {"T": T}
        for col in METRIC_COLUMNS[1:]:
            m, s = mean_and_stderr([r[k][col] for r in per_rep])
            row[col], err[col] = float(m), float(s)
        rows.append(row)
        errs.append(err)
        crow = {"T": T}
        for col in CURVE_COLUMNS[1:]:
            crow[col] = float(np.mean([c[k][col] for c in curve_rep]))
        curves.append(crow)
    notes = []
    if cfg.bandit:
        notes.append(f"bandit metrics are means over {cfg.reps} repetition(s) of the exploration directions"
                     + ("; single run" if cfg.reps == 1 else ""))
    return ExperimentResult(cfg, traces, rows, errs, curves,
                            seconds_per_round=elapsed / (cfg.reps * cfg.T), notes=notes)


def sweep(template: ExperimentConfig, kappas: Sequence[float], horizons: Sequence[int],
          seeds: Sequence[int]) -> List[dict]:
    """
    Empirical growth rates of static regret and cumulative violation.

    For every ``kappa`` and seed one run of length ``max(horizons)`` is
    scored at each horizon; seed means are fitted on a log-log scale. A
    slope is NaN when the mean series is not strictly positive (the fit is
    undefined there; e.g. regret below zero).
    """
    horizons = sorted(int(h) for h in horizons)
    if len(horizons) < 3:
        raise ConfigError("a sweep needs at least three horizons")
    Tmax = horizons[-1]
    table = []
    for kappa in kappas:
        cfg_k = template.replace(kappa=kappa, T=Tmax, dynamic=False)
        reg, vio = [], []
        for s in seeds:
            res = run_experiment(cfg_k.replace(seed=s), keep_traces=False)
            by_T = {r["T"]: r for r in res.rows}
            extra = [T for T in horizons if T not in by_T]
            if extra:
                raise ConfigError(f"horizons {extra} are not checkpoints of T={Tmax}")
            reg.append([by_T[T]["regret_static"] for T in horizons])
            vio.append([by_T[T]["cum_violation"] for T in horizons])
        mreg, mvio = np.mean(reg, axis=0), np.mean(vio, axis=0)
        strongly = template.schedule == "strongly-convex"
        table.append(dict(
            kappa=kappa,
            regret_slope=_slope_or_nan(horizons, mreg),
            violation_slope=_slope_or_nan(horizons, mvio),
            theory_regret=kappa if strongly else max(kappa, 1.0 - kappa),
            theory_violation=1.0 - kappa / 2.0,
            regret_series=mreg.tolist(),
            violation_series=mvio.tolist(),
            horizons=list(horizons),
        ))
    return table


def _slope_or_nan(horizons, values):
    try:
        return empirical_rate(horizons, values)
    except ValueError:
        return float("nan")


#%% CSV OUTPUT

def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _write(path, header_lines, columns, rows):
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write(",".join(columns) + "\n")
            for r in rows:
                fh.write(",".join(_fmt(r[c]) for c in columns) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _config_header(result):
    lines = [f"config: {k}={v}" for k, v in result.config.items()]
    return lines + [f"note: {n}" for n in result.notes]


def emit_csv(result: ExperimentResult, path):
    """
    Metric CSV: ``config`` comment lines, then one row per checkpoint. Runs
    with repetitions append ``<column>_se`` standard-error columns.
    """
    cols = list(METRIC_COLUMNS)
    rows = result.rows
    if result.config.reps > 1:
        cols += [c + "_se" for c in METRIC_COLUMNS[1:]]
        rows = [{**r, **{c + "_se": e[c] for c in METRIC_COLUMNS[1:]}}
                for r, e in zip(result.rows, result.stderr)]
    return _write(path, _config_header(result), cols, rows)


def emit_curves_csv(result: ExperimentResult, path):
    """Average cumulative loss and violation per round, ``T,avg_loss,avg_violation``."""
    return _write(path, _config_header(result), CURVE_COLUMNS, result.curves)


def emit_sweep_csv(table, path, header=()):
    return _write(path, list(header), SWEEP_COLUMNS, table)


def read_csv(path):
    """Parse a file written by this module: (comment lines, column names, float rows)."""
    comments, rows, cols = [], [], None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                comments.append(line[2:])
            elif cols is None:
                cols = line.split(",")
            elif line:
                rows.append([float(v) for v in line.split(",")])
    return comments, cols or [], rows
