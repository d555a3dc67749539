"""Experiment orchestration and metric export.

Each seed writes ``seed_{s}.csv`` (network rows, ``agent = all``) and
``seed_{s}_agents.csv`` (one row per agent and step); ``aggregate.csv`` holds
per-step medians across seeds. The first line of every CSV is a version
comment; the column order below is part of that version.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, PairingError
from .simulation import RunTrace, run_maopac_decpomdp, run_maopac_oracle
from .zopo import run_zopo

FORMAT_VERSION = "# maopac-metrics v1"
COLUMNS = (
    "step", "seed", "agent", "reward", "cum_avg_reward", "delta_omega_norm",
    "delta_theta_norm", "agreement", "rho", "flags",
)
NUMERIC = ("reward", "cum_avg_reward", "delta_omega_norm", "delta_theta_norm", "agreement", "rho")
PANELS = {
    "delta_omega": ("delta_omega_norm", "critic gap between oracle and decentralized runs"),
    "delta_theta": ("delta_theta_norm", "actor gap between oracle and decentralized runs"),
    "agreement": ("agreement", "critic disagreement across agents"),
    "reward": ("cum_avg_reward", "cumulative average reward"),
}


@dataclass
class PairedGaps:
    delta_omega: np.ndarray  # (L,) agent-averaged
    delta_theta: np.ndarray
    per_agent_omega: np.ndarray  # (L, K)
    per_agent_theta: np.ndarray


def paired_gap_metrics(trace_p: RunTrace, trace_o: RunTrace) -> PairedGaps:
    """Per-step norms of oracle-minus-decentralized critic and actor, averaged
    over agents, on the common horizon of the two traces."""
    for t in (trace_p, trace_o):
        if t.omega is None or t.theta is None or t.actions is None:
            raise PairingError(f"{t.algorithm} trace lacks critic, actor or action history")
    if trace_p.seed != trace_o.seed:
        raise PairingError(f"traces come from different seeds ({trace_p.seed} vs {trace_o.seed})")
    if trace_p.agent_count != trace_o.agent_count or trace_p.omega.shape[1:] != trace_o.omega.shape[1:]:
        raise PairingError("traces have different agent counts or dimensions")
    L = min(trace_p.steps, trace_o.steps)
    if not np.array_equal(trace_p.actions[:L], trace_o.actions[:L]):
        raise PairingError("traces did not take the same actions")
    dw = np.linalg.norm(trace_o.omega[:L] - trace_p.omega[:L], axis=-1)
    dt = np.linalg.norm((trace_o.theta[:L] - trace_p.theta[:L]).reshape(L, trace_p.agent_count, -1), axis=-1)
    return PairedGaps(dw.mean(axis=1), dt.mean(axis=1), dw, dt)


def agreement_series(omega) -> np.ndarray:
    """(N, K) distances ``||omega_k - mean_k omega_k||``."""
    omega = np.asarray(omega, dtype=np.float64)
    return np.linalg.norm(omega - omega.mean(axis=1, keepdims=True), axis=-1)


@dataclass
class MetricsTable:
    """Per-step metric rows for one seed (or the cross-seed median)."""

    seed: object
    columns: dict  # numeric column -> (N,) array, NaN where not applicable
    flags: list  # per step, string
    agent: object = "all"
    steps: np.ndarray | None = None

    def __post_init__(self):
        if self.steps is None:
            self.steps = np.arange(len(self.flags))

    def __len__(self):
        return len(self.flags)

    def column(self, name):
        return self.columns[name]

    def rows(self):
        for i in range(len(self)):
            row = [str(int(self.steps[i])), str(self.seed), str(self.agent)]
            row += [_fmt(self.columns[name][i]) for name in NUMERIC]
            row.append(self.flags[i])
            yield row


def _fmt(x):
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def _csv_text(tables):
    buf = io.StringIO()
    buf.write(FORMAT_VERSION + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for t in tables:
        w.writerows(t.rows())
    return buf.getvalue()


def _nan(n):
    return np.full(n, np.nan)


def _flag_strings(flag_lists, prefix="", agent=None):
    out = []
    for labels in flag_lists:
        if agent is not None:
            labels = [x for x in labels if x.endswith(f"@{agent}")]
        out.append([prefix + x for x in labels])
    return out


def _join(*per_step):
    return [";".join(sorted(sum(parts, []))) for parts in zip(*per_step)]


def seed_tables(main: RunTrace, oracle: RunTrace | None = None):
    """Network table and per-agent tables for one seed."""
    N, K = main.steps, main.agent_count
    rewards = main.rewards
    cum_agent = np.cumsum(rewards, axis=0) / np.arange(1, N + 1)[:, None]
    gaps = paired_gap_metrics(main, oracle) if oracle is not None else None
    agree = agreement_series(main.omega) if main.omega is not None else None

    def pick(arr, k=None):
        if arr is None:
            return _nan(N)
        return arr.mean(axis=1) if k is None else arr[:, k]

    flag_parts = [_flag_strings(main.flags)] if main.flags else [[[] for _ in range(N)]]
    if oracle is not None and oracle.flags:
        flag_parts.append(_flag_strings(oracle.flags, "oracle:"))
    network = MetricsTable(
        main.seed,
        {
            "reward": rewards.mean(axis=1),
            "cum_avg_reward": main.cumulative_average_reward(),
            "delta_omega_norm": gaps.delta_omega if gaps else _nan(N),
            "delta_theta_norm": gaps.delta_theta if gaps else _nan(N),
            "agreement": pick(agree),
            "rho": pick(main.rho),
        },
        _join(*flag_parts),
    )
    agents = []
    for k in range(K):
        parts = [_flag_strings(main.flags, agent=k)] if main.flags else [[[] for _ in range(N)]]
        if oracle is not None and oracle.flags:
            parts.append(_flag_strings(oracle.flags, "oracle:", agent=k))
        agents.append(MetricsTable(
            main.seed,
            {
                "reward": rewards[:, k],
                "cum_avg_reward": cum_agent[:, k],
                "delta_omega_norm": gaps.per_agent_omega[:, k] if gaps else _nan(N),
                "delta_theta_norm": gaps.per_agent_theta[:, k] if gaps else _nan(N),
                "agreement": pick(agree, k),
                "rho": pick(main.rho, k),
            },
            _join(*parts),
            agent=k,
        ))
    return network, agents


def aggregate_table(tables) -> MetricsTable:
    """Per-step medians across seeds; ``flags`` counts flagged seeds."""
    if not tables:
        raise ValueError("nothing to aggregate")
    L = min(len(t) for t in tables)
    cols = {}
    for name in NUMERIC:
        stack = np.array([t.columns[name][:L] for t in tables])
        cols[name] = _nan(L) if np.all(np.isnan(stack)) else np.median(stack, axis=0)
    counts = [sum(1 for t in tables if t.flags[i]) for i in range(L)]
    return MetricsTable("median", cols, [f"flagged_seeds={c}" if c else "" for c in counts])


def run_seed(cfg, seed):
    """Run the configured algorithm for one seed; returns the traces."""
    if cfg.algorithm == "zopo":
        return run_zopo(cfg, seed), None
    main = run_maopac_decpomdp(cfg, seed)
    if cfg.algorithm == "oracle_pair":
        return main, run_maopac_oracle(cfg, main.trajectory())
    return main, None


def _seed_job(args):
    cfg, seed = args
    main, oracle = run_seed(cfg, seed)
    return seed_tables(main, oracle)


@dataclass
class ExperimentResult:
    per_seed: dict  # seed -> network MetricsTable
    per_agent: dict  # seed -> list of per-agent MetricsTable
    aggregate: MetricsTable
    files: list = field(default_factory=list)


def run_experiment(cfg, out_dir=None, plots: bool = False, jobs: int = 1) -> ExperimentResult:
    """Run every configured seed and write the CSVs (and SVG panels) to
    ``out_dir`` (default ``cfg.output_dir``). Files written before a failure
    are removed."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    seeds = list(cfg.seeds)
    jobs_args = [(cfg, s) for s in seeds]
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(seeds))) as pool:
            results = list(pool.map(_seed_job, jobs_args))
    else:
        results = [_seed_job(a) for a in jobs_args]
    per_seed = {s: r[0] for s, r in zip(seeds, results)}
    per_agent = {s: r[1] for s, r in zip(seeds, results)}
    aggregate = aggregate_table([per_seed[s] for s in seeds])
    result = ExperimentResult(per_seed, per_agent, aggregate)

    created_dir = not out.exists()
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for s in seeds:
            written.append(_write(out / f"seed_{s}.csv", _csv_text([per_seed[s]])))
            written.append(_write(out / f"seed_{s}_agents.csv", _csv_text(per_agent[s])))
        written.append(_write(out / "aggregate.csv", _csv_text([aggregate])))
        if cfg.raw is not None:
            written.append(_write(out / "config.json", json.dumps(cfg.raw, indent=2, sort_keys=True) + "\n"))
        if plots:
            written += write_plots(aggregate, out, cfg.algorithm)
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        if created_dir:
            _remove_empty_tree(out)
        raise
    result.files = written
    return result


def _write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def _remove_empty_tree(root: Path):
    for dirpath, _, _ in sorted(os.walk(root), key=lambda t: -len(t[0])):
        try:
            os.rmdir(dirpath)
        except OSError:
            pass


def write_plots(table: MetricsTable, out: Path, algorithm: str) -> list:
    """One SVG line plot per panel with data; trend-level only (no axis scale
    is implied beyond the data itself)."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ConfigurationError("plots need matplotlib: pip install 'artifact[plots]'") from exc
    matplotlib.rcParams["svg.hashsalt"] = "maopac"
    plot_dir = out / "plots"
    plot_dir.mkdir(exist_ok=True)
    paths = []
    for name, (col, title) in PANELS.items():
        y = table.columns[col]
        if np.all(np.isnan(y)):
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(table.steps, y, lw=1)
        ax.set_xlabel("step")
        ax.set_ylabel(col)
        ax.set_title(f"{title} ({algorithm}, median over seeds)")
        path = plot_dir / f"{name}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths


def quarter_means(series) -> tuple[float, float]:
    """Means over the first and last quarter of a series."""
    y = np.asarray(series, dtype=np.float64)
    q = max(len(y) // 4, 1)
    return float(y[:q].mean()), float(y[-q:].mean())
