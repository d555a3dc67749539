"""Run configuration: JSON schema, defaults and validation.

Every section is optional; missing keys take the defaults below. Unknown keys
are rejected so that typos do not silently fall back to a default.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .actor_critic import HyperParams
from .bounds import constants
from .environment import GridConfig, grid_violations
from .errors import AssumptionViolation, ConfigurationError, TopologyError
from .topology import build_metropolis_matrix, graph_from_spec, validate_combination_matrix

ALGORITHMS = ("decpomdp", "oracle_pair", "zopo")
DEFAULT_POSITIONS = (0, 15, 3, 12, 5, 10, 6, 9, 1)

DEFAULTS = {
    "environment": {"grid_side": 4, "agent_positions": list(DEFAULT_POSITIONS[:5]), "sigma": 1.0, "seed": 0},
    "topology": {"graph": "path"},
    "hyper": {
        "gamma": 0.2,
        "lambda": 0.5,
        "zeta": 0.5,
        "b_eps": 0.5,
        "beta0": 1.0,
        "beta_exponent": 0.6,
        "eps": 0.1,
        "T_state": 20,
        "T_rho": 50,
        "T_state_max": 200,
        "lipschitz": 1.0,
    },
    "policy": {"kappa": 0.05, "temperature": 5.0, "actor_init": "behavior", "critic_init_scale": 0.1},
    "run": {"algorithm": "oracle_pair", "steps": 2000, "seeds": [0], "diagnostics": True, "schedule": "fixed"},
    "zopo": {"radius": 0.5, "episodes": 1, "horizon": 10, "step_size": 0.05, "step_exponent": 0.5},
    "output_dir": "runs",
}


@dataclass(frozen=True)
class PolicyConfig:
    kappa: float = 0.05
    temperature: float = 5.0
    actor_init: str = "behavior"
    critic_init_scale: float = 0.1

    def violations(self):
        out = []
        if not 0 <= self.kappa <= 1:
            out.append(f"policy.kappa ({self.kappa}) must lie in [0, 1]")
        if not math.isfinite(self.temperature):
            out.append("policy.temperature must be finite")
        if self.actor_init not in ("behavior", "zeros"):
            out.append(f"policy.actor_init must be 'behavior' or 'zeros', got {self.actor_init!r}")
        if not self.critic_init_scale >= 0:
            out.append("policy.critic_init_scale must be nonnegative")
        return out


@dataclass(frozen=True)
class ZopoConfig:
    radius: float = 0.5
    episodes: int = 1
    horizon: int = 10
    step_size: float = 0.05
    step_exponent: float = 0.5

    def violations(self):
        out = []
        if not self.radius > 0:
            out.append(f"zopo.radius ({self.radius}) must be positive")
        for name in ("episodes", "horizon"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                out.append(f"zopo.{name} must be a positive integer, got {v!r}")
        if not self.step_size >= 0:
            out.append(f"zopo.step_size ({self.step_size}) must be nonnegative")
        if not self.step_exponent >= 0:
            out.append(f"zopo.step_exponent ({self.step_exponent}) must be nonnegative")
        return out

    def step(self, m):
        return self.step_size / (1.0 + m) ** self.step_exponent


@dataclass(frozen=True)
class RunConfig:
    env: GridConfig
    topology: object
    hyper: HyperParams
    policy: PolicyConfig = PolicyConfig()
    algorithm: str = "oracle_pair"
    steps: int = 2000
    seeds: tuple = (0,)
    diagnostics: bool = True
    schedule: str = "fixed"
    zopo: ZopoConfig = ZopoConfig()
    output_dir: str = "runs"
    raw: dict = field(default=None, compare=False, repr=False)

    @property
    def agent_count(self):
        return len(self.env.agent_positions)

    def combination_matrix(self):
        return build_metropolis_matrix(graph_from_spec(self.topology, self.agent_count))

    def graph(self):
        return graph_from_spec(self.topology, self.agent_count)

    @property
    def auto_state_schedule(self):
        return self.schedule == "auto" or self.hyper.T_state == "auto"

    def with_overrides(self, **sections) -> "RunConfig":
        """Return a new validated config with JSON-style section overrides,
        e.g. ``cfg.with_overrides(run={"steps": 10})``."""
        raw = copy.deepcopy(self.raw if self.raw is not None else DEFAULTS)
        for name, value in sections.items():
            if isinstance(value, dict) and isinstance(raw.get(name), dict):
                raw[name].update(value)
            else:
                raw[name] = value
        return config_from_dict(raw)


def _merge(user):
    out = copy.deepcopy(DEFAULTS)
    problems = []
    for key, value in user.items():
        if key not in DEFAULTS:
            problems.append(f"unknown section {key!r}")
            continue
        if isinstance(DEFAULTS[key], dict):
            if not isinstance(value, dict):
                problems.append(f"section {key!r} must be an object")
                continue
            for sub in value:
                if sub not in DEFAULTS[key]:
                    problems.append(f"unknown key {key}.{sub}")
            out[key].update(value)
        else:
            out[key] = value
    return out, problems


def _diagnostics_flag(v):
    if isinstance(v, bool):
        return v
    if v in ("on", "off"):
        return v == "on"
    raise ValueError(v)


def config_from_dict(data: dict) -> RunConfig:
    """Build and validate a config; raises ConfigurationError listing every
    violated requirement."""
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a JSON object")
    raw, problems = _merge(data)
    e, h, p, r, z = raw["environment"], raw["hyper"], raw["policy"], raw["run"], raw["zopo"]
    try:
        env = GridConfig(int(e["grid_side"]), tuple(e["agent_positions"]), float(e["sigma"]), int(e["seed"]))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(problems + [f"environment section malformed: {exc}"]) from None
    problems += grid_violations(env)
    if not env.sigma > 0:
        problems.append(f"sigma ({env.sigma}) must be positive: likelihoods need a density (Assumption 3)")
    hyper = HyperParams(
        gamma=h["gamma"], lam=h["lambda"], zeta=h["zeta"], b_eps=h["b_eps"], beta0=h["beta0"],
        beta_exponent=h["beta_exponent"], eps=h["eps"], T_state=h["T_state"], T_rho=h["T_rho"],
        T_state_max=h["T_state_max"], lipschitz=h["lipschitz"],
    )
    hyper_problems = hyper.violations()
    problems += hyper_problems
    if not hyper_problems:
        try:
            constants(hyper)
        except AssumptionViolation as exc:
            problems.append(str(exc))
    policy = PolicyConfig(**p)
    problems += policy.violations()
    zopo = ZopoConfig(**z)
    problems += zopo.violations()
    try:
        diagnostics = _diagnostics_flag(r["diagnostics"])
    except ValueError:
        problems.append(f"run.diagnostics must be true/false or 'on'/'off', got {r['diagnostics']!r}")
        diagnostics = True
    if r["algorithm"] not in ALGORITHMS:
        problems.append(f"run.algorithm must be one of {ALGORITHMS}, got {r['algorithm']!r}")
    if r["schedule"] not in ("fixed", "auto"):
        problems.append(f"run.schedule must be 'fixed' or 'auto', got {r['schedule']!r}")
    steps = r["steps"]
    if not (isinstance(steps, int) and not isinstance(steps, bool) and steps >= 1):
        problems.append(f"run.steps must be a positive integer, got {steps!r}")
    seeds = r["seeds"]
    if not (isinstance(seeds, list) and seeds and all(isinstance(s, int) and s >= 0 for s in seeds)):
        problems.append(f"run.seeds must be a nonempty list of nonnegative integers, got {seeds!r}")
        seeds = [0]
    elif len(set(seeds)) != len(seeds):
        problems.append("run.seeds must not repeat")
    topo = raw["topology"]["graph"]
    if not grid_violations(env):
        try:
            graph = graph_from_spec(topo, len(env.agent_positions))
            C = build_metropolis_matrix(graph)
            report = validate_combination_matrix(C, graph)
            problems += [f"{v}: Assumptions 1-2" for v in report]
        except TopologyError as exc:
            problems.append(f"{exc}: Assumption 2")
    if problems:
        raise ConfigurationError(problems)
    return RunConfig(
        env=env, topology=topo, hyper=hyper, policy=policy, algorithm=r["algorithm"], steps=steps,
        seeds=tuple(seeds), diagnostics=diagnostics, schedule=r["schedule"], zopo=zopo,
        output_dir=str(raw["output_dir"]), raw=raw,
    )


def default_config_path() -> Path:
    return Path(str(resources.files("maopac") / "data" / "default.json"))


def _parse_json(text: str, path: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        line = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        pointer = " " * max(exc.colno - 1, 0) + "^"
        raise ConfigurationError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})\n    {line}\n    {pointer}"
        ) from None


def load_config(path) -> RunConfig:
    """Load a JSON config file. ``"default"`` names the shipped default."""
    if str(path) == "default":
        path = default_config_path()
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file {path} does not exist")
    return config_from_dict(_parse_json(path.read_text(), str(path)))


def default_config(**overrides) -> RunConfig:
    cfg = load_config("default")
    return cfg.with_overrides(**overrides) if overrides else cfg


def with_agent_count(cfg: RunConfig, agents: int) -> RunConfig:
    """Same config with the first ``agents`` default sensor positions."""
    if not 1 <= agents <= len(DEFAULT_POSITIONS):
        raise ConfigurationError(f"agent count must lie in [1, {len(DEFAULT_POSITIONS)}], got {agents}")
    return cfg.with_overrides(environment={"agent_positions": list(DEFAULT_POSITIONS[:agents])})
