"""Config-driven experiment sweeps written to CSV.

A config is an INI file with one ``[experiment]`` section::

    [experiment]
    model = qubo:n=16,std=10,seed=7
    methods = rf, mh, unbiased_pns
    budgets = 1000, 10000, 100000
    replications = 100
    seed = 1
    output = results.csv
    scheme = systematic
    set_sizes = 8
    L0 = 100
    burn_in = discard
    metrics = tvd

See ``README.md`` for every key. The grid is
``methods x set_sizes x L0 x budgets``; each grid point runs
``replications`` chains with seeds from :func:`derive_seed`.
"""
from __future__ import annotations

import configparser
import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import models
from .continuous import DonutsModel, run_mh_continuous, run_unbiased_pns_continuous
from .metrics import WeightedEmpirical, donuts_bias_suite, tvd
from .samplers import BurnIn, Method, SamplerConfig, prepare, sample
from .schemes import PartialNeighborScheme, SchemeKind

COLUMNS = (
    "method",
    "model",
    "scheme",
    "set_size",
    "L0",
    "budget",
    "seed",
    "jump_size",
    "cpu_seconds",
    "burn_in_cpu_seconds",
    "metric",
    "value",
)

CONTINUOUS_METHODS = (Method.MH, Method.UNBIASED_PNS)
DISCRETE_METRICS = ("tvd", "probabilities", "last_key", "log_weight")
DONUTS_METRICS = ("donuts_bias",)
_MASK = (1 << 64) - 1


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(global_seed: int, grid_index: int, replication: int) -> int:
    """64-bit seed ``mix(mix(mix(global) ^ grid) ^ replication)``.

    ``mix`` is the SplitMix64 finalizer, a bijection on 64-bit integers, so
    for a fixed ``(global_seed, grid_index)`` distinct replications never
    collide.
    """
    z = _splitmix64(int(global_seed) & _MASK)
    z = _splitmix64(z ^ (int(grid_index) & _MASK))
    return _splitmix64(z ^ (int(replication) & _MASK))


# ---------------------------------------------------------------------------
# model specs


def parse_model_spec(spec: str):
    """Build a model from ``name[:key=value,...]``.

    ``triangle``, ``hypercube16``, ``qubo:n=16,std=10,seed=0``,
    ``qubo-file:path=Q.txt``, ``donuts:mu0=9,sigma=0.1``.
    """
    name, _, rest = spec.strip().partition(":")
    opts: dict[str, str] = {}
    if rest:
        for part in rest.split(","):
            k, eq, v = part.partition("=")
            if not eq:
                raise ConfigError(f"bad model option {part!r} in {spec!r}")
            opts[k.strip()] = v.strip()
    name = name.strip().lower()
    try:
        if name == "triangle" and not opts:
            return models.triangle()
        if name == "hypercube16" and not opts:
            return models.hypercube16()
        if name == "qubo":
            seed = opts.get("seed")
            return models.make_qubo_random(
                int(opts.get("n", 16)),
                float(opts.get("std", 10.0)),
                None if seed is None else int(seed),
            )
        if name == "qubo-file":
            return models.QuboModel.load(opts["path"])
        if name == "donuts":
            return DonutsModel(float(opts.get("mu0", 9.0)), float(opts.get("sigma", 0.1)))
    except (KeyError, ValueError, OSError) as exc:
        raise ConfigError(f"cannot build model {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown model spec {spec!r}")


# ---------------------------------------------------------------------------
# config


def _list(raw: str, conv=str) -> list:
    return [conv(v.strip()) for v in raw.replace("\n", ",").split(",") if v.strip()]


def _int(v: str) -> int:
    return int(float(v)) if "e" in v.lower() else int(v)


@dataclass
class ExperimentConfig:
    model: str
    methods: list[str]
    budgets: list[int]
    replications: int = 1
    seed: int = 0
    output: str = "results.csv"
    scheme: str = "full"
    set_sizes: list[int] = field(default_factory=lambda: [0])
    L0: list[int] = field(default_factory=lambda: [100])
    burn_in: str = "discard"
    metrics: list[str] = field(default_factory=list)
    step: float = 1.0

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise ConfigError(f"cannot read config {path}")
        if "experiment" not in cp:
            raise ConfigError(f"{path}: missing [experiment] section")
        s = cp["experiment"]
        known = {
            "model", "methods", "budgets", "replications", "seed", "output", "scheme",
            "set_sizes", "l0", "burn_in", "metrics", "step",
        }
        unknown = set(s) - known
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        try:
            cfg = cls(
                model=s.get("model", ""),
                methods=_list(s.get("methods", "")),
                budgets=_list(s.get("budgets", ""), _int),
                replications=_int(s.get("replications", "1")),
                seed=_int(s.get("seed", "0")),
                output=s.get("output", "results.csv"),
                scheme=s.get("scheme", "full").strip().lower(),
                set_sizes=_list(s.get("set_sizes", "0"), _int),
                L0=_list(s.get("L0", "100"), _int),
                burn_in=s.get("burn_in", "discard").strip().lower(),
                metrics=_list(s.get("metrics", "")),
                step=float(s.get("step", "1.0")),
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        out = Path(cfg.output)
        if not out.is_absolute():
            cfg.output = str(Path(path).resolve().parent / out)
        return cfg

    def build_model(self):
        return parse_model_spec(self.model)

    def burn_in_rule(self) -> BurnIn:
        kind, _, arg = self.burn_in.partition(":")
        try:
            if kind == "none":
                return BurnIn.none()
            if kind == "discard":
                return BurnIn.discard(_int(arg) if arg else None)
            if kind == "optimize":
                return BurnIn.optimize(_int(arg))
        except ValueError as exc:
            raise ConfigError(f"bad burn_in {self.burn_in!r}: {exc}") from exc
        raise ConfigError(f"unknown burn_in {self.burn_in!r}")

    def make_scheme(self, set_size: int, L0: int) -> PartialNeighborScheme:
        try:
            kind = SchemeKind(self.scheme)
            return PartialNeighborScheme(kind, set_size if kind is not SchemeKind.FULL else None, L0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self):
        """Check everything that can be checked before running; returns the model."""
        if not self.model:
            raise ConfigError("model is required")
        if not self.methods:
            raise ConfigError("methods list is empty")
        if not self.budgets:
            raise ConfigError("budgets list is empty")
        if any(b < 1 for b in self.budgets):
            raise ConfigError("budgets must be positive")
        if self.replications < 1:
            raise ConfigError("replications must be positive")
        if not self.set_sizes or not self.L0:
            raise ConfigError("set_sizes and L0 need at least one value")
        model = self.build_model()
        try:
            methods = [Method(m) for m in self.methods]
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        rule = self.burn_in_rule()
        continuous = isinstance(model, DonutsModel)
        if continuous:
            bad = [m.value for m in methods if m not in CONTINUOUS_METHODS]
            if bad:
                raise ConfigError(f"methods {bad} do not apply to a continuous model")
            if self.scheme not in ("pairs", "full"):
                raise ConfigError("continuous models use the pairs scheme")
            if rule.kind == "optimize":
                raise ConfigError("optimize burn-in applies to discrete models only")
            allowed = DONUTS_METRICS
        else:
            if self.scheme == "pairs":
                raise ConfigError("pairs scheme applies to continuous models only")
            allowed = DISCRETE_METRICS
        metrics = self.metrics or [allowed[0]]
        bad = [m for m in metrics if m not in allowed]
        if bad:
            raise ConfigError(f"metrics {bad} not available for model {self.model!r}")
        if not continuous and "tvd" in metrics and model.n_states > models.MAX_EXACT_STATES:
            raise ConfigError("tvd needs an enumerable model")
        if not continuous and "probabilities" in metrics and model.n_states > 1024:
            raise ConfigError("probabilities metric is limited to 1024 states")
        for n in self.set_sizes:
            for L0 in self.L0:
                scheme = self.make_scheme(n if not continuous else max(n, 1), L0)
                if not continuous:
                    try:
                        scheme.effective_size(model.n_moves)
                    except ValueError as exc:
                        raise ConfigError(str(exc)) from exc
        self.metrics = metrics
        return model

    def grid(self) -> list[tuple[str, int, int, int]]:
        return [
            (m, n, L0, b)
            for m in self.methods
            for n in self.set_sizes
            for L0 in self.L0
            for b in self.budgets
        ]


# ---------------------------------------------------------------------------
# running


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _discrete_metrics(model, chain, metrics, exact):
    out = []
    for name in metrics:
        if name == "tvd":
            out.append(("tvd", tvd(WeightedEmpirical.from_chain(chain), exact)))
        elif name == "probabilities":
            emp = WeightedEmpirical.from_chain(chain).dense(model.n_states)
            names = getattr(model, "names", None)
            for k, p in enumerate(emp):
                label = names[k] if names is not None else str(k)
                out.append((f"p[{label}]", float(p)))
        elif name == "last_key":
            out.append(("last_key", int(chain.keys[-1])))
        elif name == "log_weight":
            out.append(("log_weight", float(model.log_weight(chain.final_state))))
    return out


def _run_task(cfg: ExperimentConfig, model, exact, task):
    gi, rep, method, set_size, L0, budget = task
    seed = derive_seed(cfg.seed, gi, rep)
    rule = cfg.burn_in_rule()
    if isinstance(model, DonutsModel):
        scheme = cfg.make_scheme(max(set_size, 1), L0) if cfg.scheme == "pairs" else None
        nb = rule.discard_count(budget)
        run = run_mh_continuous if Method(method) is Method.MH else run_unbiased_pns_continuous
        arg = cfg.step if run is run_mh_continuous else (scheme or PartialNeighborScheme.pairs(25, L0))
        gen = np.random.default_rng(seed)
        t0 = time.process_time()
        x0 = run(model, arg, nb, gen, burn_in=0).states[-1] if nb else None
        t1 = time.process_time()
        chain = run(model, arg, budget, gen, x0=x0, burn_in=0)
        t2 = time.process_time()
        burn_cpu, cpu = t1 - t0, t2 - t1
        rows = [(f"bias_{k}", float(v)) for k, v in donuts_bias_suite(chain, model.mu0, model.sigma)._asdict().items()]
    else:
        scheme = cfg.make_scheme(set_size, L0)
        sc = SamplerConfig(method, budget, scheme, seed, rule)
        gen = np.random.default_rng(seed)
        t0 = time.process_time()
        t = prepare(model, sc, gen)
        t1 = time.process_time()
        chain = sample(model, sc, t, gen)
        t2 = time.process_time()
        burn_cpu, cpu = t1 - t0, t2 - t1
        rows = _discrete_metrics(model, chain, cfg.metrics, exact)
    cpu = max(cpu, 1e-9)
    head = [method, cfg.model, cfg.scheme, set_size, L0, budget, seed, chain.jump_size, cpu, burn_cpu]
    return [(gi, rep, i, head + [name, value]) for i, (name, value) in enumerate(rows)]


def _worker_count() -> int:
    raw = os.environ.get("PNSAMPLER_WORKERS", "")
    if raw.strip():
        n = int(raw)
        if n < 1:
            raise ConfigError("PNSAMPLER_WORKERS must be positive")
        return n
    return os.cpu_count() or 1


def _tasks(cfg: ExperimentConfig):
    return [
        (gi, rep, m, n, L0, b)
        for gi, (m, n, L0, b) in enumerate(cfg.grid())
        for rep in range(cfg.replications)
    ]


def _task_chunk(args):
    cfg, tasks = args
    model = cfg.build_model()
    exact = _exact_for(cfg, model)
    return [row for task in tasks for row in _run_task(cfg, model, exact, task)]


def _exact_for(cfg, model):
    if isinstance(model, DonutsModel) or "tvd" not in cfg.metrics:
        return None
    return models.exact_distribution(model)


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> Path:
    """Run the sweep and write the sorted CSV to ``cfg.output``.

    Rows are appended to ``<output>.partial`` as each task finishes, so an
    interrupted run keeps what it finished. The final file is sorted by grid
    point, replication and metric, which makes it independent of scheduling.
    """
    model = cfg.validate()
    exact = _exact_for(cfg, model)
    tasks = _tasks(cfg)
    workers = workers or _worker_count()
    out = Path(cfg.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    partial = out.with_name(out.name + ".partial")
    rows = []
    with open(partial, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)

        def emit(batch):
            for r in batch:
                w.writerow([_fmt(v) for v in r[3]])
            fh.flush()
            rows.extend(batch)

        if workers <= 1 or len(tasks) <= 1:
            for task in tasks:
                emit(_run_task(cfg, model, exact, task))
        else:
            chunks = [(cfg, tasks[i::workers]) for i in range(workers)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for batch in pool.map(_task_chunk, chunks):
                    emit(batch)
    rows.sort(key=lambda r: r[:3])
    tmp = out.with_name(out.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(v) for v in r[3]])
    os.replace(tmp, out)
    partial.unlink()
    return out
