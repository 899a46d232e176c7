"""Experiment runner: N seeded repetitions of one strategy/config and their statistics."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .costmodel import CostParams
from .errors import InvalidArgument
from .gateway import Session, TransferReport, check_strategy, run_strategy
from .sim import Event, Simulator, run_until_idle
from .topology import GatewayConfig

__all__ = [
    "Event",
    "Simulator",
    "run_until_idle",
    "ExperimentSpec",
    "MetricStats",
    "RunStats",
    "run_seed",
    "run_one",
    "run_experiment",
    "compute_stats",
]

MB = 1_000_000
METRICS = ("t_total", "e_total", "t_switch", "e_switch", "bytes_delivered", "reconfig_count", "delivery_ratio")


@dataclass(frozen=True)
class ExperimentSpec:
    strategy: str = "time_sharing"
    config: GatewayConfig = field(default_factory=lambda: GatewayConfig("GM", "GM"))
    payload_bytes: int = 10 * MB
    n_runs: int = 50
    seed: int = 0
    # ordered (dotted key, value text) pairs applied on top of the defaults
    overrides: tuple[tuple[str, str], ...] = ()
    source: str = "A"

    def validate(self) -> "ExperimentSpec":
        if self.n_runs < 1:
            raise InvalidArgument("n_runs must be at least 1")
        if self.payload_bytes < 0:
            raise InvalidArgument("payload must be nonnegative")
        if self.seed < 0:
            raise InvalidArgument("seed must be nonnegative")
        check_strategy(self.strategy, self.config)
        self.params()
        return self

    def params(self) -> CostParams:
        return CostParams().with_overrides(self.overrides)

    def session(self) -> Session:
        return Session(self.payload_bytes, self.source)


def run_seed(master: int, index: int) -> np.random.Generator:
    """Generator for run ``index``: SeedSequence(master) child number ``index``.

    Equivalent to ``SeedSequence(master).spawn(n)[index]`` for any n > index,
    so a run's stream does not depend on how many runs there are or on which
    worker executes it.
    """
    ss = np.random.SeedSequence(entropy=master, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(ss))


def run_one(spec: ExperimentSpec, index: int, params: CostParams | None = None) -> TransferReport:
    params = params if params is not None else spec.params()
    rng = run_seed(spec.seed, index)
    return run_strategy(spec.strategy, spec.config, spec.session(), None, params, rng)


def _run_chunk(args):
    spec, indices = args
    params = spec.params()
    return [run_one(spec, i, params) for i in indices]


@dataclass(frozen=True)
class MetricStats:
    mean: float
    std: float
    min: float
    max: float

    @classmethod
    def of(cls, values) -> "MetricStats":
        v = [float(x) for x in values]
        if not v:
            raise InvalidArgument("no values")
        lo, hi = min(v), max(v)
        mean = math.fsum(v) / len(v)
        # fsum/len can land one ulp outside [min, max] when all values are equal
        mean = min(max(mean, lo), hi)
        var = math.fsum((x - mean) ** 2 for x in v) / len(v)
        return cls(mean, math.sqrt(var), lo, hi)


@dataclass(frozen=True)
class RunStats:
    n: int
    metrics: dict[str, MetricStats]

    def __getitem__(self, name: str) -> MetricStats:
        return self.metrics[name]

    def __getattr__(self, name: str) -> MetricStats:
        metrics = self.__dict__.get("metrics", {})
        if name in metrics:
            return metrics[name]
        raise AttributeError(name)


def compute_stats(reports) -> RunStats:
    reports = list(reports)
    if not reports:
        raise InvalidArgument("no reports")
    return RunStats(len(reports), {m: MetricStats.of(getattr(r, m) for r in reports) for m in METRICS})


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> tuple[list[TransferReport], RunStats]:
    """Run ``spec.n_runs`` independent sessions; results are in run-index order."""
    spec.validate()
    if jobs <= 1 or spec.n_runs < 2:
        params = spec.params()
        reports = [run_one(spec, i, params) for i in range(spec.n_runs)]
    else:
        jobs = min(jobs, spec.n_runs)
        chunks = [(spec, list(range(k, spec.n_runs, jobs))) for k in range(jobs)]
        reports = [None] * spec.n_runs
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for (_, indices), part in zip(chunks, pool.map(_run_chunk, chunks)):
                for i, rep in zip(indices, part):
                    reports[i] = rep
    return reports, compute_stats(reports)
