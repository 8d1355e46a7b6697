"""Monte Carlo harness: replicas, sweeps, persistence and the infection experiments.

Replica ``i`` of a sweep always runs on ``RandomStream(master_seed, i)``
where ``i`` is its global index, so results do not depend on scheduling or
on the number of worker threads.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .channel import NoiseChannel
from .core import (OpinionVector, ParameterError, RandomStream, make_biased, make_canonical,
                   make_majority_pair)
from .protocols import (BroadcastParams, MajorityParams, RunOutcome, baseline_copy_node_one,
                        run_copy_node_one, run_majority_protocol, run_noisy_broadcast)
from .schedulers import InfectionState, ModelKind, infection_only_round

PROTOCOLS = ("majority", "broadcast")
CSV_HEADER = ("run_id", "protocol", "model", "n", "epsilon", "seed", "replica_index", "rounds",
              "converged", "final_value", "valid", "initial_bias", "final_bias",
              "infected_final", "wall_time_ms")
_INITIAL_RE = re.compile(r"^(unanimous-0|unanimous-1|random|canonical\((-?\d+)\)|bias\((-?\d+)\))$")


class SpecError(ParameterError):
    """Invalid experiment spec; ``problems`` lists ``(field, message)`` pairs."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        super().__init__("; ".join(f"{f}: {m}" for f, m in problems))


@dataclass
class ExperimentSpec:
    protocol: str = "majority"
    model: ModelKind = ModelKind.UNIFORM_PULL
    n_values: list = field(default_factory=lambda: [1024])
    epsilon_values: list = field(default_factory=lambda: [0.25])
    replicas: int = 10
    master_seed: int = 0
    initial_condition: str = "random"
    params: MajorityParams | BroadcastParams | None = None
    soak: bool = False
    source_bit: int = 1
    emulate_1pull: bool = False
    workers: int = 1

    def __post_init__(self):
        self.model = ModelKind(self.model)
        if self.params is None:
            self.params = BroadcastParams() if self.protocol == "broadcast" else MajorityParams()

    def validate(self) -> "ExperimentSpec":
        problems = []
        if self.protocol not in PROTOCOLS:
            problems.append(("protocol", f"unknown protocol {self.protocol!r}"))
        if not self.model.is_pull:
            problems.append(("model", f"{self.model.value} cannot run pull protocols"))
        if not self.n_values:
            problems.append(("n_values", "empty"))
        elif any(not isinstance(n, int) or n < 4 for n in self.n_values):
            problems.append(("n_values", "every n must be an integer >= 4"))
        if not self.epsilon_values:
            problems.append(("epsilon_values", "empty"))
        elif any(not 0 < e <= 0.5 for e in self.epsilon_values):
            problems.append(("epsilon_values", "every epsilon must lie in (0, 1/2]"))
        if not isinstance(self.replicas, int) or self.replicas < 1:
            problems.append(("replicas", "must be >= 1"))
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2 ** 64:
            problems.append(("master_seed", "must be a 64-bit non-negative integer"))
        m = _INITIAL_RE.match(self.initial_condition or "")
        if m is None:
            problems.append(("initial_condition", f"cannot parse {self.initial_condition!r}"))
        else:
            for n in self.n_values if isinstance(self.n_values, list) else []:
                try:
                    initial_vector(self.initial_condition, n, np.random.default_rng(0))
                except ParameterError as exc:
                    problems.append(("initial_condition", f"n={n}: {exc}"))
                    break
        if self.protocol == "broadcast" and not isinstance(self.params, BroadcastParams):
            problems.append(("params", "broadcast needs BroadcastParams"))
        if self.protocol == "majority" and not isinstance(self.params, MajorityParams):
            problems.append(("params", "majority needs MajorityParams"))
        if self.source_bit not in (0, 1):
            problems.append(("source_bit", "must be 0 or 1"))
        if not isinstance(self.workers, int) or self.workers < 1:
            problems.append(("workers", "must be >= 1"))
        if problems:
            raise SpecError(problems)
        return self

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["model"] = self.model.value
        d["params"] = _params_to_dict(self.params)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise SpecError([(u, "unknown field") for u in unknown])
        d = dict(d)
        protocol = d.get("protocol", "majority")
        if isinstance(d.get("params"), dict):
            d["params"] = _params_from_dict(protocol, d["params"])
        try:
            return cls(**d)
        except ValueError as exc:
            raise SpecError([("model", str(exc))]) from exc

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        return cls.from_dict(json.loads(text))


def _params_to_dict(params) -> dict:
    if isinstance(params, BroadcastParams):
        return {"c_b": params.c_b, "majority": asdict(params.majority)}
    return asdict(params)


def _params_from_dict(protocol: str, d: dict):
    if protocol == "broadcast":
        d = dict(d)
        maj = MajorityParams(**d.pop("majority", {}))
        return BroadcastParams(majority=maj, **d)
    return MajorityParams(**d)


def initial_vector(cond: str, n: int, rng: np.random.Generator) -> OpinionVector:
    """Build the starting configuration named by ``cond`` for ``n`` nodes."""
    m = _INITIAL_RE.match(cond)
    if m is None:
        raise ParameterError(f"unknown initial condition {cond!r}")
    if cond == "unanimous-0":
        return make_canonical(n, n)
    if cond == "unanimous-1":
        return make_canonical(n, 0)
    if cond == "random":
        return OpinionVector(rng.integers(0, 2, size=n, dtype=np.int8))
    if m.group(2) is not None:
        return make_canonical(n, int(m.group(2)))
    return make_biased(n, int(m.group(3)))


@dataclass
class RunRecord:
    run_id: str
    protocol: str
    model: str
    n: int
    epsilon: float
    seed: int
    replica_index: int
    rounds: int
    converged: bool
    final_value: int | None
    valid: bool
    initial_bias: int
    final_bias: int
    infected_final: int | None
    wall_time_ms: float

    def csv_row(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, bool):
                return "true" if v else "false"
            return str(v)

        row = [fmt(getattr(self, name)) for name in CSV_HEADER[:-1]]
        row.append(f"{self.wall_time_ms:.3f}")
        return row


def _run_one(spec: ExperimentSpec, n: int, eps: float, replica: int,
             stream_index: int) -> RunRecord:
    rng = RandomStream(spec.master_seed, stream_index).generator()
    ch = NoiseChannel(eps)
    t0 = time.perf_counter()
    if spec.protocol == "broadcast":
        out = run_noisy_broadcast(n, ch, spec.source_bit, spec.params, rng,
                                  emulate_1pull=spec.emulate_1pull, soak=spec.soak)
    else:
        initial = initial_vector(spec.initial_condition, n, rng)
        out = run_majority_protocol(n, ch, initial, spec.params, rng,
                                    emulate_1pull=spec.emulate_1pull, soak=spec.soak)
    wall = (time.perf_counter() - t0) * 1000
    return RunRecord(
        run_id=f"{spec.master_seed}-{stream_index}",
        protocol=spec.protocol, model=spec.model.value, n=n, epsilon=eps,
        seed=spec.master_seed, replica_index=replica, rounds=out.rounds_used,
        converged=out.converged, final_value=out.final_value, valid=out.valid,
        initial_bias=out.initial_bias, final_bias=out.final_bias,
        infected_final=out.infected_final, wall_time_ms=wall,
    )


def _cells(spec: ExperimentSpec):
    for n in spec.n_values:
        for eps in spec.epsilon_values:
            yield n, eps


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    ci = stats.binomtest(successes, trials).proportion_ci(0.95, method="wilson")
    return float(ci.low), float(ci.high)


def summarize(records: Sequence[RunRecord]) -> list[dict]:
    """Per ``(n, epsilon)`` cell: success rate (converged and valid) with Wilson 95% bounds."""
    groups: dict[tuple, list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.n, r.epsilon), []).append(r)
    cells = []
    for (n, eps), rs in groups.items():
        ok = sum(r.converged and r.valid for r in rs)
        lo, hi = wilson_interval(ok, len(rs))
        rounds = [r.rounds for r in rs]
        cells.append({"n": n, "epsilon": eps, "success_rate": ok / len(rs),
                      "wilson_low": lo, "wilson_high": hi,
                      "mean_rounds": statistics.fmean(rounds),
                      "median_rounds": statistics.median(rounds)})
    return cells


def run_sweep(spec: ExperimentSpec) -> tuple[list[RunRecord], list[dict]]:
    """Run ``replicas`` runs in every ``(n, epsilon)`` cell of ``spec``."""
    spec.validate()
    jobs = []
    for cell, (n, eps) in enumerate(_cells(spec)):
        for r in range(spec.replicas):
            jobs.append((n, eps, r, cell * spec.replicas + r))
    if spec.workers == 1:
        records = [_run_one(spec, *job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(lambda job: _run_one(spec, *job), jobs))
    records.sort(key=lambda r: (r.n, r.epsilon, r.replica_index))
    return records, summarize(records)


def write_records_csv(records: Iterable[RunRecord], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.csv_row())


def records_to_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    write_records_csv(records, buf)
    return buf.getvalue()


def read_records_csv(fh) -> list[dict]:
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ParameterError("unexpected CSV header")
    return list(reader)


def summary_json(cells: list[dict]) -> str:
    return json.dumps({"cells": cells}, indent=2, sort_keys=True) + "\n"


def fit_log_scaling(n_values: Sequence[int], mean_rounds: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares ``rounds ~ a + b * log2(n)``; returns ``(a, b, r_squared)``."""
    x = np.log2(np.asarray(n_values, dtype=float))
    y = np.asarray(mean_rounds, dtype=float)
    if np.ptp(y) == 0:
        return float(y[0]), 0.0, 0.0
    fit = stats.linregress(x, y)
    return float(fit.intercept), float(fit.slope), float(fit.rvalue ** 2)


# --- hybrid argument -----------------------------------------------------

@dataclass
class HybridResult:
    ez: np.ndarray           # ez[k] = estimated P(consensus on 1 | canonical(n, k))
    gaps: np.ndarray         # gaps[k-1] = ez[k-1] - ez[k], k = 1..n
    k_star: int
    max_gap: float
    infection_estimate: float
    infected_counts: np.ndarray

    def as_dict(self) -> dict:
        return {"ez": self.ez.tolist(), "gaps": self.gaps.tolist(), "k_star": self.k_star,
                "max_gap": self.max_gap, "infection_estimate": self.infection_estimate}


def _make_runner(protocol: str, model: ModelKind, epsilon: float, params):
    model = ModelKind(model)
    if protocol == "copy":
        def run(initial, rng, infection=None):
            baseline_copy_node_one(initial, model)
            return run_copy_node_one(initial, rng, infection)
        return run
    if protocol == "majority":
        if not model.is_pull:
            raise ParameterError(f"majority protocol cannot run under {model.value}")
        ch = NoiseChannel(epsilon)
        params = params or MajorityParams()

        def run(initial, rng, infection=None):
            return run_majority_protocol(initial.n, ch, initial, params, rng, infection=infection)
        return run
    raise ParameterError(f"unknown protocol {protocol!r}")


def hybrid_scan(protocol: str, model: ModelKind, n: int, replicas: int, master_seed: int = 0,
                *, epsilon: float = 0.5, params: MajorityParams | None = None,
                delta: float = 0.0) -> HybridResult:
    """Estimate consensus-on-1 probabilities along canonical inputs and locate the sharpest step.

    Node ``k_star`` is the first-highest drop of the estimate between inputs
    ``k_star - 1`` and ``k_star``.  The protocol is then rerun from input
    ``k_star`` with node ``k_star`` as the only infection source, and the
    fraction of runs that infect at least ``(1 - 2 delta) n`` nodes is
    returned as ``infection_estimate``.
    """
    if n > 64:
        raise ParameterError("hybrid scan is limited to n <= 64")
    if replicas < 1:
        raise ParameterError("replicas must be >= 1")
    run = _make_runner(protocol, model, epsilon, params)
    ez = np.zeros(n + 1)
    for k in range(n + 1):
        initial = make_canonical(n, k)
        hits = 0
        for r in range(replicas):
            rng = RandomStream(master_seed, k * replicas + r).generator()
            hits += run(initial, rng).final_value == 1
        ez[k] = hits / replicas
    gaps = ez[:-1] - ez[1:]
    k_star = int(np.argmax(gaps)) + 1
    need = (1 - 2 * delta) * n
    counts = np.zeros(replicas, dtype=np.int64)
    start = make_canonical(n, k_star)
    for r in range(replicas):
        rng = RandomStream(master_seed, (n + 1) * replicas + r).generator()
        out = run(start, rng, InfectionState.from_sources(n, [k_star - 1]))
        counts[r] = out.infected_final
    return HybridResult(ez, gaps, k_star, float(gaps[k_star - 1]),
                        float(np.mean(counts >= need - 1e-9)), counts)


# --- infection growth ------------------------------------------------------

GAMMAS = (0.5, 0.9, 1.0)


@dataclass
class InfectionGrowth:
    trajectories: np.ndarray          # shape (replicas, rounds + 1)
    first_reach: dict                 # gamma -> per-replica first round (-1 if never)

    def growth_factors(self) -> np.ndarray:
        t = self.trajectories.astype(float)
        return t[:, 1:] / t[:, :-1]

    def as_dict(self) -> dict:
        return {"trajectories": self.trajectories.tolist(),
                "first_reach": {str(g): v.tolist() for g, v in self.first_reach.items()},
                "max_infected": int(self.trajectories.max()),
                "max_growth_factor": float(self.growth_factors().max()) if self.trajectories.shape[1] > 1 else 1.0}


def infection_growth_experiment(model: ModelKind, n: int, initial_infected: int, rounds: int,
                                replicas: int, master_seed: int = 0) -> InfectionGrowth:
    """Content-free infection dynamics from nodes ``0..initial_infected-1``."""
    if not 1 <= initial_infected <= n:
        raise ParameterError("initial_infected must lie in [1, n]")
    if rounds < 0 or replicas < 1:
        raise ParameterError("rounds must be >= 0 and replicas >= 1")
    traj = np.zeros((replicas, rounds + 1), dtype=np.int64)
    for r in range(replicas):
        rng = RandomStream(master_seed, r).generator()
        state = InfectionState.from_sources(n, range(initial_infected))
        traj[r, 0] = state.count
        for t in range(1, rounds + 1):
            state = infection_only_round(model, state, rng)
            traj[r, t] = state.count
    first = {}
    for g in GAMMAS:
        reached = traj >= math.ceil(g * n - 1e-9)
        first[g] = np.where(reached.any(axis=1), reached.argmax(axis=1), -1)
    return InfectionGrowth(traj, first)


# --- majority pair ----------------------------------------------------------

@dataclass
class MajorityPairReport:
    correct: tuple[np.ndarray, np.ndarray]         # per side, per replica
    infected_fraction: tuple[np.ndarray, np.ndarray]

    @property
    def correct_rate(self) -> tuple[float, float]:
        return float(self.correct[0].mean()), float(self.correct[1].mean())

    def median_fraction_when_both_correct(self) -> float | None:
        both = self.correct[0] & self.correct[1]
        if not both.any():
            return None
        fr = np.concatenate([self.infected_fraction[0][both], self.infected_fraction[1][both]])
        return float(np.median(fr))

    def as_dict(self) -> dict:
        return {"correct_rate": list(self.correct_rate),
                "median_infected_fraction_both_correct": self.median_fraction_when_both_correct(),
                "infected_fraction": [f.tolist() for f in self.infected_fraction]}


def majority_pair_experiment(n: int, b: int, ch: NoiseChannel, params: MajorityParams | None,
                             replicas: int, master_seed: int = 0) -> MajorityPairReport:
    """Run the Majority Protocol from both inputs of :func:`make_majority_pair`.

    The last ``b`` nodes (where the inputs differ) are the infection sources;
    side 0 has majority 0 and side 1 majority 1.
    """
    pair = make_majority_pair(n, b)
    params = params or MajorityParams()
    sources = range(n - b, n)
    correct = (np.zeros(replicas, dtype=bool), np.zeros(replicas, dtype=bool))
    frac = (np.zeros(replicas), np.zeros(replicas))
    for side, initial in enumerate(pair):
        for r in range(replicas):
            rng = RandomStream(master_seed, side * replicas + r).generator()
            out = run_majority_protocol(n, ch, initial, params, rng,
                                        infection=InfectionState.from_sources(n, sources))
            correct[side][r] = out.final_value == side
            frac[side][r] = out.infected_final / n
    return MajorityPairReport(correct, frac)
