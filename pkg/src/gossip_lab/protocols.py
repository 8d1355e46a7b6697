"""Consensus and broadcast protocols on the noisy uniform PULL model.

The default constants come from the drift analysis of k-majority: the phase-1
sample size is the next odd integer above ``c / eps**2`` with
``c = (e*pi/8) * 1.1**2``, phase 1 lasts ``ceil(4 * log2 n)`` rounds, and the
single phase-2 round samples ``c4 * eps**-2 * ln n`` nodes with
``c4 = 5 / c3**2`` and ``c3 = 1/200``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .channel import NoiseChannel
from .core import OpinionVector, ParameterError
from .oracle import drift_constant, next_odd_at_least
from .schedulers import (InfectionState, ModelKind, ModelMismatchError, pull_round,
                         sample_pulls_with_infection, sample_zero_counts)


@dataclass(frozen=True)
class MajorityParams:
    c: float = field(default_factory=drift_constant)
    alpha: float = 4.0
    c3: float = 1 / 200
    c4: float | None = None
    k1: int | None = None
    k2: int | None = None
    tie_break: bool = False

    def __post_init__(self):
        if self.c4 is None:
            object.__setattr__(self, "c4", 5 / self.c3 ** 2)
        if self.c <= 0 or self.alpha <= 0 or self.c3 <= 0 or self.c4 <= 0:
            raise ParameterError("majority constants must be positive")
        for name in ("k1", "k2"):
            k = getattr(self, name)
            if k is None:
                continue
            if k < 1 or (k % 2 == 0 and not self.tie_break):
                raise ParameterError(f"{name}={k} must be odd unless tie_break is set")
        if self.k1 is not None and self.k1 < 3:
            raise ParameterError("k1 must be >= 3")

    def phase1_samples(self, epsilon: float) -> int:
        if self.k1 is not None:
            return self.k1
        return max(3, next_odd_at_least(self.c / epsilon ** 2))

    def phase1_rounds(self, n: int) -> int:
        return max(1, math.ceil(self.alpha * math.log2(n)))

    def phase2_samples(self, n: int, epsilon: float) -> int:
        k1 = self.phase1_samples(epsilon)
        if self.k2 is not None:
            return max(self.k2, k1)
        return max(next_odd_at_least(self.c4 * math.log(n) / epsilon ** 2), k1)

    def samples_per_node(self, n: int, epsilon: float) -> int:
        """Total pulls one node makes over both phases."""
        return (self.phase1_samples(epsilon) * self.phase1_rounds(n)
                + self.phase2_samples(n, epsilon))

    @classmethod
    def from_delta(cls, delta: float, **kw) -> "MajorityParams":
        return cls(c=drift_constant(delta), **kw)


@dataclass(frozen=True)
class BroadcastParams:
    c_b: float = 10.0
    majority: MajorityParams = field(default_factory=MajorityParams)

    def __post_init__(self):
        if self.c_b <= 0:
            raise ParameterError("c_b must be positive")

    def phase1_pulls(self, n: int, epsilon: float) -> int:
        return math.ceil(self.c_b * n * math.log(n) / epsilon ** 2)

    @staticmethod
    def threshold(n: int, epsilon: float) -> float:
        """Ones-fraction at or above which a node guesses 1."""
        return 0.5 - epsilon * (1 - 1 / (2 * n))


@dataclass
class RunOutcome:
    converged: bool
    final_value: int | None
    rounds_used: int
    bias_trajectory: np.ndarray
    valid: bool
    final_config: OpinionVector
    infected_trajectory: np.ndarray | None = None
    stable: bool | None = None
    phase1_correct: int | None = None

    @property
    def initial_bias(self) -> int:
        return int(self.bias_trajectory[0])

    @property
    def final_bias(self) -> int:
        return int(self.bias_trajectory[-1])

    @property
    def infected_final(self) -> int | None:
        if self.infected_trajectory is None:
            return None
        return int(self.infected_trajectory[-1])


def _adopt(zero_counts: np.ndarray, k: int, tie_break: bool,
           rng: np.random.Generator) -> np.ndarray:
    twice = 2 * zero_counts
    out = (twice < k).astype(np.int8)
    if k % 2 == 0:
        if not tie_break:
            raise ParameterError(f"even k={k} needs tie_break")
        ties = np.flatnonzero(twice == k)
        out[ties] = rng.integers(0, 2, size=ties.size, dtype=np.int8)
    return out


def _majority_update(config: OpinionVector, k: int, ch: NoiseChannel,
                     rng: np.random.Generator, tie_break=False, explicit=False,
                     infection: InfectionState | None = None):
    if k % 2 == 0 and not tie_break:
        raise ParameterError(f"even k={k} needs tie_break")
    if infection is not None:
        zeros, hit = sample_pulls_with_infection(config, infection, ch, k, rng)
        infection = infection.copy()
        infection.infected |= hit
    elif explicit:
        zeros, _ = pull_round(config, ch, k, rng)
    else:
        zeros = sample_zero_counts(config, ch, k, rng)
    return OpinionVector(_adopt(zeros, k, tie_break, rng)), infection


def k_majority_step(config: OpinionVector, k: int, ch: NoiseChannel,
                    rng: np.random.Generator, *, tie_break: bool = False,
                    explicit: bool = False) -> OpinionVector:
    """Every node pulls ``k`` noisy samples and adopts the sample majority.

    ``explicit=True`` draws every target and flip (common random numbers
    per node and sample); the default draws one binomial count per node,
    which has the same law and works for very large ``k``.
    """
    return _majority_update(config, k, ch, rng, tie_break, explicit)[0]


def run_majority_protocol(n: int, ch: NoiseChannel, initial: OpinionVector,
                          params: MajorityParams, rng: np.random.Generator, *,
                          infection: InfectionState | None = None,
                          emulate_1pull: bool = False, soak: bool = False,
                          soak_rounds: int | None = None) -> RunOutcome:
    """Phase 1: ``rounds1`` steps of k1-majority; phase 2: one step of k2-majority.

    With ``emulate_1pull`` every k-sample batch is charged as ``k`` rounds of
    the 1-PULL model (samples still taken against the batch-start
    configuration).  ``soak`` continues with ``soak_rounds`` (default
    ``10 * rounds1``) extra phase-2 steps and records in ``stable`` whether
    unanimity survived all of them.
    """
    if n < 4:
        raise ParameterError("the majority protocol needs n >= 4")
    if initial.n != n:
        raise ParameterError(f"initial vector has {initial.n} nodes, expected {n}")
    k1 = params.phase1_samples(ch.epsilon)
    r1 = params.phase1_rounds(n)
    k2 = params.phase2_samples(n, ch.epsilon)

    config = initial
    traj = [initial.bias]
    inf_traj = None if infection is None else [infection.count]

    def step(k):
        nonlocal config, infection
        before = config.bias
        config, infection = _majority_update(config, k, ch, rng, params.tie_break,
                                             infection=infection)
        if emulate_1pull:
            traj.extend([before] * (k - 1))
            if inf_traj is not None:
                inf_traj.extend([inf_traj[-1]] * (k - 1))
        traj.append(config.bias)
        if inf_traj is not None:
            inf_traj.append(infection.count)

    for _ in range(r1):
        step(k1)
    step(k2)

    final = config.unanimous_value()
    valid = final is not None and bool(np.any(initial.opinions == final))
    stable = None
    if soak:
        stable = final is not None
        extra = 10 * r1 if soak_rounds is None else soak_rounds
        probe = config
        for _ in range(extra):
            probe, _ = _majority_update(probe, k2, ch, rng, params.tie_break)
            if probe.unanimous_value() != final:
                stable = False
                break

    return RunOutcome(
        converged=final is not None,
        final_value=final,
        rounds_used=len(traj) - 1,
        bias_trajectory=np.asarray(traj, dtype=np.int64),
        valid=valid,
        final_config=config,
        infected_trajectory=None if inf_traj is None else np.asarray(inf_traj, dtype=np.int64),
        stable=stable,
    )


def run_noisy_broadcast(n: int, ch: NoiseChannel, source_bit: int,
                        params: BroadcastParams, rng: np.random.Generator, *,
                        source: int = 0, emulate_1pull: bool = False,
                        soak: bool = False) -> RunOutcome:
    """Threshold guessing from a quiet background, then majority consensus on the guesses.

    Non-source nodes display 0 while every node pulls ``phase1_pulls``
    times; a node guesses 1 iff its observed ones-fraction reaches
    :meth:`BroadcastParams.threshold`.  The source keeps its own bit.  The
    run counts as converged only when every node ends on ``source_bit``.
    """
    if n < 4:
        raise ParameterError("broadcast needs n >= 4")
    if source_bit not in (0, 1):
        raise ParameterError("source_bit must be 0 or 1")
    if not 0 <= source < n:
        raise ParameterError("source index out of range")
    display = np.zeros(n, dtype=np.int8)
    display[source] = source_bit
    display = OpinionVector(display)

    pulls = params.phase1_pulls(n, ch.epsilon)
    ones = pulls - sample_zero_counts(display, ch, pulls, rng)
    guesses = (ones / pulls >= params.threshold(n, ch.epsilon)).astype(np.int8)
    guesses[source] = source_bit
    guesses = OpinionVector(guesses)
    phase1_correct = int(np.sum(guesses.opinions == source_bit))

    second = run_majority_protocol(n, ch, guesses, params.majority, rng,
                                   emulate_1pull=emulate_1pull, soak=soak)
    traj = np.concatenate([np.full(pulls, display.bias, dtype=np.int64),
                           second.bias_trajectory])
    ok = second.final_value == source_bit
    return RunOutcome(
        converged=ok,
        final_value=second.final_value,
        rounds_used=pulls + second.rounds_used,
        bias_trajectory=traj,
        valid=ok,
        final_config=second.final_config,
        stable=second.stable,
        phase1_correct=phase1_correct,
    )


def baseline_copy_node_one(config: OpinionVector, model: ModelKind) -> OpinionVector:
    """Every node pulls node 1 and copies it; needs node identities."""
    if ModelKind(model) is not ModelKind.GENERAL_PULL:
        raise ModelMismatchError(f"copying a named node needs GENERAL_PULL, not {model}")
    return OpinionVector(np.full(config.n, config[0], dtype=np.int8))


def run_copy_node_one(initial: OpinionVector, rng: np.random.Generator,
                      infection: InfectionState | None = None) -> RunOutcome:
    """:func:`baseline_copy_node_one` packaged as a one-round run."""
    final = baseline_copy_node_one(initial, ModelKind.GENERAL_PULL)
    inf_traj = None
    if infection is not None:
        after = infection.copy()
        if infection.infected[0]:
            after.infected[:] = True
        inf_traj = np.array([infection.count, after.count], dtype=np.int64)
    value = final[0]
    return RunOutcome(True, value, 1, np.array([initial.bias, final.bias], dtype=np.int64),
                      True, final, inf_traj)


Runner = Callable[[OpinionVector, np.random.Generator, "InfectionState | None"], RunOutcome]


def majority_runner(ch: NoiseChannel, params: MajorityParams | None = None) -> Runner:
    """Bind channel and constants so the protocol fits the experiment harness."""
    params = params or MajorityParams()

    def run(initial, rng, infection=None):
        return run_majority_protocol(initial.n, ch, initial, params, rng, infection=infection)

    return run


def with_k1(params: MajorityParams, k1: int | None) -> MajorityParams:
    return params if k1 is None else replace(params, k1=k1)
