"""Round-based communication models on the complete graph.

Each round generator returns a :class:`RoundTranscript` of directed delivery
events.  Infection tracking consumes transcripts only, so it never looks at
message content or channel noise.

Node indices are 0-based here (node ``i`` in 1-based numbering is
index ``i - 1``).  Uniform models draw partners from all ``n`` nodes, the
caller included.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .channel import NoiseChannel, observe_probability, receive
from .core import OpinionVector, ParameterError


class ModelKind(str, enum.Enum):
    UNIFORM_PULL = "uniform-pull"
    UNIFORM_PUSH = "uniform-push"
    UNIFORM_GOSSIP = "uniform-gossip"
    GENERAL_PULL = "general-pull"
    GENERAL_PUSH = "general-push"
    POPULATION_UNIFORM = "population-uniform"

    @property
    def is_uniform(self) -> bool:
        return self in (ModelKind.UNIFORM_PULL, ModelKind.UNIFORM_PUSH,
                        ModelKind.UNIFORM_GOSSIP, ModelKind.POPULATION_UNIFORM)

    @property
    def is_push(self) -> bool:
        return self in (ModelKind.UNIFORM_PUSH, ModelKind.GENERAL_PUSH)

    @property
    def is_pull(self) -> bool:
        return self in (ModelKind.UNIFORM_PULL, ModelKind.GENERAL_PULL)


class ModelMismatchError(ParameterError):
    """An operation was requested under a communication model that cannot run it."""


@dataclass
class InfectionState:
    """Per-node infected flags.  Single owner; rounds return fresh copies."""

    infected: np.ndarray
    sources: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        self.infected = np.asarray(self.infected, dtype=bool)
        self.sources = frozenset(int(s) for s in self.sources)
        if self.sources and not all(self.infected[s] for s in self.sources):
            raise ParameterError("every source must be infected")

    @classmethod
    def from_sources(cls, n: int, sources: Iterable[int]) -> "InfectionState":
        sources = frozenset(int(s) for s in sources)
        if any(not 0 <= s < n for s in sources):
            raise ParameterError(f"source index outside [0, {n})")
        flags = np.zeros(n, dtype=bool)
        flags[list(sources)] = True
        return cls(flags, sources)

    @property
    def n(self) -> int:
        return int(self.infected.size)

    @property
    def count(self) -> int:
        return int(self.infected.sum())

    def copy(self) -> "InfectionState":
        return InfectionState(self.infected.copy(), self.sources)


@dataclass
class RoundTranscript:
    """Directed delivery events of one round.

    ``sent``/``received`` hold -1 for content-free messages.  ``partner`` is
    the partner each node chose this round (-1 when it declined), recorded by
    the 1-sample round generators.
    """

    sender: np.ndarray
    receiver: np.ndarray
    sent: np.ndarray
    received: np.ndarray
    partner: np.ndarray | None = None

    def __len__(self):
        return int(self.sender.size)

    def events(self):
        for s, r, a, b in zip(self.sender, self.receiver, self.sent, self.received):
            yield int(s), int(r), int(a), int(b)


def _content_free(sender: np.ndarray, receiver: np.ndarray, partner=None) -> RoundTranscript:
    blank = np.full(sender.size, -1, dtype=np.int8)
    return RoundTranscript(sender, receiver, blank, blank.copy(), partner)


def pull_round(displayed: OpinionVector, ch: NoiseChannel, k: int,
               rng: np.random.Generator) -> tuple[np.ndarray, RoundTranscript]:
    """Every node pulls ``k`` uniform targets with replacement through the channel.

    All targets are drawn before the channel uniforms, so the delivery pattern of a seed
    does not depend on ``epsilon``.  Returns per-node counts of observed
    zeros and the full transcript.
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    n = displayed.n
    targets = rng.integers(0, n, size=(n, k))
    u = rng.random((n, k))
    sent = displayed.opinions[targets]
    received = receive(sent, u, ch)
    zero_counts = k - received.sum(axis=1, dtype=np.int64)
    receiver = np.repeat(np.arange(n), k)
    partner = targets[:, 0].copy() if k == 1 else None
    transcript = RoundTranscript(targets.ravel(), receiver, sent.ravel(),
                                 received.ravel(), partner)
    return zero_counts, transcript


def general_pull_round(displayed: OpinionVector, targets, ch: NoiseChannel,
                       rng: np.random.Generator) -> tuple[np.ndarray, RoundTranscript]:
    """Each node ``v`` pulls from the node named ``targets[v]``."""
    targets = np.asarray(targets, dtype=np.int64)
    n = displayed.n
    if targets.shape != (n,) or targets.min() < 0 or targets.max() >= n:
        raise ParameterError("general pull needs one valid target per node")
    sent = displayed.opinions[targets]
    received = receive(sent, rng.random(n), ch)
    zeros = (received == 0).astype(np.int64)
    return zeros, RoundTranscript(targets, np.arange(n), sent, received, targets.copy())


def sample_zero_counts(displayed: OpinionVector, ch: NoiseChannel, k: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Aggregate form of :func:`pull_round`: per-node zero counts only.

    Given the configuration, each node's ``k`` noisy pulls are i.i.d.
    Bernoulli with success probability :func:`observe_probability`, and nodes
    are independent of each other, so one binomial draw per node has exactly
    the distribution of the explicit round.  Usable for any ``k``.
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    p = observe_probability(displayed.bias, displayed.n, ch)
    return rng.binomial(k, p, size=displayed.n).astype(np.int64)


def sample_pulls_with_infection(displayed: OpinionVector, state: InfectionState,
                                ch: NoiseChannel, k: int,
                                rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate ``k``-pull round that also reports which pullers hit an infected node.

    Targets are split into four classes (displayed bit x infected flag) by a
    multinomial draw per node; noise is then applied per class.  Returns the
    zero counts and a boolean mask of nodes that pulled from an infected
    node at least once.
    """
    n = displayed.n
    ops = displayed.opinions
    inf = state.infected
    sizes = np.array([np.sum((ops == 0) & ~inf), np.sum((ops == 0) & inf),
                      np.sum((ops == 1) & ~inf), np.sum((ops == 1) & inf)], dtype=float)
    counts = rng.multinomial(k, sizes / n, size=n)
    keep = 0.5 + ch.epsilon
    shown0 = counts[:, 0] + counts[:, 1]
    shown1 = counts[:, 2] + counts[:, 3]
    zeros = rng.binomial(shown0, keep) + (shown1 - rng.binomial(shown1, keep))
    hit = (counts[:, 1] + counts[:, 3]) > 0
    return zeros.astype(np.int64), hit


def push_round(n: int, rng: np.random.Generator, senders=None,
               displayed: OpinionVector | None = None,
               ch: NoiseChannel | None = None) -> RoundTranscript:
    """Uniform PUSH: each sending node pushes to one uniform node.

    ``senders`` is a boolean mask (default: everybody sends); nodes outside
    it decline.  Messages carry the displayed bit through ``ch`` when both
    are given, otherwise they are content-free.
    """
    mask = np.ones(n, dtype=bool) if senders is None else np.asarray(senders, dtype=bool)
    targets = rng.integers(0, n, size=n)
    partner = np.where(mask, targets, -1)
    src = np.flatnonzero(mask)
    dst = targets[mask]
    if displayed is None:
        return _content_free(src, dst, partner)
    ch = ch or NoiseChannel.noiseless_channel()
    sent = displayed.opinions[src]
    received = receive(sent, rng.random(src.size), ch)
    return RoundTranscript(src, dst, sent, received, partner)


def general_push_round(targets) -> RoundTranscript:
    """General PUSH with content-free messages; ``targets[v] == -1`` declines."""
    targets = np.asarray(targets, dtype=np.int64)
    src = np.flatnonzero(targets >= 0)
    return _content_free(src, targets[src], targets.copy())


def gossip_round(n: int, rng: np.random.Generator) -> RoundTranscript:
    """Uniform GOSSIP: every node calls one uniform partner and both exchange a message."""
    callee = rng.integers(0, n, size=n)
    caller = np.arange(n)
    sender = np.concatenate([caller, callee])
    receiver = np.concatenate([callee, caller])
    return _content_free(sender, receiver, callee)


def calls_received(transcript: RoundTranscript) -> np.ndarray:
    """Per-node number of times it was chosen as partner this round."""
    if transcript.partner is None:
        raise ParameterError("transcript has no partner record")
    p = transcript.partner
    return np.bincount(p[p >= 0], minlength=p.size)


def infection_round(model: ModelKind, state: InfectionState,
                    transcript: RoundTranscript) -> InfectionState:
    """Infect every receiver of a message whose sender was infected at round start."""
    model = ModelKind(model)
    if model.is_push and np.unique(transcript.sender).size != transcript.sender.size:
        raise ParameterError("a PUSH node may send at most once per round")
    new = state.copy()
    hit = transcript.receiver[state.infected[transcript.sender]]
    new.infected[hit] = True
    return new


@dataclass(frozen=True)
class PopulationEvent:
    activator: int
    responder: int


def population_step(state: InfectionState, rng: np.random.Generator) -> PopulationEvent:
    """One interaction of the uniform population scheduler, applied to ``state`` in place.

    A uniformly random ordered pair of distinct nodes interacts; infection
    passes in either direction.  ``n`` steps make one unit of parallel time.
    """
    n = state.n
    a = int(rng.integers(0, n))
    r = int(rng.integers(0, n - 1))
    if r >= a:
        r += 1
    if state.infected[a] or state.infected[r]:
        state.infected[a] = state.infected[r] = True
    return PopulationEvent(a, r)


def infection_only_round(model: ModelKind, state: InfectionState,
                         rng: np.random.Generator) -> InfectionState:
    """One round of content-free dynamics under ``model``.

    General models use the schedule that spreads fastest: in GENERAL_PUSH
    each infected node pushes to a distinct uninfected node, in GENERAL_PULL
    everybody pulls the lowest-index source.  A POPULATION_UNIFORM round is
    ``n`` scheduler steps.
    """
    model = ModelKind(model)
    n = state.n
    if model is ModelKind.UNIFORM_PUSH:
        return infection_round(model, state, push_round(n, rng))
    if model is ModelKind.UNIFORM_PULL:
        targets = rng.integers(0, n, size=n)
        return infection_round(model, state, _content_free(targets, np.arange(n), targets))
    if model is ModelKind.UNIFORM_GOSSIP:
        return infection_round(model, state, gossip_round(n, rng))
    if model is ModelKind.GENERAL_PUSH:
        targets = np.full(n, -1, dtype=np.int64)
        senders = np.flatnonzero(state.infected)
        fresh = np.flatnonzero(~state.infected)[:senders.size]
        targets[senders[:fresh.size]] = fresh
        return infection_round(model, state, general_push_round(targets))
    if model is ModelKind.GENERAL_PULL:
        if not state.sources:
            return state.copy()
        targets = np.full(n, min(state.sources), dtype=np.int64)
        return infection_round(model, state, _content_free(targets, np.arange(n), targets))
    new = state.copy()
    for _ in range(n):
        population_step(new, rng)
    return new
