import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from gossip_lab.channel import NoiseChannel
from gossip_lab.core import OpinionVector, ParameterError, RandomStream, make_canonical
from gossip_lab.experiments import infection_growth_experiment
from gossip_lab.schedulers import (InfectionState, ModelKind, calls_received, general_push_round,
                                   gossip_round, infection_only_round, infection_round,
                                   population_step, pull_round, push_round,
                                   sample_pulls_with_infection, sample_zero_counts)
from gossip_lab.channel import observe_probability


def rng(i=0, seed=11):
    return RandomStream(seed, i).generator()


def test_noiseless_unanimous_pull():
    zeros, tr = pull_round(make_canonical(50, 50), NoiseChannel(0.5), 3, rng())
    assert np.all(zeros == 3)
    assert len(tr) == 150
    assert np.all(np.bincount(tr.receiver, minlength=50) == 3)


def test_pull_round_replay():
    cfg = make_canonical(30, 12)
    ch = NoiseChannel(0.2)
    z1, t1 = pull_round(cfg, ch, 5, rng(3))
    z2, t2 = pull_round(cfg, ch, 5, rng(3))
    assert np.array_equal(z1, z2)
    for a, b in [(t1.sender, t2.sender), (t1.receiver, t2.receiver), (t1.received, t2.received)]:
        assert np.array_equal(a, b)


def _tv(samples, k, p):
    emp = np.bincount(samples, minlength=k + 1) / samples.size
    return 0.5 * np.abs(emp - stats.binom.pmf(np.arange(k + 1), k, p)).sum()


@pytest.mark.parametrize("explicit", [True, False])
def test_pull_counts_are_binomial(explicit):
    n, k = 1000, 7
    cfg = make_canonical(n, 620)
    ch = NoiseChannel(0.15)
    p = observe_probability(cfg.bias, n, ch)
    g = rng(5)
    draws = []
    for _ in range(100):  # 10^5 node-rounds
        z = pull_round(cfg, ch, k, g)[0] if explicit else sample_zero_counts(cfg, ch, k, g)
        draws.append(z)
    assert _tv(np.concatenate(draws), k, p) <= 0.01


def test_infection_sampler_marginals():
    n, k = 400, 9
    cfg = make_canonical(n, 100)
    state = InfectionState.from_sources(n, range(150, 230))
    ch = NoiseChannel(0.3)
    g = rng(9)
    zs, hits = [], []
    for _ in range(250):
        z, h = sample_pulls_with_infection(cfg, state, ch, k, g)
        zs.append(z)
        hits.append(h)
    assert _tv(np.concatenate(zs), k, observe_probability(cfg.bias, n, ch)) <= 0.01
    p_hit = 1 - (1 - 80 / n) ** k
    rate = np.concatenate(hits).mean()
    assert abs(rate - p_hit) < 4 * math.sqrt(p_hit * (1 - p_hit) / 1e5)


def test_zero_rounds_single_source():
    res = infection_growth_experiment(ModelKind.UNIFORM_GOSSIP, 64, 1, 0, 3)
    assert res.trajectories.tolist() == [[1], [1], [1]]


@pytest.mark.parametrize("model", [ModelKind.UNIFORM_PUSH, ModelKind.GENERAL_PUSH])
def test_push_doubling(model):
    res = infection_growth_experiment(model, 500, 1, 8, 200, master_seed=4)
    t = res.trajectories
    assert np.all(t[:, 1:] <= 2 * t[:, :-1])
    assert np.all(t <= 2 ** np.arange(t.shape[1]))
    if model is ModelKind.GENERAL_PUSH:
        assert t[0].tolist() == [1, 2, 4, 8, 16, 32, 64, 128, 256]


def test_push_five_rounds_cap():
    res = infection_growth_experiment(ModelKind.UNIFORM_PUSH, 4096, 1, 5, 300, master_seed=2)
    assert res.trajectories.max() <= 32


def test_push_rejects_double_send():
    state = InfectionState.from_sources(4, [0])
    from gossip_lab.schedulers import RoundTranscript
    blank = np.full(2, -1, dtype=np.int8)
    tr = RoundTranscript(np.array([0, 0]), np.array([1, 2]), blank, blank)
    with pytest.raises(ParameterError):
        infection_round(ModelKind.UNIFORM_PUSH, state, tr)
    assert infection_round(ModelKind.UNIFORM_PULL, state, tr).count == 3


def test_push_senders_decline():
    tr = push_round(10, rng(), senders=np.arange(10) < 3)
    assert sorted(tr.sender.tolist()) == [0, 1, 2]
    assert (tr.partner[3:] == -1).all()
    tr = general_push_round([-1, 4, -1, 0])
    assert tr.sender.tolist() == [1, 3] and tr.receiver.tolist() == [4, 0]


def test_gossip_infects_both_directions():
    state = InfectionState.from_sources(6, [2])
    from gossip_lab.schedulers import _content_free
    callee = np.array([2, 3, 4, 5, 0, 1])
    tr = _content_free(np.concatenate([np.arange(6), callee]),
                       np.concatenate([callee, np.arange(6)]), callee)
    new = infection_round(ModelKind.UNIFORM_GOSSIP, state, tr)
    # node 0 called node 2 (infected), node 2 called node 4
    assert sorted(np.flatnonzero(new.infected).tolist()) == [0, 2, 4]


def test_gossip_growth_early_phase():
    """Below sqrt(n) infected, the per-round growth factor averages at most 3."""
    n, trials = 1024, 1000
    factors, worst = [], []
    for r in range(trials):
        g = rng(r, seed=21)
        state = InfectionState.from_sources(n, [0])
        fs = []
        while state.count <= math.isqrt(n):
            new = infection_only_round(ModelKind.UNIFORM_GOSSIP, state, g)
            fs.append(new.count / state.count)
            state = new
        factors.extend(fs)
        worst.append(max(fs))
    factors = np.asarray(factors)
    mean, se = factors.mean(), factors.std(ddof=1) / math.sqrt(factors.size)
    assert mean <= 3 + 4 * se
    assert np.mean(np.asarray(worst) <= 6) >= 0.99


def test_gossip_each_node_calls_once_and_degree_bound():
    n = 1024
    bound = 3 * math.log(n) / math.log(math.log(n))
    ok = 0
    for r in range(300):
        tr = gossip_round(n, rng(r))
        assert np.array_equal(np.sort(tr.sender[:n]), np.arange(n))
        ok += calls_received(tr).max() <= bound
    assert ok / 300 >= 0.99


def test_population_basics():
    state = InfectionState.from_sources(20, [5])
    assert state.count == 1
    ev = population_step(state, rng())
    assert ev.activator != ev.responder
    assert state.count in (1, 2)


def test_population_needs_n_log_n_steps():
    n = 512
    need = 0.2 * n * math.log(n)
    ok = 0
    for r in range(200):
        g = rng(r, seed=8)
        state = InfectionState.from_sources(n, [0])
        steps = 0
        while state.count < n // 2:
            population_step(state, g)
            steps += 1
        ok += steps >= need
    assert ok / 200 >= 0.95


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(list(ModelKind)), st.integers(8, 80), st.integers(0, 10 ** 6))
def test_infection_monotone(model, n, seed):
    g = np.random.default_rng(seed)
    state = InfectionState.from_sources(n, [int(g.integers(n))])
    for _ in range(6):
        new = infection_only_round(model, state, g)
        assert np.all(new.infected >= state.infected)
        assert all(new.infected[s] for s in new.sources)
        state = new


def test_infection_content_independent():
    n, k = 300, 5
    cfg = make_canonical(n, 140)
    trajectories = []
    for eps in (0.5, 0.01):
        g = rng(17)
        state = InfectionState.from_sources(n, [0])
        traj = []
        for _ in range(6):
            _, tr = pull_round(cfg, NoiseChannel(eps), k, g)
            state = infection_round(ModelKind.UNIFORM_PULL, state, tr)
            traj.append(state.infected.copy())
        trajectories.append(np.array(traj))
    assert np.array_equal(*trajectories)


def test_general_pull_fastest_schedule():
    state = InfectionState.from_sources(50, [7])
    assert infection_only_round(ModelKind.GENERAL_PULL, state, rng()).count == 50


def test_model_kind_flags():
    assert ModelKind("uniform-pull").is_pull and ModelKind.UNIFORM_PULL.is_uniform
    assert ModelKind.GENERAL_PUSH.is_push and not ModelKind.GENERAL_PUSH.is_uniform
    with pytest.raises(ValueError):
        ModelKind("radio")
