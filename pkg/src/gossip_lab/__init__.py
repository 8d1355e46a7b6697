"""Simulation and exact-math toolkit for noisy gossip consensus and broadcast."""
from .channel import NoiseChannel, observe_probability, transmit
from .core import (OpinionVector, ParameterError, RandomStream, bias, make_biased,
                   make_canonical, make_majority_pair)
from .experiments import (ExperimentSpec, RunRecord, hybrid_scan, infection_growth_experiment,
                          majority_pair_experiment, run_sweep)
from .oracle import (TwoPartyBound, binomial_beta_check, central_binomial_check, drift_gap,
                     kl_bernoulli, majority_win_prob, two_party_min_rounds)
from .protocols import (BroadcastParams, MajorityParams, RunOutcome, baseline_copy_node_one,
                        k_majority_step, run_majority_protocol, run_noisy_broadcast)
from .schedulers import (InfectionState, ModelKind, RoundTranscript, infection_round,
                         population_step, pull_round)

__version__ = "0.1.0"
