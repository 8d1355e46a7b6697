"""``gossip-lab`` command line.

Exit status: 0 on success, 1 on invalid input, 2 on runtime failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

from .channel import NoiseChannel
from .core import ParameterError
from .experiments import (ExperimentSpec, hybrid_scan, infection_growth_experiment,
                          majority_pair_experiment, run_sweep, summary_json, write_records_csv)
from .oracle import (binomial_beta_check, central_binomial_check, drift_constant, drift_gap,
                     kl_bernoulli, next_odd_at_least, two_party_min_rounds)
from .protocols import BroadcastParams, MajorityParams
from .schedulers import ModelKind

SEED_ENV = "GOSSIP_LAB_SEED"
MODELS = [m.value for m in ModelKind]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_seed(p):
    p.add_argument("--seed", type=int, default=None,
                   help=f"master seed (default: ${SEED_ENV}, else the spec's, else 0)")


def _add_output(p):
    p.add_argument("--output", default="-", help="output file, '-' for stdout (default: -)")


def _add_majority_flags(p):
    g = p.add_argument_group("majority protocol constants")
    g.add_argument("--delta", type=float, default=None,
                   help="drift slack; sets c = (e*pi/8)(1+delta)^2 (default: 0.1)")
    g.add_argument("--c", type=float, default=None, help="phase-1 sample constant (default: 1.2915...)")
    g.add_argument("--alpha", type=float, default=None, help="phase-1 length factor on log2 n (default: 4)")
    g.add_argument("--c3", type=float, default=None, help="linear-bias fraction (default: 0.005)")
    g.add_argument("--c4", type=float, default=None, help="phase-2 sample constant (default: 5/c3^2)")
    g.add_argument("--k1", type=int, default=None, help="override phase-1 sample size (default: odd >= c/eps^2)")
    g.add_argument("--k2", type=int, default=None, help="override phase-2 sample size (default: odd >= c4 ln n/eps^2)")
    g.add_argument("--tie-break", action="store_true", help="allow even sample sizes, ties by coin (default: off)")


def _add_run_flags(p, multi: bool):
    p.add_argument("--spec", default=None, help="ExperimentSpec JSON file; flags override it (default: none)")
    p.add_argument("--protocol", choices=["majority", "broadcast"], default=None,
                   help="protocol to run (default: majority)")
    nargs = "+" if multi else None
    p.add_argument("--n", type=int, nargs=nargs, default=None, help="node count(s) (default: 1024)")
    p.add_argument("--eps", type=float, nargs=nargs, default=None, help="noise parameter(s) (default: 0.25)")
    _add_seed(p)
    p.add_argument("--replicas", type=int, default=None, help="replicas per cell (default: 10)")
    p.add_argument("--init", default=None,
                   help="unanimous-0 | unanimous-1 | canonical(k) | bias(b) | random (default: random)")
    p.add_argument("--source-bit", type=int, choices=[0, 1], default=None, help="broadcast source bit (default: 1)")
    p.add_argument("--cb", type=float, default=None, help="broadcast phase-1 length constant (default: 10)")
    p.add_argument("--soak", action="store_true", help="check stability after convergence (default: off)")
    p.add_argument("--emulate-1pull", action="store_true",
                   help="charge each k-sample batch as k 1-pull rounds (default: off)")
    p.add_argument("--workers", type=int, default=None, help="worker threads (default: 1)")
    _add_majority_flags(p)
    _add_output(p)
    p.add_argument("--summary", default=None, help="write the JSON summary to this file (default: none)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gossip-lab", description="Noisy gossip consensus simulator and exact oracles.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    _add_run_flags(sub.add_parser("simulate", help="replicas of one protocol in one cell"), multi=False)
    _add_run_flags(sub.add_parser("sweep", help="replicas over a grid of n and eps"), multi=True)

    p = sub.add_parser("infect", help="content-free infection growth")
    p.add_argument("--model", choices=MODELS, default="uniform-gossip", help="communication model (default: uniform-gossip)")
    p.add_argument("--n", type=int, default=1024, help="node count (default: 1024)")
    p.add_argument("--initial", type=int, default=1, help="initially infected nodes (default: 1)")
    p.add_argument("--rounds", type=int, default=20, help="rounds to run (default: 20)")
    p.add_argument("--replicas", type=int, default=100, help="replicas (default: 100)")
    _add_seed(p)
    _add_output(p)

    p = sub.add_parser("hybrid", help="hybrid scan over canonical inputs")
    p.add_argument("--protocol", choices=["majority", "copy"], default="majority", help="protocol (default: majority)")
    p.add_argument("--model", choices=MODELS, default=None,
                   help="model (default: general-pull for copy, uniform-pull for majority)")
    p.add_argument("--n", type=int, default=16, help="node count, at most 64 (default: 16)")
    p.add_argument("--eps", type=float, default=0.5, help="noise parameter (default: 0.5)")
    p.add_argument("--replicas", type=int, default=200, help="replicas per input (default: 200)")
    p.add_argument("--gamma-delta", type=float, default=0.0,
                   help="almost-consensus slack for the infection target (default: 0)")
    _add_seed(p)
    _add_majority_flags(p)
    _add_output(p)

    p = sub.add_parser("majority-pair", help="majority protocol from the two-sided input pair")
    p.add_argument("--n", type=int, default=1024, help="node count (default: 1024)")
    p.add_argument("--b", type=int, default=2, help="bias magnitude, n - b even (default: 2)")
    p.add_argument("--eps", type=float, default=0.25, help="noise parameter (default: 0.25)")
    p.add_argument("--replicas", type=int, default=20, help="replicas per side (default: 20)")
    _add_seed(p)
    _add_majority_flags(p)
    _add_output(p)

    p = sub.add_parser("oracle", help="exact checks")
    verbs = p.add_subparsers(dest="verb", metavar="VERB", parser_class=_Parser)
    verbs.required = True
    v = verbs.add_parser("identity", help="binomial/beta identity over a grid")
    v.add_argument("--lmax", type=int, default=30, help="largest ell (default: 30)")
    _add_output(v)
    v = verbs.add_parser("drift", help="drift bound over all admissible s")
    v.add_argument("--n", type=int, default=10000, help="node count (default: 10000)")
    v.add_argument("--eps", type=float, default=0.2, help="noise parameter (default: 0.2)")
    v.add_argument("--delta", type=float, default=0.1, help="drift slack (default: 0.1)")
    _add_output(v)
    v = verbs.add_parser("stirling", help="central binomial bracket")
    v.add_argument("--rmax", type=int, default=200, help="largest r (default: 200)")
    _add_output(v)
    v = verbs.add_parser("kl", help="Bernoulli KL divergence in nats")
    v.add_argument("--p", type=float, required=True, help="first parameter (required)")
    v.add_argument("--q", type=float, required=True, help="second parameter (required)")
    _add_output(v)
    v = verbs.add_parser("two-party", help="two-party round lower bound")
    v.add_argument("--delta", type=float, default=0.01, help="error parameter (default: 0.01)")
    v.add_argument("--eps", type=float, default=0.1, help="noise parameter (default: 0.1)")
    _add_output(v)
    return parser


def _seed(args, fallback=None) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer")
    return 0 if fallback is None else fallback


def _majority_params(args, base: MajorityParams | None = None) -> MajorityParams:
    base = base or MajorityParams()
    kw = {}
    if args.delta is not None:
        kw["c"] = drift_constant(args.delta)
    for name in ("c", "alpha", "c3", "c4", "k1", "k2"):
        if getattr(args, name) is not None:
            kw[name] = getattr(args, name)
    if "c3" in kw and "c4" not in kw:
        kw["c4"] = None
    if args.tie_break:
        kw["tie_break"] = True
    return dataclasses.replace(base, **kw) if kw else base


def _spec_from_args(args, multi: bool) -> ExperimentSpec:
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            spec = ExperimentSpec.from_json(fh.read())
    else:
        spec = ExperimentSpec()
    if args.protocol is not None and args.protocol != spec.protocol:
        spec.protocol = args.protocol
        spec.params = BroadcastParams() if args.protocol == "broadcast" else MajorityParams()
    if args.n is not None:
        spec.n_values = list(args.n) if multi else [args.n]
    if args.eps is not None:
        spec.epsilon_values = list(args.eps) if multi else [args.eps]
    spec.master_seed = _seed(args, spec.master_seed if args.spec else None)
    if args.replicas is not None:
        spec.replicas = args.replicas
    if args.init is not None:
        spec.initial_condition = args.init
    if args.source_bit is not None:
        spec.source_bit = args.source_bit
    if args.soak:
        spec.soak = True
    if args.emulate_1pull:
        spec.emulate_1pull = True
    if args.workers is not None:
        spec.workers = args.workers
    if isinstance(spec.params, BroadcastParams):
        cb = spec.params.c_b if args.cb is None else args.cb
        spec.params = BroadcastParams(cb, _majority_params(args, spec.params.majority))
    else:
        spec.params = _majority_params(args, spec.params)
    return spec.validate()


class _Out:
    def __init__(self, target: str):
        self.target = target

    def __enter__(self):
        if self.target == "-":
            return sys.stdout
        self.fh = open(self.target, "w", encoding="utf-8", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.target != "-":
            self.fh.close()


def _emit_json(target: str, doc) -> None:
    with _Out(target) as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _cmd_run(args, multi: bool) -> None:
    spec = _spec_from_args(args, multi)
    records, cells = run_sweep(spec)
    with _Out(args.output) as fh:
        write_records_csv(records, fh)
    if args.summary:
        with _Out(args.summary) as fh:
            fh.write(summary_json(cells))
    elif multi:
        sys.stderr.write(summary_json(cells))


def _cmd_infect(args) -> None:
    res = infection_growth_experiment(ModelKind(args.model), args.n, args.initial,
                                      args.rounds, args.replicas, _seed(args))
    doc = {"model": args.model, "n": args.n, "initial_infected": args.initial}
    doc.update(res.as_dict())
    _emit_json(args.output, doc)


def _cmd_hybrid(args) -> None:
    model = args.model or ("general-pull" if args.protocol == "copy" else "uniform-pull")
    res = hybrid_scan(args.protocol, ModelKind(model), args.n, args.replicas, _seed(args),
                      epsilon=args.eps, params=_majority_params(args), delta=args.gamma_delta)
    doc = {"protocol": args.protocol, "model": model, "n": args.n}
    doc.update(res.as_dict())
    _emit_json(args.output, doc)


def _cmd_pair(args) -> None:
    rep = majority_pair_experiment(args.n, args.b, NoiseChannel(args.eps), _majority_params(args),
                                   args.replicas, _seed(args))
    doc = {"n": args.n, "b": args.b, "epsilon": args.eps}
    doc.update(rep.as_dict())
    _emit_json(args.output, doc)


def _cmd_oracle(args) -> None:
    if args.verb == "identity":
        worst, cases = 0.0, 0
        grid = [round(0.05 * i, 2) for i in range(1, 20)]
        for ell in range(1, args.lmax + 1):
            for j in range(ell):
                for p in grid:
                    worst = max(worst, binomial_beta_check(ell, j, p)[2])
                    cases += 1
        doc = {"lmax": args.lmax, "cases": cases, "max_gap": worst, "holds": worst <= 1e-12}
    elif args.verb == "drift":
        c = drift_constant(args.delta)
        k = next_odd_at_least(c / args.eps ** 2)
        s_max = math.floor(args.n / (2 * math.sqrt(c)))
        worst = min(drift_gap(args.n, s, args.eps, k) - (1 + args.delta) * s / args.n
                    for s in range(1, s_max + 1))
        doc = {"n": args.n, "epsilon": args.eps, "delta": args.delta, "c": c, "k1": k,
               "s_max": s_max, "min_margin": worst, "holds": worst >= 0}
    elif args.verb == "stirling":
        bad = [r for r in range(1, args.rmax + 1)
               if not (lambda t: t[0] <= t[1] <= t[2])(central_binomial_check(r))]
        doc = {"rmax": args.rmax, "violations": bad, "holds": not bad}
    elif args.verb == "kl":
        doc = {"p": args.p, "q": args.q, "kl_nats": kl_bernoulli(args.p, args.q)}
    else:
        doc = two_party_min_rounds(args.delta, args.eps).as_dict()
    _emit_json(args.output, doc)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command in ("simulate", "sweep"):
            _cmd_run(args, args.command == "sweep")
        elif args.command == "infect":
            _cmd_infect(args)
        elif args.command == "hybrid":
            _cmd_hybrid(args)
        elif args.command == "majority-pair":
            _cmd_pair(args)
        else:
            _cmd_oracle(args)
    except (ParameterError, UsageError, ValueError, OSError) as exc:
        print(f"gossip-lab: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"gossip-lab: runtime failure: {exc!r}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
