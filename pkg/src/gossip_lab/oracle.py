"""Exact binomial and information-theoretic quantities.

Everything here is a pure function.  Binomial tails with at most
``EXACT_LIMIT`` trials are computed in exact integer arithmetic (a Python
float is a dyadic rational, so the only rounding is the final conversion);
longer tails are summed in log space with compensated summation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import ParameterError

EXACT_LIMIT = 200
DEFAULT_DELTA = 0.1


class DomainError(ParameterError):
    pass


def drift_constant(delta: float = DEFAULT_DELTA) -> float:
    """``c = (e*pi/8) * (1 + delta)**2``, the phase-1 sample constant."""
    return math.e * math.pi / 8 * (1 + delta) ** 2


def _dyadic(p: float) -> tuple[int, int]:
    """Return ``(a, e)`` with ``p == a / 2**e`` exactly."""
    num, den = p.as_integer_ratio()
    return num, den.bit_length() - 1


def _upper_tail_exact(ell: int, lo: int, p: float) -> float:
    """``P[Bin(ell, p) >= lo]`` in exact integer arithmetic, rounded once."""
    a, e = _dyadic(p)
    b = (1 << e) - a
    total = 0
    pa = a ** lo
    pb = b ** (ell - lo)
    for i in range(lo, ell + 1):
        total += math.comb(ell, i) * pa * pb
        pa *= a
        if b:
            pb //= b
    return total / (1 << (e * ell))


def _upper_tail_log(ell: int, lo: int, p: float) -> float:
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    lp, lq = math.log(p), math.log1p(-p)
    lg = math.lgamma(ell + 1)
    mean, sd = ell * p, math.sqrt(ell * p * (1 - p))
    start = max(lo, int(mean - 40 * sd))
    stop = min(ell, int(mean + 40 * sd) + 1)
    if start > stop:
        # the whole window lies below lo: tail is negligible next to 1e-300
        start, stop = lo, min(ell, lo + 200)
    logs = [lg - math.lgamma(i + 1) - math.lgamma(ell - i + 1) + i * lp + (ell - i) * lq
            for i in range(start, stop + 1)]
    top = max(logs)
    return min(1.0, math.exp(top) * math.fsum(math.exp(v - top) for v in logs))


def binomial_upper_tail(ell: int, lo: int, p: float) -> float:
    """``P[Bin(ell, p) >= lo]``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p={p} outside [0, 1]")
    if lo <= 0:
        return 1.0
    if lo > ell or p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    if ell <= EXACT_LIMIT:
        return _upper_tail_exact(ell, lo, float(p))
    return _upper_tail_log(ell, lo, float(p))


def majority_win_prob(ell: int, p: float) -> float:
    """Probability that more than half of ``ell`` (odd) Bernoulli(p) trials succeed."""
    if ell < 1 or ell % 2 == 0:
        raise ParameterError(f"ell={ell} must be a positive odd integer")
    return binomial_upper_tail(ell, (ell + 1) // 2, p)


def majority_win_prob_tiebreak(ell: int, p: float) -> float:
    """As :func:`majority_win_prob` but ``ell`` may be even; ties are a fair coin."""
    if ell < 1:
        raise ParameterError("ell must be >= 1")
    if ell % 2:
        return majority_win_prob(ell, p)
    half = ell // 2
    tie = math.comb(ell, half) * p ** half * (1 - p) ** half
    return binomial_upper_tail(ell, half + 1, p) + 0.5 * tie


def _integral_exact(ell: int, j: int, p: Fraction) -> Fraction:
    """Exact ``int_0^p z**j (1-z)**(ell-j-1) dz`` by expanding ``(1-z)**m``."""
    m = ell - j - 1
    return sum((Fraction((-1) ** r * math.comb(m, r), j + r + 1) * p ** (j + r + 1)
                for r in range(m + 1)), Fraction(0))


def binomial_beta_sides(ell: int, j: int, p: float) -> tuple[Fraction, Fraction]:
    """Both sides of the binomial/beta identity as exact rationals."""
    pf = Fraction(p)
    lhs = sum((math.comb(ell, i) * pf ** i * (1 - pf) ** (ell - i)
               for i in range(j + 1, ell + 1)), Fraction(0))
    rhs = math.comb(ell, j + 1) * (j + 1) * _integral_exact(ell, j, pf)
    return lhs, rhs


def binomial_beta_check(ell: int, j: int, p: float) -> tuple[float, float, float]:
    """Compare the binomial upper tail above ``j`` with its incomplete-beta form.

    The left side is summed in floating point term by term; the right side
    comes from exact polynomial integration and is rounded once.  The gap
    therefore measures floating error of the summation only.
    """
    if not 0 <= j <= ell - 1:
        raise ParameterError(f"need 0 <= j < ell (ell={ell}, j={j})")
    if not 0.0 < p < 1.0:
        raise DomainError(f"p={p} outside (0, 1)")
    lhs = math.fsum(math.comb(ell, i) * p ** i * (1 - p) ** (ell - i)
                    for i in range(j + 1, ell + 1))
    rhs = float(math.comb(ell, j + 1) * (j + 1) * _integral_exact(ell, j, Fraction(p)))
    return lhs, rhs, abs(lhs - rhs)


def drift_gap(n: int, s: int, epsilon: float, k: int) -> float:
    """``P(node adopts 0) - P(node adopts 1)`` after one k-majority step at bias ``s``."""
    if not 0 <= s <= n:
        raise ParameterError(f"need 0 <= s <= n (s={s}, n={n})")
    if not 0.0 < epsilon <= 0.5:
        raise DomainError(f"epsilon={epsilon} outside (0, 1/2]")
    x = epsilon * s / n
    return majority_win_prob(k, 0.5 + x) - majority_win_prob(k, 0.5 - x)


def next_odd_at_least(x: float) -> int:
    k = math.ceil(x)
    return k if k % 2 else k + 1


def central_binomial_check(r: int) -> tuple[float, int, float]:
    """``(lower, C(2r, r), upper)`` with the Stirling-type bracket

    ``4**r / sqrt(pi r) * exp(-1/(8r)) <= C(2r, r) <= 4**r / sqrt(pi r) * exp(-1/(9r))``.
    """
    if r < 1:
        raise ParameterError("r must be >= 1")
    scale = 4.0 ** r / math.sqrt(math.pi * r)
    return scale * math.exp(-1 / (8 * r)), math.comb(2 * r, r), scale * math.exp(-1 / (9 * r))


def central_binomial_printed(r: int) -> tuple[float, int, float]:
    """Same bracket with positive exponents, ``exp(1/(9r))`` below and ``exp(1/(8r))`` above.

    Kept to show that this form does not hold (it already fails at r = 1).
    """
    if r < 1:
        raise ParameterError("r must be >= 1")
    scale = 4.0 ** r / math.sqrt(math.pi * r)
    return scale * math.exp(1 / (9 * r)), math.comb(2 * r, r), scale * math.exp(1 / (8 * r))


def kl_bernoulli(p: float, q: float) -> float:
    """KL divergence of Bernoulli(p) from Bernoulli(q), in nats."""
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise DomainError(f"p, q must lie in (0, 1) (got {p}, {q})")
    return p * math.log(p / q) + (1 - p) * math.log((1 - p) / (1 - q))


def per_round_kl_cap(epsilon: float) -> float:
    """Largest divergence one channel use can add: ``kl_bernoulli(1/2+eps, 1/2-eps)``."""
    return kl_bernoulli(0.5 + epsilon, 0.5 - epsilon)


@dataclass(frozen=True)
class TwoPartyBound:
    delta: float
    epsilon: float
    p: float
    q: float
    divergence: float
    per_round_cap: float
    t_bound: float
    t_min: int

    def as_dict(self) -> dict:
        return {"delta": self.delta, "epsilon": self.epsilon, "p": self.p, "q": self.q,
                "divergence": self.divergence, "per_round_cap": self.per_round_cap,
                "t_bound": self.t_bound, "t_min": self.t_min}


def two_party_min_rounds(delta: float, epsilon: float) -> TwoPartyBound:
    """Fewest channel uses before the receiver's output distributions can differ enough.

    The output divergence needed is ``kl_bernoulli(1/4 - delta/4, 5 delta)``;
    each received bit adds at most :func:`per_round_kl_cap`.
    """
    if not 0.0 < delta < 1 / 21:
        raise DomainError(f"delta={delta} outside (0, 1/21)")
    if not 0.0 < epsilon < 0.5:
        raise DomainError(f"epsilon={epsilon} outside (0, 1/2)")
    p = 0.25 - delta / 4
    q = 5 * delta
    div = kl_bernoulli(p, q)
    cap = per_round_kl_cap(epsilon)
    t = div / cap
    return TwoPartyBound(delta, epsilon, p, q, div, cap, t, max(1, math.ceil(t)))
