"""Exact tail probabilities, the drift margin of k-majority, and the two-party calculator.

Run: python3 demos/01_exact_oracles.py
"""

from gossip_lab.oracle import (binomial_beta_check, central_binomial_check, drift_constant,
                               drift_gap, majority_win_prob, next_odd_at_least,
                               two_party_min_rounds)

# A node that samples 3 times from a population where 60% of pulls show 0
# ends up supporting 0 with probability 0.648.
print("P(3-majority picks the 60% side) =", majority_win_prob(3, 0.6))

# The tail sum equals an incomplete beta integral; the gap is pure float error.
lhs, rhs, gap = binomial_beta_check(20, 7, 0.3)
print(f"tail {lhs:.15f} vs beta form {rhs:.15f} (gap {gap:.1e})")

# Drift: for small bias s, one round of k1-majority pushes bias up by more than (1+delta)s/n.
delta, eps, n = 0.1, 0.2, 10_000
c = drift_constant(delta)
k1 = next_odd_at_least(c / eps ** 2)
for s in (1, 100, 1000, 4000):
    print(f"s={s:5d}: drift {drift_gap(n, s, eps, k1):.5f}  needed {(1 + delta) * s / n:.5f}")

lo, exact, hi = central_binomial_check(10)
print(f"C(20,10) = {exact} lies in [{lo:.1f}, {hi:.1f}]")

for e in (0.2, 0.1, 0.05, 0.025):
    b = two_party_min_rounds(0.01, e)
    print(f"eps={e:<6} two-party rounds >= {b.t_min:5d}  (real-valued {b.t_bound:.2f})")
print("halving eps multiplies the real-valued bound by about", round(
    two_party_min_rounds(0.01, 0.025).t_bound / two_party_min_rounds(0.01, 0.05).t_bound, 3))
