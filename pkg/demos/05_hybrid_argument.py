"""Walking from all-ones to all-zeros one node at a time.

The probability of agreeing on 1 must drop from 1 to 0 along the canonical
inputs, so some single node k* carries a step of at least about 1/n.  That
node's opinion has to reach most of the network, which is what the infection
rerun measures.

Run: python3 demos/05_hybrid_argument.py
"""
from gossip_lab import ModelKind, hybrid_scan

copy = hybrid_scan("copy", ModelKind.GENERAL_PULL, 8, 10)
print("copy node 1:  E[Z_k] =", copy.ez.tolist(), " k* =", copy.k_star)

res = hybrid_scan("majority", ModelKind.UNIFORM_PULL, 16, 400, master_seed=1, epsilon=0.5)
print("majority, n=16:")
for k, z in enumerate(res.ez):
    print(f"  k={k:2d}  P(consensus on 1) = {z:.3f}")
print(f"k* = {res.k_star}, gap {res.max_gap:.3f}, infection reached everyone in "
      f"{res.infection_estimate:.0%} of reruns")
