"""Two-phase majority consensus under heavy channel noise.

Each node pulls k1 noisy samples per round for ceil(4 log2 n) rounds, then
takes one large k2-sample vote.  The bias trajectory shows the slow drift
away from zero followed by the final collapse to unanimity.

Run: python3 demos/02_majority_consensus.py
"""
from gossip_lab import MajorityParams, NoiseChannel, RandomStream, make_canonical, run_majority_protocol

n, eps = 4096, 0.25
params = MajorityParams()
print(f"k1={params.phase1_samples(eps)}, rounds1={params.phase1_rounds(n)}, "
      f"k2={params.phase2_samples(n, eps)}")

out = run_majority_protocol(n, NoiseChannel(eps), make_canonical(n, n // 2), params,
                            RandomStream(7).generator())
for t in range(0, len(out.bias_trajectory), 8):
    print(f"round {t:3d}  bias {out.bias_trajectory[t]:6d}")
print(f"final bias {out.final_bias}, unanimous on {out.final_value} after {out.rounds_used} rounds")
