"""One source, everyone else silent: spreading a bit through a noisy channel.

Non-sources display 0, so a node sees slightly more ones than 1/2 - eps only
when the source holds 1.  Long observation separates the two cases; majority
consensus then cleans up the minority of wrong guesses.

Run: python3 demos/03_noisy_broadcast.py
"""
from gossip_lab import BroadcastParams, NoiseChannel, RandomStream, run_noisy_broadcast

n, eps = 256, 0.3
params = BroadcastParams()
print(f"phase-1 pulls per node: {params.phase1_pulls(n, eps)}, "
      f"threshold {params.threshold(n, eps):.6f}")
for bit in (0, 1):
    for r in range(3):
        out = run_noisy_broadcast(n, NoiseChannel(eps), bit, params, RandomStream(11, 10 * bit + r).generator())
        print(f"source bit {bit} replica {r}: {out.phase1_correct}/{n} correct guesses, "
              f"final {out.final_value}")
