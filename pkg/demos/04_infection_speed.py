"""How fast can anything spread?  Content-free infection under four schedulers.

PUSH at most doubles per round, GOSSIP roughly triples early on, and the
population scheduler needs order n log n pairwise steps.

Run: python3 demos/04_infection_speed.py
"""
import numpy as np

from gossip_lab import ModelKind, infection_growth_experiment

n = 2 ** 14
for model in (ModelKind.UNIFORM_PUSH, ModelKind.UNIFORM_PULL, ModelKind.UNIFORM_GOSSIP,
              ModelKind.GENERAL_PUSH):
    res = infection_growth_experiment(model, n, 1, 25, 50, master_seed=3)
    half = res.first_reach[0.5]
    print(f"{model.value:15s} median round to reach n/2: {np.median(half[half >= 0]):.0f}  "
          f"first rounds of replica 0: {res.trajectories[0, :8].tolist()}")

pop = infection_growth_experiment(ModelKind.POPULATION_UNIFORM, 2 ** 10, 1, 20, 20, master_seed=3)
print("population scheduler, parallel time to n/2:", np.median(pop.first_reach[0.5]))
