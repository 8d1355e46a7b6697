"""A seeded sweep written as CSV plus a JSON summary; rerunning gives the same rows.

Run: python3 demos/06_sweep_to_csv.py
"""
from gossip_lab.experiments import ExperimentSpec, records_to_csv, run_sweep, summary_json

spec = ExperimentSpec(n_values=[256, 1024], epsilon_values=[0.2, 0.4], replicas=5,
                      master_seed=42, initial_condition="bias(0)")
records, cells = run_sweep(spec)
print(records_to_csv(records[:4]))
print(summary_json(cells))
