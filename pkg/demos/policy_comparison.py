"""The five policies on identical traffic: the shrunk 10 s slice over a few seeds.

Run: python3 demos/policy_comparison.py [n_seeds]
"""

import sys

import numpy as np

from casim.config import preset
from casim.engine import simulate
from casim.metrics import evaluate
from casim.schedulers import SchedulerKind
from casim.traffic import Workload, generate_workload

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 5
base = preset("paper-6cc-shrunk")
rows = {k: [] for k in SchedulerKind}
for seed in range(n_seeds):
    cfg = base.with_(seed=seed)
    # one replay text per seed so every policy sees byte-identical bursts
    text = generate_workload(cfg.traffic, cfg.horizon_ms, seed).to_replay_text()
    for kind in SchedulerKind:
        r = evaluate(simulate(cfg.with_(scheduler=kind), Workload.from_replay_text(text)))
        rows[kind].append((r.beta_opt_cc, r.beta_qos, r.alpha_sch_qoe, r.mean_sojourn_ms((2, 3, 4, 5)), r.served_bits_total))

print(f"means over {n_seeds} seeds")
print(f"{'policy':8} {'beta_opt_cc':>11} {'beta_qos':>9} {'alpha':>7} {'GBR sojourn ms':>15} {'served Gbit':>12}")
for kind, vals in rows.items():
    m = np.array(vals, dtype=float).mean(axis=0)
    print(f"{kind.value:8} {m[0]:11.3f} {m[1]:9.3f} {m[2]:7.3f} {m[3]:15.1f} {m[4] / 1e9:12.3f}")
