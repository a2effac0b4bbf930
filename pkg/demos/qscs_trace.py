"""A small QSCS story told through its event log.

Carriers: 900 MHz / 5 MHz (25 PRBs) and 2100 MHz / 1.4 MHz (6 PRBs).

* frame 0: a QCI 9 download starts and takes the whole 900 MHz carrier
  (non-GBR traffic stays on the user's best-SNR carriers).
* frame 5: a QCI 3 gaming burst needs 25 PRBs per frame. Only 6 are idle,
  so the download is preempted and requeued at the head of its queue; the
  reservation lands on 900 MHz.
* frame 10: a QCI 2 video call needs 6 PRBs and is admitted on the idle
  2100 MHz carrier.
* once the gaming burst completes, the call's reservation migrates to the
  strictly better 900 MHz carrier, and the download resumes with whatever
  the GBR traffic leaves over.

Run: python3 demos/qscs_trace.py
"""

from casim.engine import SimConfig, simulate, single_cell
from casim.metrics import evaluate
from casim.traffic import Burst, User, Workload

ccs = single_cell([(900.0, 5.0), (2100.0, 1.4)])
users = [User(0, 150.0), User(1, 300.0), User(2, 450.0)]
bursts = [
    Burst(0, 0, 9, 0, 50_000_000, 200),  # download
    Burst(1, 1, 3, 5, 27_000_000, 60),  # gaming: 25 PRBs of 1080 bits per frame
    Burst(2, 2, 2, 10, 6_480_000, 100),  # video call: 6 PRBs per frame
]
result = simulate(SimConfig(ccs=ccs, horizon_ms=1000), Workload(users, bursts))

print("events other than per-PRB allocations:")
for line in result.log.lines():
    if not line.startswith("ALLOC"):
        print("  " + line)

a = result.log.allocations()
print("\nwho holds which carrier:")
for frame in (0, 5, 10, 60, 80, 120):
    here = a["frame"] == frame
    owners: dict[int, list[int]] = {}
    for cc, b in zip(a["cc"][here], a["burst"][here]):
        owners.setdefault(int(b), []).append(int(cc))
    desc = ", ".join(f"burst {b}: {len(c)} PRBs on cc{sorted(set(c))}" for b, c in sorted(owners.items()))
    print(f"  frame {frame:>3}  {desc}")

report = evaluate(result)
print(f"\nbeta_qos {report.beta_qos}  beta_opt_cc {report.beta_opt_cc:.3f}  digest {report.digest}")
print("outcomes:", {b: k.name for b, k in sorted(result.outcome.items())})
