"""How far each carrier reaches and what a PRB carries at a given distance.

Run: python3 demos/link_budget.py
"""

from casim.engine import PAPER_6CC
from casim.radio import LinkBudget, coverage_radius_m, prb_rate_bps, rank_ccs_for_user, snr_db

lb = LinkBudget()

# Equal power per PRB means the lower band always wins, so coverage areas nest by frequency.
print("carrier  band MHz  bw MHz  PRBs  coverage km")
for cc in PAPER_6CC:
    print(f"cc{cc.cc_id:<6} {cc.center_freq_mhz:>8.0f} {cc.bandwidth_mhz:>7} {cc.prb_count:>5} {coverage_radius_m(cc, lb) / 1000:>12.2f}")

# Inside the default 1 km cell every PRB runs at the 6 b/s/Hz cap; the cap only
# stops binding several kilometres out.
print("\ndistance m  " + "  ".join(f"cc{cc.cc_id} SNR/kbps" for cc in PAPER_6CC))
for d in (35, 1_000, 6_000, 9_000, 15_000):
    cells = [f"{snr_db(d, cc, lb):5.1f}/{prb_rate_bps(snr_db(d, cc, lb), lb) / 1e3:5.0f}" for cc in PAPER_6CC]
    print(f"{d:>10}  " + "  ".join(f"{c:>13}" for c in cells))

print("\nranking at 500 m:", rank_ccs_for_user(500, list(PAPER_6CC), lb))
