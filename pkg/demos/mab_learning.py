# Nine gateways pick subframes with UCB1.  At this load most subframes are
# clear most of the time, so the learners keep rotating between good arms.
from collections import Counter

from iotcoex.experiment import load_preset
from iotcoex.simulator import run

spec = load_preset("mab")
report = run(spec.config_for({}, 0))

for gw, traj in sorted(report.bandit_trajectories.items()):
    early = sum(r for _, _, r in traj[:50]) / 50
    late = traj[-len(traj) // 10:]
    arm, hits = Counter(a for _, a, _ in late).most_common(1)[0]
    rate = sum(r for _, _, r in late) / len(late)
    print(f"gateway {gw}: early success {early:.2f}, late success {rate:.2f}, "
          f"most used subframe {arm} ({hits}/{len(late)} late rounds)")

print("subframe use:", " ".join(f"{u:.2f}" for u in report.subframe_utilization))
