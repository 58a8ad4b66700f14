# Reliability versus delay as the reuse factor grows from 1 to 4.
from iotcoex import analytics as an
from iotcoex.experiment import analytic_profile, load_preset, sensor_energy

cfg = load_preset("baseline").base
profile = analytic_profile(cfg)
energy = sensor_energy(cfg)

for i_adj, i_diag in [(1, 1), (2, 2), (1, 3)]:
    curve = an.tradeoff_curve(profile, energy, [1, 2, 3, 4], an.tier1_neighbor_map(i_adj, i_diag))
    print(f"i_adjacent={i_adj} i_diagonal={i_diag}")
    print("  K   failure     delay[ms]  lifetime[d]")
    for pt in curve:
        print(f"  {pt.reuse_factor}   {pt.failure_prob:.3e}   {pt.expected_delay * 1e3:7.2f}  {pt.lifetime_days:9.1f}")

# K = 2 loses to K = 1 when a single neighbor transmission is enough to
# destroy a packet; only K = 4 clears every tier-1 neighbor.
