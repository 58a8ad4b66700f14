# Packet loss versus sensors per apartment and the density each scheme
# sustains at 1% loss.
from iotcoex.experiment import capacity_at_loss, load_preset, parse_spec, run_sweep

for threshold in (5e-9, 1e-13):
    data = load_preset("density").to_dict()
    data["base"]["interference_threshold_w"] = threshold
    data["sweep"][1]["values"] = [40, 80, 150, 250, 350]
    rows = run_sweep(parse_spec(data))
    print(f"threshold {threshold:g} W")
    for scheme in ("uncoordinated", "coordinated"):
        mine = [r for r in rows if r["mac.scheme"] == scheme]
        curve = "  ".join(f"{r['sensors.count']}:{r['plr']:.4f}" for r in mine)
        print(f"  {scheme:14s} {curve}")
        print(f"  {'':14s} capacity at 1% loss ~ {capacity_at_loss(mine):.0f}")
