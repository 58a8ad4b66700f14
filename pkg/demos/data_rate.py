# Packet loss at the center apartment versus data rate.  Faster links
# shorten the airtime and with it every collision window.
from iotcoex.experiment import load_preset, parse_spec, run_sweep

data = load_preset("data_rate").to_dict()
data["base"]["sim_duration"] = 12000.0
rows = run_sweep(parse_spec(data))

print("scheme          M    rate[bps]  plr")
for r in rows:
    print(f"{r['mac.scheme']:14s} {r['sensors.count']:3d}  {r['sensors.data_rate']:9.0f}  {r['plr']:.4f}")
