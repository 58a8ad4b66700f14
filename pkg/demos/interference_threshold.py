# How sensitive the gateway is decides which neighbors matter.  At a low
# threshold every neighbor interferes and coordination wins; at the
# default 5e-9 W only about half of the side-sharing neighbors do.
from iotcoex.experiment import load_preset, parse_spec, run_sweep

data = load_preset("threshold").to_dict()
data["base"]["sim_duration"] = 12000.0
data["sweep"][1]["values"] = [100]
rows = run_sweep(parse_spec(data))

print("scheme          threshold[W]  plr")
for r in rows:
    print(f"{r['mac.scheme']:14s} {r['interference_threshold_w']:12.0e}  {r['plr']:.4f}")
