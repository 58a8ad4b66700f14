# Battery lifetime against sensor density for two packet airtimes,
# simulated and closed form side by side.
from iotcoex.experiment import load_preset, parse_spec, run_sweep
from iotcoex.analytics import EnergyProfile, battery_lifetime

e = EnergyProfile()
print("reference battery:", round(battery_lifetime(e, 1.0), 1), "days at p=1,",
      round(battery_lifetime(e, 0.5), 1), "days at p=0.5")

data = load_preset("lifetime").to_dict()
data["base"]["sim_duration"] = 12000.0
rows = run_sweep(parse_spec(data))

print("rate[bps]  M    p_suc   sim[d]   analytic[d]")
for r in rows:
    print(f"{r['sensors.data_rate']:8.0f}  {r['sensors.count']:3d}  {r['p_suc_empirical']:.3f}"
          f"  {r['lifetime_days']:7.1f}  {r['lifetime_days_analytic']:9.1f}")
