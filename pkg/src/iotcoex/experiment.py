"""Experiment specs, seeded parameter sweeps and CSV emission.

An experiment file is YAML with a ``base`` simulation config and optional
``sweep`` axes::

    base:
      sensors: {count: 20, mode: poisson, period: 900}
      mac: {scheme: coordinated, reuse_factor: 9}
    sweep:
      - {path: sensors.count, values: [20, 40, 60]}
    replications: 2
    seed_base: 0
    overlay_analytic: true

Every key is checked against the config schema; unknown keys are rejected
with a close-match suggestion.
"""

from __future__ import annotations

import copy
import csv
import dataclasses
import difflib
import hashlib
import io
import itertools
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

import yaml

from . import __version__
from .analytics import (
    EnergyProfile,
    TrafficProfile,
    battery_lifetime,
    outage_prob,
    success_prob_coordinated,
    system_capacity,
)
from .config import (
    MAC_SCHEMES,
    CentralizedCoordinated,
    ConfigError,
    DistributedMab,
    RetrialPolicy,
    SimConfig,
    TrafficClass,
    Uncoordinated,
)
from .propagation import BuildingLayout, PathlossParams
from .simulator import run as run_simulation

NESTED = {
    "layout": BuildingLayout,
    "pathloss": PathlossParams,
    "sensors": TrafficClass,
    "actuators": TrafficClass,
    "energy": EnergyProfile,
    "retrial": RetrialPolicy,
}
TUPLE_FIELDS = {"subframe_assignment", "measure_apartments"}
SPEC_KEYS = ("base", "sweep", "replications", "seed_base", "outputs", "overlay_analytic", "workers", "capacity_target")
OUTPUTS = ("kpi", "tradeoff", "bandit")
MAC_KEYS = sorted({"scheme"} | {f.name for cls in MAC_SCHEMES.values() for f in dataclasses.fields(cls)})
KPI_COLUMNS = (
    "generated", "delivered", "lost", "pending", "attempts", "plr", "outage",
    "p_suc_empirical", "delay_mean", "delay_p95", "energy_per_cycle", "lifetime_days",
)
ANALYTIC_COLUMNS = ("p_suc_analytic", "outage_analytic", "lifetime_days_analytic", "capacity_analytic")


@dataclass(frozen=True)
class SweepAxis:
    path: str
    values: tuple


@dataclass
class ExperimentSpec:
    base: SimConfig
    base_dict: dict
    sweep: list[SweepAxis] = field(default_factory=list)
    replications: int = 1
    seed_base: int = 0
    outputs: tuple[str, ...] = ("kpi",)
    overlay_analytic: bool = False
    workers: int = 1
    capacity_target: float = 0.01

    def points(self) -> list[dict[str, Any]]:
        """Cartesian product of the sweep axes, first axis slowest."""
        if not self.sweep:
            return [{}]
        return [
            dict(zip((a.path for a in self.sweep), combo))
            for combo in itertools.product(*(a.values for a in self.sweep))
        ]

    def config_for(self, point: dict[str, Any], seed: int) -> SimConfig:
        data = copy.deepcopy(self.base_dict)
        for path, value in point.items():
            _set_path(data, path, value)
        data["seed"] = seed
        return build_config(data)

    def to_dict(self) -> dict:
        return {
            "base": copy.deepcopy(self.base_dict),
            "sweep": [{"path": a.path, "values": list(a.values)} for a in self.sweep],
            "replications": self.replications,
            "seed_base": self.seed_base,
            "outputs": list(self.outputs),
            "overlay_analytic": self.overlay_analytic,
            "workers": self.workers,
            "capacity_target": self.capacity_target,
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


# -- config <-> dict ------------------------------------------------------

def _suggest(key: str, options: Iterable[str]) -> str:
    match = difflib.get_close_matches(key, list(options), n=1, cutoff=0.5)
    return f"; did you mean '{match[0]}'?" if match else ""


def _check_keys(data: dict, allowed: Sequence[str], where: str, errors: list[str]) -> None:
    for key in data:
        if key not in allowed:
            errors.append(f"unknown key '{key}' at {where}{_suggest(str(key), allowed)}")


def _coerce(value: Any, default: Any, where: str, errors: list[str]) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            errors.append(f"{where} must be a boolean, got {value!r}")
        return value
    if isinstance(default, (int, float)) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            errors.append(f"{where} must be a number, got {value!r}")
            return value
        if isinstance(default, int) and not isinstance(value, int):
            if float(value).is_integer():
                return int(value)
            errors.append(f"{where} must be an integer, got {value!r}")
        return value
    return value


def _build_record(cls, data: Any, where: str, errors: list[str]):
    if not isinstance(data, dict):
        errors.append(f"{where} must be a mapping")
        return cls()
    names = [f.name for f in dataclasses.fields(cls)]
    _check_keys(data, names, where, errors)
    defaults = cls()
    kwargs = {}
    for name in names:
        if name in data:
            kwargs[name] = _coerce(data[name], getattr(defaults, name), f"{where}.{name}", errors)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"{where}: {exc}")
        return defaults


def _build_mac(data: Any, errors: list[str]):
    if not isinstance(data, dict):
        errors.append("base.mac must be a mapping")
        return Uncoordinated()
    _check_keys(data, MAC_KEYS, "base.mac", errors)
    scheme = data.get("scheme", "uncoordinated")
    if scheme not in MAC_SCHEMES:
        errors.append(f"base.mac.scheme must be one of {sorted(MAC_SCHEMES)}{_suggest(str(scheme), MAC_SCHEMES)}")
        return Uncoordinated()
    cls = MAC_SCHEMES[scheme]
    own = {f.name for f in dataclasses.fields(cls)}
    fields_ = {k: v for k, v in data.items() if k in own}
    if "subframe_assignment" in fields_ and fields_["subframe_assignment"] is not None:
        fields_["subframe_assignment"] = tuple(fields_["subframe_assignment"])
    defaults = cls()
    for k, v in list(fields_.items()):
        if k != "subframe_assignment":
            fields_[k] = _coerce(v, getattr(defaults, k), f"base.mac.{k}", errors)
    return cls(**fields_)


def build_config(data: dict, errors: list[str] | None = None) -> SimConfig:
    """Build and validate a :class:`SimConfig` from a plain mapping."""
    own_errors = [] if errors is None else errors
    if not isinstance(data, dict):
        own_errors.append("base must be a mapping")
        raise ConfigError(own_errors)
    names = [f.name for f in dataclasses.fields(SimConfig)]
    _check_keys(data, names, "base", own_errors)
    defaults = SimConfig()
    kwargs: dict[str, Any] = {}
    for name in names:
        if name not in data:
            continue
        value = data[name]
        if name in NESTED:
            kwargs[name] = _build_record(NESTED[name], value, f"base.{name}", own_errors)
        elif name == "mac":
            kwargs[name] = _build_mac(value, own_errors)
        elif name in TUPLE_FIELDS:
            kwargs[name] = None if value is None else tuple(value)
        elif name in ("frame_length", "warmup"):
            if value is not None:
                value = _coerce(value, 0.0, f"base.{name}", own_errors)
            kwargs[name] = value
        else:
            kwargs[name] = _coerce(value, getattr(defaults, name), f"base.{name}", own_errors)
    config = SimConfig(**kwargs)
    if not own_errors:
        try:
            config.validate()
        except ConfigError as exc:
            own_errors.extend(exc.errors)
    if own_errors and errors is None:
        raise ConfigError(own_errors)
    return config


def config_to_dict(config: SimConfig) -> dict:
    out: dict[str, Any] = {}
    for f in dataclasses.fields(SimConfig):
        value = getattr(config, f.name)
        if f.name == "mac":
            d = {"scheme": value.scheme, **dataclasses.asdict(value)}
            if d.get("subframe_assignment") is not None:
                d["subframe_assignment"] = list(d["subframe_assignment"])
            out["mac"] = d
        elif dataclasses.is_dataclass(value):
            out[f.name] = dataclasses.asdict(value)
        elif isinstance(value, tuple):
            out[f.name] = list(value)
        else:
            out[f.name] = value
    return out


def _set_path(data: dict, path: str, value: Any) -> None:
    parts = path.split(".")
    node = data
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


def _path_known(path: str) -> bool:
    parts = path.split(".")
    top = [f.name for f in dataclasses.fields(SimConfig)]
    if parts[0] not in top:
        return False
    if len(parts) == 1:
        return parts[0] not in NESTED and parts[0] != "mac"
    if len(parts) != 2:
        return False
    if parts[0] == "mac":
        return parts[1] in MAC_KEYS
    cls = NESTED.get(parts[0])
    return cls is not None and parts[1] in {f.name for f in dataclasses.fields(cls)}


# -- spec loading ---------------------------------------------------------

def parse_spec(raw: Any) -> ExperimentSpec:
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["experiment file must contain a mapping"])
    _check_keys(raw, SPEC_KEYS, "top level", errors)
    base_dict = raw.get("base", {}) or {}
    base = build_config(copy.deepcopy(base_dict), errors)
    axes = []
    for i, axis in enumerate(raw.get("sweep", []) or []):
        if not isinstance(axis, dict) or set(axis) != {"path", "values"}:
            errors.append(f"sweep[{i}] must have exactly the keys 'path' and 'values'")
            continue
        if not _path_known(str(axis["path"])):
            errors.append(f"sweep[{i}].path '{axis['path']}' does not name a config field")
            continue
        if not isinstance(axis["values"], list) or not axis["values"]:
            errors.append(f"sweep[{i}].values must be a non-empty list")
            continue
        axes.append(SweepAxis(str(axis["path"]), tuple(axis["values"])))
    replications = raw.get("replications", 1)
    if not isinstance(replications, int) or isinstance(replications, bool) or replications < 1:
        errors.append(f"replications must be an integer >= 1, got {replications!r}")
    seed_base = raw.get("seed_base", 0)
    if not isinstance(seed_base, int) or isinstance(seed_base, bool):
        errors.append("seed_base must be an integer")
    outputs = tuple(raw.get("outputs", ["kpi"]))
    for o in outputs:
        if o not in OUTPUTS:
            errors.append(f"unknown output '{o}'{_suggest(str(o), OUTPUTS)}")
    workers = raw.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        errors.append("workers must be an integer >= 1")
    overlay = raw.get("overlay_analytic", False)
    if not isinstance(overlay, bool):
        errors.append("overlay_analytic must be a boolean")
    target = raw.get("capacity_target", 0.01)
    if not isinstance(target, (int, float)) or not 0 < target < 1:
        errors.append("capacity_target must lie in (0, 1)")
    if errors:
        raise ConfigError(errors)
    spec = ExperimentSpec(
        base=base,
        base_dict=copy.deepcopy(base_dict),
        sweep=axes,
        replications=replications,
        seed_base=seed_base,
        outputs=outputs,
        overlay_analytic=overlay,
        workers=workers,
        capacity_target=float(target),
    )
    point_errors = []
    for point in spec.points():
        try:
            spec.config_for(point, spec.seed_base)
        except ConfigError as exc:
            point_errors.extend(f"sweep point {point}: {e}" for e in exc.errors)
    if point_errors:
        raise ConfigError(point_errors)
    return spec


def loads_spec(text: str) -> ExperimentSpec:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError([f"parse error{where}: {getattr(exc, 'problem', exc)}"]) from exc
    return parse_spec(raw if raw is not None else {})


def load_spec(path: str | os.PathLike) -> ExperimentSpec:
    return loads_spec(Path(path).read_text())


def dump_spec(spec: ExperimentSpec) -> str:
    return yaml.safe_dump(spec.to_dict(), sort_keys=False)


def preset_path(name: str) -> Path:
    """Path of a bundled preset (``baseline``, ``lifetime``, ``data_rate``, ``threshold``, ``density``, ``mab``)."""
    ref = resources.files("iotcoex") / "presets" / f"{name}.yaml"
    with resources.as_file(ref) as p:
        if not p.exists():
            raise FileNotFoundError(f"no preset named {name!r}")
        return Path(p)


def load_preset(name: str) -> ExperimentSpec:
    return load_spec(preset_path(name))


# -- analytic overlay -----------------------------------------------------

def sensor_energy(config: SimConfig) -> EnergyProfile:
    s = config.sensors
    return dataclasses.replace(
        config.energy,
        tx_power=s.tx_power_mw * 1e-3,
        payload_bits=s.payload_bits,
        overhead_bits=s.overhead_bits,
        data_rate=s.data_rate,
        report_period=s.period,
    )


def analytic_profile(config: SimConfig, apartment: int | None = None) -> TrafficProfile:
    """Closed-form traffic profile seen by one apartment's gateway.

    Tier-1 neighbors sharing the apartment's subframe enter as contending
    networks with multiplicity 1; MAB is treated like the default
    centralized assignment.
    """
    layout = config.layout
    if apartment is None:
        measured = config.measure_apartments
        apartment = measured[0] if measured else layout.num_apartments // 2
    devices = config.sensors.count + config.actuators.count
    rate = (
        config.sensors.count * config.sensors.arrival_rate
        + config.actuators.count * config.actuators.arrival_rate
    ) / devices
    k = config.mac.reuse_factor
    adjacent, diagonal = layout.tier1_neighbors(apartment)
    own = config.subframe_of(apartment) if k > 1 else 0
    sharing = [a for a in adjacent + diagonal if k == 1 or config.subframe_of(a) == own]
    groups = ((len(sharing), 1.0),) if sharing else ()
    r = config.retrial
    return TrafficProfile(
        arrival_rate=rate,
        mean_airtime=config.sensors.airtime,
        devices_per_network=devices,
        retrial_rate=r.rate if r.mode == "poisson" else 0.0,
        reuse_factor=k,
        neighbor_groups=groups,
        max_transmissions=r.max_transmissions,
        backoff_time=r.backoff if r.mode == "fixed" else (1.0 / r.rate if r.rate > 0 else 0.0),
        tx_plus_ack_time=config.sensors.airtime,
    )


def analytic_overlay(config: SimConfig, target_loss: float = 0.01) -> dict[str, float]:
    profile = analytic_profile(config)
    p = success_prob_coordinated(profile)
    return {
        "p_suc_analytic": p,
        "outage_analytic": outage_prob(p, profile.max_transmissions),
        "lifetime_days_analytic": battery_lifetime(sensor_energy(config), p),
        "capacity_analytic": system_capacity(1.0 - target_loss, profile),
    }


# -- sweeps ---------------------------------------------------------------

def _run_row(args) -> dict[str, Any]:
    spec_dict, point, rep, seed, overlay, target = args
    row: dict[str, Any] = {**point, "replication": rep, "seed": seed}
    try:
        spec = parse_spec(spec_dict)
        config = spec.config_for(point, seed)
        report = run_simulation(config)
        row.update(report.as_row())
        if overlay:
            row.update(analytic_overlay(config, target))
        row["error"] = ""
    except Exception as exc:  # recorded per row; the sweep continues
        for col in KPI_COLUMNS + (ANALYTIC_COLUMNS if overlay else ()):
            row.setdefault(col, float("nan"))
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(spec: ExperimentSpec, workers: int | None = None) -> list[dict[str, Any]]:
    """One row per (sweep point, replication), ordered by sweep index.

    Replication ``r`` uses seed ``seed_base + r`` at every sweep point, so
    points share common random numbers.
    """
    spec_dict = spec.to_dict()
    jobs = [
        (spec_dict, point, rep, spec.seed_base + rep, spec.overlay_analytic, spec.capacity_target)
        for point in spec.points()
        for rep in range(spec.replications)
    ]
    n = workers or spec.workers
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            return list(pool.map(_run_row, jobs))
    return [_run_row(job) for job in jobs]


def capacity_at_loss(
    rows: Sequence[dict[str, Any]], axis: str = "sensors.count", metric: str = "plr", target: float = 0.01
) -> float:
    """Axis value where the replication-mean ``metric`` first reaches ``target``.

    Linear interpolation between the bracketing sweep points; ``nan`` when
    the curve never reaches the target, the first point when it starts above.
    """
    groups: dict[Any, list[float]] = {}
    for row in rows:
        if row.get("error"):
            continue
        groups.setdefault(row[axis], []).append(row[metric])
    xs = sorted(groups)
    ys = [sum(groups[x]) / len(groups[x]) for x in xs]
    if not xs:
        return float("nan")
    if ys[0] >= target:
        return float(xs[0])
    for (x0, y0), (x1, y1) in zip(zip(xs, ys), zip(xs[1:], ys[1:])):
        if y0 < target <= y1:
            return x0 + (target - y0) * (x1 - x0) / (y1 - y0)
    return float("nan")


# -- output ---------------------------------------------------------------

def _columns(rows: Sequence[dict[str, Any]]) -> list[str]:
    cols: list[str] = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    return cols


def _format(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: Sequence[dict[str, Any]]) -> str:
    cols = _columns(rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_format(row.get(c, "")) for c in cols])
    return buf.getvalue()


def rows_to_long_csv(rows: Sequence[dict[str, Any]], id_columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row", *id_columns, "metric", "value"])
    for i, row in enumerate(rows):
        ids = [_format(row.get(c, "")) for c in id_columns]
        for key, value in row.items():
            if key in id_columns or key == "error" or not isinstance(value, (int, float)):
                continue
            writer.writerow([i, *ids, key, _format(value)])
    return buf.getvalue()


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(
    rows: Sequence[dict[str, Any]],
    path: str | os.PathLike,
    spec: ExperimentSpec | None = None,
    long_format: bool = False,
) -> list[Path]:
    """Write the CSV table plus a JSON run manifest next to it.

    The target directory is checked before anything is written so a bad
    path leaves no partial output.
    """
    if not rows:
        raise ValueError("no results to emit")
    out = Path(path)
    parent = out.parent if str(out.parent) else Path(".")
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OSError(f"cannot write to {parent}")
    if out.exists() and not os.access(out, os.W_OK):
        raise OSError(f"cannot overwrite {out}")
    manifest = {
        "tool": "iotcoex",
        "version": __version__,
        "rows": len(rows),
        "columns": _columns(rows),
        "seeds": sorted({r["seed"] for r in rows if "seed" in r}),
    }
    if spec is not None:
        manifest["config_hash"] = spec.config_hash()
        manifest["spec"] = spec.to_dict()
    written = []
    _atomic_write(out, rows_to_csv(rows))
    written.append(out)
    if long_format:
        ids = [a.path for a in spec.sweep] + ["replication", "seed"] if spec else ["replication", "seed"]
        long_path = out.with_name(out.stem + ".long.csv")
        _atomic_write(long_path, rows_to_long_csv(rows, ids))
        written.append(long_path)
    manifest_path = out.with_name(out.stem + ".manifest.json")
    _atomic_write(manifest_path, json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    written.append(manifest_path)
    return written


def single_row(config: SimConfig, overlay: bool = False, target: float = 0.01) -> dict[str, Any]:
    """Row for one direct simulator run, shaped like a sweep row."""
    row: dict[str, Any] = {"replication": 0, "seed": config.seed}
    row.update(run_simulation(config).as_row())
    if overlay:
        row.update(analytic_overlay(config, target))
    row["error"] = ""
    return row


def spec_from_config(config: SimConfig, **kw) -> ExperimentSpec:
    data = config_to_dict(config)
    return ExperimentSpec(base=config, base_dict=data, seed_base=config.seed, **kw)


def nan_safe_mean(values: Iterable[float]) -> float:
    vals = [v for v in values if not math.isnan(v)]
    return sum(vals) / len(vals) if vals else float("nan")
