"""Scenario definition: time grid, targets, candidate slots and formulation
parameters, plus the JSON/CSV loaders.

All angles are degrees and all times seconds in external files.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import geometry
from .geometry import R_EARTH, SIDEREAL_DAY, ParkingOrbit

Number = Union[int, float]


class ScenarioError(ValueError):
    """Raised for unparseable or invalid scenario files."""


def _fail(where: str, msg: str):
    raise ScenarioError(f"{where}: {msg}")


# --------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class TimeGrid:
    epoch: datetime
    dt: float
    num_steps: int
    cyclic: bool = False
    gmst0_deg: Optional[float] = None

    def __post_init__(self):
        if self.epoch.tzinfo is None:
            object.__setattr__(self, "epoch", self.epoch.replace(tzinfo=timezone.utc))
        if not self.dt > 0:
            _fail("time_grid.dt", f"must be > 0, got {self.dt}")
        if int(self.num_steps) != self.num_steps or self.num_steps < 1:
            _fail("time_grid.num_steps", f"must be an integer >= 1, got {self.num_steps}")
        if self.gmst0_deg is None:
            object.__setattr__(self, "gmst0_deg", geometry.gmst_deg(self.epoch))

    @property
    def T(self) -> int:
        return int(self.num_steps)

    @property
    def horizon(self) -> float:
        return self.dt * self.num_steps

    def elapsed(self) -> np.ndarray:
        """Seconds since epoch at each step; step t (1-based) is (t-1)*dt."""
        return self.dt * np.arange(self.num_steps, dtype=float)


@dataclass(frozen=True)
class Target:
    id: str
    kind: str  # "static" | "dynamic"
    requirement: tuple  # r_tp per step, length T
    lat: float = 0.0
    lon: float = 0.0
    alt: float = 0.0  # metres
    min_elevation: float = 0.0
    ephemeris: Optional[np.ndarray] = field(default=None, compare=False)  # (T, 3) ECI km
    ephemeris_path: Optional[str] = None
    max_range: Optional[float] = None

    def validate(self, T: int):
        where = f"targets[{self.id}]"
        if self.kind == "static":
            if not -90.0 <= self.lat <= 90.0:
                _fail(where, f"latitude {self.lat} outside [-90, 90]")
            if not -180.0 < self.lon <= 180.0:
                _fail(where, f"longitude {self.lon} outside (-180, 180]")
        elif self.kind == "dynamic":
            if self.ephemeris is None:
                _fail(where, "dynamic target needs an ephemeris")
            if self.ephemeris.shape != (T, 3):
                _fail(where, f"ephemeris length {len(self.ephemeris)} != T={T}")
        else:
            _fail(where, f"unknown kind {self.kind!r}")
        if len(self.requirement) != T:
            _fail(where, f"requirement length {len(self.requirement)} != T={T}")
        bad = [r for r in self.requirement if int(r) != r or r < 1]
        if bad:
            _fail(where, f"requirement r_tp must be an integer >= 1, got {bad[0]}")


@dataclass(frozen=True)
class OrbitalSlot:
    id: str
    semi_major_axis: float
    inclination: float
    raan: float
    arg_latitude: float
    cost: float = 1.0
    family: Optional[str] = None

    def __post_init__(self):
        if not self.semi_major_axis > R_EARTH:
            _fail(f"slot[{self.id}]", f"semi-major axis {self.semi_major_axis} km is not above R_earth")
        if not self.cost >= 0:
            _fail(f"slot[{self.id}]", f"cost must be >= 0, got {self.cost}")


class Kind(str, Enum):
    SCLP = "SCLP"
    PSCLP = "PSCLP"
    MCLP = "MCLP"
    MMRT = "MMRT"
    MART = "MART"
    MAX_ISL = "MaxISL"
    ZMRT = "ZMRT"
    GAMMA_ART = "GammaART"

    @classmethod
    def parse(cls, value) -> "Kind":
        if isinstance(value, Kind):
            return value
        key = str(value).replace("-", "").replace("_", "").lower()
        for k in cls:
            if k.value.lower() == key:
                return k
        aliases = {"maxisl": cls.MAX_ISL, "zmrt": cls.ZMRT, "gammaart": cls.GAMMA_ART}
        if key in aliases:
            return aliases[key]
        raise ScenarioError(f"formulation.kind: unknown formulation {value!r}")


@dataclass(frozen=True)
class FormulationSpec:
    kind: Kind
    D: Optional[tuple] = None  # per-target required covered steps
    D_mean: Optional[int] = None  # total covered (t, p) pairs, mean variant
    N: Optional[int] = None
    rewards: Optional[np.ndarray] = field(default=None, compare=False)  # (T, P)
    budget: Optional[float] = None
    z: Optional[tuple] = None
    gamma: Optional[tuple] = None
    epsilon: float = 0.0
    isl_max_range: Optional[float] = None
    isl_mode: str = "corrected"  # "corrected" | "literal"
    beta: float = 0.5
    cyclic: bool = False
    sum_of_mrts: bool = False
    tight_big_m: bool = False

    def validate(self, T: int, P: int, J: Optional[int] = None):
        where = "formulation"
        if not 0.0 < self.beta < 1.0:
            _fail(where, f"beta must lie in (0, 1), got {self.beta}")
        if self.D is not None:
            if len(self.D) != P:
                _fail(where, f"D has {len(self.D)} entries for {P} targets")
            for d in self.D:
                if not 0 <= d <= T:
                    _fail(where, f"D_p must lie in [0, T={T}], got {d}")
        if self.D_mean is not None and not 0 <= self.D_mean <= T * P:
            _fail(where, f"mean D must lie in [0, T*P={T * P}], got {self.D_mean}")
        if self.N is not None:
            if self.N < 1:
                _fail(where, f"N must be >= 1, got {self.N}")
            if J is not None and self.N > J:
                _fail(where, f"N={self.N} exceeds the number of slots J={J}")
        if self.rewards is not None:
            if self.rewards.shape != (T, P):
                _fail(where, f"rewards shape {self.rewards.shape} != ({T}, {P})")
            if np.any(self.rewards < 0):
                _fail(where, "rewards must be >= 0")
        if self.budget is not None and self.budget < 0:
            _fail(where, "budget C must be >= 0")
        for name in ("z", "gamma"):
            vals = getattr(self, name)
            if vals is None:
                continue
            if len(vals) != P:
                _fail(where, f"{name} has {len(vals)} entries for {P} targets")
            for v in vals:
                if not 0 <= v <= T:
                    _fail(where, f"{name}_p must lie in [0, T={T}], got {v}")
        if self.epsilon < 0:
            _fail(where, "ISL epsilon must be >= 0")
        if self.isl_mode not in ("corrected", "literal"):
            _fail(where, f"isl_mode must be 'corrected' or 'literal', got {self.isl_mode!r}")
        needs_n = {Kind.MMRT, Kind.MART}
        if self.kind in needs_n and self.N is None:
            _fail(where, f"{self.kind.value} needs N")
        if self.kind == Kind.MCLP and self.N is None and self.budget is None:
            _fail(where, "MCLP needs N or a cost budget")
        if self.kind == Kind.PSCLP and self.D is None and self.D_mean is None:
            _fail(where, "PSCLP needs per-target D or a mean D")
        if self.kind == Kind.ZMRT and self.z is None:
            _fail(where, "ZMRT needs z")
        if self.kind == Kind.GAMMA_ART and self.gamma is None:
            _fail(where, "GammaART needs gamma")


@dataclass(frozen=True)
class SolverConfig:
    time_limit: float = 60.0
    abs_gap: float = 1e-6
    node_limit: int = 1_000_000
    branching: str = "most-fractional"
    seed: int = 0
    backend: str = "bnb"  # "bnb" (built-in) | "highs"
    strategy: str = "direct"  # "direct" | "decomposed" (MMRT / single-target MART)


@dataclass(frozen=True)
class SlotFamily:
    """Declarative slot family as written in the scenario file."""

    id: str
    type: str  # "rgt" | "grid"
    inclination: tuple
    raan_count: int
    aol_count: int
    resonance: Optional[int] = None
    repetition_period: Optional[float] = None
    semi_major_axis: Optional[float] = None
    altitude: Optional[float] = None
    raan_offset: float = 0.0
    aol_offset: float = 0.0
    cost: object = 1.0  # number, or {"model": "delta_v", "parking": {...}, "phasing_revs": n}


@dataclass(frozen=True)
class Scenario:
    grid: TimeGrid
    targets: tuple
    slots: tuple
    formulation: FormulationSpec
    solver: SolverConfig = SolverConfig()
    families: tuple = ()
    explicit_slots: tuple = ()
    source: Optional[dict] = field(default=None, compare=False, repr=False)

    @property
    def T(self) -> int:
        return self.grid.T

    @property
    def J(self) -> int:
        return len(self.slots)

    @property
    def P(self) -> int:
        return len(self.targets)

    def requirements(self) -> np.ndarray:
        """r_tp as an int array of shape (T, P)."""
        return np.array([t.requirement for t in self.targets], dtype=int).T.reshape(self.T, self.P)

    def costs(self) -> np.ndarray:
        return np.array([s.cost for s in self.slots], dtype=float)

    def digest(self) -> str:
        """Content hash of the canonical scenario document."""
        doc = self.source if self.source is not None else scenario_to_dict(self)
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


# --------------------------------------------------------------------------
# slot families


def rgt_semi_major_axis(resonance: int, repetition_period: float = SIDEREAL_DAY) -> float:
    """Circular two-body orbit completing ``resonance`` revolutions per repetition period."""
    if resonance < 1:
        raise ScenarioError(f"resonance must be >= 1, got {resonance}")
    a = geometry.semi_major_axis_for_period(repetition_period / resonance)
    if a <= R_EARTH:
        raise ScenarioError(f"resonance {resonance}:1 has no orbit above the Earth's surface (a={a:.1f} km)")
    return a


def _grid_slots(prefix, a, inclinations, raan_count, aol_count, raan_offset=0.0, aol_offset=0.0, family=None):
    if raan_count < 1 or aol_count < 1:
        raise ScenarioError("raan_count and aol_count must be >= 1")
    slots = []
    for inc in inclinations:
        for r in range(raan_count):
            raan = (raan_offset + 360.0 * r / raan_count) % 360.0
            for k in range(aol_count):
                aol = (aol_offset + 360.0 * k / aol_count) % 360.0
                sid = f"{prefix}:i{inc:g}:r{r}:u{k}" if len(inclinations) > 1 else f"{prefix}:r{r}:u{k}"
                slots.append(OrbitalSlot(sid, a, float(inc), raan, aol, 1.0, family))
    return slots


def rgt_slot_family(
    resonance: int,
    inclination: float,
    raan_count: int,
    aol_count: int,
    repetition_period: float = SIDEREAL_DAY,
    prefix: str = "rgt",
) -> list[OrbitalSlot]:
    """Circular repeat-ground-track slots on a uniform RAAN x argument-of-latitude grid."""
    a = rgt_semi_major_axis(resonance, repetition_period)
    return _grid_slots(prefix, a, [inclination], raan_count, aol_count, family=prefix)


def expand_family(fam: SlotFamily) -> list[OrbitalSlot]:
    if fam.type == "rgt":
        period = fam.repetition_period or SIDEREAL_DAY
        a = rgt_semi_major_axis(fam.resonance, period)
    elif fam.type == "grid":
        a = fam.semi_major_axis if fam.semi_major_axis is not None else R_EARTH + fam.altitude
    else:
        raise ScenarioError(f"slot_families[{fam.id}]: unknown type {fam.type!r}")
    slots = _grid_slots(fam.id, a, fam.inclination, fam.raan_count, fam.aol_count,
                        fam.raan_offset, fam.aol_offset, family=fam.id)
    return [replace(s, cost=_slot_cost(fam, s)) for s in slots]


def _slot_cost(fam: SlotFamily, slot: OrbitalSlot) -> float:
    if isinstance(fam.cost, (int, float)):
        return float(fam.cost)
    model = dict(fam.cost)
    if model.get("model") != "delta_v":
        raise ScenarioError(f"slot_families[{fam.id}].cost: unknown cost model {model.get('model')!r}")
    return geometry.deployment_delta_v(slot, parking_from_dict(model["parking"]), int(model.get("phasing_revs", 5)))


def parking_from_dict(d: dict) -> ParkingOrbit:
    a = d.get("semi_major_axis")
    if a is None:
        a = R_EARTH + float(d["altitude"])
    return ParkingOrbit(float(a), float(d.get("inclination", 0.0)), float(d.get("raan", 0.0)),
                        float(d.get("arg_latitude", 0.0)))


# --------------------------------------------------------------------------
# loading


def read_ephemeris_csv(path: Path) -> np.ndarray:
    """Dynamic-target ephemeris: header ``t,x_km,y_km,z_km``, one row per step."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["t", "x_km", "y_km", "z_km"]:
            raise ScenarioError(f"{path}: expected header t,x_km,y_km,z_km, got {reader.fieldnames}")
        rows = []
        for line, row in enumerate(reader, start=2):
            try:
                t = int(row["t"])
                rows.append((t, float(row["x_km"]), float(row["y_km"]), float(row["z_km"])))
            except (TypeError, ValueError) as exc:
                raise ScenarioError(f"{path}:{line}: {exc}") from None
    ts = [r[0] for r in rows]
    if ts != list(range(1, len(rows) + 1)):
        raise ScenarioError(f"{path}: step column must run 1..T without gaps")
    return np.array([r[1:] for r in rows], dtype=float).reshape(-1, 3)


def write_ephemeris_csv(path: Path, positions: np.ndarray):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x_km", "y_km", "z_km"])
        for t, (x, y, z) in enumerate(positions, start=1):
            w.writerow([t, repr(float(x)), repr(float(y)), repr(float(z))])


def _parse_epoch(text: str) -> datetime:
    try:
        when = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except (TypeError, ValueError):
        raise ScenarioError(f"time_grid.epoch: cannot parse {text!r}") from None
    if when.tzinfo is None:
        when = when.replace(tzinfo=timezone.utc)
    return when.astimezone(timezone.utc)


def _per_step(value, T: int, where: str) -> tuple:
    if isinstance(value, (list, tuple)):
        if len(value) != T:
            _fail(where, f"expected {T} per-step values, got {len(value)}")
        return tuple(value)
    return (value,) * T


def _per_target(value, targets: Sequence[Target], where: str) -> tuple:
    if isinstance(value, dict):
        missing = [t.id for t in targets if t.id not in value]
        if missing:
            _fail(where, f"missing entries for targets {missing}")
        return tuple(value[t.id] for t in targets)
    if isinstance(value, (list, tuple)):
        if len(value) != len(targets):
            _fail(where, f"expected {len(targets)} values, got {len(value)}")
        return tuple(value)
    return (value,) * len(targets)


def coverage_steps(fraction: float, T: int) -> int:
    """Convert a fractional coverage requirement to a step count (rounded up)."""
    if not 0.0 <= fraction <= 1.0:
        raise ScenarioError(f"coverage fraction must lie in [0, 1], got {fraction}")
    # guard against 0.8*T landing a hair above an integer
    return int(math.ceil(round(fraction * T, 9)))


def _require(d: dict, key: str, where: str):
    if key not in d:
        _fail(where, f"missing required field {key!r}")
    return d[key]


def _parse_target(d: dict, T: int, base: Path, idx: int) -> Target:
    where = f"targets[{idx}]"
    tid = str(_require(d, "id", where))
    kind = _require(d, "kind", where)
    req = _per_step(d.get("requirement", 1), T, f"targets[{tid}].requirement")
    if kind == "static":
        tgt = Target(tid, "static", req, lat=float(_require(d, "lat", where)), lon=float(_require(d, "lon", where)),
                     alt=float(d.get("alt", 0.0)), min_elevation=float(d.get("min_elevation", 0.0)))
    elif kind == "dynamic":
        path = str(_require(d, "ephemeris", where))
        eph = read_ephemeris_csv(base / path)
        mr = d.get("max_range")
        tgt = Target(tid, "dynamic", req, ephemeris=eph, ephemeris_path=path,
                     max_range=None if mr is None else float(mr))
    else:
        _fail(where, f"kind must be 'static' or 'dynamic', got {kind!r}")
    tgt.validate(T)
    return tgt


def _parse_family(d: dict, idx: int) -> SlotFamily:
    where = f"slot_families[{idx}]"
    inc = _require(d, "inclination", where)
    inc = tuple(float(v) for v in inc) if isinstance(inc, (list, tuple)) else (float(inc),)
    return SlotFamily(
        id=str(d.get("id", f"fam{idx}")),
        type=str(_require(d, "type", where)),
        inclination=inc,
        raan_count=int(_require(d, "raan_count", where)),
        aol_count=int(_require(d, "aol_count", where)),
        resonance=d.get("resonance"),
        repetition_period=d.get("repetition_period"),
        semi_major_axis=d.get("semi_major_axis"),
        altitude=d.get("altitude"),
        raan_offset=float(d.get("raan_offset", 0.0)),
        aol_offset=float(d.get("aol_offset", 0.0)),
        cost=d.get("cost", 1.0),
    )


def _parse_formulation(d: dict, targets, T: int) -> FormulationSpec:
    kind = Kind.parse(_require(d, "kind", "formulation"))
    p = dict(d.get("params", {}))
    known = {"D", "coverage_fraction", "D_mean", "mean_coverage_fraction", "N", "rewards", "budget", "z",
             "gamma", "epsilon", "isl_max_range", "isl_mode", "beta", "cyclic", "sum_of_mrts", "tight_big_m"}
    unknown = set(p) - known
    if unknown:
        _fail("formulation.params", f"unknown parameters {sorted(unknown)}")
    P = len(targets)
    kw = {}
    if "D" in p:
        kw["D"] = tuple(int(v) for v in _per_target(p["D"], targets, "formulation.params.D"))
    if "coverage_fraction" in p:
        fr = _per_target(p["coverage_fraction"], targets, "formulation.params.coverage_fraction")
        kw["D"] = tuple(coverage_steps(float(f), T) for f in fr)
    if "D_mean" in p:
        kw["D_mean"] = int(p["D_mean"])
    if "mean_coverage_fraction" in p:
        kw["D_mean"] = coverage_steps(float(p["mean_coverage_fraction"]), T * P)
    if "N" in p:
        kw["N"] = int(p["N"])
    if "rewards" in p:
        r = p["rewards"]
        arr = np.full((T, P), float(r)) if isinstance(r, (int, float)) else np.asarray(r, dtype=float).reshape(T, P)
        kw["rewards"] = arr
    if "budget" in p:
        kw["budget"] = float(p["budget"])
    if "z" in p:
        kw["z"] = tuple(int(v) for v in _per_target(p["z"], targets, "formulation.params.z"))
    if "gamma" in p:
        kw["gamma"] = tuple(float(v) for v in _per_target(p["gamma"], targets, "formulation.params.gamma"))
    for key in ("epsilon", "beta"):
        if key in p:
            kw[key] = float(p[key])
    if p.get("isl_max_range") is not None:
        kw["isl_max_range"] = float(p["isl_max_range"])
    for key in ("isl_mode",):
        if key in p:
            kw[key] = str(p[key])
    for key in ("cyclic", "sum_of_mrts", "tight_big_m"):
        if key in p:
            kw[key] = bool(p[key])
    return FormulationSpec(kind=kind, **kw)


def scenario_from_dict(doc: dict, base: Path = Path(".")) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario root must be a JSON object")
    tg = _require(doc, "time_grid", "scenario")
    grid = TimeGrid(
        epoch=_parse_epoch(_require(tg, "epoch", "time_grid")),
        dt=float(_require(tg, "dt", "time_grid")),
        num_steps=_require(tg, "num_steps", "time_grid"),
        cyclic=bool(tg.get("cyclic", False)),
        gmst0_deg=tg.get("gmst0_deg"),
    )
    T = grid.T
    raw_targets = _require(doc, "targets", "scenario")
    if not raw_targets:
        _fail("targets", "scenario declares no targets")
    targets = tuple(_parse_target(t, T, base, i) for i, t in enumerate(raw_targets))
    if len({t.id for t in targets}) != len(targets):
        _fail("targets", "target ids must be unique")

    families = tuple(_parse_family(f, i) for i, f in enumerate(doc.get("slot_families", [])))
    slots = []
    for fam in families:
        slots.extend(expand_family(fam))
    explicit = []
    for i, s in enumerate(doc.get("slots_explicit", [])):
        where = f"slots_explicit[{i}]"
        a = s.get("semi_major_axis")
        if a is None:
            a = R_EARTH + float(_require(s, "altitude", where))
        explicit.append(OrbitalSlot(str(s.get("id", f"slot{i}")), float(a), float(_require(s, "inclination", where)),
                                    float(_require(s, "raan", where)), float(_require(s, "arg_latitude", where)),
                                    float(s.get("cost", 1.0))))
    slots.extend(explicit)
    if not slots:
        _fail("slot_families", "scenario declares no orbital slots")
    if len({s.id for s in slots}) != len(slots):
        _fail("slots", "slot ids must be unique")

    if grid.cyclic:
        ok = any(f.type == "rgt" and abs((f.repetition_period or SIDEREAL_DAY) - grid.horizon) <= grid.dt
                 for f in families)
        if not ok:
            _fail("time_grid.cyclic", "needs an RGT family whose repetition period matches T*dt within one step")

    form = _parse_formulation(_require(doc, "formulation", "scenario"), targets, T)
    if "cyclic" not in doc["formulation"].get("params", {}):
        form = replace(form, cyclic=grid.cyclic)
    elif form.cyclic and not grid.cyclic:
        _fail("formulation.params.cyclic", "cyclic formulation requires time_grid.cyclic")
    form.validate(T, len(targets), len(slots))

    sd = doc.get("solver", {})
    valid = {f.name for f in fields(SolverConfig)}
    unknown = set(sd) - valid
    if unknown:
        _fail("solver", f"unknown options {sorted(unknown)}")
    solver = SolverConfig(**sd)
    if solver.time_limit <= 0 or solver.node_limit <= 0 or solver.abs_gap < 0:
        _fail("solver", "limits must be positive")
    if solver.strategy not in ("direct", "decomposed"):
        _fail("solver.strategy", f"expected 'direct' or 'decomposed', got {solver.strategy!r}")
    return Scenario(grid, targets, tuple(slots), form, solver, families, tuple(explicit), source=doc)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return scenario_from_dict(doc, path.parent)


# --------------------------------------------------------------------------
# saving


def _compress(values: tuple):
    return values[0] if len(set(values)) == 1 else list(values)


def scenario_to_dict(sc: Scenario) -> dict:
    """Canonical document; ``scenario_from_dict(scenario_to_dict(sc))`` reproduces ``sc``."""
    g = sc.grid
    doc = {
        "time_grid": {
            "epoch": g.epoch.isoformat().replace("+00:00", "Z"),
            "dt": g.dt,
            "num_steps": g.num_steps,
            "cyclic": g.cyclic,
            "gmst0_deg": g.gmst0_deg,
        },
        "targets": [],
        "slot_families": [],
        "slots_explicit": [],
    }
    for t in sc.targets:
        d = {"id": t.id, "kind": t.kind, "requirement": _compress(tuple(int(r) for r in t.requirement))}
        if t.kind == "static":
            d.update(lat=t.lat, lon=t.lon, alt=t.alt, min_elevation=t.min_elevation)
        else:
            d.update(ephemeris=t.ephemeris_path, max_range=t.max_range)
        doc["targets"].append(d)
    for f in sc.families:
        d = {"id": f.id, "type": f.type, "inclination": list(f.inclination), "raan_count": f.raan_count,
             "aol_count": f.aol_count, "raan_offset": f.raan_offset, "aol_offset": f.aol_offset, "cost": f.cost}
        for key in ("resonance", "repetition_period", "semi_major_axis", "altitude"):
            if getattr(f, key) is not None:
                d[key] = getattr(f, key)
        doc["slot_families"].append(d)
    for s in sc.explicit_slots:
        doc["slots_explicit"].append({"id": s.id, "semi_major_axis": s.semi_major_axis, "inclination": s.inclination,
                                      "raan": s.raan, "arg_latitude": s.arg_latitude, "cost": s.cost})
    f = sc.formulation
    params = {"beta": f.beta, "cyclic": f.cyclic, "sum_of_mrts": f.sum_of_mrts, "tight_big_m": f.tight_big_m,
              "epsilon": f.epsilon, "isl_mode": f.isl_mode, "isl_max_range": f.isl_max_range}
    ids = [t.id for t in sc.targets]
    if f.D is not None:
        params["D"] = dict(zip(ids, f.D))
    if f.D_mean is not None:
        params["D_mean"] = f.D_mean
    if f.N is not None:
        params["N"] = f.N
    if f.rewards is not None:
        params["rewards"] = f.rewards.tolist()
    if f.budget is not None:
        params["budget"] = f.budget
    if f.z is not None:
        params["z"] = dict(zip(ids, f.z))
    if f.gamma is not None:
        params["gamma"] = dict(zip(ids, f.gamma))
    doc["formulation"] = {"kind": f.kind.value, "params": params}
    doc["solver"] = {k.name: getattr(sc.solver, k.name) for k in fields(SolverConfig)}
    return doc


def save_scenario(sc: Scenario, path) -> None:
    """Write ``sc`` as canonical JSON next to its ephemeris files.

    Dynamic-target ephemerides are rewritten beside the scenario file under
    their recorded relative path.
    """
    path = Path(path)
    doc = scenario_to_dict(sc)
    for t in sc.targets:
        if t.kind == "dynamic":
            rel = t.ephemeris_path or f"{t.id}_ephemeris.csv"
            write_ephemeris_csv(path.parent / rel, t.ephemeris)
    for d, t in zip(doc["targets"], sc.targets):
        if t.kind == "dynamic" and d.get("ephemeris") is None:
            d["ephemeris"] = f"{t.id}_ephemeris.csv"
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
