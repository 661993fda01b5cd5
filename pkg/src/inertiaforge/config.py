from __future__ import annotations

import json
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable

TECHNOLOGIES = ("hydro", "nuclear", "lignite", "hard_coal", "gas", "other")
PLACEMENT_KINDS = ("uniform", "fiedler", "non_fiedler", "custom", "fiedler_shift")
SECTIONS = (
    "grid",
    "load_distribution",
    "damping",
    "dispatch",
    "dynamics",
    "fault",
    "spectral",
    "placement",
    "output",
)


@dataclass(frozen=True)
class GridConfig:
    source: str
    bus_file: str | None
    line_file: str | None
    generator_file: str | None
    town_file: str | None
    national_load_file: str | None
    artifact_dir: str | None
    base_frequency: float
    transformer_reactance_ohm: float
    n_per_cluster: int
    second_cluster_size: int | None
    intra_susceptance: float
    bridge_susceptance: float
    band: int
    seed: int
    load_pu: float
    inertia_pu: float
    damping_pu: float
    regional_inertia: dict[str, float]

    @staticmethod
    def from_dict(data: dict) -> "GridConfig":
        second = data.get("second_cluster_size")
        return GridConfig(
            source=str(data.get("source", "synthetic")).strip().lower(),
            bus_file=_optional_str(data.get("bus_file")),
            line_file=_optional_str(data.get("line_file")),
            generator_file=_optional_str(data.get("generator_file")),
            town_file=_optional_str(data.get("town_file")),
            national_load_file=_optional_str(data.get("national_load_file")),
            artifact_dir=_optional_str(data.get("artifact_dir")),
            base_frequency=float(data.get("base_frequency", 50.0)),
            transformer_reactance_ohm=float(data.get("transformer_reactance_ohm", 10.0)),
            n_per_cluster=int(data.get("n_per_cluster", 10)),
            second_cluster_size=None if second is None else int(second),
            intra_susceptance=float(data.get("intra_susceptance", 1.0)),
            bridge_susceptance=float(data.get("bridge_susceptance", 0.05)),
            band=int(data.get("band", 2)),
            seed=int(data.get("seed", 1)),
            load_pu=float(data.get("load_pu", 0.05)),
            inertia_pu=float(data.get("inertia_pu", 1.0)),
            damping_pu=float(data.get("damping_pu", 0.1)),
            regional_inertia={str(k): float(v) for k, v in dict(data.get("regional_inertia", {})).items()},
        )

    def validate(self) -> None:
        if self.source not in {"synthetic", "csv"}:
            raise ValueError("grid.source must be synthetic or csv")
        if self.source == "csv":
            for name in ("bus_file", "line_file", "generator_file"):
                if not getattr(self, name):
                    raise ValueError(f"grid.{name} is required when grid.source is csv")
        if self.base_frequency not in (50.0, 60.0):
            raise ValueError("grid.base_frequency must be 50 or 60")
        if self.transformer_reactance_ohm <= 0:
            raise ValueError("grid.transformer_reactance_ohm must be > 0")
        if self.n_per_cluster < 3:
            raise ValueError("grid.n_per_cluster must be >= 3")
        if self.second_cluster_size is not None and self.second_cluster_size < 3:
            raise ValueError("grid.second_cluster_size must be >= 3")
        if self.intra_susceptance <= 0:
            raise ValueError("grid.intra_susceptance must be > 0")
        if not 0 < self.bridge_susceptance < self.intra_susceptance:
            raise ValueError("grid.bridge_susceptance must be in (0, intra_susceptance)")
        if self.band < 1:
            raise ValueError("grid.band must be >= 1")
        if self.load_pu <= 0:
            raise ValueError("grid.load_pu must be > 0")
        if self.inertia_pu <= 0:
            raise ValueError("grid.inertia_pu must be > 0")
        if self.damping_pu <= 0:
            raise ValueError("grid.damping_pu must be > 0")
        if any(factor < 0 for factor in self.regional_inertia.values()):
            raise ValueError("grid.regional_inertia factors must be >= 0")


@dataclass(frozen=True)
class LoadDistributionConfig:
    d_max_km: float = 50.0
    weight_220: float = 1.0
    weight_380: float = 3.0
    unmatched_towns: str = "warn"

    @staticmethod
    def from_dict(data: dict) -> "LoadDistributionConfig":
        return LoadDistributionConfig(
            d_max_km=float(data.get("d_max_km", 50.0)),
            weight_220=float(data.get("weight_220", 1.0)),
            weight_380=float(data.get("weight_380", 3.0)),
            unmatched_towns=str(data.get("unmatched_towns", "warn")).strip().lower(),
        )

    def bus_weight(self, voltage_kv: float) -> float:
        return self.weight_380 if voltage_kv >= 380.0 else self.weight_220

    def validate(self) -> None:
        if self.d_max_km <= 0:
            raise ValueError("load_distribution.d_max_km must be > 0")
        if self.weight_220 <= 0 or self.weight_380 <= 0:
            raise ValueError("load_distribution weights must be > 0")
        if self.unmatched_towns not in {"warn", "error"}:
            raise ValueError("load_distribution.unmatched_towns must be warn or error")


@dataclass(frozen=True)
class DampingConfig:
    load_alpha: float = 1.5
    generator_ratio: float = 0.5
    generator_table: dict[str, float] | None = None
    transit_fraction: float = 0.01

    @staticmethod
    def from_dict(data: dict) -> "DampingConfig":
        table = data.get("generator_table")
        return DampingConfig(
            load_alpha=float(data.get("load_alpha", 1.5)),
            generator_ratio=float(data.get("generator_ratio", 0.5)),
            generator_table=None if table is None else {str(k): float(v) for k, v in dict(table).items()},
            transit_fraction=float(data.get("transit_fraction", 0.01)),
        )

    def validate(self) -> None:
        if not 0.0 < self.load_alpha < 5.0:
            raise ValueError("damping.load_alpha must be in (0, 5)")
        if self.generator_ratio <= 0:
            raise ValueError("damping.generator_ratio must be > 0")
        if self.generator_table is not None:
            unknown = sorted(set(self.generator_table) - set(TECHNOLOGIES))
            if unknown:
                raise ValueError(f"damping.generator_table has unknown technologies: {', '.join(unknown)}")
            if any(value <= 0 for value in self.generator_table.values()):
                raise ValueError("damping.generator_table values must be > 0")
        if self.transit_fraction <= 0:
            raise ValueError("damping.transit_fraction must be > 0")


@dataclass(frozen=True)
class DispatchConfig:
    line_limit_mw: float | None = None
    load_scale: float = 1.0
    committed_inertia_only: bool = False

    @staticmethod
    def from_dict(data: dict) -> "DispatchConfig":
        limit = data.get("line_limit_mw")
        return DispatchConfig(
            line_limit_mw=None if limit is None else float(limit),
            load_scale=float(data.get("load_scale", 1.0)),
            committed_inertia_only=bool(data.get("committed_inertia_only", False)),
        )

    def validate(self) -> None:
        if self.line_limit_mw is not None and self.line_limit_mw <= 0:
            raise ValueError("dispatch.line_limit_mw must be > 0")
        if self.load_scale <= 0:
            raise ValueError("dispatch.load_scale must be > 0")


@dataclass(frozen=True)
class DynamicsConfig:
    engine: str = "nonlinear"
    rtol: float = 1e-9
    atol: float = 1e-12
    newton_tol: float = 1e-8
    newton_max_iter: int = 50

    @staticmethod
    def from_dict(data: dict) -> "DynamicsConfig":
        return DynamicsConfig(
            engine=str(data.get("engine", "nonlinear")).strip().lower(),
            rtol=float(data.get("rtol", 1e-9)),
            atol=float(data.get("atol", 1e-12)),
            newton_tol=float(data.get("newton_tol", 1e-8)),
            newton_max_iter=int(data.get("newton_max_iter", 50)),
        )

    def validate(self) -> None:
        if self.engine not in {"nonlinear", "linear"}:
            raise ValueError("dynamics.engine must be nonlinear or linear")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("dynamics.rtol and dynamics.atol must be > 0")
        if self.newton_tol <= 0:
            raise ValueError("dynamics.newton_tol must be > 0")
        if self.newton_max_iter < 1:
            raise ValueError("dynamics.newton_max_iter must be >= 1")


@dataclass(frozen=True)
class FaultConfig:
    buses: tuple[int, ...] = ()
    delta_p: float = 900.0
    t_sim: float = 5.0
    dt: float = 0.5
    n_sim: int = 10
    steps_per_interval: int = 50
    trace_buses: tuple[int, ...] = ()
    remove_inertia: bool = True

    @staticmethod
    def from_dict(data: dict) -> "FaultConfig":
        return FaultConfig(
            buses=tuple(int(b) for b in _ensure_list(data.get("buses", []))),
            delta_p=float(data.get("delta_p", 900.0)),
            t_sim=float(data.get("t_sim", 5.0)),
            dt=float(data.get("dt", 0.5)),
            n_sim=int(data.get("n_sim", 10)),
            steps_per_interval=int(data.get("steps_per_interval", 50)),
            trace_buses=tuple(int(b) for b in _ensure_list(data.get("trace_buses", []))),
            remove_inertia=bool(data.get("remove_inertia", True)),
        )

    def validate(self) -> None:
        if self.delta_p < 0:
            raise ValueError("fault.delta_p must be >= 0")
        if self.dt <= 0:
            raise ValueError("fault.dt must be > 0")
        if self.n_sim < 1:
            raise ValueError("fault.n_sim must be >= 1")
        if abs(self.n_sim * self.dt - self.t_sim) > 1e-9 * self.t_sim:
            raise ValueError("fault.n_sim * fault.dt must equal fault.t_sim")
        if self.steps_per_interval < 50:
            raise ValueError("fault.steps_per_interval must be >= 50")
        if len(set(self.buses)) != len(self.buses):
            raise ValueError("fault.buses must be distinct")


@dataclass(frozen=True)
class SpectralConfig:
    k: int = 6
    inertia: float | None = None
    damping: float | None = None
    dt: float = 0.5

    @staticmethod
    def from_dict(data: dict) -> "SpectralConfig":
        inertia = data.get("inertia")
        damping = data.get("damping")
        return SpectralConfig(
            k=int(data.get("k", 6)),
            inertia=None if inertia is None else float(inertia),
            damping=None if damping is None else float(damping),
            dt=float(data.get("dt", 0.5)),
        )

    def validate(self) -> None:
        if self.k < 2:
            raise ValueError("spectral.k must be >= 2")
        if self.inertia is not None and self.inertia <= 0:
            raise ValueError("spectral.inertia must be > 0")
        if self.damping is not None and self.damping <= 0:
            raise ValueError("spectral.damping must be > 0")
        if self.dt <= 0:
            raise ValueError("spectral.dt must be > 0")


@dataclass(frozen=True)
class PlacementConfig:
    procedures: tuple[str, ...] = ("uniform", "fiedler", "non_fiedler")
    levels: tuple[float, ...] = (1.0, 0.8, 0.6)
    seeds: tuple[int, ...] = (1,)
    epsilon_floor: float = 1e-9
    increment_fraction: float = 0.1
    custom_weights: dict[str, float] | None = None
    workers: int = 1
    shift_levels: tuple[float, ...] = (0.0, 0.1, 0.2)
    start_level: float | None = None
    start_procedure: str = "uniform"

    @staticmethod
    def from_dict(data: dict) -> "PlacementConfig":
        custom = data.get("custom_weights")
        start = data.get("start_level")
        return PlacementConfig(
            procedures=tuple(str(p).strip().lower() for p in _ensure_list(data.get("procedures", ["uniform", "fiedler", "non_fiedler"]))),
            levels=tuple(float(v) for v in _ensure_list(data.get("levels", [1.0, 0.8, 0.6]))),
            seeds=tuple(int(s) for s in _ensure_list(data.get("seeds", [1]))),
            epsilon_floor=float(data.get("epsilon_floor", 1e-9)),
            increment_fraction=float(data.get("increment_fraction", 0.1)),
            custom_weights=None if custom is None else {str(k): float(v) for k, v in dict(custom).items()},
            workers=int(data.get("workers", 1)),
            shift_levels=tuple(float(v) for v in _ensure_list(data.get("shift_levels", [0.0, 0.1, 0.2]))),
            start_level=None if start is None else float(start),
            start_procedure=str(data.get("start_procedure", "uniform")).strip().lower(),
        )

    def validate(self) -> None:
        unknown = [p for p in self.procedures if p not in PLACEMENT_KINDS]
        if unknown or not self.procedures:
            raise ValueError("placement.procedures must be drawn from " + ", ".join(PLACEMENT_KINDS))
        if "custom" in self.procedures and not self.custom_weights:
            raise ValueError("placement.custom_weights is required for the custom procedure")
        if not self.levels or any(level < 0 for level in self.levels):
            raise ValueError("placement.levels must be a nonempty list of fractions >= 0")
        if not self.seeds:
            raise ValueError("placement.seeds must not be empty")
        if self.epsilon_floor <= 0:
            raise ValueError("placement.epsilon_floor must be > 0")
        if not 0 < self.increment_fraction <= 1:
            raise ValueError("placement.increment_fraction must be in (0, 1]")
        if self.workers < 1:
            raise ValueError("placement.workers must be >= 1")
        if not self.shift_levels or any(level < 0 for level in self.shift_levels):
            raise ValueError("placement.shift_levels must be a nonempty list of fractions >= 0")
        if any(b < a for a, b in zip(self.shift_levels, self.shift_levels[1:])):
            raise ValueError("placement.shift_levels must be non-decreasing")
        if self.start_level is not None and not 0 <= self.start_level <= 1:
            raise ValueError("placement.start_level must be in [0, 1]")
        if self.start_procedure not in ("uniform", "fiedler", "non_fiedler"):
            raise ValueError("placement.start_procedure must be uniform, fiedler or non_fiedler")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"

    @staticmethod
    def from_dict(data: dict) -> "OutputConfig":
        return OutputConfig(directory=str(data.get("directory", "out")))

    def validate(self) -> None:
        if not self.directory:
            raise ValueError("output.directory must not be empty")


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig
    load_distribution: LoadDistributionConfig
    damping: DampingConfig
    dispatch: DispatchConfig
    dynamics: DynamicsConfig
    fault: FaultConfig
    spectral: SpectralConfig
    placement: PlacementConfig
    output: OutputConfig

    @staticmethod
    def default_path(project_root: Path) -> Path:
        return _user_config_dir() / "inertiaforge.json"

    @staticmethod
    def load_default(project_root: Path) -> "RunConfig":
        user_path = RunConfig.default_path(project_root)
        if user_path.exists():
            return RunConfig.from_json(user_path)
        bundled_path = _find_bundled_config(project_root)
        if bundled_path is not None:
            return RunConfig.from_json(bundled_path)
        return RunConfig.from_dict({})

    @staticmethod
    def from_json(path: Path) -> "RunConfig":
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise FileNotFoundError(f"Config file not found: {path}") from None
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValueError(f"Config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValueError(f"Config file {path} must hold a JSON object")
        return RunConfig.from_dict(data)

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            raise ValueError(f"Unknown config sections: {', '.join(unknown)}")

        def section(name: str) -> dict:
            value = data.get(name, {})
            if not isinstance(value, dict):
                raise ValueError(f"config section {name} must be an object")
            return value

        return RunConfig(
            grid=GridConfig.from_dict(section("grid")),
            load_distribution=LoadDistributionConfig.from_dict(section("load_distribution")),
            damping=DampingConfig.from_dict(section("damping")),
            dispatch=DispatchConfig.from_dict(section("dispatch")),
            dynamics=DynamicsConfig.from_dict(section("dynamics")),
            fault=FaultConfig.from_dict(section("fault")),
            spectral=SpectralConfig.from_dict(section("spectral")),
            placement=PlacementConfig.from_dict(section("placement")),
            output=OutputConfig.from_dict(section("output")),
        )

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        for values in data.values():
            for key, value in list(values.items()):
                if isinstance(value, tuple):
                    values[key] = list(value)
        return data

    def with_overrides(self, overrides: Iterable[str]) -> "RunConfig":
        data = self.to_dict()
        for item in overrides:
            key, sep, raw_value = item.partition("=")
            section, dot, field_name = key.strip().partition(".")
            if not sep or not dot or not field_name:
                raise ValueError(f"Override '{item}' must look like section.key=value")
            if section not in data:
                raise ValueError(f"Unknown config section '{section}' in override '{item}'")
            if field_name not in data[section]:
                raise ValueError(f"Unknown config key '{key.strip()}' in override '{item}'")
            try:
                value = json.loads(raw_value)
            except json.JSONDecodeError:
                value = raw_value
            data[section][field_name] = value
        return RunConfig.from_dict(data)

    def validate(self) -> None:
        self.grid.validate()
        self.load_distribution.validate()
        self.damping.validate()
        self.dispatch.validate()
        self.dynamics.validate()
        self.fault.validate()
        self.spectral.validate()
        self.placement.validate()
        self.output.validate()


def _optional_str(value: object) -> str | None:
    if value is None:
        return None
    text = str(value).strip()
    return text or None


def _ensure_list(value: Iterable | str | int | float | None) -> list:
    if value is None:
        return []
    if isinstance(value, (str, int, float)):
        return [value]
    return list(value)


def _user_config_dir() -> Path:
    if os.name == "nt":
        base = os.environ.get("APPDATA") or os.environ.get("USERPROFILE")
        if base:
            return Path(base) / "InertiaForge"
    base = os.environ.get("XDG_CONFIG_HOME")
    if base:
        return Path(base) / "inertiaforge"
    return Path.home() / ".config" / "inertiaforge"


def _find_bundled_config(project_root: Path) -> Path | None:
    candidates = [project_root / "config" / "inertiaforge.json"]
    if getattr(sys, "frozen", False):
        exe_dir = Path(sys.executable).resolve().parent
        candidates.append(exe_dir / "config" / "inertiaforge.json")
    for candidate in candidates:
        if candidate.exists():
            return candidate
    return None
