"""Scenario configuration and its INI file form.

A config file holds one ``[scenario]`` section whose keys match the
:class:`ScenarioConfig` fields; list values are comma separated::

    [scenario]
    scenario = 1
    n = 10000
    replicates = 50
    ma_degrees = 0.20, 0.25, 0.30
    undercoding_levels = 0, 0.05, 0.10, 0.15
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..catalog import HccCatalog, load_catalog, severity_set_of
from ..cohort import TimeGrid
from ..simulate import load_cooccurrence

__all__ = ["ScenarioConfig", "ConfigError", "SCENARIO_TARGETS", "default_reference_events", "load_config"]

SCENARIO_TARGETS = {1: (238, "any_available"), 2: (125, "severity_based")}
SECTION = "scenario"


class ConfigError(ValueError):
    pass


def default_reference_events(target: int, catalog: HccCatalog | None = None) -> tuple[int, ...]:
    """Hierarchy-free HCCs present in the bundled co-occurrence table, minus ``target``."""
    catalog = catalog or load_catalog()
    present = {h for s in load_cooccurrence().sets for h in s}
    return tuple(h for h in catalog.hierarchy_free() if h in present and h != target)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one simulation study.

    ``target_hcc``, ``upcoding_mode`` and ``reference_events`` default from
    ``scenario``. ``selection`` and ``split`` are passed to the upcoding
    step; ``risk_set`` to the event-table builder.
    """

    scenario: int = 1
    n: int = 10_000
    replicates: int = 50
    monitoring_periods: int = 2
    time_points_per_period: int = 4
    ma_degrees: tuple[float, ...] = (0.20, 0.25, 0.30)
    tm_degree: float = 0.05
    undercoding_levels: tuple[float, ...] = (0.0, 0.05, 0.10, 0.15)
    ltfu_per_timepoint: float = 0.0
    target_hcc: int | None = None
    upcoding_mode: str | None = None
    reference_events: tuple[int, ...] | None = None
    base_seed: int = 20240601
    selection: str = "exact"
    split: str = "uniform"
    risk_set: str = "fixed"
    tau: float | None = None
    clamp_shift: bool = False
    cooccurrence_path: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.scenario not in SCENARIO_TARGETS:
            raise ConfigError(f"scenario must be 1 or 2, got {self.scenario}")
        target, mode = SCENARIO_TARGETS[self.scenario]
        if self.target_hcc is None:
            object.__setattr__(self, "target_hcc", target)
        if self.upcoding_mode is None:
            object.__setattr__(self, "upcoding_mode", mode)
        if self.reference_events is None:
            object.__setattr__(self, "reference_events", default_reference_events(self.target_hcc))
        object.__setattr__(self, "ma_degrees", tuple(float(x) for x in self.ma_degrees))
        object.__setattr__(self, "undercoding_levels", tuple(float(x) for x in self.undercoding_levels))
        object.__setattr__(self, "reference_events", tuple(int(x) for x in self.reference_events))

        if self.n < 1 or self.replicates < 1:
            raise ConfigError("n and replicates must be at least 1")
        if self.monitoring_periods < 1 or self.time_points_per_period < 1:
            raise ConfigError("need at least one monitoring period and one time point")
        if not self.ma_degrees or not self.undercoding_levels:
            raise ConfigError("degree and undercoding grids must be non-empty")
        for name in ("tm_degree", "ltfu_per_timepoint"):
            self._proportion(name, getattr(self, name))
        for x in self.ma_degrees + self.undercoding_levels:
            self._proportion("grid value", x)
        if self.risk_set not in ("fixed", "period"):
            raise ConfigError(f"unknown risk_set rule {self.risk_set!r}")
        if not self.reference_events:
            raise ConfigError("at least one reference event is required")
        catalog = load_catalog()
        if self.target_hcc not in catalog:
            raise ConfigError(f"HCC{self.target_hcc} is not in the catalog")
        if self.upcoding_mode == "severity_based" and severity_set_of(catalog, self.target_hcc).k < 2:
            raise ConfigError(f"severity-based upcoding needs a target with competing events, not HCC{self.target_hcc}")

    @staticmethod
    def _proportion(name, x):
        if not 0.0 <= x <= 1.0:
            raise ConfigError(f"{name} must lie in [0, 1], got {x}")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.monitoring_periods, self.time_points_per_period)

    def cells(self) -> list[tuple[float, float]]:
        """``(undercoding_level, ma_degree)`` pairs in output order."""
        return [(u, d) for u in self.undercoding_levels for d in self.ma_degrees]

    def with_overrides(self, **kw) -> "ScenarioConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "scenario" in kw and kw["scenario"] != self.scenario:
            # scenario-derived fields follow the new scenario unless given
            for k in ("target_hcc", "upcoding_mode", "reference_events"):
                kw.setdefault(k, None)
        return replace(self, **kw)

    def to_ini(self) -> str:
        lines = [f"[{SECTION}]"]
        for k, v in asdict(self).items():
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ", ".join(str(x) for x in v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


_LISTS = {"ma_degrees": float, "undercoding_levels": float, "reference_events": int}
_SCALARS = {f.name: f.type for f in fields(ScenarioConfig)}


def _convert(key, raw: str):
    raw = raw.strip()
    if key in _LISTS:
        return tuple(_LISTS[key](x) for x in raw.replace(";", ",").split(",") if x.strip())
    kind = _SCALARS[key]
    if "bool" in kind:
        return raw.lower() in ("1", "true", "yes", "on")
    if "int" in kind and "float" not in kind:
        return int(raw)
    if "float" in kind:
        return float(raw)
    return raw


def load_config(path: str | Path, **overrides) -> ScenarioConfig:
    """Read a ``[scenario]`` INI file; keyword overrides win over file values."""
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if not cp.has_section(SECTION):
        raise ConfigError(f"{path}: missing [{SECTION}] section")
    values = {}
    for key, raw in cp.items(SECTION):
        if key not in _SCALARS:
            raise ConfigError(f"{path}: unknown key {key!r}")
        try:
            values[key] = _convert(key, raw)
        except ValueError as e:
            raise ConfigError(f"{path}: bad value for {key}: {raw!r}") from e
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioConfig(**values)
