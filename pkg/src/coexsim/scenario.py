"""Scenario configuration and random dense small-cell deployments."""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from coexsim.rf import BREAKPOINT_M, MIN_D2D_M

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


class Tech(enum.IntEnum):
    WIGIG = 0
    NRU = 1

    @property
    def label(self) -> str:
        return {Tech.WIGIG: "WiGig", Tech.NRU: "NRU"}[self]

    @classmethod
    def from_label(cls, label: str) -> "Tech":
        for tech in cls:
            if tech.label == label:
                return tech
        raise ValueError(f"unknown technology label {label!r}")


INTERFERENCE_SCOPES = ("footprint", "all")


@dataclass(frozen=True)
class ScenarioConfig:
    """Deployment, radio and Monte Carlo parameters.

    Defaults follow the 60 GHz dense small-cell setting: 20 cells per
    technology, 100 UEs per cell, cell radii U[30, 150] m, 256-element arrays.
    """

    # deployment
    area_width: float = 600.0
    area_height: float = 600.0
    n_cells_per_tech: int = 20
    n_ues_per_cell: int = 100
    cell_radius_min: float = 30.0
    cell_radius_max: float = 150.0
    bs_height: float = 10.0
    ue_height: float = 1.5
    min_serve_dist_m: float = 10.0
    # radio
    carrier_freq_ghz: float = 60.0
    bandwidth_hz: float = 2.16e9
    n_ant: int = 256
    g_ele_db: float = 15.0
    tx_power_dbm: float = 30.0
    ue_rx_gain_db: float = 17.0
    noise_figure_db: float = 1.5
    a_m_db: float = 30.0
    interference_scope: str = "footprint"
    interfered_threshold_db: float = 0.0
    # simulation
    n_trials: int = 1000
    seed: int = 1

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """SHA-256 over a canonical JSON encoding of every field."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# Config file layout: section -> fields it holds.
SECTIONS = {
    "deployment": (
        "area_width", "area_height", "n_cells_per_tech", "n_ues_per_cell",
        "cell_radius_min", "cell_radius_max", "bs_height", "ue_height",
        "min_serve_dist_m",
    ),
    "radio": (
        "carrier_freq_ghz", "bandwidth_hz", "n_ant", "g_ele_db", "tx_power_dbm",
        "ue_rx_gain_db", "noise_figure_db", "a_m_db", "interference_scope",
        "interfered_threshold_db",
    ),
    "simulation": ("n_trials", "seed"),
}

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


class ConfigError(ValueError):
    """One or more configuration problems; ``errors`` lists all of them."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def config_errors(cfg: ScenarioConfig) -> list[str]:
    errs = []
    if not cfg.cell_radius_min > 0:
        errs.append("cell_radius_min must be > 0")
    if cfg.cell_radius_max < cfg.cell_radius_min:
        errs.append("cell_radius_max must be >= cell_radius_min")
    if not cfg.cell_radius_max < BREAKPOINT_M:
        errs.append(f"cell_radius_max must be < breakpoint distance ({BREAKPOINT_M:g} m)")
    if cfg.min_serve_dist_m < MIN_D2D_M:
        errs.append(
            f"min_serve_dist_m must be >= {MIN_D2D_M:g} m "
            "(UMi-LOS path-loss model floor)"
        )
    if cfg.min_serve_dist_m >= cfg.cell_radius_min:
        errs.append("min_serve_dist_m must be < cell_radius_min")
    for name in ("n_cells_per_tech", "n_ues_per_cell", "n_trials", "n_ant"):
        if getattr(cfg, name) < 1:
            errs.append(f"{name} must be >= 1")
    if not cfg.bandwidth_hz > 0:
        errs.append("bandwidth_hz must be > 0")
    if not cfg.carrier_freq_ghz > 0:
        errs.append("carrier_freq_ghz must be > 0")
    for name in ("area_width", "area_height"):
        if not getattr(cfg, name) > 0:
            errs.append(f"{name} must be > 0")
    if not cfg.bs_height > cfg.ue_height >= 0:
        errs.append("heights must satisfy bs_height > ue_height >= 0")
    if cfg.a_m_db < 0:
        errs.append("a_m_db must be >= 0")
    if cfg.interference_scope not in INTERFERENCE_SCOPES:
        errs.append(f"interference_scope must be one of {INTERFERENCE_SCOPES}")
    if not 0 <= cfg.seed < 2**64:
        errs.append("seed must be a 64-bit unsigned integer")
    return errs


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """Return ``cfg`` unchanged, or raise ConfigError listing every violation."""
    errs = config_errors(cfg)
    if errs:
        raise ConfigError(errs)
    return cfg


def _coerce(name: str, value):
    typ = _FIELD_TYPES[name]
    if typ == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"{name} must be an integer")
        return value
    if typ == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError(f"{name} must be a number")
        return float(value)
    if not isinstance(value, str):
        raise TypeError(f"{name} must be a string")
    return value


def config_from_mapping(data: dict) -> ScenarioConfig:
    """Build a config from the sectioned mapping; unknown keys are errors."""
    errs = []
    values = {}
    for section, body in data.items():
        if section not in SECTIONS:
            errs.append(f"unknown section [{section}]")
            continue
        if not isinstance(body, dict):
            errs.append(f"[{section}] must be a table")
            continue
        for key, value in body.items():
            if key not in SECTIONS[section]:
                errs.append(f"unknown key {section}.{key}")
                continue
            try:
                values[key] = _coerce(key, value)
            except TypeError as exc:
                errs.append(f"{section}.{key}: {exc}")
    if errs:
        raise ConfigError(errs)
    return validate_config(ScenarioConfig(**values))


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    with path.open("rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError([f"{path}: {exc}"]) from exc
    return config_from_mapping(data)


def _toml_value(value) -> str:
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: ScenarioConfig) -> str:
    """Serialize ``cfg`` as TOML; round-trips through ``load_config``."""
    data = cfg.to_dict()
    lines = []
    for section, names in SECTIONS.items():
        lines.append(f"[{section}]")
        lines.extend(f"{name} = {_toml_value(data[name])}" for name in names)
        lines.append("")
    return "\n".join(lines)


@dataclass
class Cell:
    bs_xy: np.ndarray
    tech: Tech
    radius: float
    ue_xy: np.ndarray = field(repr=False)


@dataclass
class Deployment:
    cells: list[Cell]

    @property
    def bs_xy(self) -> np.ndarray:
        return np.array([c.bs_xy for c in self.cells]).reshape(-1, 2)

    @property
    def radii(self) -> np.ndarray:
        return np.array([c.radius for c in self.cells], dtype=float)

    @property
    def techs(self) -> np.ndarray:
        return np.array([int(c.tech) for c in self.cells], dtype=np.int8)

    @property
    def n_ues(self) -> int:
        return sum(len(c.ue_xy) for c in self.cells)


# Sub-stream ids within one trial.
STREAM_DEPLOYMENT = 0
STREAM_SCHEDULING = 1


def trial_rng(seed: int, trial_index: int, stream: int) -> np.random.Generator:
    """PCG64 generator keyed only by (seed, trial_index, stream).

    Trials are independent of each other and of execution order.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial_index, stream))
    return np.random.Generator(np.random.PCG64(ss))


def sample_annulus(rng: np.random.Generator, n: int, r_min: float, r_max: float):
    """``n`` points uniform over the area of an annulus, as (radius, angle)."""
    r = np.sqrt(rng.uniform(r_min**2, r_max**2, size=n))
    angle = rng.uniform(-np.pi, np.pi, size=n)
    return r, angle


def generate_deployment(cfg: ScenarioConfig, trial_index: int, seed: int | None = None) -> Deployment:
    """One random drop; WiGig cells come first, then NR-U cells.

    BS positions are uniform over the area, radii uniform over
    [cell_radius_min, cell_radius_max], and each cell's UEs uniform over the
    annulus between ``min_serve_dist_m`` and its radius.
    """
    seed = cfg.seed if seed is None else seed
    rng = trial_rng(seed, trial_index, STREAM_DEPLOYMENT)
    n_bs = 2 * cfg.n_cells_per_tech
    bs_x = rng.uniform(0.0, cfg.area_width, size=n_bs)
    bs_y = rng.uniform(0.0, cfg.area_height, size=n_bs)
    radii = rng.uniform(cfg.cell_radius_min, cfg.cell_radius_max, size=n_bs)

    cells = []
    for b in range(n_bs):
        r, angle = sample_annulus(rng, cfg.n_ues_per_cell, cfg.min_serve_dist_m, radii[b])
        bs = np.array([bs_x[b], bs_y[b]])
        ue = bs + np.column_stack([r * np.cos(angle), r * np.sin(angle)])
        tech = Tech.WIGIG if b < cfg.n_cells_per_tech else Tech.NRU
        cells.append(Cell(bs_xy=bs, tech=tech, radius=float(radii[b]), ue_xy=ue))
    return Deployment(cells)
