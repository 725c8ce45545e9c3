"""Configuration parsing and result tables.

Configs are TOML, deep-merged over a bundled profile and validated by the pydantic
records in ``constants``. Grids are long-format CSV with '#' key=value header lines.
"""

import hashlib
import json
import logging
import tomllib
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from phasemod.constants import (
    DEFAULT_PROFILE,
    PROFILE_DIR,
    TOOL_NAME,
    TOOL_VERSION,
    ExperimentConfig,
    SummaryRow,
    SweepGrid,
    TransferTable,
)
from phasemod.errors import ConfigError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
SUMMARY_COLUMNS = ["x", "value", "uncertainty", "analytic", "flag"]
AXIS_KEYS = ("x_name", "y_name")


# ==========================================
# ⚙️ CONFIGURATION
# ==========================================
def available_profiles() -> list[str]:
    return sorted(p.stem for p in PROFILE_DIR.glob("*.toml"))


def profile_path(name: str) -> Path:
    path = PROFILE_DIR / f"{name}.toml"
    if not path.is_file():
        raise ConfigError(f"unknown profile {name!r}; bundled profiles: {', '.join(available_profiles())}")
    return path


def _read_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def deep_merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; ``override`` wins, lists and scalars are replaced."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _normalise(raw: dict) -> dict:
    """TOML layout ([pulse1], [pulse2]) to the model layout (pulses pair)."""
    data = dict(raw)
    pulse1 = data.pop("pulse1", None)
    pulse2 = data.pop("pulse2", None)
    if "pulses" not in data:
        data["pulses"] = (pulse1 or {}, pulse2 or {})
    return data


def _describe(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        field = ".".join(str(p) for p in item["loc"]) or "<config>"
        parts.append(f"{field}: {item['msg']}")
    return "; ".join(parts)


def profile_data(name: str) -> dict:
    """Raw profile table; every profile is layered over ``paper-device``."""
    data = _read_toml(profile_path(DEFAULT_PROFILE))
    if name != DEFAULT_PROFILE:
        data = deep_merge(data, _read_toml(profile_path(name)))
    return data


def build_config(data: dict, profile: str | None = DEFAULT_PROFILE) -> ExperimentConfig:
    """Validate ``data`` merged over ``profile`` (``profile=None`` uses ``data`` alone)."""
    base = profile_data(profile) if profile else {}
    merged = _normalise(deep_merge(base, data))
    try:
        return ExperimentConfig.model_validate(merged)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {_describe(exc)}") from exc


def parse_config(path, profile: str = DEFAULT_PROFILE) -> ExperimentConfig:
    """Read a TOML experiment file; missing fields come from the bundled profile."""
    path = Path(path)
    config = build_config(_read_toml(path), profile)
    logger.debug("parsed %s over profile %s (hash %s)", path, profile, config_hash(config)[:12])
    return config


def load_profile(name: str = DEFAULT_PROFILE) -> ExperimentConfig:
    return build_config({}, name)


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON dump of the validated config."""
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ==========================================
# 📄 TRANSFER TABLE
# ==========================================
def load_transfer_table(path) -> TransferTable:
    """Two-column CSV (omega_p GHz, factor); a header row is optional."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, comment="#", header=None)
    except FileNotFoundError as exc:
        raise ConfigError(f"transfer table not found: {path}") from exc
    except pd.errors.EmptyDataError as exc:
        raise ConfigError(f"transfer table {path} is empty") from exc
    if frame.shape[1] != 2:
        raise ConfigError(f"transfer table {path} must have exactly two columns, found {frame.shape[1]}")
    frame = frame.apply(pd.to_numeric, errors="coerce").dropna()
    try:
        return TransferTable(frequencies=tuple(frame[0]), factors=tuple(frame[1]))
    except ValidationError as exc:
        raise ConfigError(f"{path}: {_describe(exc)}") from exc


# ==========================================
# 💾 RESULT TABLES
# ==========================================
def summary_path(path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.summary{path.suffix or '.csv'}")


def _header(grid: SweepGrid, cfg: ExperimentConfig | None) -> list[str]:
    meta = {"tool": TOOL_NAME, "tool_version": TOOL_VERSION, "x_name": grid.x_name, "y_name": grid.y_name}
    if cfg is not None:
        meta["config_hash"] = config_hash(cfg)
        meta["config"] = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    meta.update(grid.metadata)
    lines = []
    for key, value in meta.items():
        text = str(value).replace("\n", " ")
        lines.append(f"# {key}={text}\n")
    return lines


def write_grid(grid: SweepGrid, path, cfg: ExperimentConfig | None = None) -> Path:
    """Write ``grid`` as long-format x,y,z rows plus a sibling summary table."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        xx, yy = np.meshgrid(grid.x, grid.y)
        frame = pd.DataFrame({"x": xx.ravel(), "y": yy.ravel(), "z": grid.z.ravel()}) if grid.z.size else \
            pd.DataFrame(columns=["x", "y", "z"])
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.writelines(_header(grid, cfg))
            if grid.z.size:
                frame.to_csv(f, index=False, float_format=FLOAT_FORMAT)
            else:
                f.write("x,y,z\n")

        rows = [row.model_dump() for row in grid.summary]
        summary = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
        summary.to_csv(summary_path(path), index=False, float_format=FLOAT_FORMAT)
    except OSError as exc:
        raise OSError(f"could not write results to {path}: {exc}") from exc
    logger.info("wrote %s (%d x %d)", path, grid.y.size, grid.x.size)
    return path


def _read_header(path: Path) -> dict[str, str]:
    meta = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
    return meta


def _unique_in_order(values: np.ndarray) -> np.ndarray:
    _, first = np.unique(values, return_index=True)
    return values[np.sort(first)]


def read_grid(path) -> SweepGrid:
    """Inverse of ``write_grid``; axis order is recovered from first appearance."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"result table not found: {path}")
    meta = _read_header(path)
    frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    x = _unique_in_order(frame["x"].to_numpy(dtype=float))
    y = _unique_in_order(frame["y"].to_numpy(dtype=float))
    z = frame["z"].to_numpy(dtype=float).reshape(y.size, x.size) if len(frame) else np.empty((0, 0))

    summary = ()
    sibling = summary_path(path)
    if sibling.is_file():
        table = pd.read_csv(sibling, keep_default_na=False, na_values=[""], float_precision="round_trip")
        table["flag"] = table["flag"].fillna("").astype(str)
        summary = tuple(
            SummaryRow(x=r.x, value=r.value, uncertainty=r.uncertainty,
                       analytic=float("nan") if pd.isna(r.analytic) else r.analytic, flag=r.flag)
            for r in table.itertuples(index=False)
        )

    reserved = {"tool", "tool_version", "config", "config_hash", *AXIS_KEYS}
    return SweepGrid(
        x_name=meta.get("x_name", "x"),
        y_name=meta.get("y_name", "y"),
        x=x,
        y=y,
        z=z,
        summary=summary,
        metadata={k: v for k, v in meta.items() if k not in reserved},
    )


def read_config_from_grid(path) -> ExperimentConfig:
    """Config embedded in a result header, for exact re-runs."""
    meta = _read_header(Path(path))
    if "config" not in meta:
        raise ConfigError(f"{path} carries no embedded config")
    try:
        return ExperimentConfig.model_validate(json.loads(meta["config"]))
    except (ValidationError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: embedded config is invalid: {exc}") from exc
