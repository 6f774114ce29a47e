"""Sweep configuration files and CSV/JSON artifact serialization."""

from __future__ import annotations

import configparser
import csv
import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .harness import SweepPointRecord, SweepSpec
from .noise import PRESETS, NoiseConfig, load_loss_map

SCHEMA_VERSION = "qtb.records.v1"
RECORD_FIELDS = [f.name for f in dataclasses.fields(SweepPointRecord)]
_INT_FIELDS = {"distance", "trials", "failures", "base_seed"}
_STR_FIELDS = {"mode", "decoder", "variable"}


class ConfigError(ValueError):
    """Invalid or unreadable sweep configuration."""


class EmptyDataError(ValueError):
    """An analysis was asked to work on (or emit) no rows."""


# -- value formatting ------------------------------------------------------


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "NaN"
        return format(value, ".17g")
    if hasattr(value, "item"):  # numpy scalar
        return format_value(value.item())
    return str(value)


def _jsonable(value: Any) -> Any:
    if hasattr(value, "item"):
        return value.item()
    if isinstance(value, tuple):
        return list(value)
    return value


def _row_dict(row: Any, fields: Sequence[str] | None) -> dict[str, Any]:
    if dataclasses.is_dataclass(row):
        data = {f.name: getattr(row, f.name) for f in dataclasses.fields(row)}
    else:
        data = dict(row)
    if fields is not None:
        data = {k: data[k] for k in fields}
    return data


def emit_rows(rows: Sequence[Any], path: str | Path, fmt: str = "csv", fields: Sequence[str] | None = None) -> Path:
    """Write dataclass or mapping rows as CSV (header + rows) or a JSON array."""
    if not rows:
        raise EmptyDataError(f"refusing to write an empty table to {path}")
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    dicts = [_row_dict(r, fields) for r in rows]
    header = list(fields) if fields is not None else list(dicts[0])
    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for d in dicts:
                writer.writerow([format_value(d[k]) for k in header])
    else:
        payload = [{k: _jsonable(d[k]) for k in header} for d in dicts]
        path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    return path


def emit_records(records: Sequence[SweepPointRecord], path: str | Path, fmt: str = "csv") -> Path:
    return emit_rows(records, path, fmt, RECORD_FIELDS)


def _parse_record(raw: dict[str, Any]) -> SweepPointRecord:
    kwargs = {}
    for name in RECORD_FIELDS:
        value = raw[name]
        if name in _STR_FIELDS:
            kwargs[name] = str(value)
        elif name in _INT_FIELDS:
            kwargs[name] = int(value)
        else:
            kwargs[name] = float(value)
    return SweepPointRecord(**kwargs)


def load_records(path: str | Path) -> list[SweepPointRecord]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        rows = json.loads(text)
    else:
        rows = list(csv.DictReader(line for line in text.splitlines() if line.strip()))
    missing = [f for f in RECORD_FIELDS if rows and f not in rows[0]]
    if missing:
        raise ConfigError(f"{path}: missing record columns {missing}")
    records = [_parse_record(r) for r in rows]
    if not records:
        raise EmptyDataError(f"{path}: no records")
    return records


# -- configuration ---------------------------------------------------------


@dataclass
class AnalysisConfig:
    sweep: SweepSpec
    resamples: int = 2000
    bootstrap_seed: int = 0
    ablation_components: tuple[str, ...] = ("gate", "meas", "idle", "loss")
    ablation_levels: tuple[float, ...] = (0.0, 0.0025, 0.005, 0.01)
    reference_x: float | None = None
    parallel_threads: int = 4
    extra: dict[str, str] = field(default_factory=dict)


_NOISE_KEYS = {"p", "sigma", "p_gate", "p_meas", "p_idle", "p_loss"}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


def _names(text: str) -> tuple[str, ...]:
    return tuple(v for v in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines (``#`` or ``;`` comments) into a flat dict."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    parser.read_string("[qtb]\n" + text)
    return dict(parser["qtb"])


def load_config(
    path: str | Path | None = None,
    defaults: dict[str, str] | None = None,
    environ: dict[str, str] | None = None,
) -> AnalysisConfig:
    """Build an :class:`AnalysisConfig` from defaults, a spec file and the environment.

    Later sources win: command defaults, then the file, then ``QTB_SEED`` /
    ``QTB_THREADS``. Relative ``loss_map``/``guide_table`` paths resolve
    against the spec file's directory.
    """
    values = dict(defaults or {})
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            values.update(read_config_text(path.read_text(encoding="utf-8")))
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read spec {path}: {exc}") from exc
        base_dir = path.parent
    env = os.environ if environ is None else environ
    if env.get("QTB_SEED"):
        values["seed"] = env["QTB_SEED"]
    if env.get("QTB_THREADS"):
        values["threads"] = env["QTB_THREADS"]
    try:
        return _build(values, base_dir)
    except ConfigError:
        raise
    except (KeyError, ValueError, TypeError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


def _build(values: dict[str, str], base_dir: Path) -> AnalysisConfig:
    known = set()

    def take(key, conv=str, default=None):
        known.add(key)
        if key in values and values[key] != "":
            return conv(values[key])
        return default

    mode = take("mode", str, "pauli")
    preset = take("noise.preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown noise preset {preset!r}")
        noise = PRESETS[preset]
    elif mode == "gkp":
        noise = PRESETS["paper-default"]
    else:
        noise = NoiseConfig(mode="pauli")
    noise_kw = {"mode": mode}
    for key in _NOISE_KEYS:
        v = take(f"noise.{key}", float)
        if v is not None:
            noise_kw[key] = v
    loss_map = take("loss_map")
    if loss_map is not None:
        noise_kw["loss_map"] = load_loss_map(_resolve(loss_map, base_dir))
    noise = dataclasses.replace(noise, **noise_kw)

    guide = take("guide_table")
    spec = SweepSpec(
        mode=mode,
        decoders=take("decoders", _names, ("mwpm",)),
        distances=take("distances", _ints, (3, 5, 7)),
        variable=take("grid.variable"),
        start=take("grid.start", float, 0.01),
        stop=take("grid.stop", float, 0.1),
        step=take("grid.step", float, 0.01),
        values=take("grid.values", _floats),
        trials=take("trials", int, 1000),
        base_seed=take("seed", int, 0),
        threads=take("threads", int, 1),
        noise=noise,
        guide_table=str(_resolve(guide, base_dir)) if guide is not None else None,
        bp_max_iters=take("bp.max_iters", int, 50),
        parallel_points=take("parallel_points", _bool, False),
    )
    cfg = AnalysisConfig(
        sweep=spec,
        resamples=take("bootstrap.resamples", int, 2000),
        bootstrap_seed=take("bootstrap.seed", int, 0),
        ablation_components=take("ablation.components", _names, ("gate", "meas", "idle", "loss")),
        ablation_levels=take("ablation.levels", _floats, (0.0, 0.0025, 0.005, 0.01)),
        reference_x=take("pareto.reference_x", float),
        parallel_threads=take("fidelity.parallel_threads", int, 4),
    )
    cfg.extra = {k: v for k, v in values.items() if k not in known}
    if cfg.extra:
        raise ConfigError(f"unknown config keys: {sorted(cfg.extra)}")
    return cfg


def _resolve(value: str, base_dir: Path) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base_dir / p


def write_manifest(out_dir: Path, command: str, artifacts: Iterable[Path], extra: dict | None = None) -> Path:
    payload = {
        "schema": SCHEMA_VERSION,
        "command": command,
        "artifacts": sorted(p.name for p in artifacts),
    }
    payload.update(extra or {})
    path = out_dir / f"{command}_manifest.json"
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path
