"""``qtb`` command-line front end.

Each command runs one analysis and writes one primary table to ``--out``.
Commands that run a sweep also write the long-format point records next to it
(for plotting) and every run writes a small JSON manifest.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import logging
import sys
from pathlib import Path

from . import report
from .harness import (
    DECODER_NAMES,
    DENSE_WINDOW,
    SweepResult,
    _resolve_guide,
    crossing_table,
    run_ablation,
    run_fidelity_study,
    run_sweep,
)
from .io import (
    SCHEMA_VERSION,
    AnalysisConfig,
    RECORD_FIELDS,
    ConfigError,
    EmptyDataError,
    emit_records,
    emit_rows,
    load_config,
    load_records,
    write_manifest,
)

log = logging.getLogger("qtb")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_STRICT_SKIP = 4

COMMANDS = (
    "sweep",
    "pareto",
    "crossing-bootstrap",
    "distance-gain",
    "ablation",
    "rank-stability",
    "effect-size",
    "fidelity",
    "dense-window",
)
# analyses that can read existing records instead of running a sweep
RECORD_COMMANDS = {"pareto", "crossing-bootstrap", "distance-gain", "rank-stability", "effect-size"}

_DENSE_DEFAULTS = {
    "mode": "gkp",
    "decoders": " ".join(DECODER_NAMES),
    "distances": "3 5 7",
    "grid.start": str(DENSE_WINDOW[0]),
    "grid.stop": str(DENSE_WINDOW[1]),
    "grid.step": str(DENSE_WINDOW[2]),
    "trials": "2500",
}
_ABLATION_DEFAULTS = {"mode": "gkp", "grid.values": "0.2", "distances": "5"}


class StrictSkipError(RuntimeError):
    """A decoder was skipped while ``--strict`` was set."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtb", description="Surface-code decoder benchmarking.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--spec", type=Path, help="key = value sweep configuration file")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--threads", type=int, help="worker count (0 = all cores)")
    parser.add_argument("--seed", type=int, help="base seed")
    parser.add_argument("--stable", action="store_true", help="fixed file names and zeroed runtimes")
    parser.add_argument("--strict", action="store_true", help="fail instead of skipping a decoder")
    parser.add_argument("--input", type=Path, help="existing records file to analyse instead of sweeping")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _stabilise(result: SweepResult) -> SweepResult:
    records = [dataclasses.replace(r, runtime_s=0.0) for r in result.records]
    return SweepResult(records, result.skipped, 0.0)


class _Run:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.command = args.command
        self.stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ")
        self.artifacts: list[Path] = []
        self.cfg: AnalysisConfig | None = None
        self.mode = "pauli"

    # -- setup -------------------------------------------------------------

    def load(self) -> None:
        defaults = {}
        if self.command == "dense-window":
            defaults = dict(_DENSE_DEFAULTS)
        elif self.command == "ablation":
            defaults = dict(_ABLATION_DEFAULTS)
        needs_spec = self.command != "dense-window" and not (self.args.input and self.command in RECORD_COMMANDS)
        if self.args.spec is None and needs_spec:
            raise ConfigError(f"{self.command} needs --spec")
        cfg = load_config(self.args.spec, defaults)
        overrides = {}
        if self.args.threads is not None:
            overrides["threads"] = self.args.threads
        if self.args.seed is not None:
            overrides["base_seed"] = self.args.seed
        if overrides:
            try:
                cfg.sweep = dataclasses.replace(cfg.sweep, **overrides)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        try:
            cfg.sweep.grid()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self.cfg = cfg
        self.mode = cfg.sweep.mode

    def check_guide(self) -> None:
        spec = self.cfg.sweep
        if self.args.strict and "guided-mwpm" in spec.decoders:
            guide, problem = _resolve_guide(spec)
            if guide is None:
                raise StrictSkipError(f"guided-mwpm unavailable: {problem}")

    # -- output ------------------------------------------------------------

    def name(self, suffix: str = "") -> str:
        stem = f"{self.command}_{self.mode}" + (f"_{suffix}" if suffix else "")
        if not self.args.stable:
            stem += f"_{self.stamp}"
        return f"{stem}.{self.args.format}"

    def emit(self, rows, suffix: str = "", fields=None) -> Path:
        path = emit_rows(rows, self.args.out / self.name(suffix), self.args.format, fields)
        self.artifacts.append(path)
        return path

    def emit_sweep(self, result: SweepResult, suffix: str = "records") -> Path:
        path = emit_records(result.records, self.args.out / self.name(suffix), self.args.format)
        self.artifacts.append(path)
        return path

    def sweep(self, stabilise: bool = True) -> SweepResult:
        result = run_sweep(self.cfg.sweep)
        if result.skipped and self.args.strict:
            raise StrictSkipError(f"skipped decoders: {result.skipped}")
        if self.args.stable and stabilise:
            result = _stabilise(result)
        if not result.records:
            raise EmptyDataError("the sweep produced no records")
        return result

    def records(self, stabilise: bool = True):
        if self.args.input is not None:
            try:
                records = load_records(self.args.input)
            except OSError as exc:
                raise ConfigError(f"cannot read records: {exc}") from exc
            self.mode = records[0].mode
            return records, None
        result = self.sweep(stabilise)
        return result.records, result

    def manifest(self) -> Path:
        spec = self.cfg.sweep if self.cfg else None
        extra = {"mode": self.mode, "format": self.args.format}
        if spec is not None and self.args.input is None:
            extra.update(
                {
                    "base_seed": spec.base_seed,
                    "trials": spec.trials,
                    "decoders": list(spec.decoders),
                    "distances": list(spec.distances),
                    "variable": spec.variable,
                }
            )
        if self.args.input is not None:
            extra["input"] = str(self.args.input)
        if not self.args.stable:
            extra["created"] = self.stamp
        path = write_manifest(self.args.out, self.command, self.artifacts, extra)
        return path


# -- commands --------------------------------------------------------------


def _cmd_sweep(run: _Run) -> None:
    result = run.sweep()
    report.check_grid_alignment(result.records)
    run.emit_sweep(result, suffix="")


def _record_analysis(run: _Run, build, stabilise: bool = True) -> None:
    records, result = run.records(stabilise)
    report.check_grid_alignment(records)
    rows = build(records)
    if not rows:
        raise EmptyDataError(f"{run.command} produced no rows")
    if run.args.stable and not stabilise:
        rows = [dataclasses.replace(r, runtime_s=0.0) for r in rows]
        result = _stabilise(result) if result is not None else None
    run.emit(rows)
    if result is not None:
        run.emit_sweep(result)


def _cmd_pareto(run: _Run) -> None:
    cfg = run.cfg

    def build(records):
        ref = cfg.reference_x
        if ref is None:
            xs = sorted({r.x for r in records})
            ref = 0.2 if run.mode == "gkp" and 0.2 in xs else xs[-1]
        return report.pareto_from_records(records, ref)

    # dominance uses measured runtimes; --stable only blanks them in the output
    _record_analysis(run, build, stabilise=False)


def _cmd_crossing_bootstrap(run: _Run) -> None:
    cfg = run.cfg
    _record_analysis(run, lambda recs: report.crossing_bootstrap_rows(recs, cfg.resamples, cfg.bootstrap_seed))


def _cmd_distance_gain(run: _Run) -> None:
    _record_analysis(run, report.distance_gain_rows)


def _cmd_rank_stability(run: _Run) -> None:
    cfg = run.cfg
    _record_analysis(run, lambda recs: report.rank_stability_rows(recs, cfg.resamples, cfg.bootstrap_seed))


def _cmd_effect_size(run: _Run) -> None:
    cfg = run.cfg
    _record_analysis(run, lambda recs: report.effect_size_rows(recs, cfg.resamples, cfg.bootstrap_seed))


def _cmd_ablation(run: _Run) -> None:
    cfg = run.cfg
    results, records = [], []
    for component in cfg.ablation_components:
        try:
            res, sweep = run_ablation(cfg.sweep, component, cfg.ablation_levels)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if sweep.skipped and run.args.strict:
            raise StrictSkipError(f"skipped decoders: {sweep.skipped}")
        results.extend(res)
        records.extend(_stabilise(sweep).records if run.args.stable else sweep.records)
    run.emit(report.ablation_rows(results))
    run.emit(records, suffix="records", fields=RECORD_FIELDS)


def _cmd_fidelity(run: _Run) -> None:
    cfg = run.cfg
    parallel = run.args.threads if run.args.threads is not None else cfg.parallel_threads
    spec = dataclasses.replace(cfg.sweep, threads=1)
    try:
        rep = run_fidelity_study(spec, serial_threads=1, parallel_threads=parallel)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if rep.serial.skipped and run.args.strict:
        raise StrictSkipError(f"skipped decoders: {rep.serial.skipped}")
    run.emit(report.fidelity_rows(rep, stable=run.args.stable))
    serial = _stabilise(rep.serial) if run.args.stable else rep.serial
    run.emit_sweep(serial)


def _cmd_dense_window(run: _Run) -> None:
    result = run.sweep()
    report.check_grid_alignment(result.records)
    run.emit(report.crossing_rows(crossing_table(result.records)))
    run.emit_sweep(result)


HANDLERS = {
    "sweep": _cmd_sweep,
    "pareto": _cmd_pareto,
    "crossing-bootstrap": _cmd_crossing_bootstrap,
    "distance-gain": _cmd_distance_gain,
    "ablation": _cmd_ablation,
    "rank-stability": _cmd_rank_stability,
    "effect-size": _cmd_effect_size,
    "fidelity": _cmd_fidelity,
    "dense-window": _cmd_dense_window,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    logging.captureWarnings(True)
    run = _Run(args)
    try:
        run.load()
        run.check_guide()
        args.out.mkdir(parents=True, exist_ok=True)
        HANDLERS[args.command](run)
        manifest = run.manifest()
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (EmptyDataError, report.GridMismatchError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    except StrictSkipError as exc:
        log.error("strict: %s", exc)
        return EXIT_STRICT_SKIP
    for path in run.artifacts:
        print(path)
    log.info("manifest %s (schema %s)", manifest, SCHEMA_VERSION)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
