"""Command-line front end: parameter sweeps over models, distances and
regimes, tolerable-excess-noise scans, and calibration-statistics reports,
emitted as CSV or JSON.

Configs are JSON files (key-value with nested sections); any entry can be
overridden on the command line with --set dotted.key=value. Output files
are byte-deterministic for a given config.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Optional, Sequence

from .calibration import (
    NoiseGroundTruth,
    confidence_interval_ote,
    confidence_interval_tte,
    deviation_curve,
)
from .keyrate import (
    FiniteSizeParams,
    Regime,
    key_rate_asymptotic,
    key_rate_finite,
)
from .models import (
    CalibrationModel,
    SnuScenario,
    SystemParams,
    transmittance_from_km,
)

JOBS_ENV_VAR = "CVQKD_CALIB_JOBS"

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2

SWEEP_COLUMNS = [
    "model", "regime", "V", "distance_km", "transmittance", "eps_c", "eta_d",
    "v_ele", "delta", "n0_worst", "i_ab", "chi_be", "delta_n",
    "rate_bits_per_pulse", "rate_bits_per_s", "rate_clamped",
]
TEN_COLUMNS = [
    "model", "regime", "V", "distance_km", "transmittance", "eta_d", "v_ele",
    "ten",
]
CALIB_COLUMNS = ["m", "snu_norm_ote", "snu_norm_tte", "dev_ote", "dev_tte"]

TEN_TOLERANCE = 1e-4
TEN_MAX_ITER = 60
_TEN_BRACKET_CAP = 1024.0


class ConfigError(ValueError):
    """Invalid or missing configuration; maps to exit code 1."""


@dataclass(frozen=True)
class DistanceGrid:
    start: float
    stop: float
    step: float

    def __post_init__(self) -> None:
        if self.step <= 0.0:
            raise ConfigError(f"distances_km.step must be positive, got {self.step}")
        if self.stop < self.start:
            raise ConfigError(
                f"distances_km.stop ({self.stop}) must be >= start ({self.start})"
            )
        if self.start < 0.0:
            raise ConfigError(f"distances_km.start must be nonnegative, got {self.start}")

    def points(self) -> list[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [self.start + i * self.step for i in range(count)]


@dataclass(frozen=True)
class CalibrationConfig:
    v_tot: float
    v_ele: float
    seed: int
    eps_pe: float
    m_grid: tuple[int, ...]

    def ground_truth(self) -> NoiseGroundTruth:
        return NoiseGroundTruth(v_tot=self.v_tot, v_ele=self.v_ele, seed=self.seed)


@dataclass(frozen=True)
class SweepConfig:
    """Full description of one sweep run."""

    models: tuple[CalibrationModel, ...]
    regime: Regime
    distances_km: DistanceGrid
    variances: tuple[float, ...]
    system: dict[str, float]
    output_path: Optional[str]
    output_format: str
    finite_size: Optional[FiniteSizeParams] = None
    miscalibration_deltas: tuple[float, ...] = (0.0,)
    pulse_rate_hz: Optional[float] = None
    calibration: Optional[CalibrationConfig] = None

    def system_params(self, v: float, t: float) -> SystemParams:
        return SystemParams(v=v, t=t, **self.system)

    @staticmethod
    def from_dict(raw: dict) -> "SweepConfig":
        return _config_from_dict(raw)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "models": [m.value for m in self.models],
            "regime": self.regime.value,
            "distances_km": {
                "start": self.distances_km.start,
                "stop": self.distances_km.stop,
                "step": self.distances_km.step,
            },
            "variances": list(self.variances),
            "system": dict(self.system),
            "miscalibration_deltas": list(self.miscalibration_deltas),
            "output": {"path": self.output_path, "format": self.output_format},
        }
        if self.finite_size is not None:
            fs = self.finite_size
            out["finite_size"] = {
                "block_length": fs.block_length,
                "key_fraction": fs.key_fraction,
                "eps_pe": fs.eps_pe,
                "eps_pa": fs.eps_pa,
                "eps_smooth": fs.eps_smooth,
                "calib_samples_m": fs.calib_samples_m,
                "dim_hx": fs.dim_hx,
            }
        if self.pulse_rate_hz is not None:
            out["pulse_rate_hz"] = self.pulse_rate_hz
        if self.calibration is not None:
            c = self.calibration
            out["calibration"] = {
                "v_tot": c.v_tot,
                "v_ele": c.v_ele,
                "seed": c.seed,
                "eps_pe": c.eps_pe,
                "m_grid": list(c.m_grid),
            }
        return out


def _need(raw: dict, key: str, section: str = "") -> Any:
    if key not in raw:
        where = f"{section}.{key}" if section else key
        raise ConfigError(f"missing config field: {where}")
    return raw[key]


def _config_from_dict(raw: dict) -> SweepConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    try:
        model_names = _need(raw, "models")
        if not isinstance(model_names, list) or not model_names:
            raise ConfigError("models must be a non-empty list")
        try:
            models = tuple(CalibrationModel(m) for m in model_names)
        except ValueError as exc:
            valid = ", ".join(m.value for m in CalibrationModel)
            raise ConfigError(f"unknown model in {model_names}; valid: {valid}") from exc
        try:
            regime = Regime(_need(raw, "regime"))
        except ValueError as exc:
            raise ConfigError(
                f"regime must be one of {[r.value for r in Regime]}"
            ) from exc
        d = _need(raw, "distances_km")
        grid = DistanceGrid(
            start=float(_need(d, "start", "distances_km")),
            stop=float(_need(d, "stop", "distances_km")),
            step=float(_need(d, "step", "distances_km")),
        )
        variances = tuple(float(v) for v in _need(raw, "variances"))
        if not variances:
            raise ConfigError("variances must be a non-empty list")
        system_raw = dict(_need(raw, "system"))
        allowed = {"eps_c", "eta_d", "v_ele", "beta", "v_rin"}
        unknown = set(system_raw) - allowed
        if unknown:
            raise ConfigError(f"unknown system fields: {sorted(unknown)}")
        system = {k: float(v) for k, v in system_raw.items()}
        for req in ("eps_c", "eta_d", "v_ele", "beta"):
            if req not in system:
                raise ConfigError(f"missing config field: system.{req}")
        fs = None
        if raw.get("finite_size") is not None:
            f = raw["finite_size"]
            fs = FiniteSizeParams(
                block_length=int(_need(f, "block_length", "finite_size")),
                key_fraction=float(_need(f, "key_fraction", "finite_size")),
                eps_pe=float(_need(f, "eps_pe", "finite_size")),
                eps_pa=float(_need(f, "eps_pa", "finite_size")),
                eps_smooth=float(_need(f, "eps_smooth", "finite_size")),
                calib_samples_m=int(_need(f, "calib_samples_m", "finite_size")),
                dim_hx=int(f.get("dim_hx", 2)),
            )
        if regime is Regime.FINITE_SIZE and fs is None:
            raise ConfigError("finite_size section is required for the finite_size regime")
        deltas = tuple(float(x) for x in raw.get("miscalibration_deltas", [0.0]))
        if not deltas:
            deltas = (0.0,)
        for delta in deltas:
            if 1.0 + delta <= 0.0:
                raise ConfigError(f"miscalibration delta {delta} leaves no signal")
        pulse = raw.get("pulse_rate_hz")
        if pulse is not None:
            pulse = float(pulse)
            if pulse <= 0.0:
                raise ConfigError(f"pulse_rate_hz must be positive, got {pulse}")
        calib = None
        if raw.get("calibration") is not None:
            c = raw["calibration"]
            calib = CalibrationConfig(
                v_tot=float(_need(c, "v_tot", "calibration")),
                v_ele=float(_need(c, "v_ele", "calibration")),
                seed=int(c.get("seed", 0)),
                eps_pe=float(_need(c, "eps_pe", "calibration")),
                m_grid=tuple(int(m) for m in _need(c, "m_grid", "calibration")),
            )
        output = raw.get("output", {})
        out_path = output.get("path")
        out_format = output.get("format", "csv")
        if out_format not in ("csv", "json"):
            raise ConfigError(f"output.format must be csv or json, got {out_format}")
        cfg = SweepConfig(
            models=models,
            regime=regime,
            distances_km=grid,
            variances=variances,
            system=system,
            output_path=out_path,
            output_format=out_format,
            finite_size=fs,
            miscalibration_deltas=deltas,
            pulse_rate_hz=pulse,
            calibration=calib,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    _validate_physics(cfg)
    return cfg


def _validate_physics(cfg: SweepConfig) -> None:
    """Dry-build the parameter objects so bad values fail before the sweep."""
    try:
        for v in cfg.variances:
            cfg.system_params(v, 1.0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.calibration is not None:
        try:
            cfg.calibration.ground_truth()
            if not 0.0 < cfg.calibration.eps_pe < 1.0:
                raise ValueError(
                    f"calibration.eps_pe must lie in (0, 1), got {cfg.calibration.eps_pe}"
                )
            if not cfg.calibration.m_grid:
                raise ValueError("calibration.m_grid must not be empty")
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: str, overrides: Sequence[str] = ()) -> SweepConfig:
    """Read a JSON config file and apply --set overrides."""
    try:
        with open(path) as f:
            raw = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path} is not valid JSON (line {exc.lineno}, column {exc.colno}): "
            f"{exc.msg}"
        ) from exc
    for item in overrides:
        _apply_override(raw, item)
    return SweepConfig.from_dict(raw)


def _apply_override(raw: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, _, value = item.partition("=")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    node = raw
    parts = key.split(".")
    for part in parts[:-1]:
        nxt = node.get(part)
        if not isinstance(nxt, dict):
            nxt = {}
            node[part] = nxt
        node = nxt
    node[parts[-1]] = parsed


# ---------------------------------------------------------------------------
# row evaluation

def _calibration_estimate(model: CalibrationModel, v_ele: float, v_rin: float,
                          fs: FiniteSizeParams):
    """SNU confidence interval for the finite-size scan, in true-SNU units.

    The one-time unit is the full LO-on variance 1 + v_ele + v_rin; the
    two-time unit subtracts a separately measured v_ele (the LO-off
    measurement sees no RIN), so its interval carries both fluctuations.
    """
    v_tot = 1.0 + v_ele + v_rin
    if model is CalibrationModel.CONVENTIONAL_TTE:
        return confidence_interval_tte(v_tot, v_ele, fs.calib_samples_m,
                                       fs.calib_samples_m, fs.eps_pe)
    return confidence_interval_ote(v_tot, fs.calib_samples_m, fs.eps_pe)


def _sweep_row(task: tuple) -> dict:
    model_value, v, dist, delta, system, regime_value, fs, pulse_rate = task
    model = CalibrationModel(model_value)
    regime = Regime(regime_value)
    params = SystemParams(v=v, t=transmittance_from_km(dist), **system)
    scenario = SnuScenario(model=model, calib_error=delta)
    if regime is Regime.ASYMPTOTIC:
        res = key_rate_asymptotic(params, scenario)
    else:
        calib = _calibration_estimate(model, system["v_ele"],
                                      system.get("v_rin", 0.0), fs)
        res = key_rate_finite(params, scenario, fs, calib)
    rate = res.rate_bits_per_pulse
    return {
        "model": model.value,
        "regime": regime.value,
        "V": v,
        "distance_km": dist,
        "transmittance": params.t,
        "eps_c": system["eps_c"],
        "eta_d": system["eta_d"],
        "v_ele": system["v_ele"],
        "delta": delta,
        "n0_worst": res.worst_n0,
        "i_ab": res.i_ab,
        "chi_be": res.chi_be,
        "delta_n": res.delta_n,
        "rate_bits_per_pulse": rate,
        "rate_bits_per_s": None if pulse_rate is None else rate * pulse_rate,
        "rate_clamped": max(rate, 0.0),
    }


def _ten_row(task: tuple) -> dict:
    model_value, v, dist, system, regime_value, fs = task
    model = CalibrationModel(model_value)
    regime = Regime(regime_value)
    t = transmittance_from_km(dist)
    scenario = SnuScenario(model=model)

    def rate_at(eps_c: float) -> float:
        params = SystemParams(v=v, t=t, **{**system, "eps_c": eps_c})
        if regime is Regime.ASYMPTOTIC:
            return key_rate_asymptotic(params, scenario).rate_bits_per_pulse
        calib = _calibration_estimate(model, system["v_ele"],
                                      system.get("v_rin", 0.0), fs)
        return key_rate_finite(params, scenario, fs, calib).rate_bits_per_pulse

    ten = _bisect_tolerable_noise(rate_at)
    return {
        "model": model.value,
        "regime": regime.value,
        "V": v,
        "distance_km": dist,
        "transmittance": t,
        "eta_d": system["eta_d"],
        "v_ele": system["v_ele"],
        "ten": ten,
    }


def _bisect_tolerable_noise(rate_at, tol: float = TEN_TOLERANCE,
                            max_iter: int = TEN_MAX_ITER) -> float:
    """Largest excess noise with positive rate, to tol, by bisection."""
    if rate_at(0.0) <= 0.0:
        return 0.0
    lo, hi = 0.0, 0.5
    while rate_at(hi) > 0.0:
        hi *= 2.0
        if hi > _TEN_BRACKET_CAP:
            raise RuntimeError("rate stayed positive up to the excess-noise cap")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if rate_at(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def _run_tasks(worker, tasks: list[tuple], jobs: int) -> list[dict]:
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks))


def sweep_rows(config: SweepConfig, jobs: int = 1) -> list[dict]:
    """Key-rate rows for every (model, V, distance, delta) grid point."""
    tasks = [
        (model.value, v, dist, delta, config.system, config.regime.value,
         config.finite_size, config.pulse_rate_hz)
        for model in sorted(config.models, key=lambda m: m.value)
        for v in sorted(config.variances)
        for dist in config.distances_km.points()
        for delta in config.miscalibration_deltas
    ]
    rows = _run_tasks(_sweep_row, tasks, jobs)
    rows.sort(key=lambda r: (r["model"], r["V"], r["distance_km"], r["delta"]))
    return rows


def ten_rows(config: SweepConfig, jobs: int = 1) -> list[dict]:
    """Tolerable-excess-noise rows for every (model, V, distance)."""
    tasks = [
        (model.value, v, dist, config.system, config.regime.value,
         config.finite_size)
        for model in sorted(config.models, key=lambda m: m.value)
        for v in sorted(config.variances)
        for dist in config.distances_km.points()
    ]
    rows = _run_tasks(_ten_row, tasks, jobs)
    rows.sort(key=lambda r: (r["model"], r["V"], r["distance_km"]))
    return rows


def calibration_rows(config: SweepConfig) -> list[dict]:
    if config.calibration is None:
        raise ConfigError("calibration section is required for the calib command")
    c = config.calibration
    return deviation_curve(c.ground_truth(), c.m_grid, c.eps_pe)


# ---------------------------------------------------------------------------
# output

def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(rows: list[dict], columns: list[str], path: str, fmt: str) -> None:
    if fmt == "csv":
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_format_cell(row[c]) for c in columns])
    elif fmt == "json":
        payload = [{c: row[c] for c in columns} for row in rows]
        with open(path, "w") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    else:
        raise ConfigError(f"unknown output format {fmt}")


def run_sweep(config: SweepConfig, jobs: int = 1) -> str:
    if config.output_path is None:
        raise ConfigError("no output path: set output.path in the config or pass --out")
    rows = sweep_rows(config, jobs=jobs)
    write_rows(rows, SWEEP_COLUMNS, config.output_path, config.output_format)
    return config.output_path


def run_ten_sweep(config: SweepConfig, jobs: int = 1) -> str:
    if config.output_path is None:
        raise ConfigError("no output path: set output.path in the config or pass --out")
    rows = ten_rows(config, jobs=jobs)
    write_rows(rows, TEN_COLUMNS, config.output_path, config.output_format)
    return config.output_path


def run_calibration_report(config: SweepConfig) -> str:
    if config.output_path is None:
        raise ConfigError("no output path: set output.path in the config or pass --out")
    rows = calibration_rows(config)
    write_rows(rows, CALIB_COLUMNS, config.output_path, config.output_format)
    return config.output_path


# ---------------------------------------------------------------------------
# entry point

def _default_jobs() -> int:
    value = os.environ.get(JOBS_ENV_VAR)
    if value is None:
        return 1
    try:
        jobs = int(value)
    except ValueError as exc:
        raise ConfigError(f"{JOBS_ENV_VAR} must be an integer, got {value!r}") from exc
    if jobs < 1:
        raise ConfigError(f"{JOBS_ENV_VAR} must be >= 1, got {jobs}")
    return jobs


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvqkd-calib",
        description="Key-rate sweeps and calibration statistics for CV-QKD "
                    "shot-noise-unit calibration models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sweep", "Key rate vs distance for the configured models."),
        ("ten", "Tolerable excess noise vs distance (bisection on eps_c)."),
        ("calib", "Calibration deviation curves vs block length."),
        ("validate-config", "Parse and validate a config, then exit."),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON config file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config entry (dotted keys)")
        if name != "validate-config":
            p.add_argument("--out", help="output file path (overrides output.path)")
            p.add_argument("--format", choices=["csv", "json"],
                           help="output format (overrides output.format)")
            p.add_argument("--jobs", type=int, default=None,
                           help=f"worker processes (default: ${JOBS_ENV_VAR} or 1)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, args.overrides)
        if args.command == "validate-config":
            print("configuration valid")
            return EXIT_OK
        if args.out is not None:
            config = _with_output(config, path=args.out)
        if args.format is not None:
            config = _with_output(config, fmt=args.format)
        jobs = args.jobs if args.jobs is not None else _default_jobs()
        if jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {jobs}")
        if args.command == "sweep":
            path = run_sweep(config, jobs=jobs)
        elif args.command == "ten":
            path = run_ten_sweep(config, jobs=jobs)
        else:
            path = run_calibration_report(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (OSError, RuntimeError, ValueError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    print(f"wrote {path}")
    return EXIT_OK


def _with_output(config: SweepConfig, path: Optional[str] = None,
                 fmt: Optional[str] = None) -> SweepConfig:
    raw = config.to_dict()
    if path is not None:
        raw.setdefault("output", {})["path"] = path
    if fmt is not None:
        raw.setdefault("output", {})["format"] = fmt
    return SweepConfig.from_dict(raw)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
