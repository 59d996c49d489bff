"""
Command line entry point.

Each subcommand writes its outputs into a staging directory next to `<out>/<subcommand>` and moves it into place
once everything, including the run manifest, has been written.
"""
import argparse
import hashlib
import logging
import os
import shutil
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from nax_forecast import __version__
from nax_forecast.core.config import DEFAULT_CONFIG_PATH, RunConfig, parse_override
from nax_forecast.core.exceptions import EvaluationError, NaxException
from nax_forecast.core.models import ForecastMode
from nax_forecast.core.models.evaluation import EvalReport
from nax_forecast.core.models.nax import NaxConfig, TrainedNax
from nax_forecast.core.models.segmentation import DateRange
from nax_forecast.core.serialisation import dumps, read_json, write_csv, write_json
from nax_forecast.evaluation import coverage_frame, evaluate_forecast, pinball_frame, violations_95, violations_by_month
from nax_forecast.forecast import density_slices, forecast_frame, paths_frame, read_forecast
from nax_forecast.holidays import default_holidays, load_holidays
from nax_forecast.ingest import Holidays, read_csv, summary_stats, to_csv_frame
from nax_forecast.pipeline import oos_days, prepare, run_forecast, run_robustness, run_test, run_validation

APP_LOGGER = logging.getLogger(__name__)

# Holiday calendar used when no holiday file is configured
HOLIDAY_YEARS = range(1950, 2101)


class RunOutputs:
    """Collects the files of one run in a staging directory"""

    def __init__(self, staging: Path):
        self.staging = staging
        self.files: List[str] = []

    def csv(self, name: str, frame: pd.DataFrame):
        write_csv(frame, self.staging / name)
        self.files.append(name)

    def json(self, name: str, obj):
        write_json(obj, self.staging / name)
        self.files.append(name)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides: Dict[str, object] = {}
    for assignment in args.set or []:
        overrides.update(parse_override(assignment))
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = str(Path(args.out).absolute())
    if args.workers is not None:
        overrides["workers"] = args.workers
    if getattr(args, "paths", None) is not None:
        overrides["bootstrap.paths"] = args.paths
    return RunConfig(args.config, overrides)


def _holidays(config: RunConfig) -> Holidays:
    if path := config.get("data.holidays"):
        return load_holidays(config.resolve_path(path))
    return default_holidays(HOLIDAY_YEARS, config.include_floating_holidays())


def load_data(config: RunConfig) -> Tuple[pd.DataFrame, Holidays]:
    paths = config.data_paths()
    holidays = _holidays(config)
    return read_csv(paths["daily"] or paths["hourly"], holidays), holidays


def _selected_config(args: argparse.Namespace, config: RunConfig) -> NaxConfig:
    if getattr(args, "selected", None):
        return NaxConfig.from_json(read_json(Path(args.selected)))
    return config.nax_defaults()


def _write_report(outputs: RunOutputs, report: EvalReport, forecast, realized):
    outputs.json("report.json", report)
    outputs.csv("pinball.csv", pinball_frame(report))
    outputs.csv("coverage.csv", coverage_frame(report))
    outputs.csv("violations_by_month.csv", violations_by_month(violations_95(forecast, realized), forecast.dates))


def cmd_ingest(args: argparse.Namespace, config: RunConfig, outputs: RunOutputs):
    if args.input:
        daily = read_csv(Path(args.input), _holidays(config))
    else:
        daily, _ = load_data(config)
    if incomplete := daily.attrs.get("incomplete_days"):
        outputs.json("incomplete_days.json", incomplete)
    outputs.csv("daily.csv", to_csv_frame(daily))
    outputs.csv("summary_stats.csv", summary_stats(daily))


def cmd_validate(args: argparse.Namespace, config: RunConfig, outputs: RunOutputs):
    daily, _ = load_data(config)
    result = run_validation(
        prepare(daily), config.segmentation(), config.grid_spec(), config.seed(), config.workers())
    outputs.csv("leaderboard.csv", result.to_frame())
    outputs.csv("leaderboard_by_window.csv", result.by_window())
    outputs.csv("skipped.csv", pd.DataFrame(
        [(s.index, s.reason) for s in result.skipped], columns=["combination", "reason"]))
    outputs.json("selected_config.json", result.selected.selected_config)


def cmd_test(args: argparse.Namespace, config: RunConfig, outputs: RunOutputs):
    daily, _ = load_data(config)
    prepared = prepare(daily)
    segmentation = config.segmentation()
    run = run_test(prepared, segmentation, _selected_config(args, config), config.seed())
    realized = oos_days(prepared, segmentation.test).realized
    outputs.json("model.json", run.model)
    outputs.csv("forecast.csv", forecast_frame(run.forecast))
    _write_report(outputs, run.report, run.forecast, realized)
    outputs.csv("comparison.csv", run.comparison)
    outputs.csv("residual_acf.csv", run.diagnostics.correlogram)
    outputs.json("residual_diagnostics.json", run.diagnostics.to_json())


def cmd_robustness(args: argparse.Namespace, config: RunConfig, outputs: RunOutputs):
    daily, _ = load_data(config)
    table = run_robustness(
        prepare(daily), config.segmentation().robustness, _selected_config(args, config), config.seed())
    outputs.csv("robustness.csv", table)


def cmd_forecast(args: argparse.Namespace, config: RunConfig, outputs: RunOutputs):
    daily, holidays = load_data(config)
    prepared = prepare(daily)
    window = DateRange.parse_str(args.horizon) if args.horizon else config.segmentation().test
    mode = ForecastMode.EX_POST if args.ex_post else ForecastMode.EX_ANTE
    model = TrainedNax.from_json(read_json(Path(args.model))) if args.model else None
    nax_config = None if model else _selected_config(args, config).with_seed(config.seed())

    run = run_forecast(prepared, window, mode, holidays, nax_config, model, config.bootstrap_config())
    if model is None:
        outputs.json("model.json", run.model)
    outputs.csv("forecast.csv", forecast_frame(run.forecast))
    outputs.csv("density_slices.csv", density_slices(run.forecast, window.start.year))
    if run.mixture is not None:
        outputs.csv("mixture.csv", run.mixture.to_frame())
        outputs.csv("paths.csv", paths_frame(run.paths, run.forecast.dates))
    if run.report is not None:
        _write_report(outputs, run.report, run.forecast, oos_days(prepared, window).realized)
    if run.point_comparison is not None:
        outputs.csv("point_comparison.csv", run.point_comparison)


def cmd_evaluate(args: argparse.Namespace, config: RunConfig, outputs: RunOutputs):
    forecast = read_forecast(Path(args.forecast), Path(args.mixture) if args.mixture else None)
    daily, _ = load_data(config)
    window = DateRange(forecast.dates[0].date(), forecast.dates[-1].date())
    horizon = oos_days(prepare(daily), window)
    if len(horizon.realized) != len(forecast):
        raise EvaluationError(f"The forecast has {len(forecast)} days but {window} has {len(horizon.realized)}")
    _write_report(outputs, evaluate_forecast(forecast, horizon.realized), forecast, horizon.realized)


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig, RunOutputs], None]] = {
    "ingest": cmd_ingest,
    "validate": cmd_validate,
    "test": cmd_test,
    "robustness": cmd_robustness,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nax_forecast", description="Density forecasts of daily electricity consumption")
    parser.add_argument("--config", type=Path, default=DEFAULT_CONFIG_PATH, help="run configuration YAML file")
    parser.add_argument("--seed", type=int, help="overrides `seed`")
    parser.add_argument("--out", help="overrides `output_dir`")
    parser.add_argument("--workers", type=int, help="overrides `workers`")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any configuration value")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    subparsers = parser.add_subparsers(dest="command", required=True)

    ingest = subparsers.add_parser("ingest", help="aggregate to daily data and describe it")
    ingest.add_argument("--input", help="hourly or daily CSV file, instead of the configured one")

    subparsers.add_parser("validate", help="grid search on the validation period")

    for name, description in (("test", "retrain and evaluate on the test period"),
                              ("robustness", "retrain and evaluate on each robustness year")):
        sub = subparsers.add_parser(name, help=description)
        sub.add_argument("--selected", help="selected_config.json written by `validate`")

    forecast = subparsers.add_parser("forecast", help="ex-post or ex-ante density forecast")
    mode = forecast.add_mutually_exclusive_group()
    mode.add_argument("--ex-post", action="store_true", help="use the realised temperatures")
    mode.add_argument("--ex-ante", action="store_true", help="use bootstrapped temperature paths (default)")
    forecast.add_argument("--paths", type=int, help="overrides `bootstrap.paths`")
    forecast.add_argument("--model", help="model.json written by `test` or `forecast`")
    forecast.add_argument("--selected", help="selected_config.json written by `validate`")
    forecast.add_argument("--horizon", help="forecast period, e.g. 2012 or 2012-01-01/2012-06-30 (default: test)")

    evaluate = subparsers.add_parser("evaluate", help="score a written forecast against the configured data")
    evaluate.add_argument("--forecast", required=True, help="forecast.csv")
    evaluate.add_argument("--mixture", help="mixture.csv of an ex-ante forecast")
    return parser


def _manifest(command: str, config: RunConfig, started: datetime, files: Sequence[str]) -> Dict[str, object]:
    resolved = config.resolved()
    return {
        "command": command,
        "version": __version__,
        "config_path": config.yaml_path,
        "config": resolved,
        "config_sha256": hashlib.sha256(dumps(resolved).encode("utf-8")).hexdigest(),
        "seed": config.seed(),
        "started": started.isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": sorted(files),
    }


def run(args: argparse.Namespace) -> Path:
    config = _config_from_args(args)
    config.seed()  # mandatory
    started = datetime.now(timezone.utc)
    out_dir = config.output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / args.command

    staging = Path(tempfile.mkdtemp(prefix=f".{args.command}-", dir=out_dir))
    try:
        outputs = RunOutputs(staging)
        COMMANDS[args.command](args, config, outputs)
        outputs.json("manifest.json", _manifest(args.command, config, started, outputs.files + ["manifest.json"]))
        if target.exists():
            shutil.rmtree(target)
        os.replace(staging, target)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    APP_LOGGER.info(f"Wrote {len(outputs.files)} file(s) to {target}")
    return target


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        run(args)
    except NaxException as err:
        APP_LOGGER.error(f"{type(err).__name__}: {err}")
        return 1
    except Exception:
        APP_LOGGER.exception("Unexpected error")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
