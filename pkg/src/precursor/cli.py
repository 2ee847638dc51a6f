"""precursor.

Multifractal random walk estimators and crash-precursor diagnostics.

Usage:
  precursor simulate [options]
  precursor simulate-omori [options]
  precursor market-mode <prices> [options]
  precursor estimate <series> [options]
  precursor spectrum <series> [options]
  precursor window-scan <series> [options]
  precursor omori <series> [options]
  precursor news-fit <series> <news> [options]
  precursor (-h | --help)
  precursor --version

Options:
  -h --help                  Show this screen.
  --version                  Show version.
  --config=<file>            Settings file, key=value lines or YAML; flags win.
  --out=<dir>                Output directory (env PRECURSOR_OUTPUT_DIR, else precursor-out).
  --seed=<int>               Seed of every random stream (0).
  --workers=<int>            Worker threads for window scans (all cores).
  --verbose                  Log progress to stderr.
  --column=<name>            Series column to read (dX, else the first value column).
  --n=<int>                  Simulated path length (131072).
  --sigma=<x>                Volatility scale per sqrt(minute) (1).
  --lambda2=<x>              Intermittency coefficient (0.018).
  --L=<minutes>              Decorrelation length (12975.43).
  --beta-b=<x>               Foreshock exponent (0.3).
  --beta-a=<x>               Aftershock exponent (0.7).
  --c-b=<x>                  Foreshock amplitude (50).
  --c-a=<x>                  Aftershock amplitude (50).
  --horizon-before=<min>     Foreshock horizon (10000).
  --horizon-after=<min>      Aftershock horizon (10000).
  --paper-mode               Require 0 < beta_b < beta_a < 1.
  --calendar=<file>          Per-day opening skips, date,open_skip_minutes.
  --open-skip=<min>          Opening skip for days not in the calendar file (0).
  --coverage=<x>             Fraction of issues needed per minute (1).
  --no-deseasonalize         Keep the intraday pattern in the market mode.
  --min-bucket=<int>         Samples per minute-of-day bucket (30).
  --dt=<min>                 Sampling interval of the estimate (1).
  --k-min=<int>              First lag of the covariance fit (20).
  --max-lag=<int>            Last lag of the covariance curve (length / 10).
  --form=<name>              Regressor, asymptotic or exact (asymptotic).
  --q-list=<list>            Moment orders (1,2,3,4,5).
  --dt-list=<list>           Dyadic time scales (1,2,...,4096).
  --window=<min>             Scan window width (39698).
  --stride=<min>             Scan stride (one trading day).
  --detrend=<mode>           none or local-block (none).
  --detrend-block=<min>      Detrend block length (8).
  --large-multiple=<x>       Large-return threshold in deviations (2).
  --thresholds=<list>        Omori threshold multiples (4,5,6,7).
  --search-start=<time>      Start of the main-shock search.
  --search-end=<time>        End of the main-shock search.
  --reference-start=<time>   Start of the deviation reference period.
  --reference-end=<time>     End of the deviation reference period.
  --start=<date>             First date of the news fit.
  --end=<date>               Last date of the news fit.
  --no-weekday-adjust        Fit raw cumulative news counts.

Outputs:
  simulate        mrw.csv  index,dX,omega
  simulate-omori  omori_events.csv  t_minutes
  market-mode     market_mode.csv  timestamp,dM
                  profile.csv  minute,std,count
                  ingestion_report.txt  one rejected or masked row per line
  estimate        fit.txt  key=value fit report
                  covcurve.csv  k,cov,n
  spectrum        spectrum.csv  q,zeta,se
                  moments.csv  q,dt,moment,se,n,heavy_tail
                  spectrum.txt  key=value fit report
  window-scan     trajectory.csv  window_end,lambda2,L,var_omega,r2,flag
                  daily_large.csv  date,count
  omori           omori_<m>.csv  side,t_minutes,N
                  omori.txt  key=value fit report
                  daily_large.csv  date,count
  news-fit        trajectory.csv  window_end,lambda2,L,var_omega,r2,flag
                  news.csv  date,raw,adjusted,cumulative
                  news_joined.csv  date,var_omega,cum_news
                  news_fit.txt  key=value fit report
  every command   manifest.yaml  config echo, input digests, version, seed

"""

import hashlib
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List

import docopt
import numpy as np
import pandas as pd
from pydantic import ValidationError

from . import status
from .__version__ import __version__
from .config import RunConfig, build_config
from .estimate import fit_lambda_L, fit_zeta, log_abs_cov, moment_scaling
from .events import cumulative_frequencies, find_main_shock, fit_omori
from .exceptions import ConfigError, IngestionError, PrecursorError, abort
from .formats import get_formats, read_series
from .market import compute_market_mode
from .news import deseasonalize_news, fit_news_coupling, join_news, load_news
from .scan import daily_large_count, trajectory_frame, window_scan
from .simulate import MrwParams, OmoriParams, simulate_mrw, simulate_omori_events
from .statics import COMMANDS, LAG_LENGTH_FACTOR, MANIFEST_NAME
from .timeseries import coarse_grain, detrend_local, load_prices, log_returns

logger = logging.getLogger(__name__)

_NEGATED = {"--no-deseasonalize": "deseasonalize", "--no-weekday-adjust": "weekday_adjust"}
_SWITCHES = {"--paper-mode": "paper_mode"}
_CONTROL = {"--config", "--verbose", "--help", "--version"}


def _flags(args: Dict[str, Any]) -> Dict[str, Any]:
    flags = {}
    for key, value in args.items():
        if not key.startswith("--") or key in _CONTROL:
            continue
        if key in _NEGATED:
            flags[_NEGATED[key]] = False if value else None
        elif key in _SWITCHES:
            flags[_SWITCHES[key]] = True if value else None
        else:
            flags[key[2:].replace("-", "_")] = value
    inputs = [args[k] for k in ("<prices>", "<series>", "<news>") if args.get(k)]
    if inputs:
        flags["inputs"] = inputs
    return flags


def _summary(e: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in err['loc']) or 'config'}: {err['msg']}"
        for err in e.errors()
    )


class Run:
    """Output bookkeeping of one command: every written file goes through here."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.out = Path(config.out)
        self.formats = get_formats()
        self.outputs: List[str] = []

    def write(self, kind: str, data, name: str) -> Path:
        path = self.formats[kind](data, self.out / name)
        self.outputs.append(name)
        return path

    def text(self, lines: List[str], name: str) -> Path:
        path = self.out / name
        path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
        self.outputs.append(name)
        return path

    def manifest(self) -> Path:
        digests = {}
        for path in self.config.inputs:
            digests[str(path)] = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        data = {
            "command": self.config.command,
            "version": __version__,
            "seed": self.config.seed,
            "inputs": digests,
            "outputs": sorted(self.outputs),
            "config": self.config.echo(),
        }
        path = get_formats()["yaml"](data, self.out / MANIFEST_NAME)
        logger.info("manifest written to %s", path)
        return path


def _series(config: RunConfig, index: int = 0):
    return read_series(config.inputs[index], config.column)


def _mrw_params(config: RunConfig) -> MrwParams:
    return MrwParams(sigma=config.sigma, lambda2=config.lambda2, L=config.L, dt=config.dt)


def run_simulate(run: Run) -> None:
    config = run.config
    dx, omega = simulate_mrw(_mrw_params(config), config.n, config.seed, return_omega=True)
    frame = pd.DataFrame({"index": np.arange(config.n), "dX": dx, "omega": omega})
    run.write("csv", frame, "mrw.csv")


def run_simulate_omori(run: Run) -> None:
    config = run.config
    params = OmoriParams(
        beta_b=config.beta_b,
        beta_a=config.beta_a,
        c_b=config.c_b,
        c_a=config.c_a,
        horizon_before=config.horizon_before,
        horizon_after=config.horizon_after,
        paper_mode=config.paper_mode,
    )
    events = simulate_omori_events(params, config.seed)
    run.write("csv", pd.DataFrame({"t_minutes": events}), "omori_events.csv")


def run_market_mode(run: Run) -> None:
    config = run.config
    ingestion = load_prices(config.inputs[0], config.ingestion())
    run.text(ingestion.report.lines(), "ingestion_report.txt")
    returns = {name: log_returns(p, 1) for name, p in ingestion.series.items()}
    mode = compute_market_mode(
        returns,
        coverage=config.coverage,
        deseasonalize=config.deseasonalize,
        min_bucket=config.min_bucket,
    )
    run.write("csv", mode.to_frame(), "market_mode.csv")
    if mode.profile is not None:
        run.write("csv", mode.profile.to_frame(), "profile.csv")


def _prepared(config: RunConfig):
    x = coarse_grain(_series(config), config.dt)
    if config.detrend == "local-block":
        x = detrend_local(x, config.detrend_block)
    return x


def run_estimate(run: Run) -> None:
    config = run.config
    x = _prepared(config)
    max_lag = config.max_lag or max(len(x) // LAG_LENGTH_FACTOR, 1)
    curve = log_abs_cov(x, max_lag)
    fit = fit_lambda_L(curve, config.k_min, x.dt, form=config.form)
    run.write("csv", curve.to_frame(), "covcurve.csv")
    report = {"n": len(x), "valid": x.count, "max_lag": max_lag, "detrend": config.detrend}
    report.update(fit.report())
    run.write("kv", report, "fit.txt")


def run_spectrum(run: Run) -> None:
    config = run.config
    table = moment_scaling(_series(config), config.q_list, config.dt_list)
    spectrum = fit_zeta(table)
    run.write("csv", spectrum.to_frame(), "spectrum.csv")
    run.write("csv", table.to_frame(), "moments.csv")
    curvature = spectrum.concavity()
    run.write(
        "kv",
        {
            "lambda2": spectrum.lambda2,
            "lambda2_se": spectrum.lambda2_stderr,
            "dt_min": spectrum.dt_min,
            "dt_max": spectrum.dt_max,
            "max_second_difference": float(curvature.max()) if len(curvature) else None,
            "heavy_tail_cells": int(table.heavy.sum()),
        },
        "spectrum.txt",
    )


def _scan(config: RunConfig, x):
    return window_scan(
        x,
        config.window,
        config.stride,
        config.dt,
        config.detrend,
        detrend_block=config.detrend_block,
        k_min=config.k_min,
        max_lag=config.max_lag,
        form=config.form,
        workers=config.workers,
    )


def _daily_frame(x, multiple: float) -> pd.DataFrame:
    counts = daily_large_count(x, multiple)
    return pd.DataFrame({"date": counts.index.strftime("%Y-%m-%d"), "count": counts.to_numpy()})


def run_window_scan(run: Run) -> None:
    config = run.config
    x = _series(config)
    run.write("csv", trajectory_frame(_scan(config, x)), "trajectory.csv")
    run.write("csv", _daily_frame(x, config.large_multiple), "daily_large.csv")


def run_omori(run: Run) -> None:
    config = run.config
    x = _series(config)
    origin = find_main_shock(x, config.search_start, config.search_end)
    reference = None
    if config.reference_start or config.reference_end:
        reference = (config.reference_start, config.reference_end)
    frames = cumulative_frequencies(x, origin, config.thresholds, reference=reference)

    report: Dict[str, Any] = {"origin": str(origin)}
    for multiple, frame in frames.items():
        report.setdefault("sigma", frame.sigma)
        run.write("csv", frame.to_frame(), f"omori_{multiple:g}.csv")
        for key, value in fit_omori(frame).report().items():
            if key != "multiple":
                report[f"m{multiple:g}_{key}"] = value
    run.write("kv", report, "omori.txt")
    run.write("csv", _daily_frame(x, config.large_multiple), "daily_large.csv")


def run_news_fit(run: Run) -> None:
    config = run.config
    trajectory = _scan(config, _series(config))
    news = load_news(config.inputs[1])
    if config.weekday_adjust:
        news = deseasonalize_news(news)
    coupling = fit_news_coupling(trajectory, news, config.start, config.end)
    run.write("csv", trajectory_frame(trajectory), "trajectory.csv")
    news_frame = news.to_frame()
    news_frame["date"] = news_frame["date"].dt.strftime("%Y-%m-%d")
    run.write("csv", news_frame, "news.csv")
    joined = join_news(trajectory, news, config.start, config.end)
    joined["date"] = joined["date"].dt.strftime("%Y-%m-%d")
    run.write("csv", joined, "news_joined.csv")
    report = coupling.report()
    report["weekday_adjust"] = config.weekday_adjust
    run.write("kv", report, "news_fit.txt")


HANDLERS: Dict[str, Callable[[Run], None]] = {
    "simulate": run_simulate,
    "simulate-omori": run_simulate_omori,
    "market-mode": run_market_mode,
    "estimate": run_estimate,
    "spectrum": run_spectrum,
    "window-scan": run_window_scan,
    "omori": run_omori,
    "news-fit": run_news_fit,
}


def run(config: RunConfig) -> int:
    """Executes one validated command and writes its manifest."""
    if config.command not in HANDLERS:
        raise ConfigError(f"unknown command {config.command!r}")
    Path(config.out).mkdir(parents=True, exist_ok=True)
    job = Run(config)
    HANDLERS[config.command](job)
    job.manifest()
    return status.EXIT_OK


def main(argv=None) -> None:
    args = docopt.docopt(__doc__, argv=argv, help=True, version=__version__)
    logging.basicConfig(
        level=logging.INFO if args["--verbose"] else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    command = next(c for c in COMMANDS if args.get(c))

    flags = _flags(args)
    for path in flags.get("inputs", []) + [args["--config"], args["--calendar"]]:
        if path is not None and not Path(path).is_file():
            abort(status.EXIT_INPUT, ConfigError(f"input file {path} does not exist").oneline())

    try:
        config = build_config(command, flags, args["--config"])
    except ValidationError as e:
        abort(status.EXIT_USAGE, ConfigError(_summary(e)).oneline())
    except ConfigError as e:
        abort(status.EXIT_USAGE, e.oneline())

    try:
        code = run(config)
    except IngestionError as e:
        abort(status.EXIT_INPUT, e.oneline())
    except ValidationError as e:
        abort(status.EXIT_USAGE, ConfigError(_summary(e)).oneline())
    except ValueError as e:
        abort(status.EXIT_USAGE, ConfigError(str(e)).oneline())
    except PrecursorError as e:
        abort(status.EXIT_FAILURE, e.oneline())
    abort(code)
