import os
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .exceptions import ConfigError
from .statics import (
    COMMANDS,
    DEFAULT_COVERAGE,
    DEFAULT_DETREND_BLOCK,
    DEFAULT_DT,
    DEFAULT_DT_LIST,
    DEFAULT_ENCODING,
    DEFAULT_K_MIN,
    DEFAULT_LARGE_MULTIPLE,
    DEFAULT_MIN_BUCKET,
    DEFAULT_OPEN_SKIP,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_Q_LIST,
    DEFAULT_THRESHOLDS,
    DETREND_MODES,
    FIT_FORMS,
    MAX_DT,
    MAX_Q,
    OUTPUT_DIR_ENV,
    PAPER_WINDOW,
    PRICE_COLUMNS,
)


class IngestionConfig(BaseModel):
    """Column names and opening-skip settings of the price CSV."""

    model_config = ConfigDict(frozen=True)

    timestamp_column: str = PRICE_COLUMNS[0]
    issue_column: str = PRICE_COLUMNS[1]
    price_column: str = PRICE_COLUMNS[2]
    calendar_path: Optional[Path] = None
    open_skip: int = Field(DEFAULT_OPEN_SKIP, ge=0)


def _split_list(value):
    if isinstance(value, str):
        return [v for v in value.replace(";", ",").split(",") if v.strip()]
    return value


class RunConfig(BaseModel):
    """Validated settings of one command line run.

    Every field has the default the pipeline uses when neither a flag nor the
    config file sets it.
    """

    model_config = ConfigDict(extra="forbid")

    command: str
    inputs: List[Path] = Field(default_factory=list)
    out: Path = Field(default_factory=lambda: Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)))
    seed: int = Field(0, ge=0)
    workers: Optional[int] = Field(None, ge=1)
    column: Optional[str] = None

    # simulate
    n: int = Field(2**17, ge=2)
    sigma: float = Field(1.0, gt=0)
    lambda2: float = Field(0.018, ge=0)
    L: float = Field(12975.43, gt=0)

    # simulate-omori
    beta_b: float = Field(0.3, gt=0, le=1)
    beta_a: float = Field(0.7, gt=0, le=1)
    c_b: float = Field(50.0, gt=0)
    c_a: float = Field(50.0, gt=0)
    horizon_before: float = Field(10000.0, gt=0)
    horizon_after: float = Field(10000.0, gt=0)
    paper_mode: bool = False

    # market-mode
    calendar: Optional[Path] = None
    open_skip: int = Field(DEFAULT_OPEN_SKIP, ge=0)
    coverage: float = Field(DEFAULT_COVERAGE, gt=0, le=1)
    deseasonalize: bool = True
    min_bucket: int = Field(DEFAULT_MIN_BUCKET, ge=1)

    # estimate / spectrum / window-scan
    dt: int = Field(DEFAULT_DT, ge=1)
    k_min: int = Field(DEFAULT_K_MIN, ge=1)
    max_lag: Optional[int] = Field(None, ge=2)
    form: str = "asymptotic"
    q_list: List[float] = Field(default_factory=lambda: list(DEFAULT_Q_LIST))
    dt_list: List[int] = Field(default_factory=lambda: list(DEFAULT_DT_LIST))
    window: int = Field(PAPER_WINDOW, ge=1)
    stride: Optional[int] = None
    detrend: str = "none"
    detrend_block: int = Field(DEFAULT_DETREND_BLOCK, ge=2)
    large_multiple: float = Field(DEFAULT_LARGE_MULTIPLE, gt=0)

    # omori
    thresholds: List[float] = Field(default_factory=lambda: list(DEFAULT_THRESHOLDS))
    search_start: Optional[str] = None
    search_end: Optional[str] = None
    reference_start: Optional[str] = None
    reference_end: Optional[str] = None

    # news-fit
    start: Optional[str] = None
    end: Optional[str] = None
    weekday_adjust: bool = True

    @field_validator("q_list", "dt_list", "thresholds", "inputs", mode="before")
    @classmethod
    def _lists(cls, value):
        return _split_list(value)

    @field_validator("command")
    @classmethod
    def _known_command(cls, value):
        if value not in COMMANDS:
            raise ValueError(f"unknown command {value!r}; expected one of {', '.join(COMMANDS)}")
        return value

    @field_validator("detrend")
    @classmethod
    def _detrend_mode(cls, value):
        if value not in DETREND_MODES:
            raise ValueError(f"detrend must be one of {DETREND_MODES}")
        return value

    @field_validator("form")
    @classmethod
    def _fit_form(cls, value):
        if value not in FIT_FORMS:
            raise ValueError(f"form must be one of {FIT_FORMS}")
        return value

    @field_validator("q_list")
    @classmethod
    def _q_range(cls, value):
        if not value or any(q < 0 or q > MAX_Q for q in value):
            raise ValueError(f"moment orders must lie in [0, {MAX_Q:g}]")
        return sorted(set(value))

    @field_validator("dt_list")
    @classmethod
    def _dyadic(cls, value):
        if not value or any(d < 1 or d > MAX_DT or d & (d - 1) for d in value):
            raise ValueError(f"time scales must be powers of two in [1, {MAX_DT}]")
        return sorted(set(value))

    @field_validator("thresholds")
    @classmethod
    def _positive_thresholds(cls, value):
        if not value or any(m <= 0 for m in value):
            raise ValueError("threshold multiples must be positive")
        return sorted(set(value))

    @field_validator("inputs", "calendar")
    @classmethod
    def _exists(cls, value):
        paths = value if isinstance(value, list) else [value]
        for path in paths:
            if path is not None and not Path(path).is_file():
                raise ValueError(f"input file {path} does not exist")
        return value

    @model_validator(mode="after")
    def _consistent(self):
        if self.L <= self.dt:
            raise ValueError("the decorrelation length L must exceed dt")
        if self.stride is not None and self.stride <= 0:
            raise ValueError("stride must be positive")
        if self.paper_mode and not (0 < self.beta_b < self.beta_a < 1):
            raise ValueError("paper mode requires 0 < beta_b < beta_a < 1")
        needed = {
            "market-mode": 1,
            "estimate": 1,
            "spectrum": 1,
            "window-scan": 1,
            "omori": 1,
            "news-fit": 2,
        }.get(self.command, 0)
        if len(self.inputs) < needed:
            raise ValueError(f"{self.command} needs {needed} input file(s)")
        return self

    def ingestion(self) -> IngestionConfig:
        return IngestionConfig(calendar_path=self.calendar, open_skip=self.open_skip)

    def echo(self) -> Dict[str, Any]:
        """Plain-type dump for the run manifest."""
        return self.model_dump(mode="json")


def read_config_file(path) -> Dict[str, Any]:
    """Reads ``key=value`` lines (``#`` starts a comment) or a YAML mapping."""
    path = Path(path)
    try:
        text = path.read_text(encoding=DEFAULT_ENCODING)
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from None

    if path.suffix in (".yaml", ".yml"):
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        return {str(k).replace("-", "_"): v for k, v in data.items()}

    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{number}: expected key=value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def build_config(command: str, flags: Dict[str, Any], config_file=None) -> RunConfig:
    """Merges config-file values with command line flags; flags win."""
    values = read_config_file(config_file) if config_file else {}
    values.update({k: v for k, v in flags.items() if v is not None})
    values["command"] = command
    return RunConfig(**values)
