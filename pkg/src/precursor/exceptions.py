import sys
from typing import NoReturn, Optional, Sequence

from . import status

__all__ = (
    "PrecursorError",
    "IngestionError",
    "CalendarError",
    "ProfileError",
    "MarketModeError",
    "SimulationError",
    "EstimationError",
    "ScanError",
    "EventError",
    "NewsError",
    "ConfigError",
)


class PrecursorError(Exception):
    """Base error. ``origin`` names the module the failure came from."""

    origin = "precursor"

    def __init__(self, detail: str, *, origin: Optional[str] = None) -> None:
        super().__init__(detail)
        self.detail = detail
        if origin is not None:
            self.origin = origin

    def oneline(self) -> str:
        detail = " ".join(str(self.detail).split()).replace('"', "'")
        return f'error origin={self.origin} kind={type(self).__name__} detail="{detail}"'


class IngestionError(PrecursorError):
    origin = "timeseries"

    def __init__(self, detail: str, *, rows: Sequence[int] = (), **kwargs) -> None:
        self.rows = tuple(rows)
        if self.rows:
            detail = f"{detail} (rows {', '.join(str(r) for r in self.rows)})"
        super().__init__(detail, **kwargs)


class CalendarError(PrecursorError):
    origin = "timeseries"


class ProfileError(PrecursorError):
    origin = "timeseries"


class MarketModeError(PrecursorError):
    origin = "market"


class SimulationError(PrecursorError):
    origin = "simulate"


class EstimationError(PrecursorError):
    origin = "estimate"


class ScanError(PrecursorError):
    origin = "scan"


class EventError(PrecursorError):
    origin = "events"


class NewsError(PrecursorError):
    origin = "news"


class ConfigError(PrecursorError):
    origin = "cli"


def abort(exit_code: int, detail: Optional[str] = None) -> NoReturn:
    """Terminate the command line process with a single machine-parsable line."""
    if detail:
        stream = sys.stdout if status.is_success(exit_code) else sys.stderr
        print(detail, file=stream)
    raise SystemExit(exit_code) from None
