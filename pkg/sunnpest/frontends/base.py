"""Reporter abstraction: how command results reach the user."""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import TextIO

import click

from sunnpest.core.bundle import ModelBundle
from sunnpest.core.diagnostics import Diagnostic
from sunnpest.core.evaluation import EvalReport
from sunnpest.core.forecast import DailyForecast
from sunnpest.core.synthetic import SynthSeason


class Reporter(ABC):
    """Abstract base class for output formats.

    Reporters are responsible for:
    - Summarising a training run
    - Rendering evaluation reports, alone or side by side
    - Emitting daily forecasts
    - Listing input diagnostics
    """

    def __init__(self, stream: TextIO | None = None) -> None:
        self.stream = stream

    def emit(self, line: str = '') -> None:
        click.echo(line, file=self.stream)

    @abstractmethod
    def training_summary(self, bundle: ModelBundle, path: Path) -> None:
        """Report a finished training run.

        Args:
            bundle: The trained bundle (its metadata carries dataset sizes and drops)
            path: Where the bundle was written
        """

    @abstractmethod
    def evaluation(self, report: EvalReport) -> None:
        """Render one cross-validation report."""

    @abstractmethod
    def comparison(self, reports: dict[str, list[EvalReport]]) -> None:
        """Render the reports of several feature sets side by side.

        Args:
            reports: Model id -> that model's reports, in the same order for every model
        """

    @abstractmethod
    def forecasts(self, items: list[DailyForecast]) -> None:
        """Render daily forecasts, already ordered by station then date."""

    @abstractmethod
    def diagnostics(self, items: list[Diagnostic]) -> None:
        """Report what was skipped, demoted or dropped while reading the inputs."""

    @abstractmethod
    def synthesis(self, season: SynthSeason, written: list[Path]) -> None:
        """Report generated synthetic files."""


class ReporterRegistry:
    """Registry of available output formats."""

    def __init__(self) -> None:
        self._reporters: dict[str, type[Reporter]] = {}

    def register(self, name: str, reporter: type[Reporter]) -> None:
        """Register a reporter class under a format name."""
        self._reporters[name] = reporter

    def create(self, name: str, stream: TextIO | None = None) -> Reporter:
        """Instantiate the reporter registered as `name`."""
        try:
            return self._reporters[name](stream)
        except KeyError:
            raise ValueError(f'unknown report format {name!r}, expected one of {self.names()}') from None

    def names(self) -> list[str]:
        return sorted(self._reporters)
