"""Diagnostic records emitted while reading and repairing input data."""

import datetime as dt
from dataclasses import dataclass, field
from typing import ClassVar, Literal

DiagnosticKind = Literal[
    'empty_cell',
    'bad_cell',
    'bad_row',
    'duplicate_row',
    'foreign_station',
    'violation',
    'dropped_day',
    'partial_counts',
    'off_phase_counts',
    'partial_cycle',
]


@dataclass(frozen=True)
class Diagnostic:
    """Base diagnostic. `line` is the 1-based source line when known."""

    station_id: str
    kind: ClassVar[DiagnosticKind]
    date: dt.date | None = None
    line: int | None = None

    def describe(self) -> str:
        where = f'{self.station_id}'
        if self.date is not None:
            where += f' {self.date.isoformat()}'
        if self.line is not None:
            where += f' (line {self.line})'
        return f'{where}: {self.kind}'


@dataclass(frozen=True)
class EmptyCellDiagnostic(Diagnostic):
    """Cell left blank; the field is missing for that day."""

    kind: ClassVar[Literal['empty_cell']] = 'empty_cell'
    field_name: str = ''

    def describe(self) -> str:
        return f'{super().describe()} {self.field_name} is empty'


@dataclass(frozen=True)
class BadCellDiagnostic(Diagnostic):
    """Cell could not be parsed as a number."""

    kind: ClassVar[Literal['bad_cell']] = 'bad_cell'
    field_name: str = ''
    raw: str = ''

    def describe(self) -> str:
        return f'{super().describe()} {self.field_name}={self.raw!r} is not a number'


@dataclass(frozen=True)
class BadRowDiagnostic(Diagnostic):
    """Row skipped entirely (unparseable date, wrong phase, ...)."""

    kind: ClassVar[Literal['bad_row']] = 'bad_row'
    reason: str = ''

    def describe(self) -> str:
        return f'{super().describe()} row skipped: {self.reason}'


@dataclass(frozen=True)
class DuplicateRowDiagnostic(Diagnostic):
    """Second row for the same (station, date); the later row wins."""

    kind: ClassVar[Literal['duplicate_row']] = 'duplicate_row'
    first_line: int | None = None

    def describe(self) -> str:
        return f'{super().describe()} duplicates line {self.first_line}, later row kept'


@dataclass(frozen=True)
class ForeignStationDiagnostic(Diagnostic):
    """Row names a different station than the file being read."""

    kind: ClassVar[Literal['foreign_station']] = 'foreign_station'
    found: str = ''

    def describe(self) -> str:
        return f'{super().describe()} row belongs to station {self.found!r}, skipped'


@dataclass(frozen=True)
class ViolationDiagnostic(Diagnostic):
    """Sensor values failed validation and were demoted to missing."""

    kind: ClassVar[Literal['violation']] = 'violation'
    fields: tuple[str, ...] = ()
    message: str = ''

    def describe(self) -> str:
        return f'{super().describe()} {self.message}; demoted {", ".join(self.fields)}'


@dataclass(frozen=True)
class DroppedDayDiagnostic(Diagnostic):
    """Day removed before accumulation because fields stayed missing after repair."""

    kind: ClassVar[Literal['dropped_day']] = 'dropped_day'
    missing: tuple[str, ...] = field(default_factory=tuple)

    def describe(self) -> str:
        return f'{super().describe()} dropped, still missing {", ".join(self.missing)}'


@dataclass(frozen=True)
class PartialCountsDiagnostic(Diagnostic):
    """Label row with some but not all nymph count cells filled."""

    kind: ClassVar[Literal['partial_counts']] = 'partial_counts'

    def describe(self) -> str:
        return f'{super().describe()} incomplete nymph counts, counts ignored'


@dataclass(frozen=True)
class OffPhaseCountsDiagnostic(Diagnostic):
    """Nymph counts on a day not labeled phase 3; the day stays a phase instance without ratios."""

    kind: ClassVar[Literal['off_phase_counts']] = 'off_phase_counts'
    phase: int = 0

    def describe(self) -> str:
        return f'{super().describe()} nymph counts on a phase {self.phase} day, counts ignored'


@dataclass(frozen=True)
class PartialCycleDiagnostic(Diagnostic):
    """Labeled day before the station's first complete cycle; its sums would be truncated."""

    kind: ClassVar[Literal['partial_cycle']] = 'partial_cycle'
    usable_from: dt.date | None = None

    def describe(self) -> str:
        return f'{super().describe()} before the first complete cycle, usable from {self.usable_from}'
