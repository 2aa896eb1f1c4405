"""Daily weather-station records: parsing, validation and gap repair."""

import dataclasses
import datetime as dt
import io
import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import pandas as pd

from .diagnostics import (
    BadCellDiagnostic,
    BadRowDiagnostic,
    Diagnostic,
    DuplicateRowDiagnostic,
    EmptyCellDiagnostic,
    ForeignStationDiagnostic,
    ViolationDiagnostic,
)
from .errors import ClimateFormatError

logger = logging.getLogger('sunnpest')

SENSOR_FIELDS = (
    'wd_avg',
    'ws_avg',
    'ws_max',
    'sr_avg',
    'rainfall',
    'd_min',
    'd_avg',
    'rh_min',
    'rh_avg',
    'rh_max',
    'at_min',
    'at_avg',
    'at_max',
)
CLIMATE_COLUMNS = ('station_id', 'date', *SENSOR_FIELDS)

DEFAULT_MAX_GAP = 14

SiteKind = Literal['WheatField', 'WinterQuarters']
RepairStatus = Literal['interpolated', 'unrepairable']

# Closed bounds, except wd_avg whose upper bound is open (360 == 0).
_RANGES: dict[str, tuple[float, float]] = {
    'wd_avg': (0.0, 360.0),
    'ws_avg': (0.0, math.inf),
    'ws_max': (0.0, math.inf),
    'sr_avg': (0.0, math.inf),
    'rainfall': (0.0, math.inf),
    'rh_min': (0.0, 100.0),
    'rh_avg': (0.0, 100.0),
    'rh_max': (0.0, 100.0),
}

_ORDER_GROUPS = (
    ('rh_min', 'rh_avg', 'rh_max'),
    ('at_min', 'at_avg', 'at_max'),
    ('ws_avg', 'ws_max'),
    ('d_min', 'd_avg'),
)


@dataclass(frozen=True)
class StationMeta:
    station_id: str
    site_kind: SiteKind = 'WheatField'
    location_name: str = ''


@dataclass(frozen=True)
class RawClimateRecord:
    """One station-day of sensor readings. None means missing."""

    station_id: str
    date: dt.date
    wd_avg: float | None = None
    ws_avg: float | None = None
    ws_max: float | None = None
    sr_avg: float | None = None
    rainfall: float | None = None
    d_min: float | None = None
    d_avg: float | None = None
    rh_min: float | None = None
    rh_avg: float | None = None
    rh_max: float | None = None
    at_min: float | None = None
    at_avg: float | None = None
    at_max: float | None = None

    def value(self, name: str) -> float | None:
        return getattr(self, name)

    def without(self, names: tuple[str, ...]) -> 'RawClimateRecord':
        """Copy with the given fields set to missing."""
        return dataclasses.replace(self, **{name: None for name in names})


@dataclass(frozen=True)
class Violation:
    rule: Literal['range', 'ordering']
    fields: tuple[str, ...]
    message: str


@dataclass(frozen=True)
class GapSpan:
    first: dt.date
    last: dt.date
    status: RepairStatus

    @property
    def days(self) -> int:
        return (self.last - self.first).days + 1


@dataclass(frozen=True)
class GapReport:
    """Missing-value runs of one field at one station, sorted and disjoint."""

    station_id: str
    field_name: str
    spans: tuple[GapSpan, ...]

    @property
    def interpolated_days(self) -> int:
        return sum(s.days for s in self.spans if s.status == 'interpolated')

    @property
    def unrepairable_days(self) -> int:
        return sum(s.days for s in self.spans if s.status == 'unrepairable')


# ─────────────────────────────────────────────────────────────────────────────
# CSV
# ─────────────────────────────────────────────────────────────────────────────


def _parse_date(cell: str) -> dt.date | None:
    if len(cell) != 10:
        return None
    try:
        return dt.date.fromisoformat(cell)
    except ValueError:
        return None


def parse_climate_csv(text: str, meta: StationMeta) -> tuple[list[RawClimateRecord], list[Diagnostic]]:
    """Parse one station's climate CSV.

    Empty and unparseable cells become missing fields, each with a diagnostic.
    Duplicate dates keep the later row. Records come back in date order.
    """
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise ClimateFormatError(f'{meta.station_id}: climate CSV has no header row') from None
    except pd.errors.ParserError as e:
        raise ClimateFormatError(f'{meta.station_id}: cannot parse climate CSV: {e}') from None

    header = [str(c).strip().lstrip('\ufeff') for c in frame.columns]
    missing = [c for c in CLIMATE_COLUMNS if c not in header]
    unknown = [c for c in header if c not in CLIMATE_COLUMNS]
    if missing or unknown:
        parts = []
        if missing:
            parts.append(f'missing columns {missing}')
        if unknown:
            parts.append(f'unknown columns {unknown}')
        raise ClimateFormatError(f'{meta.station_id}: bad climate header: {"; ".join(parts)}')
    frame.columns = header

    diagnostics: list[Diagnostic] = []
    by_date: dict[dt.date, RawClimateRecord] = {}
    first_line: dict[dt.date, int] = {}
    data_rows = 0

    for i, row in enumerate(frame.itertuples(index=False)):
        line = i + 2
        cells = {name: '' if pd.isna(value) else str(value).strip() for name, value in zip(header, row)}
        if not any(cells.values()):
            continue
        data_rows += 1

        station = cells['station_id'] or meta.station_id
        if station != meta.station_id:
            diagnostics.append(ForeignStationDiagnostic(meta.station_id, line=line, found=station))
            continue

        day = _parse_date(cells['date'])
        if day is None:
            diagnostics.append(BadRowDiagnostic(meta.station_id, line=line, reason=f'bad date {cells["date"]!r}'))
            continue

        values: dict[str, float | None] = {}
        for name in SENSOR_FIELDS:
            cell = cells[name]
            if not cell:
                diagnostics.append(EmptyCellDiagnostic(meta.station_id, date=day, line=line, field_name=name))
                values[name] = None
                continue
            try:
                number = float(cell)
            except ValueError:
                number = math.nan
            if not math.isfinite(number):
                diagnostics.append(BadCellDiagnostic(meta.station_id, date=day, line=line, field_name=name, raw=cell))
                values[name] = None
                continue
            values[name] = number

        if day in by_date:
            diagnostics.append(DuplicateRowDiagnostic(meta.station_id, date=day, line=line, first_line=first_line[day]))
        else:
            first_line[day] = line
        by_date[day] = RawClimateRecord(station_id=meta.station_id, date=day, **values)

    if data_rows == 0:
        raise ClimateFormatError(f'{meta.station_id}: climate CSV has no data rows')

    records = [by_date[d] for d in sorted(by_date)]
    logger.info(f'[INGEST] {meta.station_id}: {len(records)} records, {len(diagnostics)} diagnostics')
    return records, diagnostics


def serialize_climate_csv(records: list[RawClimateRecord]) -> str:
    """Write records in the climate CSV schema; missing values are empty cells."""
    rows = [
        {'station_id': r.station_id, 'date': r.date.isoformat(), **{name: r.value(name) for name in SENSOR_FIELDS}}
        for r in records
    ]
    frame = pd.DataFrame(rows, columns=list(CLIMATE_COLUMNS))
    return frame.to_csv(index=False, lineterminator='\n', na_rep='')


# ─────────────────────────────────────────────────────────────────────────────
# Validation
# ─────────────────────────────────────────────────────────────────────────────


def validate_record(r: RawClimateRecord) -> list[Violation]:
    """Return every range and ordering violation of a record. Empty means valid."""
    violations: list[Violation] = []

    for name, (low, high) in _RANGES.items():
        value = r.value(name)
        if value is None:
            continue
        too_high = value >= high if name == 'wd_avg' else value > high
        if value < low or too_high:
            violations.append(Violation('range', (name,), f'{name}={value} outside [{low}, {high}{")" if name == "wd_avg" else "]"}'))

    for group in _ORDER_GROUPS:
        present = [(name, r.value(name)) for name in group if r.value(name) is not None]
        broken = [
            f'{a}={va} > {b}={vb}' for i, (a, va) in enumerate(present) for (b, vb) in present[i + 1 :] if va > vb
        ]
        if broken:
            violations.append(Violation('ordering', tuple(name for name, _ in present), ', '.join(broken)))

    return violations


def sanitize_records(records: list[RawClimateRecord]) -> tuple[list[RawClimateRecord], list[Diagnostic]]:
    """Demote every field involved in a violation to missing."""
    cleaned: list[RawClimateRecord] = []
    diagnostics: list[Diagnostic] = []
    for r in records:
        violations = validate_record(r)
        if not violations:
            cleaned.append(r)
            continue
        demoted = tuple(dict.fromkeys(name for v in violations for name in v.fields))
        for v in violations:
            diagnostics.append(ViolationDiagnostic(r.station_id, date=r.date, fields=v.fields, message=v.message))
        cleaned.append(r.without(demoted))
    if diagnostics:
        logger.warning(f'[INGEST] {len(diagnostics)} invalid sensor readings demoted to missing')
    return cleaned, diagnostics


# ─────────────────────────────────────────────────────────────────────────────
# Frames
# ─────────────────────────────────────────────────────────────────────────────


def records_to_frame(records: list[RawClimateRecord]) -> pd.DataFrame:
    """Daily frame indexed by `date`; NaN marks missing values."""
    frame = pd.DataFrame(
        {
            'station_id': [r.station_id for r in records],
            **{name: np.array([np.nan if r.value(name) is None else r.value(name) for r in records], dtype=float) for name in SENSOR_FIELDS},
        },
        index=pd.DatetimeIndex([pd.Timestamp(r.date) for r in records], name='date'),
    )
    return frame.sort_index()


def frame_to_records(frame: pd.DataFrame) -> list[RawClimateRecord]:
    records = []
    for day, row in frame.iterrows():
        values = {name: None if pd.isna(row[name]) else float(row[name]) for name in SENSOR_FIELDS}
        records.append(RawClimateRecord(station_id=str(row['station_id']), date=day.date(), **values))
    return records


# ─────────────────────────────────────────────────────────────────────────────
# Gap repair
# ─────────────────────────────────────────────────────────────────────────────


def _missing_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, stop) index runs where mask is True."""
    padded = np.concatenate(([0], mask.astype(np.int8), [0]))
    edges = np.flatnonzero(np.diff(padded))
    return [(int(a), int(b)) for a, b in zip(edges[0::2], edges[1::2])]


def interpolate_gaps(series: pd.DataFrame, max_gap: int = DEFAULT_MAX_GAP) -> tuple[pd.DataFrame, list[GapReport]]:
    """Fill interior missing runs of at most `max_gap` days by linear interpolation.

    The series is first laid onto the continuous daily calendar between its
    first and last date. Each field is repaired independently; leading and
    trailing runs and runs longer than `max_gap` stay missing and are
    reported as unrepairable. Present values are never modified.
    """
    if max_gap < 0:
        raise ValueError(f'max_gap must be >= 0, got {max_gap}')
    if series.empty:
        return series.copy(), []
    if not series.index.is_monotonic_increasing or series.index.has_duplicates:
        raise ValueError('series must be sorted by date without duplicate dates')

    station_id = str(series['station_id'].iloc[0])
    calendar = pd.date_range(series.index[0], series.index[-1], freq='D', name='date')
    repaired = series.reindex(calendar)
    repaired['station_id'] = station_id
    positions = np.arange(len(calendar), dtype=float)

    reports: list[GapReport] = []
    for name in SENSOR_FIELDS:
        values = repaired[name].to_numpy(dtype=float, copy=True)
        missing = np.isnan(values)
        if not missing.any():
            continue

        spans = []
        for start, stop in _missing_runs(missing):
            interior = start > 0 and stop < len(values)
            if interior and stop - start <= max_gap:
                values[start:stop] = np.interp(positions[start:stop], [start - 1, stop], [values[start - 1], values[stop]])
                status: RepairStatus = 'interpolated'
            else:
                status = 'unrepairable'
            spans.append(GapSpan(calendar[start].date(), calendar[stop - 1].date(), status))

        repaired[name] = values
        report = GapReport(station_id, name, tuple(spans))
        if report.unrepairable_days:
            logger.warning(f'[REPAIR] {station_id} {name}: {report.unrepairable_days} day(s) unrepairable')
        logger.debug(f'[REPAIR] {station_id} {name}: {report.interpolated_days} day(s) interpolated')
        reports.append(report)

    return repaired, reports
