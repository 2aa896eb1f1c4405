"""File-to-dataset orchestration shared by train, evaluate and predict."""

import datetime as dt
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from .climate import (
    DEFAULT_MAX_GAP,
    GapReport,
    RawClimateRecord,
    StationMeta,
    interpolate_gaps,
    parse_climate_csv,
    records_to_frame,
    sanitize_records,
)
from .diagnostics import Diagnostic, DuplicateRowDiagnostic
from .errors import ClimateFormatError
from .features import (
    ACCUMULATED_SOURCES,
    Dataset,
    LabelRecord,
    SeasonClock,
    accumulate_season,
    build_dataset,
    drop_incomplete_days,
    feature_set,
    parse_labels_csv,
)

logger = logging.getLogger('sunnpest')


@dataclass
class StationSeries:
    """One station after ingest, repair and accumulation.

    `repaired` is the continuous daily calendar with NaN where repair was
    impossible; `accumulated` has one row per complete day.
    """

    meta: StationMeta
    repaired: pd.DataFrame
    accumulated: pd.DataFrame
    gaps: list[GapReport] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def first_day(self) -> dt.date:
        return self.repaired.index[0].date()

    @property
    def last_day(self) -> dt.date:
        return self.repaired.index[-1].date()

    def usable_from(self, clock: SeasonClock) -> dt.date:
        """Earliest day whose accumulated sums start at a cycle start."""
        return clock.first_full_cycle_day(self.first_day)


@dataclass
class Corpus:
    stations: dict[str, StationSeries]
    labels: list[LabelRecord]
    clock: SeasonClock
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def repaired(self) -> pd.DataFrame:
        return pd.concat([s.repaired for s in self.stations.values()])

    def accumulated(self) -> pd.DataFrame:
        return pd.concat([s.accumulated for s in self.stations.values()])

    def all_diagnostics(self) -> list[Diagnostic]:
        return [*self.diagnostics, *(d for s in self.stations.values() for d in s.diagnostics)]


def _station_of(text: str, path: Path) -> str:
    """Station id from the first filled station_id cell, else from a climate_<id>.csv file name."""
    try:
        column = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False, usecols=lambda c: c.strip().lstrip('\ufeff') == 'station_id')
    except (pd.errors.EmptyDataError, pd.errors.ParserError, ValueError):
        column = pd.DataFrame()
    if not column.empty:
        for value in column.iloc[:, 0]:
            if str(value).strip():
                return str(value).strip()
    return path.stem.removeprefix('climate_')


def ingest_station(
    texts: list[str], meta: StationMeta, clock: SeasonClock, max_gap: int = DEFAULT_MAX_GAP
) -> StationSeries:
    """Parse, merge, sanitize, repair and accumulate one station's files (later files win)."""
    by_date: dict[dt.date, RawClimateRecord] = {}
    diagnostics: list[Diagnostic] = []
    for text in texts:
        records, parsed = parse_climate_csv(text, meta)
        diagnostics.extend(parsed)
        for record in records:
            if record.date in by_date:
                diagnostics.append(DuplicateRowDiagnostic(meta.station_id, date=record.date))
            by_date[record.date] = record

    records, violations = sanitize_records([by_date[d] for d in sorted(by_date)])
    diagnostics.extend(violations)
    repaired, gaps = interpolate_gaps(records_to_frame(records), max_gap)
    complete, dropped = drop_incomplete_days(repaired, ACCUMULATED_SOURCES)
    diagnostics.extend(dropped)
    accumulated = accumulate_season(complete, clock)
    return StationSeries(meta, repaired, accumulated, gaps, diagnostics)


def load_corpus(
    climate_paths,
    label_paths=(),
    *,
    clock: SeasonClock | None = None,
    max_gap: int = DEFAULT_MAX_GAP,
    stations: dict[str, StationMeta] | None = None,
) -> Corpus:
    """Read every climate and label file into per-station series plus merged labels."""
    clock = clock or SeasonClock()
    stations = stations or {}
    texts: dict[str, list[str]] = {}
    for path in map(Path, climate_paths):
        text = path.read_text(encoding='utf-8')
        texts.setdefault(_station_of(text, path), []).append(text)
    if not texts:
        raise ClimateFormatError('no climate files given')

    series = {}
    for station_id in sorted(texts):
        meta = stations.get(station_id, StationMeta(station_id))
        series[station_id] = ingest_station(texts[station_id], meta, clock, max_gap)

    by_key: dict[tuple[str, dt.date], LabelRecord] = {}
    diagnostics: list[Diagnostic] = []
    for path in map(Path, label_paths):
        records, parsed = parse_labels_csv(path.read_text(encoding='utf-8'))
        diagnostics.extend(parsed)
        for record in records:
            key = (record.station_id, record.date)
            if key in by_key:
                diagnostics.append(DuplicateRowDiagnostic(record.station_id, date=record.date))
            by_key[key] = record

    corpus = Corpus(series, [by_key[k] for k in sorted(by_key)], clock, diagnostics)
    logger.info(f'[INGEST] corpus: {len(series)} station(s), {len(corpus.labels)} label(s), {len(corpus.all_diagnostics())} diagnostics')
    return corpus


def corpus_dataset(corpus: Corpus, model_id: str) -> Dataset:
    """Dataset for one feature set; labeled days before a station's first complete cycle are dropped."""
    earliest = {sid: s.usable_from(corpus.clock) for sid, s in corpus.stations.items() if not s.repaired.empty}
    return build_dataset(corpus.accumulated(), corpus.repaired(), corpus.labels, feature_set(model_id), earliest)
