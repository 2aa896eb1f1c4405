"""Life-cycle accumulation, labels, and the three model feature sets."""

import datetime as dt
import hashlib
import io
import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Literal

import numpy as np
import pandas as pd

from .diagnostics import (
    BadRowDiagnostic,
    Diagnostic,
    DroppedDayDiagnostic,
    DuplicateRowDiagnostic,
    OffPhaseCountsDiagnostic,
    PartialCountsDiagnostic,
    PartialCycleDiagnostic,
)
from .errors import EmptyDatasetError, LabelFormatError

logger = logging.getLogger('sunnpest')

# Raw fields that feed the models, in feature-vector order. wd_avg is stored but never learned from.
ACCUMULATED_SOURCES = ('ws_avg', 'ws_max', 'sr_avg', 'rainfall', 'rh_avg', 'at_min', 'at_avg', 'at_max', 'd_min', 'd_avg')
ACCUMULATED_FIELDS = tuple(f'acc_{name}' for name in ACCUMULATED_SOURCES)

LABEL_COLUMNS = ('station_id', 'date', 'phase', 'n1', 'n2', 'n3', 'n4', 'n5')
N_STAGES = 5

ModelId = Literal['m1', 'm2', 'm3']


class Phase(IntEnum):
    WINTER_QUARTERS = 1
    MIGRATION = 2
    WHEAT_FIELD = 3


PHASES = (Phase.WINTER_QUARTERS, Phase.MIGRATION, Phase.WHEAT_FIELD)


@dataclass(frozen=True)
class SeasonClock:
    """Day-of-year on which accumulation restarts."""

    cycle_start: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.cycle_start <= 366:
            raise ValueError(f'cycle_start must be a day-of-year in [1, 366], got {self.cycle_start}')

    def start_of_year(self, year: int) -> dt.date:
        return dt.date(year, 1, 1) + dt.timedelta(days=self.cycle_start - 1)

    def cycle_of(self, day: dt.date) -> int:
        """Key of the cycle containing `day`: the year whose cycle start is the latest one <= day."""
        year = day.year
        while self.start_of_year(year) > day:
            year -= 1
        return year

    def cycle_start_for(self, day: dt.date) -> dt.date:
        return self.start_of_year(self.cycle_of(day))

    def next_cycle_start(self, day: dt.date) -> dt.date:
        return self.start_of_year(self.cycle_of(day) + 1)

    def first_full_cycle_day(self, first: dt.date) -> dt.date:
        """First day whose sums start at a cycle start, for data beginning on `first`."""
        return first if self.cycle_start_for(first) == first else self.next_cycle_start(first)

    def cycle_keys(self, index: pd.DatetimeIndex) -> np.ndarray:
        return np.array([self.cycle_of(ts.date()) for ts in index], dtype=np.int64)


@dataclass(frozen=True)
class NymphStageRatios:
    """Fractions of nymphs in stages 1-5; always sums to 1."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) != N_STAGES:
            raise ValueError(f'expected {N_STAGES} stage ratios, got {len(self.values)}')
        if any(not 0.0 <= v <= 1.0 for v in self.values):
            raise ValueError(f'stage ratios must lie in [0, 1]: {self.values}')
        if abs(sum(self.values) - 1.0) > 1e-9:
            raise ValueError(f'stage ratios must sum to 1, got {sum(self.values)}')

    def __getitem__(self, stage: int) -> float:
        """Ratio of a 1-based stage."""
        return self.values[stage - 1]

    def __iter__(self):
        return iter(self.values)

    def mass(self, stages: tuple[int, ...] | list[int] | frozenset[int]) -> float:
        return sum(self[s] for s in stages)

    def as_percentages(self) -> tuple[float, ...]:
        return tuple(100.0 * v for v in self.values)


@dataclass(frozen=True)
class FeatureSetSpec:
    model_id: ModelId
    fields: tuple[str, ...]

    @property
    def accumulated(self) -> bool:
        return self.model_id != 'm1'

    def to_dict(self) -> dict:
        return {'model_id': self.model_id, 'fields': list(self.fields)}

    @classmethod
    def from_dict(cls, data: dict) -> 'FeatureSetSpec':
        return cls(model_id=data['model_id'], fields=tuple(data['fields']))


FEATURE_SETS: dict[str, FeatureSetSpec] = {
    'm1': FeatureSetSpec('m1', ACCUMULATED_SOURCES),
    'm2': FeatureSetSpec('m2', ACCUMULATED_FIELDS),
    # m2 without dewpoint and wind speed
    'm3': FeatureSetSpec('m3', ('acc_sr_avg', 'acc_rainfall', 'acc_rh_avg', 'acc_at_min', 'acc_at_avg', 'acc_at_max')),
}


def feature_set(model_id: str) -> FeatureSetSpec:
    try:
        return FEATURE_SETS[model_id.lower()]
    except KeyError:
        raise ValueError(f'unknown model id {model_id!r}, expected one of {sorted(FEATURE_SETS)}') from None


# ─────────────────────────────────────────────────────────────────────────────
# Accumulation
# ─────────────────────────────────────────────────────────────────────────────


def drop_incomplete_days(series: pd.DataFrame, fields: tuple[str, ...] = ACCUMULATED_SOURCES) -> tuple[pd.DataFrame, list[Diagnostic]]:
    """Remove days on which any of `fields` is still missing after repair."""
    if series.empty:
        return series.copy(), []
    missing = series[list(fields)].isna()
    incomplete = missing.any(axis=1).to_numpy()
    diagnostics: list[Diagnostic] = []
    for day, row in zip(series.index[incomplete], missing[incomplete].itertuples(index=False)):
        gone = tuple(name for name, flag in zip(fields, row) if flag)
        diagnostics.append(DroppedDayDiagnostic(str(series['station_id'].iloc[0]), date=day.date(), missing=gone))
    if diagnostics:
        logger.warning(f'[ACCUMULATE] {series["station_id"].iloc[0]}: dropped {len(diagnostics)} incomplete day(s)')
    return series.loc[~incomplete].copy(), diagnostics


def accumulate_season(series: pd.DataFrame, clock: SeasonClock) -> pd.DataFrame:
    """Running per-field sums since the most recent cycle start.

    `series` must be sorted and complete on ACCUMULATED_SOURCES (see
    drop_incomplete_days). Output has one row per input day with columns
    station_id + ACCUMULATED_FIELDS.
    """
    columns = ['station_id', *ACCUMULATED_FIELDS]
    if series.empty:
        return pd.DataFrame(columns=columns, index=pd.DatetimeIndex([], name='date'))
    if not series.index.is_monotonic_increasing:
        raise ValueError('series must be sorted by date')

    values = series[list(ACCUMULATED_SOURCES)].to_numpy(dtype=float)
    if np.isnan(values).any():
        raise ValueError('series has missing values in accumulated fields; call drop_incomplete_days first')

    keys = clock.cycle_keys(series.index)
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    bounds = np.r_[starts, len(keys)]
    sums = np.empty_like(values)
    for a, b in zip(bounds[:-1], bounds[1:]):
        sums[a:b] = np.cumsum(values[a:b], axis=0)

    acc = pd.DataFrame(sums, columns=list(ACCUMULATED_FIELDS), index=series.index.copy())
    acc.insert(0, 'station_id', series['station_id'].to_numpy())
    logger.debug(f'[ACCUMULATE] {series["station_id"].iloc[0]}: {len(acc)} days over {len(starts)} cycle(s)')
    return acc


# ─────────────────────────────────────────────────────────────────────────────
# Labels
# ─────────────────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class LabelRecord:
    station_id: str
    date: dt.date
    phase: Phase
    counts: tuple[int, ...] | None = None


def counts_to_ratios(counts: tuple[int, ...] | list[int]) -> NymphStageRatios | None:
    """Nymph counts per stage as fractions of their total; None when nothing was counted."""
    if len(counts) != N_STAGES:
        raise ValueError(f'expected {N_STAGES} stage counts, got {len(counts)}')
    if any(c < 0 for c in counts):
        raise ValueError(f'stage counts must be non-negative: {counts}')
    total = sum(counts)
    if total == 0:
        return None
    return NymphStageRatios(tuple(c / total for c in counts))


def _parse_count(cell: str) -> int | None:
    try:
        value = int(cell)
    except ValueError:
        return None
    return value if value >= 0 else None


def parse_labels_csv(text: str) -> tuple[list[LabelRecord], list[Diagnostic]]:
    """Parse the phase / nymph-count label CSV. Later duplicate rows win."""
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise LabelFormatError('label CSV has no header row') from None
    except pd.errors.ParserError as e:
        raise LabelFormatError(f'cannot parse label CSV: {e}') from None

    header = [str(c).strip().lstrip('\ufeff') for c in frame.columns]
    if sorted(header) != sorted(LABEL_COLUMNS):
        raise LabelFormatError(f'bad label header {header}, expected {list(LABEL_COLUMNS)}')

    diagnostics: list[Diagnostic] = []
    by_key: dict[tuple[str, dt.date], LabelRecord] = {}
    first_line: dict[tuple[str, dt.date], int] = {}
    data_rows = 0

    for i, row in enumerate(frame.itertuples(index=False)):
        line = i + 2
        cells = {name: '' if pd.isna(value) else str(value).strip() for name, value in zip(header, row)}
        if not any(cells.values()):
            continue
        data_rows += 1
        station = cells['station_id']

        try:
            day = dt.date.fromisoformat(cells['date'])
        except ValueError:
            diagnostics.append(BadRowDiagnostic(station, line=line, reason=f'bad date {cells["date"]!r}'))
            continue
        if cells['phase'] not in ('1', '2', '3'):
            diagnostics.append(BadRowDiagnostic(station, date=day, line=line, reason=f'bad phase {cells["phase"]!r}'))
            continue

        raw_counts = [cells[f'n{s}'] for s in range(1, N_STAGES + 1)]
        counts: tuple[int, ...] | None = None
        if all(raw_counts):
            parsed = [_parse_count(c) for c in raw_counts]
            if any(c is None for c in parsed):
                diagnostics.append(BadRowDiagnostic(station, date=day, line=line, reason=f'bad nymph counts {raw_counts}'))
                continue
            counts = tuple(c for c in parsed if c is not None)
        elif any(raw_counts):
            diagnostics.append(PartialCountsDiagnostic(station, date=day, line=line))

        key = (station, day)
        if key in by_key:
            diagnostics.append(DuplicateRowDiagnostic(station, date=day, line=line, first_line=first_line[key]))
        else:
            first_line[key] = line
        by_key[key] = LabelRecord(station, day, Phase(int(cells['phase'])), counts)

    if data_rows == 0:
        raise LabelFormatError('label CSV has no data rows')

    records = [by_key[k] for k in sorted(by_key)]
    logger.info(f'[INGEST] labels: {len(records)} records, {len(diagnostics)} diagnostics')
    return records, diagnostics


# ─────────────────────────────────────────────────────────────────────────────
# Datasets
# ─────────────────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class LabeledInstance:
    station_id: str
    date: dt.date
    features: tuple[float, ...]
    phase: Phase
    ratios: NymphStageRatios | None = None


@dataclass
class Dataset:
    spec: FeatureSetSpec
    instances: list[LabeledInstance] = field(default_factory=list)
    dropped: int = 0
    unlabeled: int = 0
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.instances)

    def features(self) -> np.ndarray:
        return np.array([inst.features for inst in self.instances], dtype=float).reshape(len(self.instances), len(self.spec.fields))

    def phases(self) -> np.ndarray:
        return np.array([int(inst.phase) for inst in self.instances], dtype=np.int64)

    def ratio_subset(self) -> tuple[np.ndarray, np.ndarray]:
        """Feature matrix and n x 5 ratio matrix of the instances that carry ratios."""
        rows = [inst for inst in self.instances if inst.ratios is not None]
        X = np.array([inst.features for inst in rows], dtype=float).reshape(len(rows), len(self.spec.fields))
        R = np.array([inst.ratios.values for inst in rows if inst.ratios is not None], dtype=float).reshape(len(rows), N_STAGES)
        return X, R

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(','.join(self.spec.fields).encode())
        for inst in self.instances:
            ratios = inst.ratios.values if inst.ratios is not None else ()
            h.update(repr((inst.station_id, inst.date.isoformat(), inst.features, int(inst.phase), ratios)).encode())
        return h.hexdigest()

    def date_bounds(self) -> tuple[dt.date, dt.date]:
        days = [inst.date for inst in self.instances]
        return min(days), max(days)


def build_dataset(
    acc: pd.DataFrame,
    raw: pd.DataFrame,
    labels: list[LabelRecord],
    spec: FeatureSetSpec,
    earliest: dict[str, dt.date] | None = None,
) -> Dataset:
    """Inner-join feature rows with labels on (station, date).

    Labeled days without a complete feature vector are dropped and counted.
    For accumulated feature sets, `earliest` maps a station to its first day
    with a complete cycle behind it; labeled days before it are dropped too.
    Ratios are attached only to phase-3 days.
    """
    source = acc if spec.accumulated else raw
    missing_columns = [name for name in spec.fields if name not in source.columns]
    if missing_columns:
        raise ValueError(f'feature source lacks columns {missing_columns}')

    lookup: dict[tuple[str, dt.date], tuple[float, ...]] = {}
    values = source[list(spec.fields)].to_numpy(dtype=float)
    for station, day, row in zip(source['station_id'].to_numpy(), source.index, values):
        lookup[(str(station), day.date())] = tuple(float(v) for v in row)

    instances: list[LabeledInstance] = []
    diagnostics: list[Diagnostic] = []
    dropped = 0
    for label in sorted(labels, key=lambda r: (r.station_id, r.date)):
        first_usable = (earliest or {}).get(label.station_id) if spec.accumulated else None
        if first_usable is not None and label.date < first_usable:
            diagnostics.append(PartialCycleDiagnostic(label.station_id, date=label.date, usable_from=first_usable))
            dropped += 1
            continue
        vector = lookup.get((label.station_id, label.date))
        if vector is None or any(np.isnan(vector)):
            dropped += 1
            continue
        ratios = None
        if label.counts is not None:
            if label.phase == Phase.WHEAT_FIELD:
                ratios = counts_to_ratios(label.counts)
            elif any(label.counts):
                diagnostics.append(OffPhaseCountsDiagnostic(label.station_id, date=label.date, phase=int(label.phase)))
        instances.append(LabeledInstance(label.station_id, label.date, vector, label.phase, ratios))

    labeled_keys = {(r.station_id, r.date) for r in labels}
    unlabeled = sum(1 for key in lookup if key not in labeled_keys)

    if not instances:
        raise EmptyDatasetError(f'no labeled instances for feature set {spec.model_id} ({dropped} labeled day(s) dropped)')

    partial = sum(isinstance(d, PartialCycleDiagnostic) for d in diagnostics)
    if partial:
        logger.warning(f'[DATASET] {spec.model_id}: dropped {partial} labeled day(s) before the first complete cycle')
    logger.info(f'[DATASET] {spec.model_id}: {len(instances)} instances, {dropped} dropped, {unlabeled} unlabeled days')
    return Dataset(spec, instances, dropped, unlabeled, diagnostics)
