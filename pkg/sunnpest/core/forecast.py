"""Daily phase and nymph-stage forecasts with the pesticide-application warning."""

import datetime as dt
import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .bundle import ModelBundle
from .errors import InputError, InsufficientHistoryError
from .features import N_STAGES, NymphStageRatios, Phase
from .pipeline import StationSeries
from .trees import predict_phase, predict_ratios

logger = logging.getLogger('sunnpest')

WarningStatus = Literal['NoAction', 'Watch', 'SprayWindow']
WARNING_LEVELS: tuple[WarningStatus, ...] = ('NoAction', 'Watch', 'SprayWindow')


@dataclass(frozen=True)
class WarningRule:
    """Operator configuration for the spray decision; not biological ground truth."""

    stages: frozenset[int] = field(default_factory=lambda: frozenset({2, 3}))
    threshold: float = 0.55
    require_phase3: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, 'stages', frozenset(int(s) for s in self.stages))
        if not self.stages:
            raise ValueError('warning rule needs at least one watched stage')
        if not self.stages <= set(range(1, N_STAGES + 1)):
            raise ValueError(f'watched stages must lie in 1..{N_STAGES}, got {sorted(self.stages)}')
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f'warning threshold must lie in (0, 1], got {self.threshold}')

    def to_dict(self) -> dict:
        return {'stages': sorted(self.stages), 'threshold': self.threshold, 'require_phase3': self.require_phase3}


def warning_decision(phase: Phase, ratios: NymphStageRatios, rule: WarningRule) -> WarningStatus:
    """Spray when the watched stages hold at least `threshold` of the nymphs
    (in phase 3 unless the rule waives it); watch in phase 3 from half the threshold.
    """
    mass = ratios.mass(rule.stages)
    in_field = phase == Phase.WHEAT_FIELD
    if (in_field or not rule.require_phase3) and mass >= rule.threshold:
        return 'SprayWindow'
    if in_field and mass >= rule.threshold / 2:
        return 'Watch'
    return 'NoAction'


@dataclass(frozen=True)
class DailyForecast:
    station_id: str
    date: dt.date
    phase: Phase
    distribution: tuple[float, ...]
    ratios: NymphStageRatios
    degenerate: bool
    warning: WarningStatus
    rule: WarningRule

    def to_record(self) -> dict:
        return {
            'station_id': self.station_id,
            'date': self.date.isoformat(),
            'phase': int(self.phase),
            'phase_distribution': list(self.distribution),
            'stage_ratios': list(self.ratios.values),
            'degenerate_ratios': self.degenerate,
            'warning': self.warning,
            'rule': self.rule.to_dict(),
        }


def usable_from(series: StationSeries, bundle: ModelBundle) -> dt.date:
    """Earliest day whose features can be built from the station's data.

    Accumulated features need data from the start of the day's cycle; when
    the files begin mid-cycle the first usable day is the next cycle start.
    """
    if not bundle.spec.accumulated:
        return series.first_day
    return series.usable_from(bundle.clock)


def forecast_station(
    series: StationSeries,
    bundle: ModelBundle,
    rule: WarningRule,
    start: dt.date | None = None,
    end: dt.date | None = None,
) -> list[DailyForecast]:
    """One forecast per day in [start, end] that has a complete feature vector."""
    station_id = series.meta.station_id
    if series.repaired.empty:
        raise InputError(f'{station_id}: no usable climate rows')
    earliest = usable_from(series, bundle)
    if start is not None and bundle.spec.accumulated and start < earliest:
        raise InsufficientHistoryError(
            f'{station_id}: cannot accumulate from the cycle start for {start.isoformat()}; earliest usable date is {earliest.isoformat()}'
        )
    start = max(start, earliest) if start else earliest

    source = series.accumulated if bundle.spec.accumulated else series.repaired
    window = source.loc[(source.index.date >= start) & (source.index.date <= (end or dt.date.max))]
    values = window[list(bundle.spec.fields)].to_numpy(dtype=float)
    complete = ~np.isnan(values).any(axis=1)
    if not complete.all():
        logger.warning(f'[PREDICT] {station_id}: skipped {int((~complete).sum())} day(s) with missing features')

    forecasts = []
    for day, x in zip(window.index[complete], values[complete]):
        phase, distribution = predict_phase(bundle.classifier, x)
        prediction = predict_ratios(bundle.ratios, x)
        warning = warning_decision(phase, prediction.ratios, rule)
        forecasts.append(DailyForecast(station_id, day.date(), phase, distribution, prediction.ratios, prediction.degenerate, warning, rule))

    logger.info(f'[PREDICT] {station_id}: {len(forecasts)} forecast(s), {sum(f.warning == "SprayWindow" for f in forecasts)} spray day(s)')
    return forecasts


def forecast_corpus(
    stations: dict[str, StationSeries],
    bundle: ModelBundle,
    rule: WarningRule,
    start: dt.date | None = None,
    end: dt.date | None = None,
) -> list[DailyForecast]:
    """Forecasts for every station, ordered by station then date."""
    if start is not None and end is not None and start > end:
        raise InputError(f'empty date range: {start.isoformat()} is after {end.isoformat()}')
    forecasts = [f for station_id in sorted(stations) for f in forecast_station(stations[station_id], bundle, rule, start, end)]
    if not forecasts:
        bounds = f'{start.isoformat() if start else "start"}..{end.isoformat() if end else "end"}'
        raise InputError(f'no climate days to forecast in {bounds}')
    return forecasts
