"""Seeded synthetic seasons with known ground truth.

Each station gets one continuous daily series covering `years` calendar
years. Smooth seasonal curves are the hidden signal; observations add
seeded noise and injected gaps. Labels come from the oracles applied to the
noiseless accumulated solar radiation, so any learner error is the
learner's, not the generator's.
"""

import datetime as dt
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .climate import SENSOR_FIELDS, StationMeta, frame_to_records, serialize_climate_csv
from .features import LABEL_COLUMNS, N_STAGES, NymphStageRatios, Phase, SeasonClock

logger = logging.getLogger('sunnpest')

DEFAULT_T1 = 44533.0
DEFAULT_T2 = 57912.0

DEFAULT_NOISE: dict[str, float] = {
    'wd_avg': 20.0,
    'ws_avg': 0.3,
    'ws_max': 0.5,
    'sr_avg': 10.0,
    'rainfall': 0.4,
    'd_min': 0.5,
    'd_avg': 0.8,
    'rh_min': 1.5,
    'rh_avg': 2.0,
    'rh_max': 1.5,
    'at_min': 0.5,
    'at_avg': 0.8,
    'at_max': 0.5,
}

_STATIONS = (
    ('KIR-WF1', 'Kirsehir'),
    ('AKS-WF1', 'Aksaray'),
    ('ANK-WF1', 'Ankara'),
    ('KON-WF1', 'Konya'),
    ('DYB-WF1', 'Diyarbakir'),
    ('SAN-WF1', 'Sanliurfa'),
)

_YEAR = 365.25
_MAX_INJECTED_GAP = 5


@dataclass(frozen=True)
class SynthConfig:
    years: int = 4
    stations: int = 2
    rng_seed: int = 0
    first_year: int = 2014
    t1: float = DEFAULT_T1
    t2: float = DEFAULT_T2
    noise: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_NOISE))
    # Nymph progression: days from the first phase-3 day to the stage-5 center,
    # and bell width as a fraction of the spacing between stage centers.
    nymph_window: float = 60.0
    nymph_spread: float = 0.6
    nymph_total: int = 1000
    missing_rate: float = 0.01
    year_jitter: float = 0.02

    def __post_init__(self) -> None:
        if self.years < 1 or self.stations < 1:
            raise ValueError(f'years and stations must be >= 1, got {self.years} and {self.stations}')
        if not 0 < self.t1 < self.t2:
            raise ValueError(f'thresholds must satisfy 0 < t1 < t2, got t1={self.t1}, t2={self.t2}')
        unknown = sorted(set(self.noise) - set(SENSOR_FIELDS))
        if unknown:
            raise ValueError(f'noise scales for unknown fields {unknown}')
        negative = sorted(name for name, scale in self.noise.items() if not scale >= 0)
        if negative:
            raise ValueError(f'noise scales must be >= 0: {negative}')
        if not 0.0 <= self.missing_rate <= 0.2:
            raise ValueError(f'missing_rate must lie in [0, 0.2], got {self.missing_rate}')
        if self.nymph_window <= 0 or self.nymph_spread <= 0:
            raise ValueError('nymph_window and nymph_spread must be positive')
        if self.nymph_total < 1:
            raise ValueError(f'nymph_total must be >= 1, got {self.nymph_total}')
        if not 0.0 <= self.year_jitter < 0.5:
            raise ValueError(f'year_jitter must lie in [0, 0.5), got {self.year_jitter}')
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError(f'rng_seed must be an unsigned 64-bit integer, got {self.rng_seed}')

    def scale(self, name: str) -> float:
        return self.noise.get(name, 0.0)


@dataclass(frozen=True)
class InjectedGap:
    station_id: str
    field_name: str
    first: dt.date
    last: dt.date

    @property
    def days(self) -> int:
        return (self.last - self.first).days + 1


@dataclass
class SynthSeason:
    """Generated CSV texts plus the hidden truth behind them.

    `truth` has one row per station-day: station_id, phase, the noiseless
    accumulated solar radiation and the true stage ratios r1..r5 (NaN on
    days without nymph counts). `signal` holds the noiseless sensor curves.
    """

    config: SynthConfig
    stations: tuple[StationMeta, ...]
    climate_csv: dict[str, str]
    labels_csv: str
    truth: pd.DataFrame
    signal: dict[str, pd.DataFrame]
    gaps: tuple[InjectedGap, ...]

    def write(self, out_dir: Path) -> list[Path]:
        """Write climate_<station>.csv files and labels.csv into `out_dir`."""
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for station_id, text in self.climate_csv.items():
            path = out_dir / f'climate_{station_id}.csv'
            path.write_text(text, encoding='utf-8')
            written.append(path)
        labels = out_dir / 'labels.csv'
        labels.write_text(self.labels_csv, encoding='utf-8')
        written.append(labels)
        return written


# ─────────────────────────────────────────────────────────────────────────────
# Oracles
# ─────────────────────────────────────────────────────────────────────────────


def phase_oracle(acc_sr: float, cfg: SynthConfig) -> Phase:
    """Phase 1 below t1, phase 3 above t2, phase 2 in between (bounds inclusive)."""
    if acc_sr < 0:
        raise ValueError(f'accumulated solar radiation must be >= 0, got {acc_sr}')
    if acc_sr < cfg.t1:
        return Phase.WINTER_QUARTERS
    if acc_sr > cfg.t2:
        return Phase.WHEAT_FIELD
    return Phase.MIGRATION


def stage_centers(cfg: SynthConfig) -> tuple[float, ...]:
    spacing = cfg.nymph_window / (N_STAGES - 1)
    return tuple(i * spacing for i in range(N_STAGES))


def nymph_ratio_oracle(days_since_phase3: float, cfg: SynthConfig) -> NymphStageRatios:
    """Bell-shaped soft assignment of nymphs to the five stages.

    Stage centers are equally spaced from day 0 to `nymph_window`.
    """
    if days_since_phase3 < 0:
        raise ValueError(f'days_since_phase3 must be >= 0, got {days_since_phase3}')
    centers = np.array(stage_centers(cfg))
    sigma = cfg.nymph_spread * cfg.nymph_window / (N_STAGES - 1)
    log_weights = -0.5 * ((days_since_phase3 - centers) / sigma) ** 2
    weights = np.exp(log_weights - log_weights.max())
    ratios = weights / weights.sum()
    return NymphStageRatios(tuple(float(v) for v in ratios))


# ─────────────────────────────────────────────────────────────────────────────
# Signals
# ─────────────────────────────────────────────────────────────────────────────


def _seasonal(doy: np.ndarray, shift: float = 0.0) -> np.ndarray:
    """-1 in early January, +1 around mid-July."""
    return -np.cos(2 * math.pi * (doy - 10 + shift) / _YEAR)


def _station_signal(days: pd.DatetimeIndex, rng: np.random.Generator, cfg: SynthConfig) -> pd.DataFrame:
    """Noiseless daily curves for one station. SR amplitude and phase vary per year."""
    doy = days.dayofyear.to_numpy(dtype=float)
    years = days.year.to_numpy()

    amplitude = np.empty(len(days))
    shift = np.empty(len(days))
    for year in np.unique(years):
        in_year = years == year
        amplitude[in_year] = 1.0 + rng.uniform(-cfg.year_jitter, cfg.year_jitter)
        shift[in_year] = rng.uniform(-3.0, 3.0)

    season = _seasonal(doy)
    at_avg = 12.0 + 13.0 * season
    rh_avg = 60.0 - 15.0 * season
    ws_avg = 3.0 + 0.8 * season
    d_avg = at_avg - (100.0 - rh_avg) / 5.0
    signal = {
        'wd_avg': 180.0 + 60.0 * np.sin(2 * math.pi * doy / _YEAR),
        'ws_avg': ws_avg,
        'ws_max': ws_avg + 3.0,
        'sr_avg': amplitude * (300.0 + 150.0 * _seasonal(doy, shift)),
        'rainfall': 1.5 - 1.2 * season,
        'd_min': d_avg - 2.0,
        'd_avg': d_avg,
        'rh_min': rh_avg - 15.0,
        'rh_avg': rh_avg,
        'rh_max': rh_avg + 15.0,
        'at_min': at_avg - 6.0,
        'at_avg': at_avg,
        'at_max': at_avg + 6.0,
    }
    return pd.DataFrame(signal, index=days)


def _observe(signal: pd.DataFrame, rng: np.random.Generator, cfg: SynthConfig) -> pd.DataFrame:
    """Noisy observations that always pass range and ordering validation."""
    n = len(signal)

    def noise(name: str) -> np.ndarray:
        return rng.normal(0.0, cfg.scale(name), size=n)

    def spread(name: str) -> np.ndarray:
        return np.abs(rng.normal(0.0, cfg.scale(name), size=n))

    obs: dict[str, np.ndarray] = {}
    obs['wd_avg'] = signal['wd_avg'].to_numpy() + noise('wd_avg')
    obs['sr_avg'] = np.maximum(signal['sr_avg'].to_numpy() + noise('sr_avg'), 0.0)
    obs['rainfall'] = np.maximum(signal['rainfall'].to_numpy() + noise('rainfall'), 0.0)

    obs['ws_avg'] = np.maximum(signal['ws_avg'].to_numpy() + noise('ws_avg'), 0.0)
    obs['ws_max'] = obs['ws_avg'] + 3.0 + spread('ws_max')

    for prefix, width in (('at', 6.0), ('rh', 15.0), ('d', 2.0)):
        avg = signal[f'{prefix}_avg'].to_numpy() + noise(f'{prefix}_avg')
        obs[f'{prefix}_avg'] = avg
        obs[f'{prefix}_min'] = avg - width - spread(f'{prefix}_min')
        if prefix != 'd':
            obs[f'{prefix}_max'] = avg + width + spread(f'{prefix}_max')
    for name in ('rh_min', 'rh_avg', 'rh_max'):
        obs[name] = np.clip(obs[name], 0.0, 100.0)

    # Rounding is monotone, so ordering survives it; wd_avg is wrapped after rounding.
    frame = pd.DataFrame({name: np.round(obs[name], 2) for name in SENSOR_FIELDS}, index=signal.index)
    wd = np.round(np.mod(frame['wd_avg'].to_numpy(), 360.0), 2)
    frame['wd_avg'] = np.where(wd >= 360.0, 0.0, wd)
    return frame


def _inject_gaps(frame: pd.DataFrame, station_id: str, rng: np.random.Generator, cfg: SynthConfig) -> list[InjectedGap]:
    """Blank interior runs of 1-5 days per field. Runs never touch or overlap, never cover the first or last day."""
    n = len(frame)
    gaps: list[InjectedGap] = []
    if cfg.missing_rate == 0.0 or n < 3:
        return gaps
    mean_length = (1 + _MAX_INJECTED_GAP) / 2
    for name in SENSOR_FIELDS:
        count = int(rng.binomial(n, cfg.missing_rate / mean_length))
        starts = np.sort(rng.choice(np.arange(1, n - 1), size=min(count, n - 2), replace=False))
        lengths = rng.integers(1, _MAX_INJECTED_GAP + 1, size=len(starts))
        column = frame.columns.get_loc(name)
        previous_stop = 0
        for start, length in zip(starts, lengths):
            start = int(start)
            if start <= previous_stop:
                continue
            stop = min(start + int(length), n - 1)
            frame.iloc[start:stop, column] = np.nan
            gaps.append(InjectedGap(station_id, name, frame.index[start].date(), frame.index[stop - 1].date()))
            previous_stop = stop
    return gaps


def _station_meta(index: int) -> StationMeta:
    if index < len(_STATIONS):
        station_id, location = _STATIONS[index]
        return StationMeta(station_id, 'WheatField', location)
    return StationMeta(f'STN-{index + 1:02d}', 'WheatField', '')


# ─────────────────────────────────────────────────────────────────────────────
# Generation
# ─────────────────────────────────────────────────────────────────────────────


def _label_station(meta: StationMeta, signal: pd.DataFrame, cfg: SynthConfig) -> pd.DataFrame:
    clock = SeasonClock()
    keys = clock.cycle_keys(signal.index)
    acc_sr = np.empty(len(signal))
    sr = signal['sr_avg'].to_numpy()
    for key in np.unique(keys):
        in_cycle = keys == key
        acc_sr[in_cycle] = np.cumsum(sr[in_cycle])

    phases = [int(phase_oracle(value, cfg)) for value in acc_sr]
    ratios = np.full((len(signal), N_STAGES), np.nan)
    for key in np.unique(keys):
        positions = np.flatnonzero((keys == key) & (np.asarray(phases) == int(Phase.WHEAT_FIELD)))
        if len(positions) == 0:
            continue
        for offset, pos in enumerate(positions):
            if offset > cfg.nymph_window:
                break
            ratios[pos] = nymph_ratio_oracle(float(offset), cfg).values

    truth = pd.DataFrame({'station_id': meta.station_id, 'phase': phases, 'acc_sr': acc_sr}, index=signal.index)
    for s in range(1, N_STAGES + 1):
        truth[f'r{s}'] = ratios[:, s - 1]
    return truth


def _labels_csv(truth: pd.DataFrame, cfg: SynthConfig) -> str:
    rows = []
    for day, row in zip(truth.index, truth.itertuples(index=False)):
        ratios = [getattr(row, f'r{s}') for s in range(1, N_STAGES + 1)]
        counts = ['' if math.isnan(r) else str(int(round(r * cfg.nymph_total))) for r in ratios]
        rows.append([row.station_id, day.date().isoformat(), str(row.phase), *counts])
    frame = pd.DataFrame(rows, columns=list(LABEL_COLUMNS))
    return frame.to_csv(index=False, lineterminator='\n')


def generate_seasons(cfg: SynthConfig | None = None) -> SynthSeason:
    """Generate every station's climate CSV and one label CSV; deterministic per seed."""
    cfg = cfg or SynthConfig()
    days = pd.date_range(dt.date(cfg.first_year, 1, 1), dt.date(cfg.first_year + cfg.years - 1, 12, 31), freq='D', name='date')

    stations = []
    climate_csv: dict[str, str] = {}
    signals: dict[str, pd.DataFrame] = {}
    truths = []
    gaps: list[InjectedGap] = []
    for index in range(cfg.stations):
        meta = _station_meta(index)
        rng = np.random.default_rng([cfg.rng_seed, index])
        signal = _station_signal(days, rng, cfg)
        observed = _observe(signal, rng, cfg)
        gaps.extend(_inject_gaps(observed, meta.station_id, rng, cfg))

        climate_csv[meta.station_id] = serialize_climate_csv(frame_to_records(observed.assign(station_id=meta.station_id)))
        signals[meta.station_id] = signal
        truths.append(_label_station(meta, signal, cfg))
        stations.append(meta)

    truth = pd.concat(truths)
    labels_csv = _labels_csv(truth, cfg)
    counted = int(truth['r1'].notna().sum())
    logger.info(f'[SYNTH] {cfg.stations} station(s) x {cfg.years} year(s): {len(truth)} labeled days, {counted} with nymph counts, {len(gaps)} gaps')
    return SynthSeason(cfg, tuple(stations), climate_csv, labels_csv, truth, signals, tuple(gaps))
