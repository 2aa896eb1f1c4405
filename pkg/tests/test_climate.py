import datetime as dt

import numpy as np
import pandas as pd
import pytest

from sunnpest.core.climate import (
    CLIMATE_COLUMNS,
    SENSOR_FIELDS,
    RawClimateRecord,
    StationMeta,
    frame_to_records,
    interpolate_gaps,
    parse_climate_csv,
    records_to_frame,
    sanitize_records,
    serialize_climate_csv,
    validate_record,
)
from sunnpest.core.diagnostics import (
    BadCellDiagnostic,
    BadRowDiagnostic,
    DuplicateRowDiagnostic,
    EmptyCellDiagnostic,
    ForeignStationDiagnostic,
)
from sunnpest.core.errors import ClimateFormatError

META = StationMeta('KIR-WF1', 'WheatField', 'Kirsehir')
HEADER = ','.join(CLIMATE_COLUMNS)


def _row(day: str, **overrides) -> str:
    values = {
        'wd_avg': '180.0',
        'ws_avg': '3.0',
        'ws_max': '6.0',
        'sr_avg': '520.0',
        'rainfall': '0.0',
        'd_min': '4.0',
        'd_avg': '6.0',
        'rh_min': '30.0',
        'rh_avg': '50.0',
        'rh_max': '70.0',
        'at_min': '8.0',
        'at_avg': '14.0',
        'at_max': '20.0',
    }
    values.update(overrides)
    return ','.join(['KIR-WF1', day, *(values[name] for name in SENSOR_FIELDS)])


def _record(day: dt.date, **overrides) -> RawClimateRecord:
    values = dict(
        wd_avg=180.0, ws_avg=3.0, ws_max=6.0, sr_avg=520.0, rainfall=0.0, d_min=4.0, d_avg=6.0,
        rh_min=30.0, rh_avg=50.0, rh_max=70.0, at_min=8.0, at_avg=14.0, at_max=20.0,
    )  # fmt: skip
    values.update(overrides)
    return RawClimateRecord('KIR-WF1', day, **values)


def _frame(values, start='2016-04-01', name='sr_avg') -> pd.DataFrame:
    index = pd.date_range(start, periods=len(values), freq='D', name='date')
    frame = pd.DataFrame({'station_id': 'KIR-WF1'}, index=index)
    for field_name in SENSOR_FIELDS:
        frame[field_name] = 1.0
    frame[name] = np.array([np.nan if v is None else v for v in values], dtype=float)
    return frame


# ─────────────────────────────────────────────────────────────────────────────
# parse_climate_csv
# ─────────────────────────────────────────────────────────────────────────────


def test_empty_wind_cells_become_missing():
    text = f'{HEADER}\n{_row("2016-04-01", ws_avg="", ws_max=" ")}\n'
    records, diagnostics = parse_climate_csv(text, META)
    assert len(records) == 1
    assert records[0].ws_avg is None and records[0].ws_max is None
    assert records[0].sr_avg == 520.0
    assert sorted(d.field_name for d in diagnostics if isinstance(d, EmptyCellDiagnostic)) == ['ws_avg', 'ws_max']


def test_duplicate_date_keeps_later_row():
    text = f'{HEADER}\n{_row("2016-04-01", sr_avg="100")}\n{_row("2016-04-01", sr_avg="200")}\n'
    records, diagnostics = parse_climate_csv(text, META)
    assert len(records) == 1
    assert records[0].sr_avg == 200.0
    assert [type(d) for d in diagnostics] == [DuplicateRowDiagnostic]
    assert diagnostics[0].first_line == 2 and diagnostics[0].line == 3


def test_full_year_parses_without_diagnostics():
    days = pd.date_range('2016-01-01', '2016-12-30', freq='D')
    assert len(days) == 365
    text = HEADER + '\n' + '\n'.join(_row(d.date().isoformat()) for d in days) + '\n'
    records, diagnostics = parse_climate_csv(text, META)
    assert len(records) == 365
    assert diagnostics == []
    assert [r.date for r in records] == [d.date() for d in days]


def test_records_come_back_in_date_order():
    text = f'{HEADER}\n{_row("2016-04-03")}\n{_row("2016-04-01")}\n{_row("2016-04-02")}\n'
    records, _ = parse_climate_csv(text, META)
    assert [r.date.day for r in records] == [1, 2, 3]


def test_unparseable_cell_is_missing_with_diagnostic():
    records, diagnostics = parse_climate_csv(f'{HEADER}\n{_row("2016-04-01", at_avg="n/a")}\n', META)
    assert records[0].at_avg is None
    assert isinstance(diagnostics[0], BadCellDiagnostic)
    assert diagnostics[0].raw == 'n/a'


def test_bad_date_and_foreign_station_rows_are_skipped():
    foreign = _row('2016-04-02').replace('KIR-WF1', 'AKS-WF1', 1)
    text = f'{HEADER}\n{_row("2016-13-01")}\n{foreign}\n{_row("2016-04-03")}\n'
    records, diagnostics = parse_climate_csv(text, META)
    assert [r.date for r in records] == [dt.date(2016, 4, 3)]
    assert {type(d) for d in diagnostics} == {BadRowDiagnostic, ForeignStationDiagnostic}


def test_crlf_and_bom_are_accepted():
    text = '\ufeff' + HEADER + '\r\n' + _row('2016-04-01') + '\r\n'
    records, diagnostics = parse_climate_csv(text, META)
    assert len(records) == 1 and diagnostics == []


@pytest.mark.parametrize(
    'header',
    [
        HEADER.replace(',at_max', ''),
        HEADER + ',soil_temp',
    ],
)
def test_bad_header_is_a_hard_error(header):
    with pytest.raises(ClimateFormatError, match='header'):
        parse_climate_csv(f'{header}\n', META)


def test_no_data_rows_is_a_hard_error():
    with pytest.raises(ClimateFormatError, match='no data rows'):
        parse_climate_csv(f'{HEADER}\n\n', META)


def test_parse_serialize_parse_round_trip():
    text = f'{HEADER}\n{_row("2016-04-01", ws_avg="")}\n{_row("2016-04-02", sr_avg="0.1")}\n{_row("2016-04-03", rainfall="12.345678")}\n'
    first, _ = parse_climate_csv(text, META)
    second, diagnostics = parse_climate_csv(serialize_climate_csv(first), META)
    assert second == first
    assert [type(d) for d in diagnostics] == [EmptyCellDiagnostic]


# ─────────────────────────────────────────────────────────────────────────────
# validate_record / sanitize_records
# ─────────────────────────────────────────────────────────────────────────────


def test_humidity_out_of_range():
    violations = validate_record(_record(dt.date(2016, 4, 1), rh_avg=105.0, rh_max=106.0))
    assert len(violations) == 2
    ranges = [v for v in violations if v.rule == 'range']
    assert [v.fields for v in ranges] == [('rh_avg',), ('rh_max',)]


def test_single_range_violation():
    violations = validate_record(_record(dt.date(2016, 4, 1), rh_avg=105.0, rh_max=100.0))
    assert [v.rule for v in violations] == ['range', 'ordering']
    only = validate_record(_record(dt.date(2016, 4, 1), sr_avg=-1.0))
    assert [(v.rule, v.fields) for v in only] == [('range', ('sr_avg',))]


def test_temperature_ordering_violation():
    violations = validate_record(_record(dt.date(2016, 4, 1), at_min=10.0, at_avg=8.0, at_max=12.0))
    assert len(violations) == 1
    assert violations[0].rule == 'ordering'
    assert violations[0].fields == ('at_min', 'at_avg', 'at_max')


def test_consistent_record_is_valid():
    assert validate_record(_record(dt.date(2016, 4, 1))) == []


def test_wind_direction_upper_bound_is_open():
    assert validate_record(_record(dt.date(2016, 4, 1), wd_avg=359.99)) == []
    assert [v.fields for v in validate_record(_record(dt.date(2016, 4, 1), wd_avg=360.0))] == [('wd_avg',)]


def test_missing_fields_are_not_checked():
    record = _record(dt.date(2016, 4, 1), at_avg=None, at_min=15.0, at_max=20.0)
    assert validate_record(record) == []


def test_sanitize_demotes_violating_fields():
    records = [_record(dt.date(2016, 4, 1)), _record(dt.date(2016, 4, 2), at_min=10.0, at_avg=8.0, at_max=12.0)]
    cleaned, diagnostics = sanitize_records(records)
    assert cleaned[0] == records[0]
    assert cleaned[1].at_min is None and cleaned[1].at_avg is None and cleaned[1].at_max is None
    assert cleaned[1].sr_avg == 520.0
    assert len(diagnostics) == 1


# ─────────────────────────────────────────────────────────────────────────────
# interpolate_gaps
# ─────────────────────────────────────────────────────────────────────────────


def test_single_gap_midpoint():
    repaired, reports = interpolate_gaps(_frame([10.0, None, 20.0]))
    assert repaired['sr_avg'].tolist() == [10.0, 15.0, 20.0]
    assert [(r.field_name, [s.status for s in r.spans]) for r in reports] == [('sr_avg', ['interpolated'])]


def test_leading_gap_is_unrepairable():
    repaired, reports = interpolate_gaps(_frame([None, 5.0, 7.0]))
    assert np.isnan(repaired['sr_avg'].iloc[0])
    assert repaired['sr_avg'].iloc[1:].tolist() == [5.0, 7.0]
    (report,) = reports
    assert report.spans[0].status == 'unrepairable'
    assert report.spans[0].first == report.spans[0].last == dt.date(2016, 4, 1)


def test_trailing_gap_and_long_gap_stay_missing():
    values = [1.0, *[None] * 4, 6.0, None]
    repaired, reports = interpolate_gaps(_frame(values), max_gap=3)
    assert np.isnan(repaired['sr_avg'].iloc[1:5]).all()
    assert np.isnan(repaired['sr_avg'].iloc[6])
    assert [s.status for s in reports[0].spans] == ['unrepairable', 'unrepairable']
    assert reports[0].unrepairable_days == 5


def test_linear_signal_restored_exactly():
    truth = 3.5 + 0.25 * np.arange(30)
    values = truth.tolist()
    for i in (3, 4, 10, 17, 18, 19):
        values[i] = None
    repaired, _ = interpolate_gaps(_frame(values))
    assert np.max(np.abs(repaired['sr_avg'].to_numpy() - truth)) <= 1e-9


def test_absent_calendar_days_are_repaired():
    frame = _frame([1.0, 2.0, 3.0, 4.0, 5.0]).drop(index=pd.Timestamp('2016-04-03'))
    repaired, reports = interpolate_gaps(frame)
    assert len(repaired) == 5
    assert repaired.loc['2016-04-03', 'sr_avg'] == 3.0
    assert repaired.loc['2016-04-03', 'station_id'] == 'KIR-WF1'
    assert {r.field_name for r in reports} == set(SENSOR_FIELDS)


def test_unsorted_series_is_rejected():
    with pytest.raises(ValueError, match='sorted'):
        interpolate_gaps(_frame([1.0, 2.0, 3.0]).iloc[::-1])


def test_interpolation_properties_on_random_gap_patterns():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(5, 60))
        truth = rng.normal(0.0, 1.0) + rng.normal(0.0, 0.5) * np.arange(n)
        values = np.where(rng.random(n) < 0.3, np.nan, truth)
        max_gap = int(rng.integers(0, 6))
        frame = _frame(values.tolist())
        once, _ = interpolate_gaps(frame, max_gap)
        twice, _ = interpolate_gaps(once, max_gap)
        result = once['sr_avg'].to_numpy()

        pd.testing.assert_frame_equal(once, twice)
        present = ~np.isnan(values)
        assert np.array_equal(result[present], values[present])
        filled = np.isnan(values) & ~np.isnan(result)
        assert np.allclose(result[filled], truth[filled], atol=1e-9)
        if np.isnan(values[0]):
            assert np.isnan(result[0])
        if np.isnan(values[-1]):
            assert np.isnan(result[-1])


def test_records_to_frame_marks_missing_as_nan():
    frame = records_to_frame([_record(dt.date(2016, 4, 2)), _record(dt.date(2016, 4, 1), sr_avg=None)])
    assert list(frame.index.date) == [dt.date(2016, 4, 1), dt.date(2016, 4, 2)]
    assert np.isnan(frame['sr_avg'].iloc[0])


def test_frame_to_records_restores_missing_as_none():
    records = [_record(dt.date(2016, 4, 1), sr_avg=None), _record(dt.date(2016, 4, 2))]
    restored = frame_to_records(records_to_frame(records))
    assert restored == records
    assert restored[0].sr_avg is None
