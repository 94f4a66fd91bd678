import numpy as np
import pytest

from jofet_amp.core.errors import DomainError, ParseError, SchemaError
from jofet_amp.core.models import ComplexReflectionTrace, SpectrumTrace
from jofet_amp.processors.tables import parse_trace_csv, read_table, table_from_columns, write_trace_csv


def test_three_row_reflection():
    trace = parse_trace_csv("f_Hz,re,im\n5.9e9,0.1,0.2\n5.91e9,0.3,-0.4\n5.92e9,1,0\n", "reflection")
    assert isinstance(trace, ComplexReflectionTrace)
    np.testing.assert_allclose(trace.s11, [0.1 + 0.2j, 0.3 - 0.4j, 1.0])


def test_hemt_sweep_accepts_alias():
    table = parse_trace_csv("T_set_K,psd_K\n0.1,3.0\n0.5,4.0\n", "hemt_sweep")
    np.testing.assert_allclose(table["Tset_K"], [0.1, 0.5])
    assert len(table) == 2


def test_unsupported_unit_suffix():
    with pytest.raises(SchemaError) as info:
        parse_trace_csv("f_GHz,re,im\n5.9,0.1,0.2\n", "reflection")
    assert info.value.name == "f_GHz"


def test_missing_mandatory_column():
    with pytest.raises(SchemaError) as info:
        read_table("Vg_V,fr_Hz,kappa_i_Hz\n-1,5e9,1e5\n", "gate_sweep")
    assert info.value.name == "kappa_ex_Hz"


def test_bad_cell_reports_line_and_column():
    with pytest.raises(ParseError) as info:
        read_table("# note\nf_Hz,re,im\n5.9e9,0.1,0.2\n5.91e9,abc,0.2\n", "reflection")
    assert info.value.line == 4
    assert info.value.column == "re"


def test_short_row():
    with pytest.raises(ParseError):
        read_table("f_Hz,psd_dBm\n5.9e9\n", "spectrum")


def test_spectrum_metadata():
    text = "# rbw_Hz=1000\n# pump_on=true\n# pump_frequency_Hz=5.8e9\nf_Hz,psd_dBm\n5.9e9,-150\n5.900001e9,-151\n"
    spectrum = parse_trace_csv(text, "spectrum")
    assert isinstance(spectrum, SpectrumTrace)
    assert spectrum.rbw == 1000.0
    assert spectrum.pump_on
    assert spectrum.pump_frequency == 5.8e9
    assert spectrum.pilot_frequency is None


def test_spectrum_rbw_defaults_to_bin_spacing():
    spectrum = parse_trace_csv("f_Hz,psd_dBm\n1000,-150\n1010,-150\n1020,-150\n", "spectrum")
    assert spectrum.rbw == pytest.approx(10.0)


def test_decreasing_reflection_is_rejected():
    with pytest.raises(DomainError):
        parse_trace_csv("f_Hz,re,im\n2,0,0\n1,0,0\n", "reflection")


def test_written_spectrum_reads_back(make_spectrum):
    f = np.linspace(5.9e9, 5.91e9, 11)
    spectrum = make_spectrum(f, np.full(11, 1e-13), pump_on=True, pilot_frequency=5.905e9, pilot_power_dbm=-140.0)
    again = parse_trace_csv(write_trace_csv(spectrum), "spectrum")
    np.testing.assert_array_equal(again.psd_dbm, spectrum.psd_dbm)
    assert again.rbw == spectrum.rbw
    assert again.pilot_frequency == 5.905e9
    assert again.pilot_power_dbm == -140.0


def test_table_from_columns_checks_schema_and_lengths():
    table = table_from_columns("power_sweep", Pin_dBm=[-150, -140], fr_Hz=[5.9e9, 5.899e9])
    assert read_table(write_trace_csv(table), "power_sweep")["fr_Hz"][1] == 5.899e9
    with pytest.raises(SchemaError):
        table_from_columns("power_sweep", Pin_dBm=[-150])
    with pytest.raises(DomainError):
        table_from_columns("power_sweep", Pin_dBm=[-150, -140], fr_Hz=[5.9e9])
