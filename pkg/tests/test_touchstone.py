import numpy as np
import pytest

from jofet_amp.core.errors import DomainError, ParseError
from jofet_amp.processors.touchstone import parse_touchstone_s1p, write_touchstone_s1p


def test_ghz_real_imaginary():
    trace = parse_touchstone_s1p("# GHz S RI R 50\n5.9 0.5 -0.1\n5.91 0.6 0.2\n")
    np.testing.assert_allclose(trace.frequencies, [5.9e9, 5.91e9])
    np.testing.assert_allclose(trace.s11, [0.5 - 0.1j, 0.6 + 0.2j])


def test_magnitude_angle():
    trace = parse_touchstone_s1p(b"! comment\n# MHz S MA\n5900 0.5 90 ! trailing\n5901 1.0 0\n")
    assert trace.s11[0] == pytest.approx(0.5j, abs=1e-15)
    assert trace.frequencies[1] == pytest.approx(5.901e9)


def test_decibel_angle():
    trace = parse_touchstone_s1p("# Hz S DB R 50\n1e9 -20 180\n2e9 0 0\n")
    assert trace.s11[0] == pytest.approx(-0.1, abs=1e-12)


def test_decreasing_frequencies_are_rejected():
    with pytest.raises(DomainError):
        parse_touchstone_s1p("# GHz S RI R 50\n5.91 0.5 0\n5.9 0.5 0\n")


def test_unknown_option_token():
    with pytest.raises(ParseError) as info:
        parse_touchstone_s1p("# GHz S XY R 50\n5.9 0.5 0\n")
    assert info.value.line == 1


def test_malformed_row():
    with pytest.raises(ParseError) as info:
        parse_touchstone_s1p("# GHz S RI R 50\n5.9 0.5 0\n5.91 0.5\n")
    assert info.value.line == 3


def test_written_file_reads_back(make_trace):
    trace = make_trace(points=21)
    again = parse_touchstone_s1p(write_touchstone_s1p(trace))
    np.testing.assert_array_equal(again.frequencies, trace.frequencies)
    np.testing.assert_array_equal(again.s11, trace.s11)
