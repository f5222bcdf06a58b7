import math

import numpy as np
import pytest

from dsrr.report import csv_text, fmt_cell, write_csv
from dsrr.svgplot import line_plot, save_plot


# ---------------------------------------------------------------- csv cells

def test_fmt_cell_bools_before_ints():
    assert fmt_cell(True) == "1"
    assert fmt_cell(False) == "0"
    assert fmt_cell(np.bool_(True)) == "1"
    assert fmt_cell(1) == "1"
    assert fmt_cell(np.int64(-7)) == "-7"


def test_fmt_cell_floats_round_trip():
    for v in (0.1, 1e-17, 123456.789, -3.0):
        assert float(fmt_cell(v)) == v
    assert fmt_cell(np.float64(0.25)) == "0.25"
    assert fmt_cell(float("nan")) == "nan"
    assert fmt_cell(float("inf")) == "inf"
    assert fmt_cell(float("-inf")) == "-inf"
    assert fmt_cell(np.float64("inf")) == "inf"


def test_fmt_cell_strings_guarded():
    assert fmt_cell("gauss") == "gauss"
    with pytest.raises(ValueError, match="CSV"):
        fmt_cell("a,b")
    with pytest.raises(ValueError, match="CSV"):
        fmt_cell("a\nb")


def test_csv_text_layout():
    rows = [{"m": 4, "err": 0.5}, {"m": 8, "err": float("inf")}]
    text = csv_text(["m", "err"], rows)
    assert text == "m,err\n4,0.5\n8,inf\n"
    assert text.endswith("\n") and not text.endswith("\n\n")


def test_csv_text_follows_header_order():
    rows = [{"b": 2, "a": 1, "ignored": 9}]
    assert csv_text(["a", "b"], rows) == "a,b\n1,2\n"


def test_write_csv_bytes(tmp_path):
    p = tmp_path / "out.csv"
    write_csv(p, ["x"], [{"x": 0.1}])
    assert p.read_bytes() == b"x\n0.1\n"


# ---------------------------------------------------------------- svg plots

def simple_series():
    return [("a", [1.0, 2.0, 3.0], [1.0, 4.0, 9.0]), ("b", [1.0, 2.0, 3.0], [2.0, 2.0, 2.0])]


def test_line_plot_basic_structure():
    svg = line_plot(simple_series(), title="t", xlabel="x", ylabel="y")
    assert svg.startswith("<svg ")
    assert svg.rstrip().endswith("</svg>")
    assert svg.count("<polyline") == 2
    assert ">a</text>" in svg and ">b</text>" in svg
    assert ">t</text>" in svg and ">x</text>" in svg and ">y</text>" in svg
    assert "#1f6f8b" in svg and "#c0504d" in svg


def test_line_plot_deterministic():
    assert line_plot(simple_series()) == line_plot(simple_series())


def test_log_axes_get_decade_ticks():
    svg = line_plot([("s", [1, 10, 100], [1e-3, 1e-2, 1e-1])], logx=True, logy=True)
    for label in ("1", "10", "100", "0.001", "0.01", "0.1"):
        assert f">{label}</text>" in svg


def test_nonfinite_points_split_polyline():
    series = [("s", [1.0, 2.0, 3.0, 4.0, 5.0], [1.0, 2.0, float("nan"), 4.0, 5.0])]
    svg = line_plot(series)
    assert svg.count("<polyline") == 2


def test_nonpositive_on_log_axis_split():
    series = [("s", [1.0, 2.0, 3.0], [1.0, 0.0, 3.0])]
    svg = line_plot(series, logy=True)
    # two lone points survive as circles
    assert svg.count("<polyline") == 0
    assert svg.count("<circle") == 2


def test_lone_point_renders_circle():
    svg = line_plot([("dot", [2.0], [5.0])])
    assert svg.count("<circle") == 1
    assert svg.count("<polyline") == 0


def test_degenerate_ranges_handled():
    # constant series, and an all-invalid log series, must not divide by zero
    svg = line_plot([("c", [1.0, 2.0], [3.0, 3.0])])
    assert "<polyline" in svg
    svg2 = line_plot([("z", [1.0, 2.0], [-1.0, -2.0])], logy=True)
    assert "</svg>" in svg2 and "<polyline" not in svg2
    svg3 = line_plot([("e", [], [])])
    assert "</svg>" in svg3


def test_save_plot_writes_text(tmp_path):
    p = tmp_path / "plot.svg"
    save_plot(p, simple_series(), title="saved")
    content = p.read_text(encoding="utf-8")
    assert content == line_plot(simple_series(), title="saved")
