import numpy as np
import pytest

from kitetrack.experiment import SERIES_COLUMNS, write_table
from kitetrack.plots import (
    MissingColumnsError,
    control_plot,
    emit_plots,
    line_plot,
    reference_plot,
    sweep_plot,
    trajectory_plot,
)
from kitetrack.trajectory import figure_eight


def data_lines(svg):
    return svg.count('stroke-width="1.2"')


def fixture_series(n=50):
    t = np.arange(n) * 0.01
    s = {c: np.zeros(n) for c in SERIES_COLUMNS}
    s["t"] = t
    s["v"] = 0.3 * np.sin(t)
    s["w"] = 0.5 + 0.1 * np.sin(2 * t)
    s["v_t"] = s["v"] + 0.01
    s["w_t"] = s["w"]
    s["u"] = 0.05 * np.cos(t)
    return s


def test_empty_series_gives_labelled_axes():
    svg = line_plot([(np.array([]), np.array([]), "empty")], "Title", "x [s]", "y [m]")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "x [s]" in svg and "y [m]" in svg and "Title" in svg
    assert data_lines(svg) == 0


def test_plots_are_deterministic():
    s = fixture_series()
    assert trajectory_plot(s) == trajectory_plot(dict(s))
    assert control_plot(s).encode() == control_plot(fixture_series()).encode()


def test_labels_are_escaped():
    svg = line_plot([([0, 1], [0, 1], "a<b & c")], "t", "x", "y")
    assert "a&lt;b &amp; c" in svg


def test_missing_columns_are_listed():
    s = fixture_series()
    del s["v_t"], s["w_t"]
    with pytest.raises(MissingColumnsError, match="v_t, w_t"):
        trajectory_plot(s)


def test_nan_breaks_the_line():
    svg = line_plot([([0, 1, 2, 3, 4], [0, 1, np.nan, 3, 4], "gap")], "t", "x", "y")
    assert data_lines(svg) == 2


def test_azimuth_wrap_breaks_the_line():
    s = fixture_series(4)
    s["v"] = np.array([np.pi - 0.02, np.pi - 0.01, np.pi + 0.01, np.pi + 0.02])
    s["v_t"] = s["v"]
    svg = trajectory_plot(s)
    assert data_lines(svg) == 4  # kite and target each split at the +-180 deg seam


def test_reference_and_sweep_plots():
    ref = figure_eight(n_samples=256)
    svg = reference_plot(ref.table())
    assert data_lines(svg) == 1 and "Reference figure eight" in svg
    svg = sweep_plot([(0.0, 0.1, 0.004), (1.0, 0.1, 0.006), (0.0, 0.5, 0.004), (1.0, 0.5, 0.007)])
    assert data_lines(svg) == 2 and "delta = 0.5 1/s" in svg


def test_emit_plots(tmp_path):
    s = fixture_series()
    write_table(tmp_path / "series.csv", SERIES_COLUMNS, zip(*(s[c] for c in SERIES_COLUMNS)))
    paths = emit_plots(tmp_path)
    assert [p.name for p in paths] == ["trajectory.svg", "control.svg"]
    first = [p.read_bytes() for p in paths]
    assert [p.read_bytes() for p in emit_plots(tmp_path)] == first


def test_emit_plots_needs_series(tmp_path):
    with pytest.raises(FileNotFoundError):
        emit_plots(tmp_path)
