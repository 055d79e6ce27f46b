from __future__ import annotations

import math

import numpy as np
import pytest

from nonescape.dynamics import (
    NonescapeSeries,
    TimeGrid,
    default_time_grid,
    gamma_width,
    lifetime,
    nonescape_probability,
    probability_window,
)
from nonescape.errors import ConfigError, EmptyWindow
from nonescape.gamow import ExpansionData

_K1 = 2.7579383212949247 - 0.14043273246623328j
_GAMMA1 = 1.549219  # -2 Im(k1^2)
_P0_40 = 1.0 + 6.679600e-4  # frozen truncated P(0) at N = 40 (from above)


def test_time_grid_validation() -> None:
    with pytest.raises(ConfigError, match="non-empty"):
        TimeGrid(np.array([]))
    with pytest.raises(ConfigError, match="finite"):
        TimeGrid(np.array([0.0, math.inf]))
    with pytest.raises(ConfigError, match="non-negative"):
        TimeGrid(np.array([-1.0, 1.0]))
    with pytest.raises(ConfigError, match="strictly increasing"):
        TimeGrid(np.array([0.0, 1.0, 1.0]))
    grid = TimeGrid(np.array([0.0, 0.5, 2.0]))
    assert len(grid) == 3


def test_time_grid_log_spacing() -> None:
    grid = TimeGrid.log(0.1, 100.0, per_decade=10)
    assert len(grid) == 31
    assert grid.times[0] == pytest.approx(0.1, rel=1e-15)
    assert grid.times[-1] == pytest.approx(100.0, rel=1e-15)
    ratios = grid.times[1:] / grid.times[:-1]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)
    with pytest.raises(ConfigError, match="0 < t_min < t_max"):
        TimeGrid.log(1.0, 0.5)
    with pytest.raises(ConfigError, match="0 < t_min < t_max"):
        TimeGrid.log(0.0, 1.0)
    assert len(TimeGrid.log(1.0, 1.0001, per_decade=5)) == 2  # floor of 2 points


def test_gamma_width_and_lifetime() -> None:
    assert gamma_width(_K1) == pytest.approx(_GAMMA1, rel=1e-6)
    assert lifetime(_K1) == pytest.approx(1.0 / _GAMMA1, rel=1e-6)
    with pytest.raises(ConfigError, match="not a decaying pole"):
        gamma_width(1.0 + 0.5j)
    with pytest.raises(ConfigError, match="not a decaying pole"):
        gamma_width(2.0 + 0.0j)


def test_default_time_grid_spans_lifetimes(data: ExpansionData) -> None:
    grid = default_time_grid(data)
    tau = lifetime(_K1)
    assert grid.times[0] == pytest.approx(1e-3 * tau, rel=1e-9)
    assert grid.times[-1] == pytest.approx(1e3 * tau, rel=1e-9)
    from_complex = default_time_grid(_K1)
    np.testing.assert_allclose(grid.times, from_complex.times, rtol=1e-9)


def test_initial_probability_converges(data: ExpansionData) -> None:
    grid = TimeGrid(np.array([0.0]))
    errs = {}
    for n_pairs in (5, 10, 20, 40):
        series = nonescape_probability(data, grid, n_pairs=n_pairs)
        errs[n_pairs] = abs(series.probability[0] - 1.0)
    assert nonescape_probability(data, grid, n_pairs=40).probability[0] == pytest.approx(
        _P0_40, abs=1e-9
    )
    assert errs[40] < errs[20] < errs[10] < errs[5]
    assert errs[40] <= 1e-2


def test_exponential_stage_slope(data: ExpansionData) -> None:
    # Between ~0.5 and ~3 lifetimes the decay is dominated by the first
    # resonance: d ln P / dt = -Gamma_1.
    tau = lifetime(_K1)
    grid = TimeGrid(np.linspace(0.5 * tau, 3.0 * tau, 24))
    series = nonescape_probability(data, grid, n_pairs=40)
    slope = np.polyfit(series.times, np.log(series.probability), 1)[0]
    assert slope == pytest.approx(-_GAMMA1, rel=0.05)


def test_modes_agree(data: ExpansionData) -> None:
    grid = TimeGrid(np.array([0.0, 0.3, 1.7, 8.0]))
    closed = nonescape_probability(data, grid, n_pairs=6, mode="closed")
    quad = nonescape_probability(data, grid, n_pairs=6, mode="quadrature")
    np.testing.assert_allclose(closed.probability, quad.probability, atol=1e-10)
    assert closed.mode == "closed" and quad.mode == "quadrature"
    with pytest.raises(ConfigError, match="unknown overlap mode"):
        nonescape_probability(data, grid, n_pairs=6, mode="hybrid")


def test_series_bookkeeping(data: ExpansionData) -> None:
    grid = TimeGrid.log(0.01, 10.0, per_decade=8)
    series = nonescape_probability(data, grid, n_pairs=10)
    assert len(series) == len(grid)
    assert series.n_pairs == 10
    assert series.provenance == "expansion"
    assert series.imag_residual <= 1e-10
    assert np.all(series.probability > 0.0)
    assert series.times is not grid.times  # defensive copy


def test_probability_positive_far_into_tail(data: ExpansionData) -> None:
    # Deep in the algebraic tail P is ~1e-12; ordered compensated summation
    # must keep it strictly positive.
    grid = TimeGrid(np.array([200.0, 500.0, 1000.0]))
    series = nonescape_probability(data, grid, n_pairs=40)
    assert np.all(series.probability > 0.0)
    assert np.all(np.diff(series.probability) < 0.0)


def test_probability_window_masks(data: ExpansionData) -> None:
    grid = TimeGrid.log(0.01, 10.0, per_decade=8)
    series = nonescape_probability(data, grid, n_pairs=5)
    cut = probability_window(series, 0.1, 1.0)
    assert np.all((cut.times >= 0.1) & (cut.times <= 1.0))
    assert len(cut) > 0
    assert cut.n_pairs == series.n_pairs
    with pytest.raises(EmptyWindow):
        probability_window(series, 20.0, 30.0)
    with pytest.raises(ConfigError, match="t_lo < t_hi"):
        probability_window(series, 1.0, 0.5)


def test_nonescape_series_is_lightweight() -> None:
    series = NonescapeSeries(
        times=np.array([0.0, 1.0]),
        probability=np.array([1.0, 0.5]),
        imag_residual=0.0,
        n_pairs=1,
        mode="closed",
        provenance="synthetic",
    )
    assert len(series) == 2
