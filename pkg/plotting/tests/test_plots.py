import math
import os

import numpy as np
import pandas as pd
import pytest

from bequp_plots import (
    NoRecordsError,
    PlotSpec,
    SchemaError,
    aggregate,
    build_figure,
    legend_order,
    load_records,
    noise_panels,
    render,
    select_metric,
)
from bequp_plots.aggregate import REQUIRED_COLUMNS

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
HEADER = ",".join(REQUIRED_COLUMNS)


def _write_rows(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEADER + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    return str(path)


def _row(algo="bequp-link", metric="fidelity", noise="depolarizing", n=2,
         trial=0, cost=100):
    return (algo, metric, noise, n, 4 * n, n + 4, trial, 12345, 0, 0, 1,
            cost, cost, 7)


def test_aggregation_matches_independent_computation(tmp_path):
    rng = np.random.default_rng(0)
    rows, book = [], {}
    for algo in ("bequp-link", "succ-elim"):
        for noise in ("depolarizing", "bit_flip"):
            for n in (2, 3):
                costs = [int(rng.integers(50, 500)) for _ in range(10)]
                book[(algo, noise, 4 * n)] = costs
                rows += [_row(algo=algo, noise=noise, n=n, trial=t, cost=c)
                         for t, c in enumerate(costs)]
    path = _write_rows(tmp_path / "r.csv", rows)
    agg = aggregate(select_metric(load_records(path), "fidelity"))
    assert len(agg) == len(book)
    for _, row in agg.iterrows():
        costs = book[(row["algo"], row["noise_model"], row["K"])]
        mean = sum(costs) / len(costs)
        var = sum((c - mean) ** 2 for c in costs) / (len(costs) - 1)
        se = math.sqrt(var / len(costs))
        assert row["mean_cost"] == pytest.approx(mean, abs=1e-12)
        assert row["se_cost"] == pytest.approx(se, abs=1e-12)
        assert row["trials"] == 10


def test_single_trial_has_zero_error_bar(tmp_path):
    path = _write_rows(tmp_path / "r.csv", [_row()])
    agg = aggregate(select_metric(load_records(path), "fidelity"))
    assert agg["se_cost"].tolist() == [0.0]


def test_header_only_raises_no_records(tmp_path):
    path = _write_rows(tmp_path / "empty.csv", [])
    with pytest.raises(NoRecordsError, match="no records"):
        select_metric(load_records(path), "fidelity")


def test_missing_column_is_named(tmp_path):
    path = tmp_path / "bad.csv"
    cols = [c for c in REQUIRED_COLUMNS if c != "resource_cost"]
    pd.DataFrame(columns=cols).to_csv(path, index=False)
    with pytest.raises(SchemaError, match="resource_cost"):
        load_records(str(path))


def test_skf_drops_path_only_algorithms(tmp_path):
    rows = [_row(algo="bequp-link", metric="skf"),
            _row(algo="uniform-link", metric="skf"),
            _row(algo="uniform-path", metric="skf"),
            _row(algo="succ-elim", metric="skf")]
    path = _write_rows(tmp_path / "r.csv", rows)
    df = select_metric(load_records(path), "skf")
    assert set(df["algo"]) == {"bequp-link", "uniform-link"}


def test_single_algo_single_noise_renders_one_panel(tmp_path):
    rows = [_row(n=n, trial=t, cost=100 + 10 * n + t)
            for n in (2, 3) for t in range(3)]
    path = _write_rows(tmp_path / "r.csv", rows)
    spec = PlotSpec(input_csv=path, output=str(tmp_path / "fig.png"))
    fig = build_figure(spec)
    visible = [ax for ax in fig.axes if ax.get_visible()]
    assert len(visible) == 1
    agg = aggregate(select_metric(load_records(path), "fidelity"))
    assert sorted(agg["K"].unique().tolist()) == [8, 12]
    out = render(spec)
    assert os.path.getsize(out) > 0


def test_legend_ordered_by_mean_cost_at_largest_k(tmp_path):
    rows = []
    for algo, scale in (("bequp-link", 1), ("succ-elim", 5), ("uniform-path", 3)):
        for n in (2, 6):
            rows += [_row(algo=algo, n=n, trial=t, cost=scale * 100 * n + t)
                     for t in range(3)]
    path = _write_rows(tmp_path / "r.csv", rows)
    agg = aggregate(select_metric(load_records(path), "fidelity"))
    assert legend_order(agg) == ["succ-elim", "uniform-path", "bequp-link"]
    fig = build_figure(PlotSpec(input_csv=path))
    labels = fig.legends[0].get_texts()
    assert [t.get_text() for t in labels] == ["succ-elim", "uniform-path",
                                              "bequp-link"]


def test_aggregation_is_deterministic(tmp_path):
    rows = [_row(n=n, trial=t, cost=90 + 7 * t) for n in (2, 3) for t in range(4)]
    path = _write_rows(tmp_path / "r.csv", rows)
    a = aggregate(select_metric(load_records(path), "fidelity"))
    b = aggregate(select_metric(load_records(path), "fidelity"))
    pd.testing.assert_frame_equal(a, b)


def test_cli_writes_figure(tmp_path, capsys):
    from bequp_plots.cli import main

    rows = [_row(n=n, trial=t) for n in (2, 3) for t in range(2)]
    path = _write_rows(tmp_path / "r.csv", rows)
    out = tmp_path / "fig.png"
    assert main(["--in", path, "--out", str(out), "--logy"]) == 0
    assert out.exists()
    assert "wrote" in capsys.readouterr().out


def test_full_default_suite_renders_four_panels():
    """The default-sweep fixture (generated by the harness CLI) renders
    one panel per noise model with every algorithm present."""
    fixture = os.path.join(FIXTURES, "default_suite_fidelity.csv")
    agg = aggregate(select_metric(load_records(fixture), "fidelity"))
    assert noise_panels(agg) == ["depolarizing", "dephasing",
                                 "amplitude_damping", "bit_flip"]
    fig = build_figure(PlotSpec(input_csv=fixture, logy=True))
    visible = [ax for ax in fig.axes if ax.get_visible()]
    assert len(visible) == 4
    labels = {t.get_text() for t in fig.legends[0].get_texts()}
    assert labels == {"bequp-link", "bequp-path", "uniform-link",
                      "uniform-path", "succ-elim", "linkselfie"}
    out = "/tmp/bequp_default_suite.png"
    assert os.path.getsize(render(PlotSpec(input_csv=fixture, output=out,
                                           logy=True))) > 0


def test_skf_fixture_renders():
    fixture = os.path.join(FIXTURES, "default_suite_skf.csv")
    df = select_metric(load_records(fixture), "skf")
    assert set(df["algo"]) <= {"bequp-link", "bequp-path", "uniform-link"}
    fig = build_figure(PlotSpec(input_csv=fixture, metric="skf"))
    assert len([ax for ax in fig.axes if ax.get_visible()]) == 4
