import json
import math

import numpy as np
import pytest

from newsvendor_ci import experiments
from newsvendor_ci.errors import DomainError
from newsvendor_ci.nvcore import Binomial, Exponential, Poisson


def test_fixture_reports_list_every_comparison():
    report = experiments.run_fixture("poisson_5_4")
    assert report.passed
    names = [c.metric for c in report.comparisons]
    assert "candidate_set" in names and "bayes_cost" in names
    assert json.loads(report.to_json())["experiment"] == "poisson_5_4"
    assert "[PASS] c_lb" in report.to_text()


def test_fixture_mismatch_names_the_metric():
    with pytest.raises(experiments.FixtureMismatch, match="q29_upper"):
        experiments.run_fixture("binomial_4_4", raise_on_failure=True)
    with pytest.raises(DomainError):
        experiments.run_fixture("gamma_9_9")


def test_report_rejects_non_finite_metrics():
    with pytest.raises(ValueError):
        experiments.ExperimentReport("x", {}, {"bad": math.nan})


def test_block_streams_are_distinct_and_reproducible():
    a = experiments.block_generator(7, 0).random(5)
    b = experiments.block_generator(7, 1).random(5)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, experiments.block_generator(7, 0).random(5))


@pytest.mark.parametrize("family, theta", [(Binomial(50), 0.5), (Poisson(), 50.0), (Exponential(), 0.02)])
def test_coverage_is_deterministic_and_worker_independent(family, theta):
    serial = experiments.coverage_study(family, theta, 10, 0.9, 2000, 123)
    again = experiments.coverage_study(family, theta, 10, 0.9, 2000, 123)
    parallel = experiments.coverage_study(family, theta, 10, 0.9, 2000, 123, workers=2)
    assert serial.metrics == again.metrics == parallel.metrics
    assert serial.replications == 2000 and serial.seed == 123
    assert set(serial.standard_errors) >= {"parameter_coverage", "candidate_coverage", "cost_coverage"}
    assert serial.metrics["implication_violation_rate"] == 0
    other = experiments.coverage_study(family, theta, 10, 0.9, 2000, 124)
    assert other.metrics != serial.metrics


def test_coverage_grows_with_confidence_level():
    lo = experiments.coverage_study(Binomial(50), 0.5, 10, 0.9, 3000, 5)
    hi = experiments.coverage_study(Binomial(50), 0.5, 10, 0.99, 3000, 5)
    assert hi.metrics["parameter_coverage"] >= lo.metrics["parameter_coverage"]


def test_coverage_needs_enough_replications():
    with pytest.raises(DomainError):
        experiments.coverage_study(Poisson(), 5.0, 10, 0.9, 999, 1)


def test_neyman_demo_small_run_tracks_large_run():
    big = experiments.neyman_bias_demo(100_000, 2024)
    small = experiments.neyman_bias_demo(10_000, 99)
    assert abs(big.metrics["bayes_mean_probability"] - small.metrics["bayes_mean_probability"]) < 0.02
    assert big.standard_errors["bayes_mean_probability"] > 0
    with pytest.raises(DomainError):
        experiments.neyman_bias_demo(9_999, 1)


def test_surface_dump_writes_csv(tmp_path):
    path = experiments.surface_dump("exponential_6_3", 50, 50, tmp_path / "s.csv")
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "theta,Q,expected_cost"
    assert len(lines) == 2501
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    assert np.all(np.diff(rows[:, 0]) >= 0)
    corner = rows[(rows[:, 0] == rows[:, 0].max()) & (rows[:, 1] == rows[:, 1].min())]
    assert corner[0, 2] == pytest.approx(38.86, abs=1e-2)


def test_surface_dump_reports_path_on_io_error(tmp_path):
    with pytest.raises(OSError, match="missing"):
        experiments.surface_dump("binomial_4_4", 5, 5, tmp_path / "missing" / "s.csv")


def test_prior_calibration_selects_uniform():
    result = experiments.calibrate_hill_prior()
    assert result["selected"] == "uniform"
    assert not all(r["passed"] for r in result["candidates"]["scale-invariant"].values())


def test_every_monte_carlo_metric_has_a_standard_error():
    for report in (
        experiments.coverage_study(Binomial(20), 0.3, 5, 0.9, 1000, 1),
        experiments.neyman_bias_demo(10_000, 1),
    ):
        assert set(report.standard_errors) == set(report.metrics)
        assert report.replications > 0 and report.seed is not None
