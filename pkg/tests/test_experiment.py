import json
import os

import numpy as np
import pytest

from parkopt.errors import InvalidConfig
from parkopt.experiment import (
    Experiment,
    cdf_at,
    compare_modes,
    emit_report,
    iteration_cdf,
    run_experiment,
    run_sweep,
)


class TestIterationCdf:
    def test_cdf(self):
        """iteration_cdf: it should pair each count with the share of
        slots settled within it.
        """
        assert iteration_cdf([5, 1, 2, 1]) == [(1, 0.5), (2, 0.75), (5, 1.0)]
        assert iteration_cdf([]) == []

    def test_cdf_at(self):
        """cdf_at: it should be a nondecreasing step function ending at
        one.
        """
        fractions = cdf_at([5, 1, 2, 1], [0, 1, 3, 5, 100])

        np.testing.assert_allclose(fractions, [0.0, 0.5, 0.75, 1.0, 1.0])
        assert np.all(np.diff(fractions) >= 0)


class TestExperiment:
    @pytest.mark.parametrize(
        "changes,field",
        [
            ({"mode": "slow"}, "mode"),
            ({"ablation": "zz"}, "ablation"),
            ({"sweep": ("tolerance", (0.1,))}, "sweep"),
            ({"sweep": ("price_ratio", (0.5,))}, "price_ratio"),
            ({"sweep": ("sigma", ("nan",))}, "sigma"),
        ],
    )
    def test_invalid(self, changes, field):
        """Experiment: it should reject unknown options and sweeps."""
        with pytest.raises(InvalidConfig) as exc_info:
            Experiment("bad", **changes)

        assert exc_info.value.field == field

    def test_expand(self):
        """Experiment.expand: it should make one experiment per value."""
        experiments = Experiment("base", sweep=("rho", [200, "auto"])).expand()

        assert [e.name for e in experiments] == ["base-rho=200", "base-rho=auto"]
        assert experiments[0].rho == 200.0
        assert experiments[1].rho == "auto"
        assert all(e.sweep is None for e in experiments)

    def test_expand_scenario_sweep(self):
        """Experiment.expand: it should keep scenario sweeps for loading."""
        experiments = Experiment("base", sweep=("price_ratio", (1.0, 2.0))).expand()

        assert [e.sweep for e in experiments] == [
            ("price_ratio", (1.0,)),
            ("price_ratio", (2.0,)),
        ]
        _, scenario = experiments[1].load()
        np.testing.assert_allclose(scenario.p_o, scenario.p_e / 2.0)

    def test_no_sweep(self):
        """Experiment.expand: it should return itself without a sweep."""
        e = Experiment("single")

        assert e.expand() == [e]

    def test_iid_load(self):
        """Experiment.load: it should draw a scenario matching the park."""
        cfg, scenario = Experiment("iid", scenario="iid:12", seed=3).load()

        assert len(scenario) == 12
        assert scenario.n_hubs == cfg.n_hubs
        assert scenario.n_users == cfg.n_users


class TestRunExperiment:
    @pytest.fixture
    def report(self):
        return run_experiment(Experiment("sample"))

    def test_report(self, report):
        """run_experiment: it should total the slot costs of the day."""
        assert report.name == "sample"
        assert report.mode == "fast"
        assert report.ablation == "full"
        assert len(report.costs) == 24
        assert report.total_cost == pytest.approx(report.costs.sum())
        assert report.bound_violations == 0
        assert report.infeasible_slots == 0
        assert report.cdf[-1][1] == 1.0

    def test_summary(self, report):
        """Report.summary: it should hold plain values only."""
        summary = report.summary()

        assert summary["slots"] == 24
        assert summary["total_cost"] == report.total_cost
        json.dumps(summary)

    def test_deterministic(self, report):
        """run_experiment: it should reproduce a report."""
        again = run_experiment(Experiment("sample"))

        np.testing.assert_array_equal(again.costs, report.costs)
        np.testing.assert_array_equal(again.iterations, report.iterations)

    def test_unexpanded_sweep(self):
        """run_experiment: it should refuse a sweep of several values."""
        with pytest.raises(InvalidConfig):
            run_experiment(Experiment("sweep", sweep=("sigma", (0.1, 0.2))))

    def test_sweep_order(self):
        """run_sweep: it should return reports in sweep order."""
        e = Experiment("ab", scenario="iid:6", sweep=("ablation", ("ta", "full", "ca")))

        reports = run_sweep(e, threads=3)

        assert [r.ablation for r in reports] == ["ta", "full", "ca"]
        assert [r.name for r in reports] == ["ab-ablation=ta", "ab-ablation=full", "ab-ablation=ca"]


class TestCompareModes:
    def test_pairs(self, park, day):
        """compare_modes: it should count mini-slots of both modes for
        every slot.
        """
        fast, plain = compare_modes(day.head(6), park)

        assert fast.shape == plain.shape == (6,)
        assert np.all(fast >= 1)
        assert np.all(plain >= 1)


class TestEmitReport:
    @pytest.fixture
    def reports(self):
        e = Experiment("short", scenario="iid:4", sweep=("mode", ("fast", "plain")))
        return run_sweep(e, threads=1)

    def test_csv(self, reports, tmp_path):
        """emit_report: it should write a cost table, trajectories, CDFs
        and a manifest.
        """
        written = emit_report(reports, str(tmp_path), "csv")

        names = [os.path.basename(p) for p in written]
        assert names == [
            "costs.csv",
            "short-mode=fast_trajectory.csv",
            "short-mode=fast_cdf.csv",
            "short-mode=plain_trajectory.csv",
            "short-mode=plain_cdf.csv",
            "manifest.json",
        ]
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest == {"files": names[:-1]}

    def test_byte_stable(self, reports, tmp_path):
        """emit_report: it should write the same bytes for the same
        reports.
        """
        first = emit_report(reports, str(tmp_path / "a"), "csv")
        second = emit_report(reports, str(tmp_path / "b"), "csv")

        for x, y in zip(first, second):
            with open(x, "rb") as f, open(y, "rb") as g:
                assert f.read() == g.read()

    def test_json(self, reports, tmp_path):
        """emit_report: it should write one summary file in json."""
        written = emit_report(reports, str(tmp_path), "json")

        assert [os.path.basename(p) for p in written] == ["summary.json", "manifest.json"]
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert [s["mode"] for s in summary] == ["fast", "plain"]
        assert len(summary[0]["costs"]) == 4

    def test_empty(self, tmp_path):
        """emit_report: it should still write a manifest without reports."""
        written = emit_report([], str(tmp_path), "csv")

        assert written == [str(tmp_path / "manifest.json")]
        assert json.loads((tmp_path / "manifest.json").read_text()) == {"files": []}

    def test_unknown_format(self, tmp_path):
        """emit_report: it should reject an unknown format."""
        with pytest.raises(InvalidConfig):
            emit_report([], str(tmp_path), "xml")

    def test_default_format(self, parkopt_application, reports, tmp_path):
        """emit_report: it should fall back to the configured format."""
        parkopt_application.configure(PARKOPT_OUTPUT_FORMAT="json")

        written = emit_report(reports, str(tmp_path))

        assert os.path.basename(written[0]) == "summary.json"
