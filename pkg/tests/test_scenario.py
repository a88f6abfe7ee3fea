import numpy as np
import pandas as pd
import pytest

from parkopt.errors import (
    IoError,
    NegativeValue,
    PriceOrderError,
    SchemaError,
    UnitError,
)
from parkopt.scenario import (
    iid_scenario,
    ingest_scenario,
    read_units,
    scenario_frame,
    series_from_frame,
    unit_factors,
)


class TestSampleScenario:
    def test_sample(self, day):
        """sample_scenario: it should read the bundled day in MWh and
        ¥/MWh.
        """
        assert len(day) == 24
        assert day.n_hubs == 2
        assert day.n_users == 2
        assert day.p_e[0] == pytest.approx(350.0)
        assert day.p_o[0] == pytest.approx(210.0)
        assert day.x_il[0, 0] == pytest.approx(1.5)
        assert day.h_load[0] == pytest.approx(4.0)
        assert np.all(day.p_o <= day.p_e)

    def test_slot(self, day):
        """ScenarioSeries.slot: it should pick one slot's values."""
        slot = day.slot(3)

        assert slot.t == 3
        assert slot.p_e == day.p_e[3]
        np.testing.assert_array_equal(slot.r, day.r[3])

    def test_head(self, day):
        """ScenarioSeries.head: it should keep the leading slots."""
        assert len(day.head(6)) == 6
        assert len(day.head(100)) == 24


class TestIngestScenario:
    @pytest.fixture
    def frame(self):
        return pd.DataFrame(
            {
                "t": [0, 1],
                "p_e": [600.0, 500.0],
                "p_g": [400.0, 400.0],
                "p_o": [300.0, 250.0],
                "R_1": [0.5, 1.0],
                "X_1": [1.0, 2.0],
                "H_load": [3.0, 3.5],
                "G_load": [1.0, 1.0],
            }
        )

    def write(self, tmp_path, frame, units=None):
        path = tmp_path / "scenario.csv"
        frame.to_csv(path, index=False)
        if units is not None:
            (tmp_path / "scenario.units.yaml").write_text(units, encoding="utf8")
        return str(path)

    def test_without_sidecar(self, tmp_path, frame):
        """ingest_scenario: it should read MWh and ¥/MWh without a
        sidecar.
        """
        scenario = ingest_scenario(self.write(tmp_path, frame))

        assert read_units(str(tmp_path / "scenario.csv")) == {"energy": "MWh", "price": "¥/MWh"}
        np.testing.assert_allclose(scenario.p_e, [600.0, 500.0])
        np.testing.assert_allclose(scenario.r[:, 0], [0.5, 1.0])

    def test_kwh_sidecar(self, tmp_path, frame):
        """ingest_scenario: it should convert kWh and ¥/kWh."""
        frame[["p_e", "p_g", "p_o"]] /= 1000.0
        frame[["R_1", "X_1", "H_load", "G_load"]] *= 1000.0
        path = self.write(tmp_path, frame, "energy: kWh\nprice: ¥/kWh\n")

        scenario = ingest_scenario(path)

        np.testing.assert_allclose(scenario.p_e, [600.0, 500.0])
        np.testing.assert_allclose(scenario.x_il[:, 0], [1.0, 2.0])
        np.testing.assert_allclose(scenario.g_load, [1.0, 1.0])

    def test_sorted_by_slot(self, frame):
        """series_from_frame: it should order rows by slot."""
        scenario = series_from_frame(frame.iloc[::-1])

        np.testing.assert_allclose(scenario.p_e, [600.0, 500.0])

    def test_frame_round_trip(self, frame):
        """scenario_frame: it should lay the series out as the CSV does."""
        scenario = series_from_frame(frame)

        pd.testing.assert_frame_equal(
            scenario_frame(scenario), frame, check_dtype=False
        )

    @pytest.mark.parametrize("column", ["p_o", "H_load", "R_1"])
    def test_missing_column(self, frame, column):
        """series_from_frame: it should name a missing column."""
        with pytest.raises(SchemaError) as exc_info:
            series_from_frame(frame.drop(columns=[column]))

        assert exc_info.value.column == column

    def test_gap_in_numbering(self, frame):
        """series_from_frame: it should need loads numbered from one."""
        with pytest.raises(SchemaError) as exc_info:
            series_from_frame(frame.rename(columns={"X_1": "X_2"}))

        assert exc_info.value.column == "X"

    def test_not_numeric(self, frame):
        """series_from_frame: it should reject text cells."""
        frame["p_g"] = ["cheap", "dear"]

        with pytest.raises(SchemaError) as exc_info:
            series_from_frame(frame)

        assert exc_info.value.column == "p_g"

    def test_empty_cell(self, frame):
        """series_from_frame: it should reject empty cells."""
        frame.loc[1, "H_load"] = np.nan

        with pytest.raises(SchemaError):
            series_from_frame(frame)

    def test_crossed_prices(self, frame):
        """series_from_frame: it should name the slot selling above the
        buying price.
        """
        frame.loc[1, "p_o"] = 550.0

        with pytest.raises(PriceOrderError) as exc_info:
            series_from_frame(frame)

        assert exc_info.value.slot == 1

    def test_negative(self, frame):
        """series_from_frame: it should reject negative quantities."""
        frame.loc[0, "X_1"] = -1.0

        with pytest.raises(NegativeValue) as exc_info:
            series_from_frame(frame)

        assert exc_info.value.column == "x_il"
        assert exc_info.value.slot == 0

    def test_unknown_unit(self, tmp_path, frame):
        """ingest_scenario: it should reject an unknown unit."""
        path = self.write(tmp_path, frame, "energy: GJ\nprice: ¥/MWh\n")

        with pytest.raises(UnitError):
            ingest_scenario(path)

    def test_missing_file(self, tmp_path):
        """ingest_scenario: it should report a missing file."""
        with pytest.raises(IoError):
            ingest_scenario(str(tmp_path / "nowhere.csv"))

    def test_unit_factors(self):
        """unit_factors: it should convert to MWh and ¥/MWh."""
        assert unit_factors({"energy": "kWh", "price": "¥/kWh"}) == (1e-3, 1e3)
        assert unit_factors({"energy": "MWh", "price": "CNY / MWh"}) == (1.0, 1.0)

        with pytest.raises(UnitError):
            unit_factors({"energy": "MWh", "price": "¥"})


class TestIidScenario:
    def test_deterministic(self):
        """iid_scenario: it should draw the same series for a seed."""
        first = iid_scenario(10, seed=4)
        second = iid_scenario(10, seed=4)
        other = iid_scenario(10, seed=5)

        np.testing.assert_array_equal(first.p_e, second.p_e)
        np.testing.assert_array_equal(first.r, second.r)
        assert not np.array_equal(first.p_e, other.p_e)

    def test_ranges(self):
        """iid_scenario: it should keep draws within their ranges."""
        scenario = iid_scenario(200, n_hubs=3, n_users=1, seed=1)

        assert scenario.r.shape == (200, 3)
        assert scenario.x_il.shape == (200, 1)
        assert np.all((scenario.p_e >= 350.0) & (scenario.p_e <= 700.0))
        np.testing.assert_allclose(scenario.p_o, 0.6 * scenario.p_e)
        assert np.all(scenario.r <= 1.9)

    def test_invalid(self):
        """iid_scenario: it should need a slot and a ratio of at least one."""
        with pytest.raises(SchemaError):
            iid_scenario(0)
        with pytest.raises(SchemaError):
            iid_scenario(5, price_ratio=0.5)

    def test_transforms(self):
        """ScenarioSeries: it should rescale renewables and reprice sales."""
        scenario = iid_scenario(5, seed=2)

        np.testing.assert_allclose(scenario.with_renewable_scale(2.0).r, 2.0 * scenario.r)
        np.testing.assert_allclose(scenario.with_price_ratio(2.0).p_o, scenario.p_e / 2.0)
