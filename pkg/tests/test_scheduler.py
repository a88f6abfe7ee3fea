from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from parkopt.errors import InvalidConfig, NoConvergence
from parkopt.experiment import bound_check
from parkopt.guard import bound_guard
from parkopt.model import ELECTRICITY, balance_residuals
from parkopt.scenario import iid_scenario
from parkopt.scheduler import (
    DualScheduler,
    SchedulerListener,
    SolverConfig,
    TrajectoryCsvStorage,
    TrajectoryMemoryStorage,
    init_lambda,
    run_horizon,
    run_slot,
    soc_from_lambda,
)


class RecordingListener(SchedulerListener):
    def __init__(self):
        self.started, self.closed, self.mini_slots = [], [], 0

    def slot_started(self, scheduler, slot):
        self.started.append(slot.t)

    def mini_slot(self, scheduler, n, tau, gradient):
        self.mini_slots += 1

    def slot_closed(self, scheduler, result):
        self.closed.append(result.t)


class TestSolverConfig:
    def test_from_settings(self, parkopt_application):
        """SolverConfig.from_settings: it should read the settings and keep
        overrides that are given.
        """
        parkopt_application.configure(PARKOPT_SIGMA=0.5)

        solver = SolverConfig.from_settings(rho=300, tolerance=None)

        assert solver.sigma == 0.5
        assert solver.rho == 300.0
        assert solver.tolerance == parkopt_application.PARKOPT_TOLERANCE

    @pytest.mark.parametrize(
        "changes,field",
        [
            ({"sigma": 0.0}, "sigma"),
            ({"tolerance": -1.0}, "tolerance"),
            ({"max_mini_slots": 0}, "max_mini_slots"),
            ({"rho": "fast"}, "rho"),
            ({"rho": -1.0}, "rho"),
            ({"prox": 0.0}, "prox"),
            ({"prox": "wide"}, "prox"),
            ({"lambda_reference": "min"}, "lambda_reference"),
        ],
    )
    def test_invalid(self, changes, field):
        """SolverConfig: it should reject invalid options."""
        with pytest.raises(InvalidConfig) as exc_info:
            SolverConfig(**changes)

        assert exc_info.value.field == field

    def test_auto_rho(self, park):
        """SolverConfig.resolve_rho: it should use the smallest stepsize
        keeping the multipliers bounded.
        """
        assert SolverConfig().resolve_rho(park, 700.0, 210.0) == pytest.approx(245.0)
        assert SolverConfig(rho=10.0).resolve_rho(park, 700.0, 210.0) == 10.0
        assert SolverConfig().resolve_rho(park, 500.0, 500.0) == 1e-6

    def test_auto_prox(self, park):
        """SolverConfig.resolve_prox: it should leave room for the steepest
        elastic response of a hub and carrier.
        """
        assert SolverConfig().resolve_prox(park) == pytest.approx(0.9 * (5.0 - 1.25))
        assert SolverConfig(prox=2).resolve_prox(park) == 2.0
        assert SolverConfig(sigma=1.0).resolve_prox(park) == pytest.approx(0.1)



class TestDualScheduler:
    @pytest.fixture
    def trajectory(self, park, day):
        return run_horizon(day, park, storage=TrajectoryMemoryStorage())

    def test_horizon(self, trajectory, day):
        """run_horizon: it should close every slot of the scenario."""
        assert len(trajectory) == len(day) == 24
        assert [r.t for r in trajectory.results] == list(range(24))
        assert trajectory.lambda_e.shape == (25, 2)
        assert trajectory.total_cost == pytest.approx(trajectory.costs.sum())
        assert np.all(trajectory.iterations >= 1)
        assert trajectory.rho == pytest.approx(245.0)

    def test_feasible(self, trajectory, park, day):
        """run_horizon: it should balance every slot of the sample day."""
        for result in trajectory.results:
            assert result.feasible
            assert balance_residuals(result.dispatch, day.slot(result.t), park).max_abs() <= 1e-6

    def test_frame(self, trajectory):
        """Trajectory.frame: it should hold one row per slot with
        multipliers, storage levels and trades.
        """
        frame = trajectory.frame()

        assert len(frame) == 24
        for column in (
            "t", "cost", "iterations", "lambda_ke_1", "lambda_kh_2",
            "B_1", "W_2", "E", "G", "E_o", "p",
        ):
            assert column in frame.columns
        np.testing.assert_allclose(frame["cost"], trajectory.costs)

    def test_storage_bounds(self, trajectory, park):
        """run_horizon: it should keep every multiplier in its interval and
        every store within capacity.
        """
        violations, margin = bound_check(trajectory, park)
        frame = trajectory.frame()

        assert violations == 0
        assert margin >= -1e-7
        assert bound_guard.violations == []
        for k, hub in enumerate(park.hubs, start=1):
            assert frame[f"B_{k}"].between(hub.b_min, hub.b_max).all()
            assert frame[f"W_{k}"].between(hub.w_min, hub.w_max).all()

    def test_shifting_conserves_load(self, trajectory, day):
        """run_horizon: it should serve all inelastic load within the
        horizon, shifted or not.
        """
        served = sum(
            r.dispatch.x_ki[:, :, ELECTRICITY].sum() for r in trajectory.results
        )

        assert served == pytest.approx(day.x_il.sum())
        assert any(r.dispatch.p > 0 for r in trajectory.results)
        assert trajectory.results[0].dispatch.p == 0.0
        assert trajectory.results[-1].dispatch.incentive == 0.0

    def test_destination_prices(self, trajectory):
        """DualScheduler: it should pay for shifted load at the price of
        the slot it moves to.
        """
        results = trajectory.results
        paid = [r for r in results if r.dispatch.incentive > 0]

        assert paid
        for r in paid:
            expected = sum(
                results[r.t + d].dispatch.p * r.outbound[:, i].sum()
                for i, d in enumerate(r.delays)
            )
            assert r.dispatch.incentive == pytest.approx(expected)
            np.testing.assert_allclose(
                r.prices, [results[r.t + d].dispatch.p for d in r.delays]
            )

    def test_random_scenario(self, park):
        """run_horizon: it should keep the storage multipliers bounded on
        a random scenario.
        """
        scenario = iid_scenario(72, seed=3)

        trajectory = run_horizon(scenario, park, storage=TrajectoryMemoryStorage())
        violations, _ = bound_check(trajectory, park)

        assert violations == 0
        assert bound_guard.violations == []
        soc = soc_from_lambda(trajectory.final_state, park)
        assert np.all(soc.b >= 0) and np.all(soc.b <= 4)

    def test_deterministic(self, park, day):
        """run_horizon: it should reproduce the same trajectory."""
        first = run_horizon(day.head(6), park, storage=TrajectoryMemoryStorage())
        second = run_horizon(day.head(6), park, storage=TrajectoryMemoryStorage())

        np.testing.assert_array_equal(first.costs, second.costs)
        np.testing.assert_array_equal(first.iterations, second.iterations)

    def test_ablations(self, park, day):
        """DualScheduler: it should drop storage, renewables or incentives
        for the matching ablation.
        """
        full = run_horizon(day, park, storage=TrajectoryMemoryStorage())
        no_storage = run_horizon(day, park, ablation="ta", storage=TrajectoryMemoryStorage())
        no_renewables = run_horizon(day, park, ablation="oa", storage=TrajectoryMemoryStorage())
        no_incentive = run_horizon(day, park, ablation="ca", storage=TrajectoryMemoryStorage())

        for d in no_storage.dispatches:
            assert np.all(d.c_e == 0) and np.all(d.d_h == 0)
        assert all(d.p == 0 for d in no_incentive.dispatches)
        assert all(np.all(d.shifted == 0) for d in no_incentive.dispatches)
        assert no_renewables.total_cost > full.total_cost

    def test_unknown_ablation(self, park):
        """DualScheduler: it should reject an unknown ablation."""
        with pytest.raises(InvalidConfig):
            DualScheduler(park, ablation="xx", listeners=[])

    def test_not_started(self, park, day):
        """DualScheduler.run_slot: it should need a started run."""
        scheduler = DualScheduler(park, listeners=[])

        with pytest.raises(InvalidConfig):
            scheduler.run_slot(day.slot(0))

    def test_mismatched_scenario(self, make_park, day):
        """DualScheduler.start: it should reject a scenario for another
        park.
        """
        scheduler = DualScheduler(make_park(n_hubs=1, n_users=2), listeners=[])

        with pytest.raises(InvalidConfig) as exc_info:
            scheduler.start(day)

        assert exc_info.value.field == "R"

    def test_run_slot_is_pure(self, park, day):
        """DualScheduler.run_slot: it should leave the scheduler state
        alone until the slot is closed.
        """
        scheduler = DualScheduler(park, listeners=[], storage=TrajectoryMemoryStorage())
        state = scheduler.start(day)

        first = scheduler.run_slot(day.slot(0))
        second = scheduler.run_slot(day.slot(0))

        assert scheduler.state is state
        assert first.cost == second.cost
        scheduler.close_slot(first)
        assert scheduler.state.t == 1
        assert len(scheduler.storage.rows) == 1

    def test_strict(self, park, day):
        """DualScheduler.run_slot: it should raise when the fast prices do
        not settle and the solver is strict.
        """
        solver = SolverConfig(max_mini_slots=1, strict=True)
        scheduler = DualScheduler(park, solver, listeners=[], storage=TrajectoryMemoryStorage())
        scheduler.start(day)

        with pytest.raises(NoConvergence) as exc_info:
            scheduler.run_slot(day.slot(0))

        assert exc_info.value.result.iterations == 1
        assert not exc_info.value.result.converged

    def test_lenient(self, park, day):
        """DualScheduler.run_slot: it should still return a balanced
        dispatch when the fast prices do not settle.
        """
        solver = SolverConfig(max_mini_slots=1)
        trajectory = run_horizon(day.head(3), park, solver, storage=TrajectoryMemoryStorage())

        assert not trajectory.converged.all()
        assert np.all(trajectory.iterations == 1)

    def test_feasibility_tolerance(self, park, day):
        """SlotResult.feasible: it should judge the residual with the
        solver's feasibility tolerance.
        """
        loose = SolverConfig(feasibility_tolerance=1e-3)
        scheduler = DualScheduler(park, loose, listeners=[], storage=TrajectoryMemoryStorage())
        scheduler.start(day)

        result = scheduler.run_slot(day.slot(0))

        assert result.feasibility_tolerance == 1e-3
        assert replace(result, residual=5e-4).feasible
        assert not replace(result, residual=5e-3).feasible
        strict = DualScheduler(park, SolverConfig(), listeners=[], storage=TrajectoryMemoryStorage())
        strict.start(day)
        assert not replace(strict.run_slot(day.slot(0)), residual=5e-4).feasible

    def test_listeners(self, park, day):

        """DualScheduler: it should notify listeners of every slot and
        mini-slot.
        """
        listener = RecordingListener()

        trajectory = run_horizon(
            day.head(4), park, listeners=[listener], storage=TrajectoryMemoryStorage()
        )

        assert listener.started == listener.closed == [0, 1, 2, 3]
        assert listener.mini_slots == trajectory.iterations.sum()

    def test_configured_listeners(self, parkopt_application, park, day):
        """DualScheduler: it should load listeners named in the settings."""
        parkopt_application.configure(
            PARKOPT_SCHEDULER_LISTENERS=["parkopt.scheduler.listeners.LoggingListener"]
        )

        scheduler = DualScheduler(park)

        assert [type(x).__name__ for x in scheduler.listeners] == ["LoggingListener"]

    def test_csv_storage(self, park, day, tmp_path):
        """TrajectoryCsvStorage: it should stream one row per slot."""
        path = tmp_path / "trajectory.csv"

        trajectory = run_horizon(
            day.head(3), park, storage=TrajectoryCsvStorage(str(path))
        )
        frame = pd.read_csv(path)

        assert list(frame["t"]) == [0, 1, 2]
        np.testing.assert_allclose(frame["cost"], trajectory.costs, rtol=1e-9)


class TestRunSlot:
    def test_single_slot(self, park, day):
        """run_slot: it should solve and close one slot from given
        multipliers.
        """
        ds = init_lambda(park, 245.0, 2.0, 700.0)

        dispatch, state, iterations = run_slot(ds, day.slot(0), park)

        assert iterations >= 1
        assert state.t == ds.t + 1
        np.testing.assert_allclose(
            state.lambda_e, ds.lambda_e + 245.0 * (dispatch.c_e - dispatch.d_e)
        )
        assert balance_residuals(dispatch, day.slot(0), park).max_abs() <= 1e-6
