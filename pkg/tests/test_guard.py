from dataclasses import replace

import numpy as np
import pytest

from parkopt.errors import InvariantBroken
from parkopt.guard import bound_guard, patch
from parkopt.model import SlotData
from parkopt.scheduler import (
    DualScheduler,
    SchedulerListener,
    TrajectoryMemoryStorage,
)
from parkopt.scheduler.subproblems import HubAgent, StorageCaps


class ViolationListener(SchedulerListener):
    def __init__(self):
        self.descriptions = []

    def bound_violation(self, scheduler, description):
        self.descriptions.append(description)


class TestPatch:
    def test_patched(self):
        """patch: it should wrap slot closing and hub responses."""
        assert hasattr(DualScheduler.close_slot, "__wrapped__")
        assert hasattr(HubAgent.respond, "__wrapped__")

    def test_idempotent(self):
        """patch: it should not wrap twice."""
        patch()
        patch()

        assert not hasattr(DualScheduler.close_slot.__wrapped__, "__wrapped__")
        assert not hasattr(HubAgent.respond.__wrapped__, "__wrapped__")


class TestBoundGuard:
    @pytest.fixture
    def scheduler(self, park, day):
        listener = ViolationListener()
        scheduler = DualScheduler(
            park, listeners=[listener], storage=TrajectoryMemoryStorage()
        )
        scheduler.start(day)
        return scheduler

    def push_out(self, scheduler):
        """
        Moves the first battery multiplier past the top of its interval.
        """
        state = scheduler.state
        lambda_e = state.lambda_e.copy()
        lambda_e[0] += 4.0 * state.rho
        scheduler.state = state.replace(lambda_e=lambda_e)

    def test_clean_slot(self, scheduler, day):
        """checked_close: it should stay quiet while the multipliers keep
        their intervals.
        """
        scheduler.close_slot(scheduler.run_slot(day.slot(0)))

        assert bound_guard.violations == []

    def test_reports_violation(self, scheduler, day):
        """checked_close: it should record, log and forward a multiplier
        that left its interval.
        """
        result = scheduler.run_slot(day.slot(0))
        self.push_out(scheduler)

        scheduler.close_slot(result)

        assert len(bound_guard.violations) == 1
        assert "[hub 0] lambda_e=" in bound_guard.violations[0]
        assert "after slot 0" in bound_guard.violations[0]
        assert scheduler.listeners[0].descriptions == bound_guard.violations

    def test_strict(self, parkopt_application, scheduler, day):
        """checked_close: it should raise when the guard is strict."""
        parkopt_application.configure(PARKOPT_GUARD_STRICT=True)
        result = scheduler.run_slot(day.slot(0))
        self.push_out(scheduler)

        with pytest.raises(InvariantBroken):
            scheduler.close_slot(result)

    def test_reset(self, scheduler, day):
        """BoundGuard.reset: it should forget recorded violations."""
        result = scheduler.run_slot(day.slot(0))
        self.push_out(scheduler)
        scheduler.close_slot(result)

        bound_guard.reset()

        assert bound_guard.violations == []


class TestResponseGuard:
    @pytest.fixture
    def agent(self, park):
        return HubAgent.for_park(park)[0]

    @pytest.fixture
    def slot(self):
        return SlotData(
            t=5, p_e=600.0, p_g=400.0, p_o=300.0,
            r=np.zeros(2), x_il=np.zeros(2), h_load=0.0, g_load=0.0,
        )

    def test_thresholds_hold(self, agent, slot):
        """checked_response: it should accept responses that run storage
        flat out past the thresholds.
        """
        caps = StorageCaps.of(agent.params)
        for lambda_e, lambda_h in ((-200.0, 50.0), (-650.0, -600.0), (-400.0, -100.0)):
            agent.respond(np.array([450.0, 300.0]), lambda_e, lambda_h, slot, caps)

        assert bound_guard.violations == []

    def test_clipped_caps_hold(self, agent, slot):
        """checked_response: it should accept responses that run storage
        at caps clipped by the state of charge.
        """
        caps = StorageCaps(0.5, 0.5, 0.5, 0.5)

        response = agent.respond(np.array([450.0, 300.0]), -200.0, 50.0, slot, caps)
        agent.respond(
            np.array([450.0, 300.0]), -200.0, 50.0, slot, caps,
            center=np.zeros(2), prox=1.0,
        )

        assert response.d_e == pytest.approx(0.5)
        assert bound_guard.violations == []

    def test_clipped_cap_missed(self, agent, slot):
        """checked_response: it should report storage left short of a
        clipped cap.
        """
        caps = StorageCaps(0.5, 0.5, 0.5, 0.5)
        honest = agent.respond(np.array([450.0, 300.0]), -200.0, 50.0, slot, caps)
        short = replace(honest, d_e=0.2)

        bound_guard.checked_response(
            lambda *args, **kwargs: short,
            agent,
            (np.array([450.0, 300.0]), -200.0, 50.0, slot, caps),
            {},
        )

        assert len(bound_guard.violations) == 1
        assert "D_e=0.2" in bound_guard.violations[0]
        assert "should be at its cap 0.5" in bound_guard.violations[0]
