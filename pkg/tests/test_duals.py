import math
from dataclasses import replace

import numpy as np
import pytest

from parkopt.errors import InvalidConfig, InvariantBroken
from parkopt.model import ELECTRICITY, HEAT, Dispatch, HubParams, SlotData
from parkopt.scheduler.duals import (
    gap_bound,
    init_lambda,
    multiplier_interval,
    momentum_combine,
    rho_min,
    soc_from_lambda,
    tau_band,
    tau_gradient,
    tau_gradients,
    tau_step,
    theta_update,
    update_lambda,
    virtual_soc,
)


class TestSlowMultipliers:
    def test_rho_min(self, make_park):
        """rho_min: it should divide the price spread by the battery
        headroom.
        """
        cfg = make_park(n_hubs=2)

        assert rho_min(cfg, 700.0, 300.0) == pytest.approx(200.0)

    def test_rho_min_takes_worst_hub(self, make_park):
        """rho_min: it should take the hub with the least headroom."""
        cfg = make_park(n_hubs=1)
        small = make_park(n_hubs=1, hub=HubParams(b_max=3.0, b_init=1.5))
        both = make_park(n_hubs=2, hubs=[HubParams(), HubParams(b_max=3.0, b_init=1.5)])

        assert rho_min(small, 700.0, 300.0) == pytest.approx(400.0)
        assert rho_min(both, 700.0, 300.0) == pytest.approx(400.0)
        assert rho_min(cfg, 700.0, 300.0) == pytest.approx(200.0)

    def test_init_places_virtual_soc(self, make_park):
        """init_lambda: it should place the virtual state of charge at the
        initial one.
        """
        cfg = make_park(n_hubs=2)

        ds = init_lambda(cfg, 250.0, [1.0, 3.0], 600.0, w0=[0.5, 2.5])
        b, w = virtual_soc(ds, cfg)

        np.testing.assert_allclose(b, [1.0, 3.0])
        np.testing.assert_allclose(w, [0.5, 2.5])
        np.testing.assert_allclose(ds.lambda_e, 250.0 * np.array([1.0, 3.0]) - 600.0 - 250.0)
        assert np.all(ds.tau == 0)

    def test_init_rejects_soc(self, make_park):
        """init_lambda: it should reject a state of charge out of range."""
        with pytest.raises(InvalidConfig):
            init_lambda(make_park(), 200.0, 5.0, 600.0)

    def test_update(self, make_park):
        """update_lambda: it should move by rho times charge minus
        discharge.
        """
        cfg = make_park()
        ds = init_lambda(cfg, 200.0, 2.0, 600.0)
        d = Dispatch.zeros(1, 1, 0)
        d.c_e[0] = 0.5
        d.d_h[0] = 0.25

        new = update_lambda(ds, d)

        assert new.lambda_e[0] == pytest.approx(ds.lambda_e[0] + 100.0)
        assert new.lambda_h[0] == pytest.approx(ds.lambda_h[0] - 50.0)
        assert new.t == ds.t + 1

    def test_soc_round_trip(self, make_park):
        """soc_from_lambda: it should follow the net charge of the slots
        the multipliers have seen.
        """
        cfg = make_park()
        ds = init_lambda(cfg, 200.0, 2.0, 600.0)
        d = Dispatch.zeros(1, 1, 0)
        d.c_e[0] = 1.0
        d.c_h[0] = 0.5

        for _ in range(2):
            ds = update_lambda(ds, d)
        soc = soc_from_lambda(ds, cfg)

        assert soc.b[0] == pytest.approx(4.0)
        assert soc.w[0] == pytest.approx(3.0)

    def test_soc_out_of_range(self, make_park):
        """soc_from_lambda: it should refuse multipliers whose state of
        charge leaves the capacity range.
        """
        cfg = make_park()
        ds = init_lambda(cfg, 200.0, 2.0, 600.0)

        with pytest.raises(InvariantBroken):
            soc_from_lambda(ds.replace(lambda_e=ds.lambda_e + 1000.0), cfg)

    def test_interval_matches_capacity(self, make_park):
        """multiplier_interval: it should map onto the capacity range through
        the virtual state of charge.
        """
        cfg = make_park()
        hub = cfg.hubs[0]
        ds = init_lambda(cfg, 300.0, 2.0, 700.0)
        battery, tank = multiplier_interval(300.0, hub, 700.0)

        for lam_e, lam_h, b_expected, w_expected in (
            (battery[0], tank[0], hub.b_min, hub.w_min),
            (battery[1], tank[1], hub.b_max, hub.w_max),
        ):
            b, w = virtual_soc(
                ds.replace(lambda_e=np.array([lam_e]), lambda_h=np.array([lam_h])), cfg
            )
            assert b[0] == pytest.approx(b_expected)
            assert w[0] == pytest.approx(w_expected)

    def test_battery_interval_invariant(self):
        """multiplier_interval: it should hold the battery multiplier after
        any slot in which the battery obeys its thresholds.
        """
        hub = HubParams()
        p_e_max, p_o_min = 700.0, 300.0
        rho = (p_e_max - p_o_min) / hub.battery_headroom
        (low, high), _ = multiplier_interval(rho, hub, p_e_max)
        rng = np.random.default_rng(11)

        for _ in range(2000):
            p_o = rng.uniform(p_o_min, 600.0)
            p_e = rng.uniform(p_o, p_e_max)
            lam = rng.uniform(low, high)
            if lam > -p_o:
                c, d = 0.0, hub.d_e_max
            elif lam < -p_e:
                c, d = hub.c_e_max, 0.0
            else:
                c, d = rng.uniform(0, hub.c_e_max), rng.uniform(0, hub.d_e_max)
            new = lam + rho * (c - d)
            assert low - 1e-9 <= new <= high + 1e-9

    def test_validation(self, make_park):
        """virtual_soc: it should need a positive stepsize."""
        cfg = make_park()
        ds = init_lambda(cfg, 200.0, 2.0, 600.0)

        with pytest.raises(InvalidConfig):
            virtual_soc(ds.replace(rho=0.0), cfg)


class TestFastMultipliers:
    def test_theta(self):
        """theta_update: it should grow by the accelerated recursion."""
        assert theta_update(1.0) == pytest.approx((1.0 + math.sqrt(5.0)) / 2.0)
        thetas = [1.0]
        for _ in range(20):
            thetas.append(theta_update(thetas[-1]))
        assert np.all(np.diff(thetas) > 0.5)

    def test_momentum(self):
        """momentum_combine: it should ignore the previous point on the
        first step and extrapolate afterwards.
        """
        tau = np.array([[2.0, 1.0]])
        prev = np.array([[1.0, 1.0]])

        np.testing.assert_allclose(momentum_combine(tau, prev, theta_update(1.0), 1.0), tau)

        theta_prev = theta_update(1.0)
        theta = theta_update(theta_prev)
        combined = momentum_combine(tau, prev, theta, theta_prev)
        assert combined[0, 0] > 2.0
        assert combined[0, 1] == pytest.approx(1.0)

    def test_gradients(self):
        """tau_gradients: it should measure demand minus supply per hub."""
        d = Dispatch.zeros(2, 1, 1)
        d.x_ki[0, 0, ELECTRICITY] = 3.0
        d.x_kq[0, 0, HEAT] = 1.0
        d.x[0, ELECTRICITY] = 2.0
        d.x[1, HEAT] = 0.5

        grad = tau_gradients(d)

        np.testing.assert_allclose(grad, [[1.0, 1.0], [0.0, -0.5]])
        assert tau_gradient(d, 1, HEAT) == -0.5

    def test_step(self):
        """tau_step: it should raise the price where demand exceeds supply."""
        np.testing.assert_allclose(tau_step([[500.0, 100.0]], [[2.0, -1.0]], 0.5), [[501.0, 99.5]])

    def test_band(self, make_park):
        """tau_band: it should run from the selling to the buying price
        for electricity and up to the dearer of boiler and CHP heat.
        """
        cfg = make_park(n_hubs=2)
        slot = SlotData(
            t=0, p_e=600.0, p_g=340.0, p_o=300.0,
            r=np.zeros(2), x_il=np.zeros(1), h_load=0.0, g_load=0.0,
        )

        low, high = tau_band(slot, cfg)

        np.testing.assert_allclose(low, [[300.0, 0.0], [300.0, 0.0]])
        np.testing.assert_allclose(high, [[600.0, 522.2222222], [600.0, 522.2222222]])

        cheap_gas = tau_band(replace(slot, p_g=34.0), cfg)[1]
        np.testing.assert_allclose(cheap_gas[:, HEAT], [40.0, 40.0])

    def test_gap_bound(self, make_park):
        """gap_bound: it should grow linearly in rho."""
        cfg = make_park(n_hubs=2)

        assert gap_bound(200.0, cfg) == pytest.approx(400.0)
        assert gap_bound(400.0, cfg) == pytest.approx(2 * gap_bound(200.0, cfg))
