"""
Multiplier arithmetic of the two-timescale scheduler.

The slow multipliers :code:`lambda_e` and :code:`lambda_h` price the
time-average charge equals discharge constraint of every battery and
tank and move once per slot.  The fast multipliers :code:`tau` price
each hub's electricity and heat balance and move once per mini-slot.
"""
import math
from dataclasses import dataclass, replace
from typing import Dict, Tuple

import numpy as np

from parkopt.errors import InvalidConfig, InvariantBroken
from parkopt.model import (
    ELECTRICITY,
    HEAT,
    Dispatch,
    HubParams,
    ParkConfig,
    StorageState,
)


@dataclass(frozen=True, eq=False)
class DualState:
    """
    :code:`tau` and :code:`tau_prev` are indexed (hub, energy).
    :code:`p_e_max` is the electricity price the battery multipliers
    were initialized against.
    """

    lambda_e: np.ndarray
    lambda_h: np.ndarray
    rho: float
    tau: np.ndarray
    tau_prev: np.ndarray
    theta: float = 1.0
    theta_prev: float = 1.0
    sigma: float = 0.2
    n: int = 0
    t: int = 0
    p_e_max: float = 0.0

    @property
    def n_hubs(self) -> int:
        return len(self.lambda_e)

    def replace(self, **changes) -> "DualState":
        return replace(self, **changes)


def rho_min(cfg: ParkConfig, p_e_max: float, p_o_min: float) -> float:
    """
    Smallest slow stepsize that keeps every storage multiplier inside
    its bounded interval.
    """
    ratios = []
    for k, hub in enumerate(cfg.hubs):
        if hub.battery_headroom <= 0:
            raise InvalidConfig(
                "b_max - b_min - d_e_max - c_e_max must be positive",
                field=f"hubs[{k}]",
            )
        ratios.append((p_e_max - p_o_min) / hub.battery_headroom)
    return max(ratios)


def init_lambda(
    cfg: ParkConfig,
    rho: float,
    b0,
    p_e_0: float,
    w0=None,
    sigma: float = 0.2,
    p_e_max: float = None,
) -> DualState:
    """
    Initial multipliers for stepsize `rho`, initial state of charge
    `b0` and reference price `p_e_0`.  Tank multipliers use the same
    affine map as the batteries with no price offset.  `p_e_max`
    defaults to `p_e_0`, which places the virtual battery state of
    charge exactly at `b0`.
    """
    b_min = np.array([h.b_min for h in cfg.hubs])
    b_max = np.array([h.b_max for h in cfg.hubs])
    d_e = np.array([h.d_e_max for h in cfg.hubs])
    w_min = np.array([h.w_min for h in cfg.hubs])
    d_h = np.array([h.d_h_max for h in cfg.hubs])

    b0 = np.broadcast_to(np.asarray(b0, dtype=float), b_min.shape).copy()
    if w0 is None:
        w0 = np.array([h.w_init for h in cfg.hubs])
    w0 = np.broadcast_to(np.asarray(w0, dtype=float), w_min.shape).copy()

    if np.any(b0 < b_min) or np.any(b0 > b_max):
        raise InvalidConfig("outside [b_min, b_max]", field="b_init")

    tau = np.zeros((cfg.n_hubs, 2))
    return DualState(
        lambda_e=rho * b0 - rho * b_min - p_e_0 - rho * d_e,
        lambda_h=rho * (w0 - w_min - d_h),
        rho=float(rho),
        tau=tau,
        tau_prev=tau.copy(),
        sigma=sigma,
        p_e_max=float(p_e_0 if p_e_max is None else p_e_max),
    )


def update_lambda(ds: DualState, d: Dispatch) -> DualState:
    return ds.replace(
        lambda_e=ds.lambda_e + ds.rho * (d.c_e - d.d_e),
        lambda_h=ds.lambda_h + ds.rho * (d.c_h - d.d_h),
        t=ds.t + 1,
    )


def virtual_soc(ds: DualState, cfg: ParkConfig) -> Tuple[np.ndarray, np.ndarray]:
    if ds.rho <= 0:
        raise InvalidConfig("the state of charge map needs rho > 0", field="rho")
    b_min = np.array([h.b_min for h in cfg.hubs])
    d_e = np.array([h.d_e_max for h in cfg.hubs])
    w_min = np.array([h.w_min for h in cfg.hubs])
    d_h = np.array([h.d_h_max for h in cfg.hubs])
    b = (ds.lambda_e + ds.p_e_max) / ds.rho + b_min + d_e
    w = ds.lambda_h / ds.rho + w_min + d_h
    return b, w


def soc_from_lambda(
    ds: DualState, cfg: ParkConfig, tolerance: float = 1e-7
) -> StorageState:
    """
    State of charge implied by the slow multipliers.

    :raises InvariantBroken: if it leaves the storage capacity range.
    """
    b, w = virtual_soc(ds, cfg)
    for k, hub in enumerate(cfg.hubs):
        if not hub.b_min - tolerance <= b[k] <= hub.b_max + tolerance:
            raise InvariantBroken(
                f"hub {k} battery multiplier {ds.lambda_e[k]} implies "
                f"{b[k]} MWh, outside [{hub.b_min}, {hub.b_max}]"
            )
        if not hub.w_min - tolerance <= w[k] <= hub.w_max + tolerance:
            raise InvariantBroken(
                f"hub {k} tank multiplier {ds.lambda_h[k]} implies "
                f"{w[k]} MWh, outside [{hub.w_min}, {hub.w_max}]"
            )
    b_min = np.array([h.b_min for h in cfg.hubs])
    b_max = np.array([h.b_max for h in cfg.hubs])
    w_min = np.array([h.w_min for h in cfg.hubs])
    w_max = np.array([h.w_max for h in cfg.hubs])
    return StorageState(b=np.clip(b, b_min, b_max), w=np.clip(w, w_min, w_max))


def multiplier_interval(
    rho: float, params: HubParams, p_e_max: float
) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """
    Intervals the battery and tank multipliers of one hub stay in when
    :code:`rho >= rho_min`.
    """
    battery = (
        -p_e_max - rho * params.d_e_max,
        rho * (params.b_max - params.b_min) - p_e_max - rho * params.d_e_max,
    )
    tank = (
        -rho * params.d_h_max,
        rho * (params.w_max - params.w_min) - rho * params.d_h_max,
    )
    return battery, tank


def storage_thresholds(
    p_e: float, p_o: float, p_g: float, tau_h: float, params: HubParams
) -> Dict[str, float]:
    """
    Multiplier levels past which a hub's storage must run flat out:
    above the discharge thresholds it discharges at its limit, below
    the charge thresholds it charges at its limit.
    """
    return {
        "battery_discharge": -p_o,
        "battery_charge": -p_e,
        "tank_discharge": 0.0,
        "tank_charge": -max(p_g / params.eta_bg, tau_h),
    }


def theta_update(theta_prev: float) -> float:
    return (1.0 + math.sqrt(1.0 + 4.0 * theta_prev ** 2)) / 2.0


def momentum_combine(tau, tau_prev, theta: float, theta_prev: float):
    eps = (1.0 - theta_prev) / theta
    return (1.0 - eps) * np.asarray(tau) + eps * np.asarray(tau_prev)


def tau_gradient(d: Dispatch, hub: int, energy: int) -> float:
    """
    Demand minus supply of one hub and energy.
    """
    demand = d.x_ki[hub, :, energy].sum() + d.x_kq[hub, :, energy].sum()
    return float(demand - d.x[hub, energy])


def tau_gradients(d: Dispatch) -> np.ndarray:
    demand = d.x_ki.sum(axis=1) + d.x_kq.sum(axis=1)
    return demand - d.x


def tau_step(tau_bar, gradient, sigma: float):
    return np.asarray(tau_bar) + sigma * np.asarray(gradient)


def gap_bound(rho: float, cfg: ParkConfig) -> float:
    """
    Per-slot additive gap between the online time-average cost and
    the offline relaxed optimum, summed over hubs.
    """
    total = 0.0
    for hub in cfg.hubs:
        total += 0.5 * max(hub.c_e_max, hub.d_e_max) ** 2
        total += 0.5 * max(hub.c_h_max, hub.d_h_max) ** 2
    return rho * total


def tau_band(slot, cfg: ParkConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lower and upper limits of the fast multipliers in a slot, indexed
    (hub, energy).  Grid import and export bound the electricity
    price.  Heat is bounded by the dearer of boiler heat and CHP heat
    with its power sold at the selling price.
    """
    low = np.zeros((cfg.n_hubs, 2))
    high = np.zeros((cfg.n_hubs, 2))
    low[:, ELECTRICITY] = slot.p_o
    high[:, ELECTRICITY] = slot.p_e
    high[:, HEAT] = [
        max(slot.p_g / h.eta_bg, (slot.p_g - h.eta_pg * slot.p_o) / h.eta_hg)
        for h in cfg.hubs
    ]
    return low, high
