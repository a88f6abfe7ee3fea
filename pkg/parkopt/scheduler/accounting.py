"""
Per-slot cost of a dispatch.
"""
import numpy as np

from parkopt.model import Dispatch, ParkConfig, SlotData


def utility(a, b, x):
    return a * np.asarray(x) ** 2 + b * np.asarray(x)


def el_utilities(d: Dispatch, cfg: ParkConfig) -> float:
    """
    Utility of every elastic load, each taken on the carrier it
    consumes.
    """
    if cfg.n_el == 0:
        return 0.0
    consumed = d.x_kq.sum(axis=2)
    return float(np.sum(utility(cfg.el_a, cfg.el_b, consumed)))


def slot_cost(d: Dispatch, slot: SlotData, cfg: ParkConfig) -> float:
    """
    Energy bought minus energy sold, plus incentives paid, minus the
    utility of served inelastic and elastic load.
    """
    x_il = np.asarray(slot.x_il, dtype=float)
    shifted = d.shifted if len(d.shifted) == len(x_il) else np.zeros_like(x_il)
    il_utility = float(np.sum(utility(cfg.il_a, cfg.il_b, x_il - shifted)))
    return (
        d.e * slot.p_e
        + d.g * slot.p_g
        - d.e_o * slot.p_o
        + d.incentive
        - il_utility
        - el_utilities(d, cfg)
    )


def slot_objective(d: Dispatch, slot: SlotData, cfg: ParkConfig, lambda_e, lambda_h) -> float:
    """
    Slot cost plus the storage multipliers' price on net charging.
    """
    return (
        slot_cost(d, slot, cfg)
        + float(np.dot(lambda_e, d.c_e - d.d_e))
        + float(np.dot(lambda_h, d.c_h - d.d_h))
    )
