"""
Two-timescale energy scheduler.

Every slot the hubs and users iterate on fast balance prices until
supply meets demand, then the storage multipliers take one step on the
accepted charge and discharge.  The storage multipliers map one to one
onto a virtual state of charge, which keeps them bounded for any
stepsize at least :func:`rho_min`.
"""
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from parkopt.conf import settings
from parkopt.errors import DegenerateDenominator, InvalidConfig, NoConvergence
from parkopt.incentive import incentive_cost, iter_delays, optimal_incentive_price
from parkopt.log import error_logger, logger
from parkopt.model import (
    ELECTRICITY,
    HEAT,
    Dispatch,
    ParkConfig,
    ScenarioSeries,
    SlotData,
    StorageState,
    balance_residuals,
    step_battery,
    step_tank,
)
from parkopt.scheduler.accounting import slot_cost, slot_objective
from parkopt.scheduler.duals import (
    DualState,
    gap_bound,
    init_lambda,
    multiplier_interval,
    momentum_combine,
    rho_min,
    soc_from_lambda,
    storage_thresholds,
    tau_band,
    tau_gradient,
    tau_gradients,
    tau_step,
    theta_update,
    update_lambda,
    virtual_soc,
)
from parkopt.scheduler.listeners import LoggingListener, SchedulerListener
from parkopt.scheduler.states import (
    FastMode,
    IterationMode,
    PlainMode,
    create_mode,
)
from parkopt.scheduler.storages import (
    TrajectoryCsvStorage,
    TrajectoryMemoryStorage,
    TrajectoryStorage,
)
from parkopt.scheduler.subproblems import (
    HubAgent,
    HubResponse,
    HubShares,
    StorageCaps,
    certify_hub_response,
    solve_hub_subproblem,
    solve_user_subproblem,
)
from parkopt.utils import hub_columns, load_from_path

__all__ = (
    "ABLATIONS",
    "DualScheduler",
    "DualState",
    "SlotResult",
    "SolverConfig",
    "Trajectory",
    "FastMode",
    "PlainMode",
    "IterationMode",
    "HubAgent",
    "HubResponse",
    "HubShares",
    "StorageCaps",
    "SchedulerListener",
    "LoggingListener",
    "TrajectoryStorage",
    "TrajectoryMemoryStorage",
    "TrajectoryCsvStorage",
    "certify_hub_response",
    "gap_bound",
    "init_lambda",
    "multiplier_interval",
    "momentum_combine",
    "rho_min",
    "run_horizon",
    "run_slot",
    "slot_cost",
    "slot_objective",
    "soc_from_lambda",
    "solve_hub_subproblem",
    "solve_user_subproblem",
    "storage_caps_for",
    "storage_thresholds",
    "tau_gradient",
    "tau_step",
    "theta_update",
    "update_lambda",
)

#: Full method, no storage, no renewables, no incentive.
ABLATIONS = ("full", "ta", "oa", "ca")


@dataclass(frozen=True)
class SolverConfig:
    sigma: float = 0.2
    max_mini_slots: int = 200
    tolerance: float = 0.01
    prox: Union[str, float] = "auto"
    rho: Union[str, float] = "auto"
    rho_floor: float = 1e-6
    lambda_reference: str = "max"
    feasibility_tolerance: float = 1e-6
    strict: bool = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidConfig("must be positive", field="sigma")
        if not self.tolerance > 0:
            raise InvalidConfig("must be positive", field="tolerance")
        if self.max_mini_slots < 1:
            raise InvalidConfig("must be at least 1", field="max_mini_slots")
        if self.rho != "auto":
            try:
                rho = float(self.rho)
            except (TypeError, ValueError):
                raise InvalidConfig(f"{self.rho!r} is neither 'auto' nor a number", field="rho")
            if not rho >= 0:
                raise InvalidConfig("must be nonnegative", field="rho")
            object.__setattr__(self, "rho", rho)
        if self.prox != "auto":
            try:
                prox = float(self.prox)
            except (TypeError, ValueError):
                raise InvalidConfig(f"{self.prox!r} is neither 'auto' nor a number", field="prox")
            if not prox > 0:
                raise InvalidConfig("must be positive", field="prox")
            object.__setattr__(self, "prox", prox)
        if self.lambda_reference not in ("max", "first"):
            raise InvalidConfig("must be 'max' or 'first'", field="lambda_reference")

    @classmethod
    def from_settings(cls, conf=None, **overrides) -> "SolverConfig":
        """
        Builds the solver options from :code:`PARKOPT_*` settings.
        Overrides that are None are ignored.
        """
        conf = conf or settings
        values = dict(
            sigma=conf.PARKOPT_SIGMA,
            max_mini_slots=conf.PARKOPT_MAX_MINI_SLOTS,
            tolerance=conf.PARKOPT_TOLERANCE,
            prox=conf.PARKOPT_PROX,
            rho=conf.PARKOPT_RHO,
            rho_floor=conf.PARKOPT_RHO_FLOOR,
            lambda_reference=conf.PARKOPT_LAMBDA_REFERENCE,
            feasibility_tolerance=conf.PARKOPT_FEASIBILITY_TOLERANCE,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def resolve_rho(self, cfg: ParkConfig, p_e_max: float, p_o_min: float) -> float:
        if self.rho == "auto":
            return max(rho_min(cfg, p_e_max, p_o_min), self.rho_floor)
        return float(self.rho)

    def resolve_prox(self, cfg: ParkConfig) -> float:
        """
        Proximal weight of the hub deliveries.  The loop settles while
        :code:`1 / sigma - prox` stays above half the steepest elastic
        response of any hub and carrier.
        """
        if self.prox != "auto":
            return float(self.prox)
        steepest = 0.0
        for k in range(cfg.n_hubs):
            for energy in (ELECTRICITY, HEAT):
                loads = (cfg.el_energy == energy) & (cfg.el_bound[k] > 0)
                steepest = max(steepest, float(np.sum(0.5 / np.abs(cfg.el_a[k][loads]))))
        room = 1.0 / self.sigma - 0.5 * steepest
        if room <= 0:
            logger.warning(
                f"[PARKOPT] sigma={self.sigma} is too large for elastic loads "
                f"as steep as {steepest:.3g} MWh per ¥/MWh; fast prices may not settle"
            )
            return 0.1 / self.sigma
        return 0.9 * room


@dataclass(eq=False)
class SlotResult:
    """
    Outcome of one slot before it is closed.  :code:`state` and
    :code:`soc` are the multipliers and physical storage the slot
    started from.
    """

    t: int
    dispatch: Dispatch
    iterations: int
    converged: bool
    tau: np.ndarray
    cost: float
    residual: float
    state: DualState
    soc: StorageState
    caps: List[StorageCaps]
    delays: Tuple[int, ...] = ()
    prices: np.ndarray = field(default_factory=lambda: np.zeros(0))
    outbound: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    clipped: Tuple[bool, ...] = ()
    row: Dict[str, float] = field(default_factory=dict)
    feasibility_tolerance: float = field(
        default_factory=lambda: settings.PARKOPT_FEASIBILITY_TOLERANCE
    )

    @property
    def feasible(self) -> bool:
        return self.residual <= self.feasibility_tolerance


@dataclass(eq=False)
class Trajectory:
    results: List[SlotResult]
    rho: float
    final_state: DualState
    final_soc: StorageState
    mode: str = "fast"
    ablation: str = "full"

    def __len__(self) -> int:
        return len(self.results)

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.results])

    @property
    def total_cost(self) -> float:
        return float(self.costs.sum())

    @property
    def iterations(self) -> np.ndarray:
        return np.array([r.iterations for r in self.results], dtype=int)

    @property
    def converged(self) -> np.ndarray:
        return np.array([r.converged for r in self.results], dtype=bool)

    @property
    def lambda_e(self) -> np.ndarray:
        """
        Battery multipliers at the start of every slot and after the
        last one, shape (T + 1, hubs).
        """
        return np.vstack(
            [r.state.lambda_e for r in self.results] + [self.final_state.lambda_e]
        )

    @property
    def lambda_h(self) -> np.ndarray:
        return np.vstack(
            [r.state.lambda_h for r in self.results] + [self.final_state.lambda_h]
        )

    @property
    def dispatches(self) -> List[Dispatch]:
        return [r.dispatch for r in self.results]

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.row for r in self.results])


def storage_caps_for(
    ds: DualState, soc: StorageState, cfg: ParkConfig
) -> List[StorageCaps]:
    b_virt, w_virt = virtual_soc(ds, cfg)
    return [
        agent.storage_caps(soc.b[k], soc.w[k], b_virt[k], w_virt[k])
        for k, agent in enumerate(HubAgent.for_park(cfg))
    ]


class DualScheduler:
    """
    Runs the slot loop for one park.

    :param mode: "fast" or "plain", or an :class:`IterationMode`.
    :param ablation: "full", "ta" (storage disabled), "oa" (renewables
        ignored) or "ca" (no incentive).
    """

    def __init__(
        self,
        cfg: ParkConfig,
        solver: Optional[SolverConfig] = None,
        mode: Union[str, IterationMode] = None,
        ablation: str = "full",
        listeners: Optional[Sequence[SchedulerListener]] = None,
        storage: Optional[TrajectoryStorage] = None,
    ):
        ablation = ablation.lower()
        if ablation not in ABLATIONS:
            raise InvalidConfig(
                f"unknown ablation {ablation!r}, valid: {', '.join(ABLATIONS)}",
                field="ablation",
            )
        self.ablation = ablation
        self.cfg = cfg.without_storage() if ablation == "ta" else cfg
        self.solver = solver or SolverConfig.from_settings()
        mode = mode or settings.PARKOPT_MODE
        self.mode = create_mode(mode) if isinstance(mode, str) else mode

        if listeners is None:
            from parkopt.app import ParkOpt

            listeners = ParkOpt.attach_listeners(settings)
        self.listeners = list(listeners)

        if storage is None:
            storage = load_from_path(settings.PARKOPT_TRAJECTORY_STORAGE)()
        self.storage = storage

        self.agents = HubAgent.for_park(self.cfg)
        self.state: Optional[DualState] = None
        self.soc: Optional[StorageState] = None
        self.horizon: int = 0
        self.p_cap: Optional[float] = None
        self._inbound = np.zeros((0, self.cfg.n_users))
        self._posted = np.zeros(0)

    def start(self, scenario: ScenarioSeries) -> DualState:
        """
        Initializes multipliers and storage for a run over `scenario`.
        """
        cfg = self.cfg
        if scenario.n_hubs != cfg.n_hubs:
            raise InvalidConfig(
                f"scenario has {scenario.n_hubs} renewable columns for "
                f"{cfg.n_hubs} hubs",
                field="R",
            )
        if scenario.n_users != cfg.n_users:
            raise InvalidConfig(
                f"scenario has {scenario.n_users} load columns for "
                f"{cfg.n_users} users",
                field="X",
            )
        rho = self.solver.resolve_rho(cfg, scenario.p_e_max, scenario.p_o_min)
        reference = (
            scenario.p_e_max
            if self.solver.lambda_reference == "max"
            else float(scenario.p_e[0])
        )
        soc = StorageState.initial(cfg)
        state = init_lambda(
            cfg,
            rho,
            soc.b,
            reference,
            w0=soc.w,
            sigma=self.solver.sigma,
            p_e_max=scenario.p_e_max,
        )
        self.resume(state, soc, horizon=len(scenario), p_cap=scenario.p_e_max)
        logger.debug(f"[PARKOPT] starting {len(scenario)} slots with rho={rho:.6g}")
        return state

    def resume(
        self,
        state: DualState,
        soc: StorageState,
        horizon: int,
        p_cap: Optional[float] = None,
    ) -> None:
        self.state = state
        self.soc = soc
        self.horizon = horizon
        self.p_cap = p_cap
        self._inbound = np.zeros((horizon + self.cfg.shift.window + 1, self.cfg.n_users))
        self._posted = np.full(horizon + self.cfg.shift.window + 1, np.nan)

    def posted_price(self, t: int) -> float:
        """
        Incentive price paid for load moved into slot `t`, zero while
        nothing has been offered for it.
        """
        if t >= len(self._posted) or np.isnan(self._posted[t]):
            return 0.0
        return float(self._posted[t])

    def _post_incentive(self, slot: SlotData):
        """
        Prices the shifts out of `slot`.  A destination slot keeps the
        price posted when it first came into a window; a new one gets
        the closed-form price for the load of this slot.
        """
        cfg = self.cfg
        x_il = np.asarray(slot.x_il, dtype=float)
        delays = tuple(iter_delays(slot.t, self.horizon, cfg.shift.window))
        prices = np.zeros(len(delays))
        for i, d in enumerate(delays):
            posted = self._posted[slot.t + d]
            if not np.isnan(posted):
                prices[i] = posted
            elif self.ablation != "ca" and cfg.n_users and np.any(x_il > 0):
                try:
                    prices[i] = optimal_incentive_price(
                        x_il, cfg.il_a, cfg.il_b, cfg.shift, (d,), p_cap=self.p_cap
                    )
                except DegenerateDenominator:
                    prices[i] = 0.0
        outbound = x_il[:, None] * cfg.shift.profile(prices, delays)
        return prices, delays, outbound

    def _el_response(self, tau: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        x_kq = np.zeros((cfg.n_hubs, cfg.n_el, 2))
        if cfg.n_el:
            prices = tau[:, cfg.el_energy]
            x = solve_user_subproblem(prices, cfg.el_a, cfg.el_b, cfg.el_bound)
            for q, energy in enumerate(cfg.el_energy):
                x_kq[:, q, energy] = x[:, q]
        return x_kq

    def run_slot(
        self,
        slot: SlotData,
        mode: Optional[IterationMode] = None,
        notify: bool = True,
    ) -> SlotResult:
        """
        Iterates the fast prices for one slot and returns the balanced
        dispatch.  The scheduler's state is left untouched until
        :meth:`close_slot`.
        """
        if self.state is None:
            raise InvalidConfig("call start() before running slots", field="state")
        cfg = self.cfg
        ds = self.state
        mode = mode or self.mode
        listeners = self.listeners if notify else []
        if self.ablation == "oa":
            slot = replace(slot, r=np.zeros_like(slot.r))
        if cfg.n_users == 0 and slot.h_load > 0:
            raise InvalidConfig("a heat load needs at least one user", field="users")

        for listener in listeners:
            listener.slot_started(self, slot)

        n_hubs = cfg.n_hubs
        prices, delays, outbound = self._post_incentive(slot)
        inbound = self._inbound[slot.t] if slot.t < len(self._inbound) else 0.0
        served = np.asarray(slot.x_il, dtype=float) - outbound.sum(axis=1) + inbound

        caps = storage_caps_for(ds, self.soc, cfg)
        g_load = slot.g_load / n_hubs
        fixed = np.zeros((n_hubs, 2))
        fixed[:, ELECTRICITY] = served.sum() / n_hubs
        fixed[:, HEAT] = slot.h_load / n_hubs

        low, high = tau_band(slot, cfg)
        tau = np.clip(ds.tau, low, high)
        tau_prev = tau.copy()
        theta = 1.0
        converged = False
        sigma = self.solver.sigma
        prox = self.solver.resolve_prox(cfg) if mode.proximal else None
        # deliveries the hubs are pulled towards
        supply = fixed + self._el_response(tau).sum(axis=1)

        for n in range(1, self.solver.max_mini_slots + 1):
            theta_next = mode.next_theta(theta)
            tau_bar = np.clip(mode.combine(tau, tau_prev, theta_next, theta), low, high)
            x_kq = self._el_response(tau_bar)
            responses = [
                agent.respond(
                    tau_bar[k],
                    ds.lambda_e[k],
                    ds.lambda_h[k],
                    slot,
                    caps[k],
                    g_load,
                    center=supply[k] if mode.proximal else None,
                    prox=prox,
                )
                for k, agent in enumerate(self.agents)
            ]
            supply_next = np.array([[r.x_e, r.x_h] for r in responses])
            demand = fixed + x_kq.sum(axis=1)
            gradient = demand - supply_next
            if mode.proximal:
                step = demand - (2.0 * supply_next - supply)
                tau_next = np.clip(tau_step(tau_bar, step, sigma), low, high)
                diff = max(
                    float(np.max(np.abs(tau_next - tau))),
                    float(np.max(np.abs(supply_next - supply))) / prox,
                )
                # restart the momentum once it points against the step
                if np.vdot(tau_next - tau_bar, tau_next - tau) < 0:
                    theta_next = 1.0
            else:
                tau_next = np.clip(tau_step(tau_bar, gradient, sigma), low, high)
                diff = float(np.max(np.abs(tau_next - tau)))

            for listener in listeners:
                listener.mini_slot(self, n, tau_bar, gradient)

            tau_prev, tau, theta = tau, tau_next, theta_next
            supply = supply_next
            if diff < self.solver.tolerance:
                converged = True
                break

        demand = fixed + x_kq.sum(axis=1)
        dispatch = self._balanced_dispatch(
            responses, demand, x_kq, served, slot, prices, outbound, g_load
        )
        residual = balance_residuals(dispatch, slot, cfg).max_abs()
        result = SlotResult(
            t=slot.t,
            dispatch=dispatch,
            iterations=n,
            converged=converged,
            tau=tau,
            cost=slot_cost(dispatch, slot, cfg),
            residual=residual,
            state=ds,
            soc=self.soc,
            caps=caps,
            delays=delays,
            prices=prices,
            outbound=outbound,
            clipped=tuple(
                c != StorageCaps.of(agent.params) for c, agent in zip(caps, self.agents)
            ),
            feasibility_tolerance=self.solver.feasibility_tolerance,
        )

        if residual > self.solver.feasibility_tolerance:
            error_logger.error(
                f"[PARKOPT] slot {slot.t}: balance off by {residual:.3g} MWh "
                f"after absorbing with grid and boiler"
            )
        if not converged and notify:
            message = (
                f"[PARKOPT] slot {slot.t}: fast prices did not settle within "
                f"{self.solver.max_mini_slots} mini-slots"
            )
            if self.solver.strict:
                raise NoConvergence(message, result=result)
            logger.warning(message)
        return result

    def _balanced_dispatch(
        self,
        responses: List[HubResponse],
        demand: np.ndarray,
        x_kq: np.ndarray,
        served: np.ndarray,
        slot: SlotData,
        prices: np.ndarray,
        outbound: np.ndarray,
        g_load: float,
    ) -> Dispatch:
        """
        Assembles the slot dispatch from the last hub responses and
        absorbs what is left of every hub's imbalance.  Heat is
        balanced first with venting, boiler and CHP; electricity then
        with import and export.
        """
        cfg = self.cfg
        n_hubs, n_users = cfg.n_hubs, cfg.n_users
        d = Dispatch.zeros(n_hubs, n_users, cfg.n_el)

        for k, (r, agent) in enumerate(zip(responses, self.agents)):
            shares, params = agent.shares, agent.params
            e, e_o, g_chp, g_b, vent = r.e, r.e_o, r.g_chp, r.g_b, r.vent
            x_e, x_h = r.x_e, r.x_h

            gap = demand[k, HEAT] - x_h
            if gap > 0:
                step = max(0.0, min(gap, vent, shares.x_h_max - x_h))
                vent, x_h, gap = vent - step, x_h + step, gap - step
                room = params.h_b_max - params.eta_bg * g_b
                step = max(0.0, min(gap, room, shares.x_h_max - x_h))
                g_b, x_h, gap = g_b + step / params.eta_bg, x_h + step, gap - step
                room = params.eta_hg * (params.g_chp_max - g_chp)
                step = max(0.0, min(gap, room, shares.x_h_max - x_h))
                g_chp, x_h = g_chp + step / params.eta_hg, x_h + step
                x_e += step * params.eta_pg / params.eta_hg
            elif gap < 0:
                excess = -gap
                step = min(excess, params.eta_bg * g_b)
                g_b, x_h, excess = g_b - step / params.eta_bg, x_h - step, excess - step
                vent, x_h = vent + excess, x_h - excess

            gap = demand[k, ELECTRICITY] - x_e
            if gap > 0:
                step = max(0.0, min(gap, shares.e_max - e, shares.x_e_max - x_e))
                e, x_e, gap = e + step, x_e + step, gap - step
                step = max(0.0, min(gap, e_o, shares.x_e_max - x_e))
                e_o, x_e = e_o - step, x_e + step
            elif gap < 0:
                excess = -gap
                step = min(excess, e)
                e, x_e, excess = e - step, x_e - step, excess - step
                step = max(0.0, min(excess, shares.e_o_max - e_o))
                e_o, x_e = e_o + step, x_e - step

            d.c_e[k], d.d_e[k], d.c_h[k], d.d_h[k] = r.c_e, r.d_e, r.c_h, r.d_h
            d.g_chp[k], d.g_b[k], d.vent[k] = g_chp, g_b, vent
            d.e_k[k], d.e_o_k[k] = e, e_o
            d.g_k[k] = g_chp + g_b + g_load
            d.x[k] = (x_e, x_h)

        if n_users:
            d.x_ki[:, :, ELECTRICITY] = served[None, :] / n_hubs
            d.x_ki[:, :, HEAT] = slot.h_load / (n_hubs * n_users)
        d.x_kq = x_kq
        d.p = self.posted_price(slot.t)
        d.shifted = outbound.sum(axis=1) if outbound.size else np.zeros(n_users)
        d.incentive = incentive_cost(prices, outbound.sum(axis=0))
        return d

    def close_slot(self, result: SlotResult) -> DualState:
        """
        Accepts a slot: steps the storage multipliers and the physical
        storage, schedules the shifted load and records the slot.
        """
        d = result.dispatch
        cfg = self.cfg
        self.state = update_lambda(self.state, d).replace(
            tau=result.tau,
            tau_prev=result.tau,
            theta=1.0,
            theta_prev=1.0,
            n=result.iterations,
        )

        soc = self.soc
        for k, params in enumerate(cfg.hubs):
            soc = step_battery(soc, k, d.c_e[k], d.d_e[k], params)
            soc = step_tank(soc, k, d.c_h[k], d.d_h[k], params)
        self.soc = soc

        for i, delay in enumerate(result.delays):
            self._inbound[result.t + delay] += result.outbound[:, i]
            if np.isnan(self._posted[result.t + delay]):
                self._posted[result.t + delay] = result.prices[i]

        result.row = self._row(result)
        self.storage.record(result.row)
        for listener in self.listeners:
            listener.slot_closed(self, result)
        return self.state

    def _row(self, result: SlotResult) -> Dict[str, float]:
        n_hubs = self.cfg.n_hubs
        d = result.dispatch
        row = {"t": result.t, "cost": result.cost, "iterations": result.iterations}
        row.update(zip(hub_columns("lambda_ke", n_hubs), result.state.lambda_e))
        row.update(zip(hub_columns("lambda_kh", n_hubs), result.state.lambda_h))
        row.update(zip(hub_columns("B", n_hubs), self.soc.b))
        row.update(zip(hub_columns("W", n_hubs), self.soc.w))
        row.update({"E": d.e, "G": d.g, "E_o": d.e_o, "p": d.p})
        return {k: (v if isinstance(v, int) else float(v)) for k, v in row.items()}

    def run_horizon(self, scenario: ScenarioSeries) -> Trajectory:
        self.start(scenario)
        results = []
        for t in range(len(scenario)):
            result = self.run_slot(scenario.slot(t))
            self.close_slot(result)
            results.append(result)
        self.storage.close()
        return Trajectory(
            results=results,
            rho=self.state.rho,
            final_state=self.state,
            final_soc=self.soc,
            mode=self.mode.name,
            ablation=self.ablation,
        )


def run_slot(
    ds: DualState,
    slot: SlotData,
    cfg: ParkConfig,
    solver: Optional[SolverConfig] = None,
    mode: str = "fast",
    soc: Optional[StorageState] = None,
) -> Tuple[Dispatch, DualState, int]:
    """
    Runs and closes a single slot from multipliers `ds`.  The physical
    storage defaults to the state of charge the multipliers imply.
    Nothing is shifted to later slots.
    """
    scheduler = DualScheduler(
        cfg, solver, mode, listeners=[], storage=TrajectoryMemoryStorage()
    )
    if soc is None:
        soc = soc_from_lambda(ds, cfg)
    scheduler.resume(ds, soc, horizon=slot.t + 1, p_cap=slot.p_e)
    result = scheduler.run_slot(slot)
    state = scheduler.close_slot(result)
    return result.dispatch, state, result.iterations


def run_horizon(
    scenario: ScenarioSeries,
    cfg: ParkConfig,
    solver: Optional[SolverConfig] = None,
    mode: str = "fast",
    ablation: str = "full",
    listeners: Optional[Sequence[SchedulerListener]] = None,
    storage: Optional[TrajectoryStorage] = None,
) -> Trajectory:
    scheduler = DualScheduler(
        cfg, solver, mode, ablation=ablation, listeners=listeners, storage=storage
    )
    return scheduler.run_horizon(scenario)
