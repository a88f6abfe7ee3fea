"""
Experiments, sweeps and reports.

An :class:`Experiment` names a scenario and a park, the solver options
and optionally one parameter to sweep.  :func:`run_experiment` turns it
into a :class:`Report`; :func:`emit_report` writes reports to flat
files.
"""
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from parkopt.conf import settings
from parkopt.errors import IoError, InvalidConfig, ParkOptError
from parkopt.log import logger
from parkopt.model import (
    HubParams,
    ParkConfig,
    ScenarioSeries,
    SlotData,
    load_park_config,
)
from parkopt.oracle import centralized_subproblem
from parkopt.scenario import (
    SAMPLE_PARK,
    SAMPLE_SCENARIO,
    ingest_scenario,
    iid_scenario,
)
from parkopt.scheduler import (
    ABLATIONS,
    DualScheduler,
    DualState,
    SolverConfig,
    Trajectory,
    TrajectoryMemoryStorage,
    certify_hub_response,
    multiplier_interval,
    run_slot,
    slot_objective,
    soc_from_lambda,
    solve_hub_subproblem,
    storage_caps_for,
)
from parkopt.scheduler.states import PlainMode, mode_map
from parkopt.scheduler.subproblems import HubShares

#: Parameters a sweep can vary.
SWEEPABLE = ("ablation", "mode", "price_ratio", "renewable_scale", "rho", "sigma")


@dataclass(frozen=True)
class Experiment:
    """
    :code:`scenario` is a CSV path, "sample" for the bundled day or
    "iid:<slots>" for a generated scenario drawn with :code:`seed`.
    :code:`config` is a park YAML path or "sample".
    """

    name: str
    scenario: str = "sample"
    config: str = "sample"
    mode: str = "fast"
    ablation: str = "full"
    rho: Union[str, float, None] = None
    sigma: Optional[float] = None
    tolerance: Optional[float] = None
    seed: int = 0
    sweep: Optional[Tuple[str, Tuple[Any, ...]]] = None

    def __post_init__(self):
        if self.mode not in mode_map:
            raise InvalidConfig(f"unknown mode {self.mode!r}", field="mode")
        if self.ablation not in ABLATIONS:
            raise InvalidConfig(f"unknown ablation {self.ablation!r}", field="ablation")
        if self.sweep is not None:
            name, values = self.sweep
            if name not in SWEEPABLE:
                raise InvalidConfig(
                    f"cannot sweep {name!r}, valid: {', '.join(SWEEPABLE)}",
                    field="sweep",
                )
            values = tuple(values)
            for value in values:
                if name in ("price_ratio", "renewable_scale", "sigma"):
                    if not np.isfinite(float(value)):
                        raise InvalidConfig(f"{value} is not finite", field=name)
                if name == "price_ratio" and float(value) < 1:
                    raise InvalidConfig("p_e / p_o must be at least 1", field=name)
            object.__setattr__(self, "sweep", (name, values))

    def expand(self) -> List["Experiment"]:
        """
        One experiment per sweep value, or just this one.
        """
        if self.sweep is None:
            return [self]
        name, values = self.sweep
        expanded = []
        for value in values:
            changes = {"name": f"{self.name}-{name}={value}", "sweep": None}
            if name in ("ablation", "mode"):
                changes[name] = value
            elif name in ("rho", "sigma"):
                changes[name] = value if value == "auto" else float(value)
            else:
                changes["sweep"] = (name, (value,))
            expanded.append(replace(self, **changes))
        return expanded

    def load(self) -> Tuple[ParkConfig, ScenarioSeries]:
        cfg = load_park_config(SAMPLE_PARK if self.config == "sample" else self.config)
        if self.scenario == "sample":
            scenario = ingest_scenario(SAMPLE_SCENARIO)
        elif self.scenario.startswith("iid:"):
            scenario = iid_scenario(
                int(self.scenario[4:]),
                n_hubs=cfg.n_hubs,
                n_users=cfg.n_users,
                seed=self.seed,
            )
        else:
            scenario = ingest_scenario(self.scenario)

        if self.sweep is not None:
            name, (value,) = self.sweep
            if name == "price_ratio":
                scenario = scenario.with_price_ratio(float(value))
            elif name == "renewable_scale":
                scenario = scenario.with_renewable_scale(float(value))
        return cfg, scenario

    def solver(self) -> SolverConfig:
        return SolverConfig.from_settings(
            rho=self.rho, sigma=self.sigma, tolerance=self.tolerance
        )


@dataclass(eq=False)
class Report:
    name: str
    mode: str
    ablation: str
    rho: float
    total_cost: float
    costs: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    bound_violations: int
    bound_margin: float
    infeasible_slots: int = 0
    trajectory: pd.DataFrame = field(default_factory=pd.DataFrame)

    @property
    def cdf(self) -> List[Tuple[int, float]]:
        return iteration_cdf(self.iterations)

    @property
    def violations(self) -> int:
        return self.bound_violations + self.infeasible_slots

    def summary(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "mode": self.mode,
            "ablation": self.ablation,
            "rho": self.rho,
            "total_cost": self.total_cost,
            "slots": int(len(self.costs)),
            "mean_iterations": float(self.iterations.mean()) if len(self.iterations) else 0.0,
            "median_iterations": float(np.median(self.iterations)) if len(self.iterations) else 0.0,
            "unconverged_slots": int((~self.converged).sum()),
            "infeasible_slots": self.infeasible_slots,
            "bound_violations": self.bound_violations,
            "bound_margin": self.bound_margin,
        }


def iteration_cdf(iterations) -> List[Tuple[int, float]]:
    """
    (iterations, fraction of slots settled within them) pairs, one per
    distinct count.
    """
    iterations = np.asarray(iterations, dtype=int)
    if iterations.size == 0:
        return []
    values, counts = np.unique(iterations, return_counts=True)
    fractions = np.cumsum(counts) / iterations.size
    return [(int(v), float(f)) for v, f in zip(values, fractions)]


def cdf_at(iterations, points) -> np.ndarray:
    """
    Fraction of slots settled within each of `points` iterations.
    """
    iterations = np.sort(np.asarray(iterations, dtype=int))
    return np.searchsorted(iterations, np.asarray(points), side="right") / max(
        len(iterations), 1
    )


def bound_check(trajectory: Trajectory, cfg: ParkConfig, tolerance: float = None):
    """
    Counts storage multipliers outside their guaranteed intervals over
    a trajectory, and returns the smallest distance to an interval edge
    (negative when violated).
    """
    tolerance = settings.PARKOPT_BOUND_TOLERANCE if tolerance is None else tolerance
    if not trajectory.results:
        return 0, 0.0
    lambda_e, lambda_h = trajectory.lambda_e, trajectory.lambda_h
    p_e_max = trajectory.final_state.p_e_max
    count, margin = 0, np.inf
    for k, params in enumerate(cfg.hubs):
        battery, tank = multiplier_interval(trajectory.rho, params, p_e_max)
        for values, (low, high) in ((lambda_e[:, k], battery), (lambda_h[:, k], tank)):
            distance = np.minimum(values - low, high - values)
            count += int(np.sum(distance < -tolerance))
            margin = min(margin, float(distance.min()))
    return count, margin


def report_from_trajectory(name: str, trajectory: Trajectory, cfg: ParkConfig) -> Report:
    violations, margin = bound_check(trajectory, cfg)
    infeasible = sum(not r.feasible for r in trajectory.results)
    return Report(
        name=name,
        mode=trajectory.mode,
        ablation=trajectory.ablation,
        rho=trajectory.rho,
        total_cost=trajectory.total_cost,
        costs=trajectory.costs,
        iterations=trajectory.iterations,
        converged=trajectory.converged,
        bound_violations=violations,
        bound_margin=margin,
        infeasible_slots=infeasible,
        trajectory=trajectory.frame(),
    )


def run_experiment(e: Experiment) -> Report:
    """
    Runs a single experiment.  A sweep is run by :func:`run_sweep`.
    """
    if e.sweep is not None and len(e.sweep[1]) != 1:
        raise InvalidConfig("expand the sweep first", field="sweep")
    cfg, scenario = e.load()
    scheduler = DualScheduler(
        cfg,
        e.solver(),
        mode=e.mode,
        ablation=e.ablation,
        storage=TrajectoryMemoryStorage(),
    )
    trajectory = scheduler.run_horizon(scenario)
    report = report_from_trajectory(e.name, trajectory, scheduler.cfg)
    logger.info(
        f"[PARKOPT] {e.name}: total cost {report.total_cost:.2f} over "
        f"{len(scenario)} slots"
    )
    return report


def run_sweep(e: Experiment, threads: Optional[int] = None) -> List[Report]:
    """
    Runs every expanded experiment, at most `threads` at a time.
    Reports come back in sweep order.
    """
    experiments = e.expand()
    threads = threads or settings.PARKOPT_THREADS
    if threads <= 1 or len(experiments) <= 1:
        return [run_experiment(x) for x in experiments]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_experiment, experiments))


def compare_modes(
    scenario: ScenarioSeries,
    cfg: ParkConfig,
    solver: Optional[SolverConfig] = None,
    ablation: str = "full",
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Runs the scenario in fast mode and solves every slot a second time
    in plain mode from the same state.  Returns the paired iteration
    counts (fast, plain).
    """
    scheduler = DualScheduler(
        cfg,
        solver,
        mode="fast",
        ablation=ablation,
        listeners=[],
        storage=TrajectoryMemoryStorage(),
    )
    scheduler.start(scenario)
    plain = PlainMode()
    fast_counts, plain_counts = [], []
    for t in range(len(scenario)):
        slot = scenario.slot(t)
        shadow = scheduler.run_slot(slot, mode=plain, notify=False)
        result = scheduler.run_slot(slot)
        scheduler.close_slot(result)
        fast_counts.append(result.iterations)
        plain_counts.append(shadow.iterations)
    return np.asarray(fast_counts), np.asarray(plain_counts)


def _write_csv(frame: pd.DataFrame, path: str) -> None:
    try:
        frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}")


def _write_json(data: Any, path: str) -> None:
    try:
        with open(path, "w", encoding="utf8") as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}")


def emit_report(
    reports: Sequence[Report], out_dir: str, format: Optional[str] = None
) -> List[str]:
    """
    Writes the reports to `out_dir` and returns the files written,
    the manifest last.

    csv writes one cost table row per report plus a trajectory and a
    CDF file per report.  json writes everything into one summary
    file.
    """
    format = (format or settings.PARKOPT_OUTPUT_FORMAT).lower()
    if format not in ("csv", "json"):
        raise InvalidConfig(f"unknown format {format!r}", field="format")
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise IoError(f"cannot create {out_dir}: {e}")

    written = []
    if reports and format == "csv":
        table = pd.DataFrame([r.summary() for r in reports])
        path = os.path.join(out_dir, "costs.csv")
        _write_csv(table, path)
        written.append(path)
        for r in reports:
            path = os.path.join(out_dir, f"{r.name}_trajectory.csv")
            _write_csv(r.trajectory, path)
            written.append(path)
            path = os.path.join(out_dir, f"{r.name}_cdf.csv")
            _write_csv(pd.DataFrame(r.cdf, columns=["iterations", "fraction"]), path)
            written.append(path)
    elif reports:
        path = os.path.join(out_dir, "summary.json")
        _write_json(
            [
                {
                    **r.summary(),
                    "costs": [float(c) for c in r.costs],
                    "iterations": [int(n) for n in r.iterations],
                    "cdf": [list(point) for point in r.cdf],
                }
                for r in reports
            ],
            path,
        )
        written.append(path)

    manifest = os.path.join(out_dir, "manifest.json")
    _write_json({"files": [os.path.basename(p) for p in written]}, manifest)
    return written + [manifest]


def random_oracle_instance(
    rng: np.random.Generator,
) -> Tuple[ParkConfig, DualState, SlotData]:
    """
    Draws a small park, storage multipliers and one slot.  Half of the
    instances are easy: storage runs flat out and the CHP is either
    free or idle whatever the balance prices.  The other half put the
    battery multipliers between minus the buying and minus the selling
    price, the tank multipliers below zero and the gas price in between,
    so that storage and CHP decisions turn on the balance prices.
    Prices are ¥/MWh, quantities MWh.
    """
    n_hubs = int(rng.integers(1, 3))
    n_users = int(rng.integers(1, 3))
    p_e = float(rng.uniform(550.0, 700.0))
    p_o = 0.6 * p_e

    lambda_e = np.empty(n_hubs)
    if rng.integers(0, 2):
        chp_on = bool(rng.integers(0, 2))
        p_g = float(
            rng.uniform(20.0, 100.0) if chp_on else rng.uniform(600.0, 800.0)
        )
        for k in range(n_hubs):
            if rng.integers(0, 2):
                lambda_e[k] = -rng.uniform(p_e + 10.0, 800.0)
            else:
                lambda_e[k] = -rng.uniform(300.0, p_o - 10.0)
        lambda_h = rng.uniform(10.0, 400.0, size=n_hubs)
    else:
        p_g = float(rng.uniform(150.0, 400.0))
        lambda_e[:] = -rng.uniform(p_o + 5.0, p_e - 5.0, size=n_hubs)
        lambda_h = -rng.uniform(5.0, 150.0, size=n_hubs)

    cfg = ParkConfig.build(
        hubs=[HubParams() for _ in range(n_hubs)],
        il_a=np.full(n_users, -100.0),
        il_b=np.ones(n_users),
        el_a=rng.uniform(-5.0, -1.0, size=(n_hubs, 2)),
        el_b=np.column_stack(
            [rng.uniform(300.0, 900.0, n_hubs), rng.uniform(0.0, 600.0, n_hubs)]
        ),
        el_bound=3.0,
        el_energy=[0, 1],
        e_max=10.0 * n_hubs,
        g_max=50.0 * n_hubs,
        e_o_max=5.0 * n_hubs,
    )
    tau = np.zeros((n_hubs, 2))
    ds = DualState(
        lambda_e=lambda_e,
        lambda_h=lambda_h,
        rho=200.0,
        tau=tau,
        tau_prev=tau.copy(),
        p_e_max=700.0,
    )
    slot = SlotData(
        t=0,
        p_e=p_e,
        p_g=p_g,
        p_o=p_o,
        r=rng.uniform(0.0, 1.5, size=n_hubs),
        x_il=rng.uniform(0.5, 2.0, size=n_users),
        h_load=float(rng.uniform(0.0, 1.5)),
        g_load=float(rng.uniform(0.0, 1.0)),
    )
    return cfg, ds, slot


@dataclass(frozen=True)
class VerifyOutcome:
    instances: int
    mismatches: int
    worst_gap: float
    certified: int


def verify_oracle(
    count: int, seed: int = 0, tolerance: float = 1e-3
) -> VerifyOutcome:
    """
    Solves `count` random small slots with the scheduler and with the
    centralized oracle and counts relative objective gaps above
    `tolerance`.  Every hub response at the settled prices is also
    certified against a linear programming solve.
    """
    rng = np.random.default_rng(seed)
    solver = SolverConfig(
        sigma=0.2, max_mini_slots=4000, tolerance=1e-7, rho=200.0
    )
    mismatches, worst, certified = 0, 0.0, 0
    for _ in range(count):
        cfg, ds, slot = random_oracle_instance(rng)
        soc = soc_from_lambda(ds, cfg)
        caps = storage_caps_for(ds, soc, cfg)
        d, state, _ = run_slot(ds, slot, cfg, solver, mode="fast", soc=soc)
        distributed = slot_objective(d, slot, cfg, ds.lambda_e, ds.lambda_h)
        oracle = centralized_subproblem(ds, slot, cfg, caps=caps)
        gap = abs(distributed - oracle.objective) / max(1.0, abs(oracle.objective))
        worst = max(worst, gap)
        if gap > tolerance:
            mismatches += 1
            logger.warning(
                f"[PARKOPT] oracle gap {gap:.3g}: distributed {distributed:.6g}, "
                f"centralized {oracle.objective:.6g}"
            )

        for k, params in enumerate(cfg.hubs):
            shares = HubShares.of(cfg, k)
            args = (
                float(state.tau[k, 0]),
                float(state.tau[k, 1]),
                float(ds.lambda_e[k]),
                float(ds.lambda_h[k]),
                slot.p_e,
                slot.p_o,
                slot.p_g,
                float(slot.r[k]),
                params,
                shares,
            )
            response = solve_hub_subproblem(
                *args, caps=caps[k], g_load=slot.g_load / cfg.n_hubs
            )
            try:
                certify_hub_response(response, *args)
                certified += 1
            except ParkOptError as e:
                mismatches += 1
                logger.warning(f"[PARKOPT] [hub {k}] {e}")
    return VerifyOutcome(
        instances=count, mismatches=mismatches, worst_gap=worst, certified=certified
    )
