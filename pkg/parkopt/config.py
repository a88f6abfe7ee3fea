from typing import List, Union


#: Fast multiplier stepsize used in every mini-slot.
PARKOPT_SIGMA: float = 0.2

#: Stop the mini-slot loop once successive fast multipliers, and hub deliveries divided by the proximal weight, differ by less than this (max norm).
PARKOPT_TOLERANCE: float = 0.01

#: The maximum number of mini-slots run inside one slot.
PARKOPT_MAX_MINI_SLOTS: int = 200

#: Proximal weight on the hub deliveries in the mini-slot loop. "auto" derives it from the stepsize and the elastic loads, a number fixes it.
PARKOPT_PROX: Union[str, float] = "auto"

#: The default iteration mode, either "fast" (momentum) or "plain".
PARKOPT_MODE: str = "fast"

#: Slow stepsize policy. "auto" uses the smallest stepsize keeping the storage multipliers bounded, a number fixes it.
PARKOPT_RHO: Union[str, float] = "auto"

#: Lower limit applied to an automatic slow stepsize when buy and sell prices coincide.
PARKOPT_RHO_FLOOR: float = 1e-6

#: Electricity price used to initialize the battery multipliers. "max" for the horizon maximum, "first" for the first slot's price.
PARKOPT_LAMBDA_REFERENCE: str = "max"

#: The maximum fraction of a user's inelastic load that can be shifted.
PARKOPT_SHIFT_CAP: float = 0.15

#: How many slots ahead inelastic load can be shifted to.
PARKOPT_SHIFT_WINDOW: int = 4

#: Ridge term added to the normal equations when estimating shifting behaviour.
PARKOPT_LSQ_RIDGE: float = 1e-8

#: Balance residual (MWh) under which a dispatch counts as balanced.
PARKOPT_FEASIBILITY_TOLERANCE: float = 1e-6

#: Slack allowed when checking multiplier and state of charge bounds.
PARKOPT_BOUND_TOLERANCE: float = 1e-7

#: Raise instead of logging when the runtime guard finds a violated bound.
PARKOPT_GUARD_STRICT: bool = False

#: The paths of the listeners the scheduler is initialized with.
PARKOPT_SCHEDULER_LISTENERS: List[str] = []

#: The path of the storage class that records slot trajectories.
PARKOPT_TRAJECTORY_STORAGE: str = (
    "parkopt.scheduler.storages.TrajectoryMemoryStorage"
)

#: The number of experiments a sweep may run at the same time.
PARKOPT_THREADS: int = 1

#: Default report format, "csv" or "json".
PARKOPT_OUTPUT_FORMAT: str = "csv"

#: Default seed for generated scenarios and random verification instances.
PARKOPT_SEED: int = 0

#: Level of the parkopt loggers.
PARKOPT_LOG_LEVEL: str = "INFO"

#: Objective decrease under which the centralized oracle stops.
PARKOPT_ORACLE_TOLERANCE: float = 1e-8

#: Iteration limit of the centralized oracle's inner descent.
PARKOPT_ORACLE_MAX_ITERATIONS: int = 20000

#: The largest number of points the brute force grid may evaluate.
PARKOPT_GRID_LIMIT: int = 10_000_000

#: Tangent cuts per elastic load used by the relaxed lower bound.
PARKOPT_UTILITY_CUTS: int = 48
