"""
Centralized reference solvers.

:func:`centralized_subproblem` minimizes one slot's multiplier-priced
cost over the whole park at once, :func:`brute_force_small` does the
same by enumeration for tiny parks, and :func:`relaxed_lower_bound`
solves the offline problem in which storage only has to balance over
the horizon.  None of them is used by the scheduler; they exist to
check it.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from parkopt.conf import settings
from parkopt.errors import GridTooLarge, NotConverged
from parkopt.log import logger
from parkopt.model import (
    ELECTRICITY,
    HEAT,
    Dispatch,
    ParkConfig,
    ScenarioSeries,
    SlotData,
)
from parkopt.scheduler.accounting import slot_objective, utility
from parkopt.scheduler.duals import DualState
from parkopt.scheduler.subproblems import StorageCaps

#: Per-hub variable order; elastic loads follow.
HUB_VARIABLES = ("E", "E_o", "C_e", "D_e", "C_h", "D_h", "G_chp", "G_b", "V", "x_E", "x_H")
_IDX = {name: j for j, name in enumerate(HUB_VARIABLES)}

ALPHA_MIN = 1e-10
ALPHA_MAX = 1e4


@dataclass(frozen=True, eq=False)
class OracleReport:
    objective: float
    dispatch: Dispatch
    method: str
    resolution: float = 0.0
    iterations: int = 0


@dataclass(frozen=True, eq=False)
class RelaxedBound:
    """
    Time-average optimum of the offline relaxation, with the storage
    prices it settles on.
    """

    value: float
    lambda_e: np.ndarray
    lambda_h: np.ndarray


def _vent_limit(params, caps: StorageCaps) -> float:
    return params.eta_hg * params.g_chp_max + params.h_b_max + caps.d_h


def _fixed_demand(slot: SlotData, cfg: ParkConfig, served) -> np.ndarray:
    served = np.asarray(slot.x_il if served is None else served, dtype=float)
    fixed = np.zeros((cfg.n_hubs, 2))
    fixed[:, ELECTRICITY] = served.sum() / cfg.n_hubs
    fixed[:, HEAT] = slot.h_load / cfg.n_hubs
    return fixed


def _assemble(z, slot, cfg, served, fixed) -> Dispatch:
    n_hubs, n_users, n_el = cfg.n_hubs, cfg.n_users, cfg.n_el
    width = len(HUB_VARIABLES) + n_el
    blocks = np.asarray(z, dtype=float).reshape(n_hubs, width)
    column = lambda name: blocks[:, _IDX[name]].copy()  # noqa: E731

    d = Dispatch.zeros(n_hubs, n_users, n_el)
    d.e_k, d.e_o_k = column("E"), column("E_o")
    d.c_e, d.d_e = column("C_e"), column("D_e")
    d.c_h, d.d_h = column("C_h"), column("D_h")
    d.g_chp, d.g_b, d.vent = column("G_chp"), column("G_b"), column("V")
    d.g_k = d.g_chp + d.g_b + slot.g_load / n_hubs
    d.x = np.column_stack([column("x_E"), column("x_H")])
    for q, energy in enumerate(cfg.el_energy):
        d.x_kq[:, q, energy] = blocks[:, len(HUB_VARIABLES) + q]
    if n_users:
        served = np.asarray(slot.x_il if served is None else served, dtype=float)
        d.x_ki[:, :, ELECTRICITY] = served[None, :] / n_hubs
        d.x_ki[:, :, HEAT] = slot.h_load / (n_hubs * n_users)
    if served is not None:
        d.shifted = np.clip(np.asarray(slot.x_il, dtype=float) - served, 0.0, None)
    return d


class _SlotProblem:
    """
    The slot problem as :code:`min c.z + qd.z**2` subject to
    :code:`A z = rhs` and :code:`lower <= z <= upper`.
    """

    def __init__(self, ds, slot, cfg, caps, served):
        n_hubs, n_el = cfg.n_hubs, cfg.n_el
        width = len(HUB_VARIABLES) + n_el
        n = n_hubs * width
        caps = caps or [StorageCaps.of(p) for p in cfg.hubs]
        lambda_e = np.zeros(n_hubs) if ds is None else ds.lambda_e
        lambda_h = np.zeros(n_hubs) if ds is None else ds.lambda_h
        self.fixed = _fixed_demand(slot, cfg, served)

        c = np.zeros(n)
        qd = np.zeros(n)
        lower = np.zeros(n)
        upper = np.zeros(n)
        a = np.zeros((4 * n_hubs, n))
        rhs = np.zeros(4 * n_hubs)

        for k, params in enumerate(cfg.hubs):
            base = k * width
            at = lambda name: base + _IDX[name]  # noqa: E731
            cap = caps[k]
            c[at("E")] = slot.p_e
            c[at("E_o")] = -slot.p_o
            c[at("C_e")] = lambda_e[k]
            c[at("D_e")] = -lambda_e[k]
            c[at("C_h")] = lambda_h[k]
            c[at("D_h")] = -lambda_h[k]
            c[at("G_chp")] = slot.p_g
            c[at("G_b")] = slot.p_g

            for name, high in (
                ("E", cfg.e_share[k]),
                ("E_o", cfg.e_o_share[k]),
                ("C_e", cap.c_e),
                ("D_e", cap.d_e),
                ("C_h", cap.c_h),
                ("D_h", cap.d_h),
                ("G_chp", params.g_chp_max),
                ("G_b", params.g_b_max),
                ("V", _vent_limit(params, cap)),
                ("x_E", cfg.x_max[k, ELECTRICITY]),
                ("x_H", cfg.x_max[k, HEAT]),
            ):
                upper[at(name)] = high

            row = 4 * k
            for name, coef in (
                ("E", 1.0),
                ("E_o", -1.0),
                ("C_e", -1.0),
                ("D_e", 1.0),
                ("G_chp", params.eta_pg),
                ("x_E", -1.0),
            ):
                a[row, at(name)] = coef
            rhs[row] = -float(slot.r[k])
            for name, coef in (
                ("C_h", -1.0),
                ("D_h", 1.0),
                ("G_chp", params.eta_hg),
                ("G_b", params.eta_bg),
                ("V", -1.0),
                ("x_H", -1.0),
            ):
                a[row + 1, at(name)] = coef
            a[row + 2, at("x_E")] = 1.0
            a[row + 3, at("x_H")] = 1.0
            rhs[row + 2] = self.fixed[k, ELECTRICITY]
            rhs[row + 3] = self.fixed[k, HEAT]

            for q, energy in enumerate(cfg.el_energy):
                j = base + len(HUB_VARIABLES) + q
                c[j] = -cfg.el_b[k, q]
                qd[j] = -cfg.el_a[k, q]
                upper[j] = cfg.el_bound[k, q]
                a[row + 2 + energy, j] = -1.0

        self.c, self.qd, self.a, self.rhs = c, qd, a, rhs
        self.lower, self.upper = lower, upper
        self.scale = 1.0 + float(np.abs(c).max(initial=0.0))

    def project(self, z):
        return np.clip(z, self.lower, self.upper)

    def residual(self, z):
        return self.a @ z - self.rhs

    def lagrangian(self, z, mu, penalty):
        r = self.residual(z)
        value = self.c @ z + self.qd @ (z * z) + mu @ r + 0.5 * penalty * (r @ r)
        grad = self.c + 2.0 * self.qd * z + self.a.T @ (mu + penalty * r)
        return value, grad


def _minimize_box(problem: _SlotProblem, z, mu, penalty, tol, max_iterations):
    """
    Projected gradient descent with Barzilai-Borwein steps and an
    Armijo backtrack along the projection arc.
    """
    value, grad = problem.lagrangian(z, mu, penalty)
    alpha = 1.0 / (penalty + 2.0 * problem.qd.max(initial=0.0) + 1.0)
    for n in range(1, max_iterations + 1):
        if np.abs(problem.project(z - grad) - z).max(initial=0.0) <= tol:
            return z, n, True
        step = alpha
        while True:
            z_new = problem.project(z - step * grad)
            value_new, grad_new = problem.lagrangian(z_new, mu, penalty)
            if value_new <= value + 1e-4 * grad @ (z_new - z) or step < 1e-16:
                break
            step *= 0.5
        s = z_new - z
        y = grad_new - grad
        sy = s @ y
        alpha = ALPHA_MAX if sy <= 0 else float(np.clip(sy / (y @ y), ALPHA_MIN, ALPHA_MAX))
        z, value, grad = z_new, value_new, grad_new
    return z, max_iterations, False


def centralized_subproblem(
    ds: Optional[DualState],
    slot: SlotData,
    cfg: ParkConfig,
    tol: Optional[float] = None,
    caps: Optional[Sequence[StorageCaps]] = None,
    served=None,
) -> OracleReport:
    """
    Minimizes the slot cost plus the storage multipliers' price on net
    charging over every hub at once, with an augmented Lagrangian on
    the balance constraints.

    `caps` limits charge and discharge per hub and `served` replaces
    the inelastic loads with what is left of them after shifting.
    With `ds` None the storage multipliers are zero.

    :raises NotConverged: if the balance residual or the projected
        gradient does not fall under the tolerance.
    """
    tol = settings.PARKOPT_ORACLE_TOLERANCE if tol is None else tol
    max_iterations = settings.PARKOPT_ORACLE_MAX_ITERATIONS
    problem = _SlotProblem(ds, slot, cfg, caps, served)

    inner_tol = max(tol * problem.scale * 1e2, 1e-12)
    feasibility = max(tol * 100.0, 1e-12)
    z = problem.project(np.zeros(len(problem.c)))
    mu = np.zeros(len(problem.rhs))
    penalty = 100.0
    last = np.inf
    iterations = 0
    done = False

    for outer in range(200):
        z, n, settled = _minimize_box(problem, z, mu, penalty, inner_tol, max_iterations)
        iterations += n
        r = problem.residual(z)
        size = float(np.abs(r).max(initial=0.0))
        mu = mu + penalty * r
        if settled and size <= feasibility:
            done = True
            break
        if size > 0.25 * last and penalty < 1e8:
            penalty *= 10.0
        last = size

    if not done:
        raise NotConverged(
            f"slot {slot.t}: balance residual {size:.3g} after {iterations} "
            f"descent iterations"
        )

    d = _assemble(z, slot, cfg, served, problem.fixed)
    lambda_e = np.zeros(cfg.n_hubs) if ds is None else ds.lambda_e
    lambda_h = np.zeros(cfg.n_hubs) if ds is None else ds.lambda_h
    logger.debug(f"[PARKOPT] oracle settled slot {slot.t} in {iterations} iterations")
    return OracleReport(
        objective=slot_objective(d, slot, cfg, lambda_e, lambda_h),
        dispatch=d,
        method="projected-descent",
        resolution=tol,
        iterations=iterations,
    )


def _axis(upper: float, h: float) -> np.ndarray:
    if upper <= 0:
        return np.zeros(1)
    return np.unique(np.append(np.arange(0.0, upper, h), upper))


def brute_force_small(
    slot: SlotData,
    cfg: ParkConfig,
    h: float,
    ds: Optional[DualState] = None,
    caps: Optional[Sequence[StorageCaps]] = None,
    served=None,
    chunk: int = 1_000_000,
) -> OracleReport:
    """
    Enumerates every device and elastic-load decision on a grid of
    step `h`.  Import and venting follow from the balances, so every
    point kept is exactly balanced and the result is an upper bound on
    the true optimum.  Hubs are solved one at a time.

    :raises GridTooLarge: if a hub's grid exceeds
        :code:`PARKOPT_GRID_LIMIT` points.
    """
    n_hubs = cfg.n_hubs
    caps = caps or [StorageCaps.of(p) for p in cfg.hubs]
    lambda_e = np.zeros(n_hubs) if ds is None else ds.lambda_e
    lambda_h = np.zeros(n_hubs) if ds is None else ds.lambda_h
    fixed = _fixed_demand(slot, cfg, served)
    limit = settings.PARKOPT_GRID_LIMIT
    width = len(HUB_VARIABLES) + cfg.n_el
    z = np.zeros(n_hubs * width)

    for k, params in enumerate(cfg.hubs):
        cap = caps[k]
        names = ["E_o", "C_e", "D_e", "C_h", "D_h", "G_chp", "G_b"]
        axes = [
            _axis(cfg.e_o_share[k], h),
            _axis(cap.c_e, h),
            _axis(cap.d_e, h),
            _axis(cap.c_h, h),
            _axis(cap.d_h, h),
            _axis(params.g_chp_max, h),
            _axis(params.g_b_max, h),
        ] + [_axis(cfg.el_bound[k, q], h) for q in range(cfg.n_el)]
        shape = tuple(len(ax) for ax in axes)
        total = int(np.prod(shape, dtype=np.int64))
        if total > limit:
            raise GridTooLarge(
                f"hub {k} grid has {total} points, limit is {limit}"
            )

        best_value, best_point = np.inf, None
        for start in range(0, total, chunk):
            flat = np.arange(start, min(start + chunk, total))
            point = [ax[i] for ax, i in zip(axes, np.unravel_index(flat, shape))]
            e_o, c_e, d_e, c_h, d_h, g_chp, g_b = point[:7]
            el = point[7:]

            demand_e = fixed[k, ELECTRICITY] + sum(
                x for x, energy in zip(el, cfg.el_energy) if energy == ELECTRICITY
            )
            demand_h = fixed[k, HEAT] + sum(
                x for x, energy in zip(el, cfg.el_energy) if energy == HEAT
            )
            e = demand_e - (float(slot.r[k]) + params.eta_pg * g_chp + d_e - c_e - e_o)
            vent = params.eta_hg * g_chp + params.eta_bg * g_b + d_h - c_h - demand_h

            ok = (
                (e >= -1e-12)
                & (e <= cfg.e_share[k] + 1e-12)
                & (vent >= -1e-12)
                & (demand_e <= cfg.x_max[k, ELECTRICITY] + 1e-12)
                & (demand_h <= cfg.x_max[k, HEAT] + 1e-12)
            )
            value = (
                slot.p_e * e
                - slot.p_o * e_o
                + slot.p_g * (g_chp + g_b)
                + lambda_e[k] * (c_e - d_e)
                + lambda_h[k] * (c_h - d_h)
            )
            for q, x in enumerate(el):
                value = value - utility(cfg.el_a[k, q], cfg.el_b[k, q], x)
            value = np.where(ok, value, np.inf)
            j = int(np.argmin(value))
            if value[j] < best_value:
                best_value = float(value[j])
                best_point = {
                    "E": max(float(np.broadcast_to(e, value.shape)[j]), 0.0),
                    "V": max(float(np.broadcast_to(vent, value.shape)[j]), 0.0),
                    "x_E": float(np.broadcast_to(demand_e, value.shape)[j]),
                    "x_H": float(np.broadcast_to(demand_h, value.shape)[j]),
                    **{name: float(p[j]) for name, p in zip(names, point[:7])},
                    **{f"el_{q}": float(x[j]) for q, x in enumerate(el)},
                }

        if best_point is None:
            raise NotConverged(f"hub {k} has no balanced point on a grid of step {h}")
        base = k * width
        for name, value in best_point.items():
            if name.startswith("el_"):
                z[base + len(HUB_VARIABLES) + int(name[3:])] = value
            else:
                z[base + _IDX[name]] = value

    d = _assemble(z, slot, cfg, served, fixed)
    return OracleReport(
        objective=slot_objective(d, slot, cfg, lambda_e, lambda_h),
        dispatch=d,
        method="grid",
        resolution=h,
    )


def relaxed_lower_bound(
    scenario: ScenarioSeries, cfg: ParkConfig, cuts: Optional[int] = None
) -> RelaxedBound:
    """
    Solves the offline problem over the whole horizon with storage
    only required to charge as much as it discharges on average, and
    returns its per-slot optimum.  Elastic utilities are replaced by
    tangent cuts and inelastic loads are served as given.
    """
    cuts = cuts or settings.PARKOPT_UTILITY_CUTS
    T, n_hubs, n_el = len(scenario), cfg.n_hubs, cfg.n_el
    n_base = len(HUB_VARIABLES)
    width = n_base + 2 * n_el
    n = T * n_hubs * width

    c = np.zeros(n)
    lower = np.zeros(n)
    upper = np.zeros(n)
    eq_rows, eq_cols, eq_vals = [], [], []
    b_eq = np.zeros(4 * T * n_hubs + 2 * n_hubs)
    ub_rows, ub_cols, ub_vals, b_ub = [], [], [], []
    constant = 0.0

    def put(rows, cols, vals, r, j, v):
        rows.append(r)
        cols.append(j)
        vals.append(v)

    storage_row = 4 * T * n_hubs
    for t in range(T):
        slot = scenario.slot(t)
        fixed = _fixed_demand(slot, cfg, None)
        constant += slot.p_g * slot.g_load
        constant -= float(np.sum(utility(cfg.il_a, cfg.il_b, slot.x_il)))
        for k, params in enumerate(cfg.hubs):
            base = (t * n_hubs + k) * width
            at = lambda name: base + _IDX[name]  # noqa: E731
            cap = StorageCaps.of(params)
            c[at("E")] = slot.p_e
            c[at("E_o")] = -slot.p_o
            c[at("G_chp")] = slot.p_g
            c[at("G_b")] = slot.p_g
            for name, high in (
                ("E", cfg.e_share[k]),
                ("E_o", cfg.e_o_share[k]),
                ("C_e", cap.c_e),
                ("D_e", cap.d_e),
                ("C_h", cap.c_h),
                ("D_h", cap.d_h),
                ("G_chp", params.g_chp_max),
                ("G_b", params.g_b_max),
                ("V", _vent_limit(params, cap)),
                ("x_E", cfg.x_max[k, ELECTRICITY]),
                ("x_H", cfg.x_max[k, HEAT]),
            ):
                upper[at(name)] = high

            row = 4 * (t * n_hubs + k)
            for name, coef in (
                ("E", 1.0),
                ("E_o", -1.0),
                ("C_e", -1.0),
                ("D_e", 1.0),
                ("G_chp", params.eta_pg),
                ("x_E", -1.0),
            ):
                put(eq_rows, eq_cols, eq_vals, row, at(name), coef)
            b_eq[row] = -float(slot.r[k])
            for name, coef in (
                ("C_h", -1.0),
                ("D_h", 1.0),
                ("G_chp", params.eta_hg),
                ("G_b", params.eta_bg),
                ("V", -1.0),
                ("x_H", -1.0),
            ):
                put(eq_rows, eq_cols, eq_vals, row + 1, at(name), coef)
            put(eq_rows, eq_cols, eq_vals, row + 2, at("x_E"), 1.0)
            put(eq_rows, eq_cols, eq_vals, row + 3, at("x_H"), 1.0)
            b_eq[row + 2] = fixed[k, ELECTRICITY]
            b_eq[row + 3] = fixed[k, HEAT]

            put(eq_rows, eq_cols, eq_vals, storage_row + k, at("C_e"), 1.0)
            put(eq_rows, eq_cols, eq_vals, storage_row + k, at("D_e"), -1.0)
            put(eq_rows, eq_cols, eq_vals, storage_row + n_hubs + k, at("C_h"), 1.0)
            put(eq_rows, eq_cols, eq_vals, storage_row + n_hubs + k, at("D_h"), -1.0)

            for q, energy in enumerate(cfg.el_energy):
                x_j = base + n_base + 2 * q
                u_j = x_j + 1
                a, b, bound = cfg.el_a[k, q], cfg.el_b[k, q], cfg.el_bound[k, q]
                upper[x_j] = bound
                lower[u_j], upper[u_j] = -np.inf, np.inf
                c[u_j] = -1.0
                put(eq_rows, eq_cols, eq_vals, row + 2 + energy, x_j, -1.0)
                for x0 in np.linspace(0.0, bound, cuts):
                    slope = 2.0 * a * x0 + b
                    r_ub = len(b_ub)
                    put(ub_rows, ub_cols, ub_vals, r_ub, u_j, 1.0)
                    put(ub_rows, ub_cols, ub_vals, r_ub, x_j, -slope)
                    b_ub.append(utility(a, b, x0) - slope * x0)

    a_eq = sparse.csr_matrix((eq_vals, (eq_rows, eq_cols)), shape=(len(b_eq), n))
    a_ub = None
    if b_ub:
        a_ub = sparse.csr_matrix((ub_vals, (ub_rows, ub_cols)), shape=(len(b_ub), n))
    result = linprog(
        c / T,
        A_ub=a_ub,
        b_ub=np.asarray(b_ub) if b_ub else None,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=np.column_stack([lower, upper]),
        method="highs",
    )
    if result.status != 0:
        raise NotConverged(f"relaxed horizon problem failed: {result.message}")

    marginals = np.asarray(result.eqlin.marginals)[storage_row:] * T
    return RelaxedBound(
        value=float(result.fun) + constant / T,
        lambda_e=marginals[:n_hubs],
        lambda_h=marginals[n_hubs:],
    )
