"""
Agent subproblems solved in every mini-slot.

Elastic loads answer the broadcast price in closed form.  A hub
answers with the minimizer of its linear cost over its device boxes.
For fixed CHP gas the hub problem splits into an electricity node and
a heat node, each cleared exactly by merit order; the CHP gas is then
chosen among the breakpoints of the resulting convex piecewise-linear
cost.  Inside the mini-slot loop the hubs add a proximal term on their
deliveries, which makes their answer unique.
"""
from collections import namedtuple
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from parkopt.errors import Infeasible, InvariantBroken, Unbounded
from parkopt.model import EPS, HubParams, ParkConfig, SlotData

_Leg = namedtuple("_Leg", "price capacity key")


def solve_user_subproblem(tau, a, b, bound):
    """
    Consumption maximizing :code:`a * x ** 2 + b * x - tau * x` on
    :code:`[0, bound]`.  Works elementwise on arrays.
    """
    x = (np.asarray(b, dtype=float) - tau) / (-2.0 * np.asarray(a, dtype=float))
    x = np.clip(x, 0.0, bound)
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class HubShares:
    """
    One hub's share of the park trade limits and its delivery bounds.
    """

    e_max: float
    e_o_max: float
    g_max: float
    x_e_max: float = np.inf
    x_h_max: float = np.inf

    @classmethod
    def of(cls, cfg: ParkConfig, hub: int) -> "HubShares":
        return cls(
            e_max=float(cfg.e_share[hub]),
            e_o_max=float(cfg.e_o_share[hub]),
            g_max=float(cfg.g_share[hub]),
            x_e_max=float(cfg.x_max[hub, 0]),
            x_h_max=float(cfg.x_max[hub, 1]),
        )


@dataclass(frozen=True)
class StorageCaps:
    c_e: float
    d_e: float
    c_h: float
    d_h: float

    @classmethod
    def of(cls, params: HubParams) -> "StorageCaps":
        return cls(params.c_e_max, params.d_e_max, params.c_h_max, params.d_h_max)

    @classmethod
    def closed(cls) -> "StorageCaps":
        return cls(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class HubResponse:
    e: float
    e_o: float
    c_e: float
    d_e: float
    c_h: float
    d_h: float
    g_chp: float
    g_b: float
    vent: float
    x_e: float
    x_h: float
    objective: float
    caps: StorageCaps


def _clear(
    mandatory: float, sources: List[_Leg], sinks: List[_Leg]
) -> Optional[Tuple[float, Dict[str, float]]]:
    """
    Cheapest way to route `mandatory` inflow plus any profitable
    source energy into the sinks.  Returns None if the mandatory
    inflow does not fit.
    """
    sinks = sorted(sinks, key=lambda leg: -leg.price)
    sources = sorted(sources, key=lambda leg: leg.price)
    flows = {leg.key: 0.0 for leg in sources + sinks}
    room = [leg.capacity for leg in sinks]
    cost = 0.0

    left = mandatory
    for j, sink in enumerate(sinks):
        if left <= 0:
            break
        q = min(left, room[j])
        flows[sink.key] += q
        room[j] -= q
        cost -= sink.price * q
        left -= q
    if left > EPS:
        return None

    supply = [leg.capacity for leg in sources]
    i = j = 0
    while i < len(sources) and j < len(sinks):
        if supply[i] <= EPS:
            i += 1
            continue
        if room[j] <= EPS:
            j += 1
            continue
        if sources[i].price >= sinks[j].price:
            break
        q = min(supply[i], room[j])
        flows[sources[i].key] += q
        flows[sinks[j].key] += q
        supply[i] -= q
        room[j] -= q
        cost += (sources[i].price - sinks[j].price) * q

    return cost, flows


def _breakpoints(sources: List[_Leg], sinks: List[_Leg]) -> List[float]:
    """
    Mandatory inflows at which the cleared cost of a node can change
    slope.
    """
    filled, total = [], 0.0
    for leg in sorted(sinks, key=lambda leg: -leg.price):
        total += leg.capacity
        if not np.isfinite(total):
            break
        filled.append(total)
    used, total = [0.0], 0.0
    for leg in sorted(sources, key=lambda leg: leg.price):
        total += leg.capacity
        used.append(total)
    return [s - p for s in filled for p in used]


def _hub_legs(
    lambda_e: float,
    lambda_h: float,
    p_e: float,
    p_o: float,
    p_g: float,
    hub: HubParams,
    shares: HubShares,
    caps: StorageCaps,
    g_load: float,
) -> Tuple[List[_Leg], List[_Leg], List[_Leg], List[_Leg]]:
    """
    Sources and sinks of the electricity and heat nodes, delivery legs
    left out.
    """
    if p_o > p_e + EPS:
        raise Unbounded(f"selling price {p_o} exceeds buying price {p_e}")
    if g_load + hub.g_chp_max + hub.g_b_max > shares.g_max + EPS:
        raise Infeasible(
            f"gas share {shares.g_max} cannot cover load {g_load} "
            f"plus CHP {hub.g_chp_max} and boiler {hub.g_b_max}"
        )
    e_sources = [
        _Leg(-lambda_e, caps.d_e, "discharge"),
        _Leg(p_e, shares.e_max, "import"),
    ]
    e_sinks = [
        _Leg(-lambda_e, caps.c_e, "charge"),
        _Leg(p_o, shares.e_o_max, "export"),
    ]
    h_sources = [
        _Leg(p_g / hub.eta_bg, hub.h_b_max, "boiler"),
        _Leg(-lambda_h, caps.d_h, "discharge"),
    ]
    h_sinks = [
        _Leg(-lambda_h, caps.c_h, "charge"),
        _Leg(0.0, np.inf, "vent"),
    ]
    return e_sources, e_sinks, h_sources, h_sinks


def _gas_ceiling(hub: HubParams, e_room: float, r: float) -> float:
    g_high = hub.g_chp_max
    if hub.eta_pg > 0:
        g_high = min(g_high, (e_room - r) / hub.eta_pg)
    return max(g_high, 0.0)


def _response(hub, caps, g, e_flows, h_flows, objective) -> HubResponse:
    return HubResponse(
        e=e_flows["import"],
        e_o=e_flows["export"],
        c_e=e_flows["charge"],
        d_e=e_flows["discharge"],
        c_h=h_flows["charge"],
        d_h=h_flows["discharge"],
        g_chp=g,
        g_b=h_flows["boiler"] / hub.eta_bg,
        vent=h_flows["vent"],
        x_e=e_flows["deliver"],
        x_h=h_flows["deliver"],
        objective=objective,
        caps=caps,
    )


def solve_hub_subproblem(
    tau_e: float,
    tau_h: float,
    lambda_e: float,
    lambda_h: float,
    p_e: float,
    p_o: float,
    p_g: float,
    r: float,
    hub: HubParams,
    shares: HubShares,
    caps: Optional[StorageCaps] = None,
    g_load: float = 0.0,
) -> HubResponse:
    """
    Minimizes
    :code:`p_e*E - p_o*E_o + p_g*(G_chp + G_b) + lambda_e*(C_e - D_e)
    + lambda_h*(C_h - D_h) - tau_e*x_e - tau_h*x_h`
    over the hub's boxes, where :code:`x_e` and :code:`x_h` are the
    electricity and heat the hub delivers.  Among several optima the
    one with less grid trade, then less storage cycling, then less gas
    is returned.

    :raises Unbounded: if export pays more than import costs.
    :raises Infeasible: if the gas share cannot cover the hub's gas
        load and devices, or the renewable output cannot be absorbed.
    """
    if caps is None:
        caps = StorageCaps.of(hub)
    e_sources, e_sinks, h_sources, h_sinks = _hub_legs(
        lambda_e, lambda_h, p_e, p_o, p_g, hub, shares, caps, g_load
    )
    e_sinks.insert(0, _Leg(tau_e, shares.x_e_max, "deliver"))
    h_sinks.insert(0, _Leg(tau_h, shares.x_h_max, "deliver"))

    e_room = sum(leg.capacity for leg in e_sinks)
    if r > e_room + EPS:
        raise Infeasible(f"renewable output {r} exceeds what the hub can take")
    g_high = _gas_ceiling(hub, e_room, r)

    candidates = {0.0, g_high}
    for m in _breakpoints(e_sources, e_sinks):
        candidates.add((m - r) / hub.eta_pg)
    for m in _breakpoints(h_sources, h_sinks):
        candidates.add(m / hub.eta_hg)
    grid = sorted(g for g in candidates if 0.0 <= g <= g_high)

    cleared = {}

    def cost(g):
        if g not in cleared:
            e_node = _clear(r + hub.eta_pg * g, e_sources, e_sinks)
            h_node = _clear(hub.eta_hg * g, h_sources, h_sinks)
            if e_node is None:
                cleared[g] = (np.inf, None, None)
            else:
                cleared[g] = (p_g * g + e_node[0] + h_node[0], e_node[1], h_node[1])
        return cleared[g][0]

    # leftmost minimum of a convex sequence
    lo, hi = 0, len(grid) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        here = cost(grid[mid])
        if cost(grid[mid + 1]) < here - 1e-12 * (1.0 + abs(here)):
            lo = mid + 1
        else:
            hi = mid

    g = grid[lo]
    objective, e_flows, h_flows = (cost(g), *cleared[g][1:])
    if e_flows is None:
        raise Infeasible(f"renewable output {r} exceeds what the hub can take")
    return _response(hub, caps, g, e_flows, h_flows, objective)


class _Node:
    """
    An energy node of a hub without its delivery leg.  Net inflow
    :code:`u` above :code:`u_min` first turns off the dearest sources
    and then fills the best paying sinks, so the node cost is convex and
    piecewise linear in :code:`u` with slopes minus the leg prices.
    """

    def __init__(self, sources: List[_Leg], sinks: List[_Leg]):
        legs = [(leg, True) for leg in sources] + [(leg, False) for leg in sinks]
        self.legs = sorted(legs, key=lambda item: (-item[0].price, not item[1]))
        self.u_min = -sum(leg.capacity for leg in sources)
        self.u_max = sum(leg.capacity for leg in sinks)
        self.base = sum(leg.price * leg.capacity for leg in sources)
        self.starts, total = [], 0.0
        for leg, _ in self.legs:
            self.starts.append(total)
            total += leg.capacity
        self.kinks = [
            self.u_min + start for start in self.starts[1:] if np.isfinite(start)
        ]

    def value(self, u: float) -> float:
        """
        Price of the leg that takes inflow just above `u`.
        """
        pos = u - self.u_min
        if pos < 0:
            return np.inf
        for (leg, _), start in zip(self.legs, self.starts):
            if start <= pos < start + leg.capacity:
                return leg.price
        return -np.inf

    def clear(self, u: float) -> Tuple[float, Dict[str, float]]:
        left = u - self.u_min
        cost = self.base
        flows = {}
        for leg, is_source in self.legs:
            q = min(leg.capacity, max(left, 0.0))
            left -= q
            cost -= leg.price * q
            flows[leg.key] = leg.capacity - q if is_source else q
        return cost, flows

    def deliver(
        self, m: float, tau: float, center: float, prox: float, cap: float
    ) -> Optional[Tuple[float, float]]:
        """
        Delivery :code:`x` minimizing the node cost at :code:`u = m - x`
        minus :code:`tau * x` plus :code:`(x - center)**2 / (2*prox)`
        on :code:`[0, cap]`, together with the right derivative of the
        minimum in the inflow `m`.  None if `m` cannot be absorbed.
        """
        lo = max(0.0, m - self.u_max)
        hi = min(cap, m - self.u_min)
        if lo > hi + EPS:
            return None
        hi = max(hi, lo)

        edges = sorted({lo, hi} | {m - k for k in self.kinks if lo < m - k < hi})
        x = hi
        for a, b in zip(edges, edges[1:]):
            target = center + prox * (tau - self.value(m - 0.5 * (a + b)))
            if target <= b:
                x = max(a, target)
                break

        u = m - x
        if x >= cap - EPS:
            slope = -self.value(u)
        elif x <= EPS:
            slope = min(-self.value(u), -tau - center / prox)
        else:
            slope = -tau + (x - center) / prox
        return x, slope


def solve_hub_proximal(
    tau_e: float,
    tau_h: float,
    lambda_e: float,
    lambda_h: float,
    p_e: float,
    p_o: float,
    p_g: float,
    r: float,
    hub: HubParams,
    shares: HubShares,
    center: Tuple[float, float],
    prox: float,
    caps: Optional[StorageCaps] = None,
    g_load: float = 0.0,
) -> HubResponse:
    """
    Same hub problem as :func:`solve_hub_subproblem` with the term
    :code:`|x - center|**2 / (2*prox)` added on the delivered
    electricity and heat.  The delivery is then unique and moves
    continuously with the prices.

    For fixed CHP gas each node is solved piece by piece along the
    kinks of its cost.  The hub cost is convex in the gas, whose
    leftmost minimizer is found by bisection on the right derivative.
    The reported objective leaves the proximal term out.
    """
    if prox <= 0:
        raise ValueError(f"proximal weight must be positive, got {prox}")
    if caps is None:
        caps = StorageCaps.of(hub)
    e_sources, e_sinks, h_sources, h_sinks = _hub_legs(
        lambda_e, lambda_h, p_e, p_o, p_g, hub, shares, caps, g_load
    )
    e_node = _Node(e_sources, e_sinks)
    h_node = _Node(h_sources, h_sinks)

    e_room = e_node.u_max + shares.x_e_max
    if r > e_room + EPS:
        raise Infeasible(f"renewable output {r} exceeds what the hub can take")
    g_high = _gas_ceiling(hub, e_room, r)

    def settle(g):
        e = e_node.deliver(
            r + hub.eta_pg * g, tau_e, center[0], prox, shares.x_e_max
        )
        h = h_node.deliver(hub.eta_hg * g, tau_h, center[1], prox, shares.x_h_max)
        return e, h

    def slope(g):
        e, h = settle(g)
        if e is None:
            return np.inf
        return p_g + hub.eta_pg * e[1] + hub.eta_hg * h[1]

    if g_high <= 0 or slope(0.0) >= 0:
        g = 0.0
    elif slope(g_high) < 0:
        g = g_high
    else:
        lo, hi = 0.0, g_high
        while hi - lo > 1e-11 * (1.0 + g_high):
            mid = 0.5 * (lo + hi)
            if slope(mid) >= 0:
                hi = mid
            else:
                lo = mid
        g = hi

    e, h = settle(g)
    if e is None:
        raise Infeasible(f"renewable output {r} exceeds what the hub can take")
    x_e, x_h = e[0], h[0]
    e_cost, e_flows = e_node.clear(r + hub.eta_pg * g - x_e)
    h_cost, h_flows = h_node.clear(hub.eta_hg * g - x_h)
    e_flows["deliver"] = x_e
    h_flows["deliver"] = x_h
    objective = p_g * g + e_cost + h_cost - tau_e * x_e - tau_h * x_h
    return _response(hub, caps, g, e_flows, h_flows, objective)


def certify_hub_response(
    response: HubResponse,
    tau_e: float,
    tau_h: float,
    lambda_e: float,
    lambda_h: float,
    p_e: float,
    p_o: float,
    p_g: float,
    r: float,
    hub: HubParams,
    shares: HubShares,
    tolerance: float = 1e-6,
) -> float:
    """
    Re-solves the hub problem as a linear program with HiGHS and
    returns its optimum.

    :raises InvariantBroken: if `response` is not optimal.
    """
    caps = response.caps
    c = np.array(
        [
            p_e - tau_e,
            tau_e - p_o,
            lambda_e + tau_e,
            -lambda_e - tau_e,
            lambda_h + tau_h,
            -lambda_h - tau_h,
            p_g - tau_e * hub.eta_pg - tau_h * hub.eta_hg,
            p_g - tau_h * hub.eta_bg,
            tau_h,
        ]
    )
    row_e = np.array([1.0, -1.0, -1.0, 1.0, 0.0, 0.0, hub.eta_pg, 0.0, 0.0])
    row_h = np.array([0.0, 0.0, 0.0, 0.0, -1.0, 1.0, hub.eta_hg, hub.eta_bg, -1.0])

    a_ub = [-row_e, -row_h]
    b_ub = [r, 0.0]
    if np.isfinite(shares.x_e_max):
        a_ub.append(row_e)
        b_ub.append(shares.x_e_max - r)
    if np.isfinite(shares.x_h_max):
        a_ub.append(row_h)
        b_ub.append(shares.x_h_max)

    bounds = [
        (0.0, shares.e_max),
        (0.0, shares.e_o_max),
        (0.0, caps.c_e),
        (0.0, caps.d_e),
        (0.0, caps.c_h),
        (0.0, caps.d_h),
        (0.0, hub.g_chp_max),
        (0.0, hub.g_b_max),
        (0.0, None),
    ]
    result = linprog(
        c, A_ub=np.array(a_ub), b_ub=np.array(b_ub), bounds=bounds, method="highs"
    )
    if result.status == 3:
        raise Unbounded("hub linear program is unbounded")
    if result.status != 0:
        raise Infeasible(f"hub linear program failed: {result.message}")

    optimum = float(result.fun) - tau_e * r
    if abs(response.objective - optimum) > tolerance * max(1.0, abs(optimum)):
        raise InvariantBroken(
            f"hub response costs {response.objective}, optimum is {optimum}"
        )
    return optimum


class HubAgent:
    """
    One hub taking part in the mini-slot iterations.
    """

    def __init__(self, index: int, params: HubParams, shares: HubShares):
        self.index = index
        self.params = params
        self.shares = shares

    @classmethod
    def for_park(cls, cfg: ParkConfig) -> List["HubAgent"]:
        return [
            cls(k, params, HubShares.of(cfg, k)) for k, params in enumerate(cfg.hubs)
        ]

    def storage_caps(self, b: float, w: float, b_virt: float, w_virt: float) -> StorageCaps:
        """
        Charge and discharge limits for the coming slot, reduced so that
        both the physical and the multiplier-implied state of charge stay
        within capacity.
        """
        p = self.params
        return StorageCaps(
            c_e=max(0.0, min(p.c_e_max, (p.b_max - b) / p.eta_ce, p.b_max - b_virt)),
            d_e=max(0.0, min(p.d_e_max, p.eta_de * (b - p.b_min), b_virt - p.b_min)),
            c_h=max(0.0, min(p.c_h_max, (p.w_max - w) / p.eta_ch, p.w_max - w_virt)),
            d_h=max(0.0, min(p.d_h_max, p.eta_dh * (w - p.w_min), w_virt - p.w_min)),
        )

    def respond(
        self,
        tau: np.ndarray,
        lambda_e: float,
        lambda_h: float,
        slot: SlotData,
        caps: StorageCaps,
        g_load: float = 0.0,
        center: Optional[np.ndarray] = None,
        prox: Optional[float] = None,
    ) -> HubResponse:
        """
        Best response to the balance prices `tau`.  With a `center` and
        a `prox` weight the deliveries are kept close to `center`.
        """
        args = (
            float(tau[0]),
            float(tau[1]),
            float(lambda_e),
            float(lambda_h),
            slot.p_e,
            slot.p_o,
            slot.p_g,
            float(slot.r[self.index]),
            self.params,
            self.shares,
        )
        if center is None or prox is None:
            return solve_hub_subproblem(*args, caps, g_load=g_load)
        center = (float(center[0]), float(center[1]))
        return solve_hub_proximal(*args, center, prox, caps, g_load=g_load)
