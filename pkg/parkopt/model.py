"""
Domain types and accounting for the industrial park: hub devices,
storage dynamics, the per-slot decision vector and its feasibility.

All quantities are MWh per slot and prices are ¥/MWh.
"""
from dataclasses import dataclass, field, replace
from typing import ClassVar, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from parkopt.errors import (
    BoundViolation,
    CapacityViolation,
    InvalidConfig,
    NegativeValue,
    PriceOrderError,
    SchemaError,
)
from parkopt.incentive import ShiftModel

ELECTRICITY = 0
HEAT = 1
ENERGIES = ("E", "H")

#: Absolute slack applied to device and storage bounds.
EPS = 1e-9


@dataclass(frozen=True)
class HubParams:
    """
    Device limits and efficiencies of one energy hub.  Defaults are
    the reference plant: a 4 MWh battery and tank, 1 MWh/slot charge
    and discharge, a 1 MWh CHP and a 3 MWh boiler.
    """

    b_min: float = 0.0
    b_max: float = 4.0
    w_min: float = 0.0
    w_max: float = 4.0
    c_e_max: float = 1.0
    d_e_max: float = 1.0
    c_h_max: float = 1.0
    d_h_max: float = 1.0
    eta_ce: float = 0.98
    eta_de: float = 0.98
    eta_ch: float = 0.98
    eta_dh: float = 0.98
    eta_pg: float = 0.35
    eta_hg: float = 0.45
    eta_bg: float = 0.85
    e_chp_max: float = 1.0
    h_chp_max: float = 1.5
    h_b_max: float = 3.0
    b_init: float = 2.0
    w_init: float = 2.0

    def __post_init__(self):
        if not self.b_min < self.b_max:
            raise InvalidConfig(
                "battery capacity range is empty", field="b_min/b_max"
            )
        if not self.w_min < self.w_max:
            raise InvalidConfig(
                "tank capacity range is empty", field="w_min/w_max"
            )
        for name in (
            "eta_ce",
            "eta_de",
            "eta_ch",
            "eta_dh",
            "eta_pg",
            "eta_hg",
            "eta_bg",
        ):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise InvalidConfig(f"{value} is not in (0, 1]", field=name)
        for name in (
            "c_e_max",
            "d_e_max",
            "c_h_max",
            "d_h_max",
            "e_chp_max",
            "h_chp_max",
            "h_b_max",
        ):
            if getattr(self, name) < 0:
                raise InvalidConfig("must be nonnegative", field=name)
        if self.battery_headroom <= 0:
            raise InvalidConfig(
                "b_max - b_min - d_e_max - c_e_max must be positive",
                field="b_max",
            )
        if not self.b_min <= self.b_init <= self.b_max:
            raise InvalidConfig("outside [b_min, b_max]", field="b_init")
        if not self.w_min <= self.w_init <= self.w_max:
            raise InvalidConfig("outside [w_min, w_max]", field="w_init")

    @property
    def battery_headroom(self) -> float:
        return self.b_max - self.b_min - self.d_e_max - self.c_e_max

    @property
    def g_chp_max(self) -> float:
        """
        Gas the CHP can burn in one slot before either output hits its
        capacity.
        """
        return min(self.e_chp_max / self.eta_pg, self.h_chp_max / self.eta_hg)

    @property
    def g_b_max(self) -> float:
        return self.h_b_max / self.eta_bg


def _as_array(value, shape, name, dtype=float) -> np.ndarray:
    arr = np.asarray(value, dtype=dtype)
    if arr.ndim == 0:
        arr = np.full(shape, arr, dtype=dtype)
    if arr.shape != tuple(shape):
        raise InvalidConfig(
            f"expected shape {tuple(shape)}, got {arr.shape}", field=name
        )
    return arr


@dataclass(frozen=True, eq=False)
class ParkConfig:
    """
    Static plant description.  Build it with :meth:`build` or
    :func:`load_park_config` so that defaults and invariants are
    applied.

    Elastic-load arrays are indexed (hub, type); :code:`el_energy`
    tells which carrier each type consumes.
    """

    hubs: Tuple[HubParams, ...]
    il_a: np.ndarray
    il_b: np.ndarray
    el_a: np.ndarray
    el_b: np.ndarray
    el_bound: np.ndarray
    el_energy: np.ndarray
    e_max: float
    g_max: float
    e_o_max: float
    e_share: np.ndarray
    g_share: np.ndarray
    e_o_share: np.ndarray
    x_max: np.ndarray
    shift: ShiftModel
    user_names: Tuple[str, ...] = ()
    el_names: Tuple[str, ...] = ()

    @property
    def n_hubs(self) -> int:
        return len(self.hubs)

    @property
    def n_users(self) -> int:
        return len(self.il_a)

    @property
    def n_el(self) -> int:
        return len(self.el_energy)

    @classmethod
    def build(
        cls,
        hubs: Sequence[HubParams],
        il_a,
        il_b,
        el_a,
        el_b,
        el_bound,
        el_energy,
        e_max: float,
        g_max: float,
        e_o_max: float,
        e_share=None,
        g_share=None,
        e_o_share=None,
        x_max=None,
        shift: Optional[ShiftModel] = None,
        user_names: Sequence[str] = (),
        el_names: Sequence[str] = (),
    ) -> "ParkConfig":
        hubs = tuple(hubs)
        n_hubs = len(hubs)
        if n_hubs == 0:
            raise InvalidConfig("at least one hub is required", field="hubs")

        il_a = np.atleast_1d(np.asarray(il_a, dtype=float))
        il_b = _as_array(il_b, il_a.shape, "users.b")
        el_energy = np.atleast_1d(np.asarray(el_energy, dtype=int))
        n_el = len(el_energy)
        el_a = _as_array(el_a, (n_hubs, n_el), "el_types.a")
        el_b = _as_array(el_b, (n_hubs, n_el), "el_types.b")
        el_bound = _as_array(el_bound, (n_hubs, n_el), "el_types.bound")

        if np.any(il_a >= 0):
            raise InvalidConfig("utilities must be concave (a < 0)", field="users.a")
        if np.any(el_a >= 0):
            raise InvalidConfig(
                "utilities must be concave (a < 0)", field="el_types.a"
            )
        if np.any(el_bound < 0):
            raise InvalidConfig("must be nonnegative", field="el_types.bound")
        if np.any((el_energy != ELECTRICITY) & (el_energy != HEAT)):
            raise InvalidConfig("unknown energy carrier", field="el_types.energy")

        for name, limit in (("e_max", e_max), ("g_max", g_max), ("e_o_max", e_o_max)):
            if limit < 0:
                raise InvalidConfig("must be nonnegative", field=f"trade.{name}")

        def split(share, limit, name):
            if share is None:
                return np.full(n_hubs, limit / n_hubs)
            share = _as_array(share, (n_hubs,), name)
            if np.any(share < 0):
                raise InvalidConfig("must be nonnegative", field=name)
            if abs(share.sum() - limit) > 1e-9 * max(1.0, abs(limit)):
                raise InvalidConfig(
                    f"shares sum to {share.sum()}, expected {limit}", field=name
                )
            return share

        e_share = split(e_share, e_max, "trade.e_share")
        g_share = split(g_share, g_max, "trade.g_share")
        e_o_share = split(e_o_share, e_o_max, "trade.e_o_share")

        if x_max is None:
            x_max = np.array(
                [
                    [
                        max(e_share[k] - hub.c_e_max, 0.0),
                        hub.h_chp_max + hub.h_b_max + hub.d_h_max,
                    ]
                    for k, hub in enumerate(hubs)
                ]
            )
        x_max = _as_array(x_max, (n_hubs, 2), "trade.x_max")
        if np.any(x_max < 0):
            raise InvalidConfig("must be nonnegative", field="trade.x_max")

        if shift is None:
            shift = ShiftModel(
                alpha=np.ones(len(il_a)),
                gamma=np.zeros(len(il_a)),
                beta=np.full(len(il_a), 1.0 / len(il_a)) if len(il_a) else None,
            )
        if len(shift.alpha) != len(il_a):
            raise InvalidConfig(
                "one shifting model per user is required", field="users"
            )

        return cls(
            hubs=hubs,
            il_a=il_a,
            il_b=il_b,
            el_a=el_a,
            el_b=el_b,
            el_bound=el_bound,
            el_energy=el_energy,
            e_max=float(e_max),
            g_max=float(g_max),
            e_o_max=float(e_o_max),
            e_share=e_share,
            g_share=g_share,
            e_o_share=e_o_share,
            x_max=x_max,
            shift=shift,
            user_names=tuple(user_names)
            or tuple(f"user_{i + 1}" for i in range(len(il_a))),
            el_names=tuple(el_names)
            or tuple(f"el_{q + 1}" for q in range(n_el)),
        )

    def replace(self, **changes) -> "ParkConfig":
        return replace(self, **changes)

    def without_storage(self) -> "ParkConfig":
        """
        The same park with every battery and tank unable to move
        energy.
        """
        hubs = tuple(
            replace(h, c_e_max=0.0, d_e_max=0.0, c_h_max=0.0, d_h_max=0.0)
            for h in self.hubs
        )
        return replace(self, hubs=hubs)


_CARRIERS = {"E": ELECTRICITY, "H": HEAT, "electricity": ELECTRICITY, "heat": HEAT}


def park_config_from_dict(data: dict) -> ParkConfig:
    """
    Builds a :class:`ParkConfig` from nested keys mirroring its
    fields: :code:`hubs`, :code:`users`, :code:`el_types`,
    :code:`trade` and :code:`shift`.
    """
    try:
        hub_fields = set(HubParams.__dataclass_fields__)
        hubs = []
        for k, raw in enumerate(data["hubs"]):
            unknown = set(raw) - hub_fields
            if unknown:
                raise InvalidConfig(
                    f"unknown keys {sorted(unknown)}", field=f"hubs[{k}]"
                )
            hubs.append(HubParams(**{key: float(v) for key, v in raw.items()}))

        users = data.get("users") or []
        el_types = data.get("el_types") or []
        trade = data["trade"]
        shift_conf = data.get("shift") or {}
    except KeyError as e:
        raise InvalidConfig("missing section", field=e.args[0])

    n_hubs = len(hubs)

    def per_hub(el, key):
        value = el[key]
        return [value] * n_hubs if np.isscalar(value) else list(value)

    try:
        energies = [_CARRIERS[str(el.get("energy", "E"))] for el in el_types]
    except KeyError as e:
        raise InvalidConfig(f"unknown carrier {e.args[0]}", field="el_types.energy")

    shares = [u.get("share") for u in users]
    beta = None
    if users and all(s is not None for s in shares):
        beta = np.asarray(shares, dtype=float)
    elif users:
        beta = np.full(len(users), 1.0 / len(users))

    shift = ShiftModel(
        alpha=np.asarray([u.get("alpha", 1.0) for u in users], dtype=float),
        gamma=np.asarray([u.get("gamma", 0.0) for u in users], dtype=float),
        beta=beta,
        eta=float(shift_conf.get("eta", 0.15)),
        window=int(shift_conf.get("window", 4)),
    )

    def matrix(key):
        if not el_types:
            return np.zeros((n_hubs, 0))
        return np.asarray([per_hub(el, key) for el in el_types], dtype=float).T

    return ParkConfig.build(
        hubs=hubs,
        il_a=[u["a"] for u in users],
        il_b=[u["b"] for u in users],
        el_a=matrix("a"),
        el_b=matrix("b"),
        el_bound=matrix("bound"),
        el_energy=energies,
        e_max=float(trade["e_max"]),
        g_max=float(trade["g_max"]),
        e_o_max=float(trade["e_o_max"]),
        e_share=trade.get("e_share"),
        g_share=trade.get("g_share"),
        e_o_share=trade.get("e_o_share"),
        x_max=trade.get("x_max"),
        shift=shift,
        user_names=[u.get("name", f"user_{i + 1}") for i, u in enumerate(users)],
        el_names=[el.get("name", f"el_{q + 1}") for q, el in enumerate(el_types)],
    )


def load_park_config(path: str) -> ParkConfig:
    with open(path, encoding="utf8") as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise InvalidConfig("park file must hold a mapping", field=path)
    return park_config_from_dict(data)


@dataclass(frozen=True, eq=False)
class StorageState:
    b: np.ndarray
    w: np.ndarray

    @classmethod
    def initial(cls, cfg: ParkConfig) -> "StorageState":
        return cls(
            b=np.array([h.b_init for h in cfg.hubs]),
            w=np.array([h.w_init for h in cfg.hubs]),
        )


def _check_rate(value: float, limit: float, name: str) -> None:
    if value < -EPS or value > limit + EPS:
        raise BoundViolation(f"{name}={value} outside [0, {limit}]")


def _step(level, low, high, charge, discharge, eta_c, eta_d, name):
    new = level + eta_c * charge - discharge / eta_d
    if new < low - EPS or new > high + EPS:
        raise CapacityViolation(f"{name} would reach {new}, outside [{low}, {high}]")
    return min(max(new, low), high)


def step_battery(
    state: StorageState, hub: int, c_e: float, d_e: float, params: HubParams
) -> StorageState:
    _check_rate(c_e, params.c_e_max, "C_e")
    _check_rate(d_e, params.d_e_max, "D_e")
    b = state.b.copy()
    b[hub] = _step(
        b[hub],
        params.b_min,
        params.b_max,
        c_e,
        d_e,
        params.eta_ce,
        params.eta_de,
        f"battery {hub}",
    )
    return replace(state, b=b)


def step_tank(
    state: StorageState, hub: int, c_h: float, d_h: float, params: HubParams
) -> StorageState:
    _check_rate(c_h, params.c_h_max, "C_h")
    _check_rate(d_h, params.d_h_max, "D_h")
    w = state.w.copy()
    w[hub] = _step(
        w[hub],
        params.w_min,
        params.w_max,
        c_h,
        d_h,
        params.eta_ch,
        params.eta_dh,
        f"tank {hub}",
    )
    return replace(state, w=w)


def chp_output(g_chp: float, params: HubParams) -> Tuple[float, float]:
    if g_chp < 0:
        raise BoundViolation(f"CHP gas {g_chp} is negative")
    e = params.eta_pg * g_chp
    h = params.eta_hg * g_chp
    if e > params.e_chp_max + EPS or h > params.h_chp_max + EPS:
        raise CapacityViolation(
            f"CHP output ({e}, {h}) exceeds ({params.e_chp_max}, {params.h_chp_max})"
        )
    return e, h


def boiler_output(g_b: float, params: HubParams) -> float:
    if g_b < 0:
        raise BoundViolation(f"boiler gas {g_b} is negative")
    h = params.eta_bg * g_b
    if h > params.h_b_max + EPS:
        raise CapacityViolation(f"boiler output {h} exceeds {params.h_b_max}")
    return h


@dataclass(frozen=True, eq=False)
class SlotData:
    """
    Exogenous inputs of one slot.
    """

    t: int
    p_e: float
    p_g: float
    p_o: float
    r: np.ndarray
    x_il: np.ndarray
    h_load: float
    g_load: float


SERIES_COLUMNS = ("p_e", "p_g", "p_o", "h_load", "g_load")


@dataclass(frozen=True, eq=False)
class ScenarioSeries:
    """
    Per-slot exogenous series over a horizon of T slots.  Renewables
    are indexed (slot, hub) and inelastic loads (slot, user).
    """

    p_e: np.ndarray
    p_g: np.ndarray
    p_o: np.ndarray
    r: np.ndarray
    x_il: np.ndarray
    h_load: np.ndarray
    g_load: np.ndarray

    def __post_init__(self):
        length = len(self.p_e)
        for name in ("p_g", "p_o", "r", "x_il", "h_load", "g_load"):
            if len(getattr(self, name)) != length:
                raise SchemaError(
                    f"series {name} has {len(getattr(self, name))} slots, "
                    f"expected {length}",
                    column=name,
                )
        if self.r.ndim != 2 or self.x_il.ndim != 2:
            raise SchemaError("renewables and loads must be 2-dimensional")
        for name in ("p_e", "p_g", "p_o", "r", "x_il", "h_load", "g_load"):
            values = getattr(self, name)
            negative = np.argwhere(values < 0)
            if len(negative):
                slot = int(negative[0][0])
                raise NegativeValue(
                    f"{name} is negative at slot {slot}", column=name, slot=slot
                )
        crossed = np.flatnonzero(self.p_o > self.p_e)
        if len(crossed):
            slot = int(crossed[0])
            raise PriceOrderError(
                f"p_o={self.p_o[slot]} exceeds p_e={self.p_e[slot]} "
                f"at slot {slot}",
                slot=slot,
            )

    def __len__(self) -> int:
        return len(self.p_e)

    @property
    def n_hubs(self) -> int:
        return self.r.shape[1]

    @property
    def n_users(self) -> int:
        return self.x_il.shape[1]

    @property
    def p_e_max(self) -> float:
        return float(self.p_e.max())

    @property
    def p_o_min(self) -> float:
        return float(self.p_o.min())

    def slot(self, t: int) -> SlotData:
        return SlotData(
            t=t,
            p_e=float(self.p_e[t]),
            p_g=float(self.p_g[t]),
            p_o=float(self.p_o[t]),
            r=self.r[t],
            x_il=self.x_il[t],
            h_load=float(self.h_load[t]),
            g_load=float(self.g_load[t]),
        )

    def head(self, length: int) -> "ScenarioSeries":
        return self.take(np.arange(min(length, len(self))))

    def take(self, index) -> "ScenarioSeries":
        return ScenarioSeries(
            **{
                name: getattr(self, name)[index]
                for name in ("p_e", "p_g", "p_o", "r", "x_il", "h_load", "g_load")
            }
        )

    def with_price_ratio(self, ratio: float) -> "ScenarioSeries":
        """
        Sets the selling price to :code:`p_e / ratio`.
        """
        if ratio < 1:
            raise InvalidConfig("p_e / p_o must be at least 1", field="price_ratio")
        return replace(self, p_o=self.p_e / ratio)

    def with_renewable_scale(self, scale: float) -> "ScenarioSeries":
        if scale < 0:
            raise InvalidConfig("must be nonnegative", field="renewable_scale")
        return replace(self, r=self.r * scale)


@dataclass(eq=False)
class Dispatch:
    """
    One slot's decisions.  Device and trade quantities are per hub;
    park-level trades are their sums.

    :code:`x` is the energy each hub delivers, indexed (hub, energy).
    :code:`x_ki` is indexed (hub, user, energy) and :code:`x_kq`
    (hub, EL type, energy).  :code:`g_k` is the hub's gas purchase,
    including its share of the inelastic gas load.

    :code:`p` is the incentive price of this slot, paid for load moved
    into it.  :code:`shifted` is the load each user moves out of the
    slot and :code:`incentive` what the park pays for it at the prices
    of the destination slots.
    """

    c_e: np.ndarray
    d_e: np.ndarray
    c_h: np.ndarray
    d_h: np.ndarray
    g_chp: np.ndarray
    g_b: np.ndarray
    e_k: np.ndarray
    e_o_k: np.ndarray
    g_k: np.ndarray
    vent: np.ndarray
    x: np.ndarray
    x_ki: np.ndarray
    x_kq: np.ndarray
    p: float = 0.0
    shifted: np.ndarray = field(default_factory=lambda: np.zeros(0))
    incentive: float = 0.0

    FIELDS: ClassVar[Tuple[str, ...]] = (
        "c_e",
        "d_e",
        "c_h",
        "d_h",
        "g_chp",
        "g_b",
        "e_k",
        "e_o_k",
        "g_k",
        "vent",
        "x",
        "x_ki",
        "x_kq",
    )

    @classmethod
    def zeros(cls, n_hubs: int, n_users: int, n_el: int) -> "Dispatch":
        per_hub = {
            name: np.zeros(n_hubs)
            for name in cls.FIELDS
            if name not in ("x", "x_ki", "x_kq")
        }
        return cls(
            x=np.zeros((n_hubs, 2)),
            x_ki=np.zeros((n_hubs, n_users, 2)),
            x_kq=np.zeros((n_hubs, n_el, 2)),
            shifted=np.zeros(n_users),
            **per_hub,
        )

    @property
    def e(self) -> float:
        return float(self.e_k.sum())

    @property
    def e_o(self) -> float:
        return float(self.e_o_k.sum())

    @property
    def g(self) -> float:
        return float(self.g_k.sum())

    def copy(self) -> "Dispatch":
        return Dispatch(
            p=self.p,
            shifted=self.shifted.copy(),
            incentive=self.incentive,
            **{name: getattr(self, name).copy() for name in self.FIELDS},
        )

    def __add__(self, other: "Dispatch") -> "Dispatch":
        return Dispatch(
            p=self.p + other.p,
            shifted=self.shifted + other.shifted,
            incentive=self.incentive + other.incentive,
            **{
                name: getattr(self, name) + getattr(other, name)
                for name in self.FIELDS
            },
        )


@dataclass(frozen=True)
class Residuals:
    """
    Signed balance residuals (MWh).  :code:`hub` is supply minus
    demand per (hub, energy); :code:`park` holds the park totals
    minus what the hubs deliver, and the gas left for users minus
    the gas load.
    """

    hub: np.ndarray
    park: Dict[str, float]

    def max_abs(self) -> float:
        values = [abs(v) for v in self.park.values()]
        if self.hub.size:
            values.append(float(np.abs(self.hub).max()))
        return max(values) if values else 0.0


def balance_residuals(d: Dispatch, slot: SlotData, cfg: ParkConfig) -> Residuals:
    eta_pg = np.array([h.eta_pg for h in cfg.hubs])
    eta_hg = np.array([h.eta_hg for h in cfg.hubs])
    eta_bg = np.array([h.eta_bg for h in cfg.hubs])

    demand = d.x_ki.sum(axis=1) + d.x_kq.sum(axis=1)
    hub = d.x - demand

    e_tot = d.e - d.e_o + float(
        np.sum(eta_pg * d.g_chp + d.d_e - d.c_e + np.asarray(slot.r))
    )
    h_tot = float(
        np.sum(eta_hg * d.g_chp + eta_bg * d.g_b + d.d_h - d.c_h - d.vent)
    )
    g_tot = d.g - float(np.sum(d.g_chp + d.g_b))

    park = {
        "E": e_tot - float(d.x[:, ELECTRICITY].sum()),
        "H": h_tot - float(d.x[:, HEAT].sum()),
        "G": g_tot - slot.g_load,
    }
    return Residuals(hub=hub, park=park)


@dataclass(frozen=True)
class Violation:
    hub: int
    magnitude: float

    constraint: ClassVar[str] = "bound"


class ChargeBound(Violation):
    constraint = "battery charge"


class DischargeBound(Violation):
    constraint = "battery discharge"


class HeatChargeBound(Violation):
    constraint = "tank charge"


class HeatDischargeBound(Violation):
    constraint = "tank discharge"


class ChpBound(Violation):
    constraint = "CHP output"


class BoilerBound(Violation):
    constraint = "boiler output"


@dataclass(frozen=True)
class TradeBound:
    name: str
    magnitude: float

    constraint: ClassVar[str] = "grid trade"


@dataclass(frozen=True)
class SupplyBound:
    hub: int
    energy: str
    magnitude: float

    constraint: ClassVar[str] = "hub supply"


@dataclass(frozen=True)
class ShareBound:
    hub: int
    name: str
    magnitude: float

    constraint: ClassVar[str] = "trade share"


def _excess(value: float, upper: float) -> float:
    return max(value - upper, -value, 0.0)


def validate_dispatch(
    d: Dispatch, cfg: ParkConfig, tolerance: float = 1e-6
) -> List[object]:
    """
    Returns one violation per box constraint that does not hold, in a
    fixed order: storage, conversion units, hub supply, hub trade
    shares, park trades.  Negative flows count as violations of their
    lower bound.
    """
    violations: List[object] = []

    for k, hub in enumerate(cfg.hubs):
        checks = (
            (ChargeBound, d.c_e[k], hub.c_e_max),
            (DischargeBound, d.d_e[k], hub.d_e_max),
            (HeatChargeBound, d.c_h[k], hub.c_h_max),
            (HeatDischargeBound, d.d_h[k], hub.d_h_max),
            (ChpBound, d.g_chp[k], hub.g_chp_max),
            (BoilerBound, d.g_b[k] * hub.eta_bg, hub.h_b_max),
        )
        for kind, value, upper in checks:
            excess = _excess(float(value), upper)
            if excess > tolerance:
                violations.append(kind(k, excess))

        for energy, name in enumerate(ENERGIES):
            excess = _excess(float(d.x[k, energy]), float(cfg.x_max[k, energy]))
            if excess > tolerance:
                violations.append(SupplyBound(k, name, excess))

        for name, value, upper in (
            ("E", d.e_k[k], cfg.e_share[k]),
            ("G", d.g_k[k], cfg.g_share[k]),
            ("E_o", d.e_o_k[k], cfg.e_o_share[k]),
        ):
            excess = _excess(float(value), float(upper))
            if excess > tolerance:
                violations.append(ShareBound(k, name, excess))

    for name, value, upper in (
        ("E", d.e, cfg.e_max),
        ("G", d.g, cfg.g_max),
        ("E_o", d.e_o, cfg.e_o_max),
    ):
        excess = _excess(value, upper)
        if excess > tolerance:
            violations.append(TradeBound(name, excess))

    return violations
