"""
Scenario files and generators.

A scenario CSV has one row per slot and the header
:code:`t,p_e,p_g,p_o,R_1..R_K,X_1..X_I,H_load,G_load`.  Its units are
declared in a sidecar YAML file next to it (:code:`<name>.units.yaml`)
with an :code:`energy` key (kWh or MWh) and a :code:`price` key
(¥/kWh or ¥/MWh).  Without a sidecar the file is read as MWh and
¥/MWh.
"""
import os
import re
from typing import Dict, Optional

import numpy as np
import pandas as pd
import yaml

from parkopt.errors import IoError, SchemaError, UnitError
from parkopt.model import ScenarioSeries

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
SAMPLE_SCENARIO = os.path.join(DATA_DIR, "sample_24.csv")
SAMPLE_PARK = os.path.join(DATA_DIR, "park.yaml")

#: Factor converting one unit into MWh.
ENERGY_UNITS = {"kwh": 1e-3, "mwh": 1.0}

#: Factor converting one price unit into ¥/MWh.
PRICE_UNITS = {"/kwh": 1e3, "/mwh": 1.0}

FIXED_COLUMNS = ("t", "p_e", "p_g", "p_o", "H_load", "G_load")


def units_path(path: str) -> str:
    root, _ = os.path.splitext(path)
    return f"{root}.units.yaml"


def read_units(path: str) -> Dict[str, str]:
    """
    Reads the units sidecar of scenario `path`.
    """
    sidecar = units_path(path)
    if not os.path.exists(sidecar):
        return {"energy": "MWh", "price": "¥/MWh"}
    with open(sidecar, encoding="utf8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise UnitError(f"{sidecar} must hold a mapping")
    return {"energy": str(data.get("energy", "MWh")), "price": str(data.get("price", "¥/MWh"))}


def unit_factors(units: Dict[str, str]):
    energy = units["energy"].strip().lower()
    if energy not in ENERGY_UNITS:
        raise UnitError(f"unknown energy unit {units['energy']!r}")
    match = re.search(r"/\s*([km]wh)$", units["price"].strip().lower())
    if match is None:
        raise UnitError(f"unknown price unit {units['price']!r}")
    return ENERGY_UNITS[energy], PRICE_UNITS["/" + match.group(1)]


def _numbered(columns, prefix: str):
    pattern = re.compile(rf"^{prefix}_(\d+)$")
    found = sorted(
        (int(m.group(1)), c) for c in columns for m in [pattern.match(c)] if m
    )
    numbers = [n for n, _ in found]
    if numbers != list(range(1, len(numbers) + 1)):
        raise SchemaError(
            f"{prefix} columns must be numbered 1..n, got {numbers}", column=prefix
        )
    return [c for _, c in found]


def series_from_frame(
    frame: pd.DataFrame, units: Optional[Dict[str, str]] = None
) -> ScenarioSeries:
    """
    Validates a scenario frame and converts it to MWh and ¥/MWh.

    :raises SchemaError: if a column is missing or not numeric.
    :raises UnitError: if the units are unknown.
    :raises NegativeValue: if a quantity or price is negative.
    :raises PriceOrderError: if the selling price exceeds the buying
        price in some slot.
    """
    for column in FIXED_COLUMNS:
        if column not in frame.columns:
            raise SchemaError(f"missing column {column}", column=column)
    renewables = _numbered(frame.columns, "R")
    loads = _numbered(frame.columns, "X")
    if not renewables:
        raise SchemaError("missing column R_1", column="R_1")

    for column in frame.columns:
        if not pd.api.types.is_numeric_dtype(frame[column]):
            raise SchemaError(f"column {column} is not numeric", column=column)
        if frame[column].isna().any():
            raise SchemaError(f"column {column} has empty cells", column=column)

    energy, price = unit_factors(units or {"energy": "MWh", "price": "¥/MWh"})
    frame = frame.sort_values("t", kind="stable")
    values = lambda columns: frame[columns].to_numpy(dtype=float)  # noqa: E731
    return ScenarioSeries(
        p_e=values("p_e") * price,
        p_g=values("p_g") * price,
        p_o=values("p_o") * price,
        r=values(renewables).reshape(len(frame), -1) * energy,
        x_il=values(loads).reshape(len(frame), -1) * energy,
        h_load=values("H_load") * energy,
        g_load=values("G_load") * energy,
    )


def ingest_scenario(path: str) -> ScenarioSeries:
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise IoError(f"scenario file {path} not found")
    except pd.errors.ParserError as e:
        raise SchemaError(f"{path} is not a valid CSV: {e}")
    return series_from_frame(frame, read_units(path))


def scenario_frame(scenario: ScenarioSeries) -> pd.DataFrame:
    """
    The scenario as a frame in MWh and ¥/MWh, in the CSV layout.
    """
    frame = pd.DataFrame(
        {
            "t": np.arange(len(scenario)),
            "p_e": scenario.p_e,
            "p_g": scenario.p_g,
            "p_o": scenario.p_o,
        }
    )
    for k in range(scenario.n_hubs):
        frame[f"R_{k + 1}"] = scenario.r[:, k]
    for i in range(scenario.n_users):
        frame[f"X_{i + 1}"] = scenario.x_il[:, i]
    frame["H_load"] = scenario.h_load
    frame["G_load"] = scenario.g_load
    return frame


def sample_scenario() -> ScenarioSeries:
    """
    The bundled 24-slot day with a two-peak tariff and a midday
    renewable hump.
    """
    return ingest_scenario(SAMPLE_SCENARIO)


def iid_scenario(
    length: int,
    n_hubs: int = 2,
    n_users: int = 2,
    seed: int = 0,
    p_e=(350.0, 700.0),
    p_g=(400.0, 400.0),
    price_ratio: float = 1.0 / 0.6,
    r_max: float = 1.9,
    x_il=(1.5, 3.0),
    h_load=(4.0, 5.0),
    g_load: float = 1.0,
) -> ScenarioSeries:
    """
    Draws every slot independently: prices and loads uniformly from
    their ranges, renewables uniformly from zero to `r_max` per hub.
    The selling price is :code:`p_e / price_ratio`.  Values are MWh
    and ¥/MWh.
    """
    if length < 1:
        raise SchemaError("a scenario needs at least one slot")
    if price_ratio < 1:
        raise SchemaError("p_e / p_o must be at least 1", column="p_o")
    rng = np.random.default_rng(seed)
    buy = rng.uniform(*p_e, size=length)
    return ScenarioSeries(
        p_e=buy,
        p_g=rng.uniform(*p_g, size=length),
        p_o=buy / price_ratio,
        r=rng.uniform(0.0, r_max, size=(length, n_hubs)),
        x_il=rng.uniform(*x_il, size=(length, n_users)),
        h_load=rng.uniform(*h_load, size=length),
        g_load=np.full(length, float(g_load)),
    )
