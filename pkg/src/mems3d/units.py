"""Parsing of unit-bearing quantities ("100 nm", "800 C", "130 GPa") into SI."""

import math
import re
from decimal import Decimal

from .errors import UnitError

ZERO_CELSIUS = 273.15

# kind -> (SI unit label, {unit: factor})
_UNITS = {
    "length": ("m", {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9}),
    "pressure": ("Pa", {"Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "GPa": 1e9}),
    "thermal_expansion": ("1/K", {"1/K": 1.0, "1/C": 1.0, "/K": 1.0, "/C": 1.0}),
    "thermal_conductivity": ("W/(m K)", {"W/m/K": 1.0, "W/(m K)": 1.0, "W/mK": 1.0}),
    "electrical_conductivity": ("S/m", {"S/m": 1.0}),
    "piezo_coupling": ("C/m2", {"C/m2": 1.0, "C/m^2": 1.0}),
    "permittivity": ("F/m", {"F/m": 1.0}),
    "film_coefficient": ("W/(m2 K)", {"W/m2/K": 1.0, "W/(m2 K)": 1.0}),
    "voltage": ("V", {"V": 1.0, "mV": 1e-3}),
    "temperature_difference": ("K", {"K": 1.0, "C": 1.0, "degC": 1.0}),
    "dimensionless": ("1", {"": 1.0}),
}

_NUMBER_UNIT = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


def _split(value, key):
    if isinstance(value, bool):
        raise UnitError(f"{key}: expected a number or quantity string, got {value!r}")
    if isinstance(value, (int, float)):
        return value, ""
    if not isinstance(value, str):
        raise UnitError(f"{key}: expected a number or quantity string, got {value!r}")
    m = _NUMBER_UNIT.match(value)
    if m is None:
        raise UnitError(f"{key}: cannot parse quantity {value!r}")
    return m.group(1), m.group(2)


def parse_quantity(value, kind, key="value"):
    """Convert ``value`` to SI for the given quantity ``kind``.

    Bare numbers are taken to be in SI already.
    """
    if kind == "temperature":
        return parse_temperature(value, key)
    si, table = _UNITS[kind]
    number, unit = _split(value, key)
    if unit == "" and kind != "dimensionless":
        factor = 1.0
    elif unit in table:
        factor = table[unit]
    else:
        expected = ", ".join(u for u in table if u) or "no unit"
        raise UnitError(f"{key}: unit {unit!r} is not a {kind} unit (expected {si}; accepted: {expected})")
    if isinstance(number, str):
        # decimal scaling rounds once, so "100 nm" is exactly the double nearest 1e-7
        result = float(Decimal(number) * Decimal(repr(factor)))
    else:
        result = float(number) * factor
    if not math.isfinite(result):
        raise UnitError(f"{key}: quantity must be finite")
    return result


def parse_temperature(value, key="temperature"):
    """Absolute temperature in kelvin; strings accept ``C``/``degC``/``°C`` or ``K``."""
    number, unit = _split(value, key)
    number = float(number)
    if unit in ("C", "degC", "°C"):
        return number + ZERO_CELSIUS
    if unit in ("K", ""):
        return number
    raise UnitError(f"{key}: unit {unit!r} is not a temperature unit (expected C or K)")


def celsius(t):
    return t + ZERO_CELSIUS
