"""Parsing of quantities with unit suffixes into SI base units."""

from __future__ import annotations

import re

_PREFIX = {"": 1.0, "k": 1e3, "K": 1e3, "M": 1e6, "G": 1e9, "T": 1e12}
_NUM = r"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
_RE = re.compile(_NUM + r"\s*([kKMGT]?)([A-Za-z/%]*)$")

# suffix -> (kind, multiplier to base unit)
_UNITS = {
    "bps": ("rate", 1.0),
    "b/s": ("rate", 1.0),
    "Bps": ("rate", 8.0),
    "B/s": ("rate", 8.0),
    "Hz": ("freq", 1.0),
    "W": ("power", 1.0),
    "b": ("bits", 1.0),
    "bit": ("bits", 1.0),
    "bits": ("bits", 1.0),
    "B": ("bits", 8.0),
}


def parse_quantity(value, kind: str | None = None) -> float:
    """Parse ``30Gbps`` / ``8GBps`` / ``250MHz`` / ``75.9Mb`` / plain numbers.

    Rates normalize to bits/s, sizes to bits. ``kind`` restricts which unit
    family is accepted when a suffix is present.
    """
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    m = _RE.match(str(value).strip())
    if not m:
        raise ValueError(f"cannot parse quantity {value!r}")
    number, prefix, suffix = m.groups()
    if not suffix:
        if prefix:
            raise ValueError(f"prefix without unit in {value!r}")
        return float(number)
    if suffix not in _UNITS:
        raise ValueError(f"unknown unit {suffix!r} in {value!r}")
    unit_kind, mult = _UNITS[suffix]
    if kind is not None and unit_kind != kind:
        raise ValueError(f"{value!r} is a {unit_kind} quantity, expected {kind}")
    return float(number) * _PREFIX[prefix] * mult
