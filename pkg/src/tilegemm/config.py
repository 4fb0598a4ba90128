"""Loading device profiles, network descriptions and PPW tables from YAML files."""

from __future__ import annotations

import dataclasses
from pathlib import Path

import yaml

from .perf_model import DeviceProfile
from .units import parse_quantity
from .workload import ConvLayerSpec


class InputError(ValueError):
    """A configuration file is missing, malformed or inconsistent."""


class _LineLoader(yaml.SafeLoader):
    """SafeLoader that remembers the source line of every mapping."""


def _construct_mapping(loader, node, deep=False):
    mapping = yaml.SafeLoader.construct_mapping(loader, node, deep=True)
    mapping["__line__"] = node.start_mark.line + 1
    return mapping


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _load(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        doc = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark else str(path)
        raise InputError(f"{where}: {getattr(exc, 'problem', exc)}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}:1: expected a mapping at top level")
    return doc


def _where(path, node) -> str:
    return f"{path}:{node.get('__line__', '?')}"


_DEVICE_KINDS = {
    "wl": None, "q": None, "v": None,
    "f_clk": "freq", "b_mem": "rate", "b_pcie": "rate",
    "dsp_budget": None, "bram_budget": "bits", "fpga_power": "power",
    "cpu_tiling_bw": "rate",
}
_INT_FIELDS = {"wl", "q", "v", "dsp_budget"}


def load_device(path) -> DeviceProfile:
    """Read a device profile. Bandwidths take unit suffixes (``30Gbps``, ``8GBps``)."""
    doc = _load(path)
    known = {f.name for f in dataclasses.fields(DeviceProfile)}
    kwargs = {}
    for key, value in doc.items():
        if key == "__line__":
            continue
        if key not in known:
            raise InputError(f"{_where(path, doc)}: unknown device field {key!r}")
        if key == "name":
            kwargs[key] = str(value)
            continue
        try:
            number = parse_quantity(value, _DEVICE_KINDS[key])
        except ValueError as exc:
            raise InputError(f"{_where(path, doc)}: field {key!r}: {exc}") from exc
        if key == "cpu_tiling_bw":
            number /= 8  # stored as bytes/s
        if key in _INT_FIELDS:
            if number != int(number):
                raise InputError(f"{_where(path, doc)}: field {key!r} must be an integer")
            number = int(number)
        kwargs[key] = number
    kwargs.setdefault("name", Path(path).stem)
    try:
        return DeviceProfile(**kwargs)
    except ValueError as exc:
        raise InputError(f"{_where(path, doc)}: {exc}") from exc


_LAYER_FIELDS = ("name", "in_ch", "out_ch", "kh", "kw", "stride", "pad", "in_h", "in_w")


def load_network(path) -> tuple[list[ConvLayerSpec], int]:
    """Read a network file: top-level ``batch`` plus a ``layers`` list."""
    doc = _load(path)
    batch = doc.get("batch")
    if not isinstance(batch, int) or isinstance(batch, bool) or batch < 1:
        raise InputError(f"{_where(path, doc)}: 'batch' must be a positive integer")
    layers_doc = doc.get("layers")
    if not isinstance(layers_doc, list):
        raise InputError(f"{_where(path, doc)}: 'layers' must be a list")
    layers, seen = [], set()
    for node in layers_doc:
        if not isinstance(node, dict):
            raise InputError(f"{path}: every layer must be a mapping")
        missing = [f for f in _LAYER_FIELDS if f not in node]
        if missing:
            raise InputError(f"{_where(path, node)}: layer is missing {', '.join(missing)}")
        extra = set(node) - set(_LAYER_FIELDS) - {"first_layer", "__line__"}
        if extra:
            raise InputError(f"{_where(path, node)}: unknown layer fields {sorted(extra)}")
        values = {f: node[f] for f in _LAYER_FIELDS}
        values["name"] = str(values["name"])
        if values["name"] in seen:
            raise InputError(f"{_where(path, node)}: duplicate layer name {values['name']!r}")
        seen.add(values["name"])
        for f in _LAYER_FIELDS[1:]:
            if not isinstance(values[f], int) or isinstance(values[f], bool):
                raise InputError(f"{_where(path, node)}: field {f!r} must be an integer")
        first = node.get("first_layer", False)
        if not isinstance(first, bool):
            raise InputError(f"{_where(path, node)}: 'first_layer' must be true or false")
        try:
            layers.append(ConvLayerSpec(**values, first_layer=first))
        except ValueError as exc:
            raise InputError(f"{_where(path, node)}: {exc}") from exc
    return layers, batch


def load_ppw_table(path) -> tuple[dict, dict, dict]:
    """Read per-layer ``fpga_ppw``, ``cpu_ppw`` and ``ops`` records, in file order."""
    doc = _load(path)
    rows = doc.get("layers")
    if not isinstance(rows, list) or not rows:
        raise InputError(f"{_where(path, doc)}: 'layers' must be a non-empty list")
    fpga, cpu, ops = {}, {}, {}
    for node in rows:
        if not isinstance(node, dict):
            raise InputError(f"{path}: every layer must be a mapping")
        try:
            name = str(node["name"])
            f, c = float(node["fpga_ppw"]), float(node["cpu_ppw"])
            n = float(node.get("ops", 1))
        except KeyError as exc:
            raise InputError(f"{_where(path, node)}: missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise InputError(f"{_where(path, node)}: {exc}") from exc
        if name in fpga:
            raise InputError(f"{_where(path, node)}: duplicate layer name {name!r}")
        if f <= 0 or c <= 0 or n <= 0:
            raise InputError(f"{_where(path, node)}: PPW values and ops must be > 0")
        fpga[name], cpu[name], ops[name] = f, c, n
    return fpga, cpu, ops
